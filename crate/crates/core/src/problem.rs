//! Problem files: theory includes, variables, assumptions, a goal and an
//! optional proof script, in the same s-expression syntax as theories.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::search::Goal;
use crate::syntax::{self, Elaborator, Pos, Sexp};
use crate::term::{Name, Type};
use crate::theory::{Theory, TheoryError};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("{file}: {msg}")]
    Io { file: String, msg: String },
    #[error("{file}:{pos}: {msg}")]
    Form { file: String, pos: Pos, msg: String },
    #[error(transparent)]
    Theory(#[from] TheoryError),
}

/// A parsed but not yet elaborated problem.
#[derive(Clone, Debug, Default)]
pub struct Problem {
    pub file: String,
    pub includes: Vec<PathBuf>,
    pub vars: Vec<(String, Sexp)>,
    pub assumptions: Vec<Sexp>,
    pub goal: Option<Sexp>,
    pub script: Option<String>,
}

impl Problem {
    /// Read a problem file; relative includes resolve against its directory.
    pub fn read(path: &Path) -> Result<Problem, ProblemError> {
        let file = path.display().to_string();
        let src = std::fs::read_to_string(path).map_err(|e| ProblemError::Io { file: file.clone(), msg: e.to_string() })?;
        let mut p = Problem::parse(&file, &src)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        for inc in &mut p.includes {
            if inc.is_relative() {
                *inc = dir.join(&*inc);
            }
        }
        Ok(p)
    }

    pub fn parse(file: &str, src: &str) -> Result<Problem, ProblemError> {
        let err = |pos, msg: &str| ProblemError::Form { file: file.into(), pos, msg: msg.into() };
        let forms = syntax::read_all(src).map_err(|e| ProblemError::Io { file: file.into(), msg: e.to_string() })?;
        let mut p = Problem { file: file.into(), ..Default::default() };
        for f in forms {
            let pos = f.pos();
            let items = f.list().ok_or_else(|| err(pos, "expected a form"))?;
            match (items.first().and_then(Sexp::atom), items.len()) {
                (Some("include"), 2) => match &items[1] {
                    Sexp::Str(s, _) | Sexp::Atom(s, _) => p.includes.push(PathBuf::from(s)),
                    _ => return Err(err(pos, "include expects a file name")),
                },
                (Some("var"), 3) => {
                    let name = items[1].atom().ok_or_else(|| err(pos, "var expects a name"))?;
                    if p.vars.iter().any(|(n, _)| n == name) {
                        return Err(err(pos, &format!("variable {name} declared twice")));
                    }
                    p.vars.push((name.to_string(), items[2].clone()));
                }
                (Some("assume"), 2) => p.assumptions.push(items[1].clone()),
                (Some("goal"), 2) => {
                    if p.goal.is_some() {
                        return Err(err(pos, "more than one goal"));
                    }
                    p.goal = Some(items[1].clone());
                }
                (Some("script"), 2) => match &items[1] {
                    Sexp::Str(s, _) => p.script = Some(s.clone()),
                    _ => return Err(err(pos, "script expects a string")),
                },
                _ => return Err(err(pos, "expected include, var, assume, goal or script")),
            }
        }
        if p.goal.is_none() {
            return Err(err(Pos::default(), "missing goal"));
        }
        Ok(p)
    }

    /// `base` extended with the included theory files.
    pub fn theory(&self, mut base: Theory) -> Result<Theory, ProblemError> {
        for inc in &self.includes {
            base.extend_from_file(inc)?;
        }
        Ok(base)
    }

    /// Elaborate the goal against `theory`, unfolding abbreviations.
    pub fn goal(&self, theory: &Theory) -> Result<Goal, ProblemError> {
        let elab_err = |e: syntax::SyntaxError| ProblemError::Form { file: self.file.clone(), pos: Pos::default(), msg: e.to_string() };
        let mut vars: Vec<(Name, Type)> = Vec::new();
        for (n, ty) in &self.vars {
            vars.push((n.as_str().into(), theory.sig.parse_type(ty).map_err(elab_err)?));
        }
        let frees = vars.iter().cloned().collect();
        let bool_t = Type::bool();
        let mut term = |s: &Sexp| Elaborator::new(&theory.sig).with_frees(&frees).term(s, Some(&bool_t)).map(|t| theory.unfold(&t));
        let assumptions = self.assumptions.iter().map(&mut term).collect::<Result<Vec<_>, _>>().map_err(elab_err)?;
        let conclusion = term(self.goal.as_ref().expect("parse requires a goal")).map_err(elab_err)?;
        Ok(Goal { vars, assumptions, conclusion })
    }
}
