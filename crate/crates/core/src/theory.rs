//! Theories: declared types and constants, axioms, abbreviations,
//! associative-commutative operators, and the step declarations telling
//! the search how each axiom may be used.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use thiserror::Error;

use crate::syntax::{self, Elaborator, Pos, Sexp, Signature, SyntaxError};
use crate::term::{beta_norm, logic, Name, Term, Type};

/// How an axiom is turned into a proof step.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    /// From all premises derive the conclusion.
    Forward,
    /// From all premises but the `k`-th (1-based) and the negated
    /// conclusion derive the negation of premise `k`.
    Backward(usize),
    /// Equation `lhs = rhs`, used on terms matching `lhs`.
    Rewrite,
    /// Close boxes against the statement, or cut down disjunctions.
    Resolve,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TheoremSpec {
    pub axiom: Name,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TheoryError {
    #[error("{file}: {source}")]
    ParseError { file: String, source: SyntaxError },
    #[error("{file}:{pos}: duplicate name '{name}'")]
    DuplicateName { file: String, pos: Pos, name: String },
    #[error("{file}:{pos}: axiom '{name}' is ill-typed: {msg}")]
    IllTypedAxiom { file: String, pos: Pos, name: String, msg: String },
    #[error("{file}:{pos}: rewrite '{name}': {msg}")]
    BadRewriteOrientation { file: String, pos: Pos, name: String, msg: String },
    #[error("{file}: {msg}")]
    Io { file: String, msg: String },
}

#[derive(Debug, Clone, Default)]
pub struct Theory {
    pub sig: Signature,
    /// Axioms in declaration order.
    pub axioms: Vec<(Name, Term)>,
    axiom_index: BTreeMap<Name, usize>,
    pub steps: Vec<TheoremSpec>,
    pub ac_ops: BTreeSet<Name>,
    pub abbrevs: BTreeMap<Name, Term>,
}

const NAT_CORE: &str = include_str!("../theories/nat-core.thy");

impl Theory {
    /// Only the logical connectives; no axioms and no steps.
    pub fn empty() -> Theory {
        Theory { sig: Signature::new(), ..Default::default() }
    }

    /// The bundled theory of natural numbers.
    pub fn builtin_nat() -> Theory {
        let mut th = Theory::empty();
        th.extend_from_str("nat-core.thy", NAT_CORE).expect("bundled theory is valid");
        th
    }

    /// Load theory files in order, each extending the previous ones.
    pub fn load<P: AsRef<Path>>(files: &[P]) -> Result<Theory, TheoryError> {
        let mut th = Theory::empty();
        for f in files {
            th.extend_from_file(f.as_ref())?;
        }
        Ok(th)
    }

    pub fn extend_from_file(&mut self, path: &Path) -> Result<(), TheoryError> {
        let file = path.display().to_string();
        let src = std::fs::read_to_string(path).map_err(|e| TheoryError::Io { file: file.clone(), msg: e.to_string() })?;
        self.extend_from_str(&file, &src)
    }

    pub fn axiom(&self, name: &str) -> Option<&Term> {
        self.axiom_index.get(name).map(|&i| &self.axioms[i].1)
    }

    pub fn is_ac(&self, op: &str) -> bool {
        self.ac_ops.contains(op)
    }

    /// Replace abbreviated constants by their definitions.
    pub fn unfold(&self, t: &Term) -> Term {
        if self.abbrevs.is_empty() {
            return t.clone();
        }
        let mut out = t.clone();
        for (name, def) in &self.abbrevs {
            if let Ok(ty) = def.type_of() {
                out = out.replace(&Term::Const(name.clone(), ty), def);
            }
        }
        beta_norm(&out)
    }

    fn taken(&self, name: &str) -> bool {
        self.sig.consts.contains_key(name) || self.axiom_index.contains_key(name) || self.sig.bases.contains(name)
    }

    pub fn extend_from_str(&mut self, file: &str, src: &str) -> Result<(), TheoryError> {
        let perr = |source| TheoryError::ParseError { file: file.to_string(), source };
        let shape = |pos: Pos, msg: &str| perr(SyntaxError::Parse { pos, msg: msg.to_string() });
        for form in syntax::read_all(src).map_err(perr)? {
            let pos = form.pos();
            let items = form.list().ok_or_else(|| shape(pos, "expected a declaration"))?;
            let head = items.first().and_then(Sexp::atom).ok_or_else(|| shape(pos, "expected a declaration keyword"))?;
            let name_at = |k: usize| items.get(k).and_then(Sexp::atom).ok_or_else(|| shape(pos, "expected a name"));
            let dup = |name: &str| TheoryError::DuplicateName { file: file.to_string(), pos, name: name.to_string() };
            match (head, items.len()) {
                ("type", 2) => {
                    let n = name_at(1)?;
                    if self.taken(n) {
                        return Err(dup(n));
                    }
                    self.sig.bases.insert(n.into());
                }
                ("const", 3) => {
                    let n = name_at(1)?;
                    if self.taken(n) {
                        return Err(dup(n));
                    }
                    let ty = self.sig.parse_type(&items[2]).map_err(perr)?;
                    self.sig.consts.insert(n.into(), ty);
                }
                ("abbrev", 3) => {
                    let n = name_at(1)?;
                    if self.taken(n) {
                        return Err(dup(n));
                    }
                    let def = Elaborator::new(&self.sig).term(&items[2], None).map_err(perr)?;
                    if def.has_schematics() || def.has_loose_bound() {
                        return Err(shape(pos, "abbreviation must be closed"));
                    }
                    let mut frees = BTreeSet::new();
                    def.frees(&mut frees);
                    if !frees.is_empty() {
                        return Err(shape(pos, "abbreviation must be closed"));
                    }
                    let ty = def.type_of().expect("elaborated");
                    self.sig.consts.insert(n.into(), ty);
                    self.abbrevs.insert(n.into(), def);
                }
                ("axiom", 3) => {
                    let n = name_at(1)?;
                    if self.taken(n) {
                        return Err(dup(n));
                    }
                    let ill = |msg: String| TheoryError::IllTypedAxiom { file: file.to_string(), pos, name: n.into(), msg };
                    let stmt = Elaborator::new(&self.sig).term(&items[2], Some(&Type::bool())).map_err(|e| ill(e.to_string()))?;
                    let mut frees = BTreeSet::new();
                    stmt.frees(&mut frees);
                    if !frees.is_empty() {
                        return Err(ill(format!("free variables {frees:?}; use ?schematics")));
                    }
                    self.axiom_index.insert(n.into(), self.axioms.len());
                    self.axioms.push((n.into(), stmt));
                }
                ("ac", 2) => {
                    let n = name_at(1)?;
                    match self.sig.consts.get(n) {
                        Some(ty) if ac_shaped(ty) => {
                            self.ac_ops.insert(n.into());
                        }
                        _ => return Err(shape(pos, "ac needs a declared binary operator of type (=> T T T)")),
                    }
                }
                ("step", 3) | ("step", 4) => {
                    let dir = name_at(1)?;
                    let ax = name_at(2)?;
                    let Some(stmt) = self.axiom(ax).cloned() else {
                        return Err(shape(pos, &format!("unknown axiom '{ax}'")));
                    };
                    let k = match items.get(3) {
                        None => None,
                        Some(s) => Some(
                            s.atom()
                                .and_then(|a| a.parse::<usize>().ok())
                                .ok_or_else(|| shape(s.pos(), "expected a premise number"))?,
                        ),
                    };
                    let direction = match (dir, k) {
                        ("forward", None) => Direction::Forward,
                        ("backward", Some(k)) => {
                            let (prems, _) = logic::strip_imp(&stmt);
                            if k == 0 || k > prems.len() {
                                return Err(shape(pos, "backward premise number out of range"));
                            }
                            Direction::Backward(k)
                        }
                        ("rewrite", None) => {
                            check_rewrite(&stmt).map_err(|msg| TheoryError::BadRewriteOrientation {
                                file: file.to_string(),
                                pos,
                                name: ax.into(),
                                msg,
                            })?;
                            Direction::Rewrite
                        }
                        ("resolve", None) => Direction::Resolve,
                        _ => return Err(shape(pos, "expected forward, backward <k>, rewrite or resolve")),
                    };
                    self.steps.push(TheoremSpec { axiom: ax.into(), direction });
                }
                _ => return Err(shape(pos, &format!("malformed '{head}' declaration"))),
            }
        }
        Ok(())
    }
}

fn ac_shaped(ty: &Type) -> bool {
    match ty.dest_fun() {
        Some((a, rest)) => matches!(rest.dest_fun(), Some((b, c)) if a == b && b == c),
        None => false,
    }
}

/// A rewrite axiom is an unconditional equation whose right side uses only
/// schematics bound by the left side.
fn check_rewrite(stmt: &Term) -> Result<(), String> {
    let Some((lhs, rhs)) = logic::dest_eq(stmt) else {
        return Err("statement is not an equation".into());
    };
    if matches!(lhs, Term::Schematic(..)) {
        return Err("left side is a bare schematic".into());
    }
    let mut left = BTreeSet::new();
    lhs.schematics(&mut left);
    let mut right = BTreeSet::new();
    rhs.schematics(&mut right);
    let extra: Vec<&Name> = right.difference(&left).collect();
    if !extra.is_empty() {
        return Err(format!("schematics {extra:?} do not occur on the left"));
    }
    if !crate::term::pattern_is_valid(lhs) {
        return Err("left side is not a valid pattern".into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_loads_and_validates() {
        let th = Theory::builtin_nat();
        for name in ["prime_def", "even_def", "prime_factor_nat", "dvd_fact", "dvd_diff_nat", "dvd_imp_le", "fact_ge_1", "prime_gt_1"] {
            assert!(th.axiom(name).is_some(), "missing {name}");
        }
        assert!(th.is_ac("+") && th.is_ac("*"));
        for (_, ax) in &th.axioms {
            assert_eq!(ax.type_of().unwrap(), Type::bool());
        }
        for s in &th.steps {
            if s.direction == Direction::Rewrite {
                check_rewrite(th.axiom(&s.axiom).unwrap()).unwrap();
            }
        }
    }

    #[test]
    fn empty_load() {
        let th = Theory::load::<&str>(&[]).unwrap();
        assert!(th.axioms.is_empty() && th.steps.is_empty());
    }

    #[test]
    fn rejects_bad_rewrite() {
        let mut th = Theory::empty();
        let src = "(const f (=> nat nat))\n(axiom bad (= (f ?x) ?y))\n(step rewrite bad)";
        match th.extend_from_str("t", src) {
            Err(TheoryError::BadRewriteOrientation { name, .. }) => assert_eq!(name, "bad"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_duplicates_and_ill_typed() {
        let mut th = Theory::empty();
        assert!(matches!(
            th.extend_from_str("t", "(const f (=> nat nat))\n(const f nat)"),
            Err(TheoryError::DuplicateName { .. })
        ));
        let mut th = Theory::empty();
        assert!(matches!(
            th.extend_from_str("t", "(const f (=> nat nat))\n(axiom a (f True))"),
            Err(TheoryError::IllTypedAxiom { .. })
        ));
        let mut th = Theory::empty();
        assert!(matches!(th.extend_from_str("t", "(axiom a"), Err(TheoryError::ParseError { .. })));
    }

    #[test]
    fn unfolds_abbreviations() {
        let th = Theory::builtin_nat();
        let p = Term::free("p", Type::nat());
        let odd = Term::app(Term::cnst("odd", Type::fun(Type::nat(), Type::bool())), p.clone());
        let even = Term::app(Term::cnst("even", Type::fun(Type::nat(), Type::bool())), p);
        assert_eq!(th.unfold(&odd), logic::mk_not(even));
    }
}
