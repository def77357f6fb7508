//! Proof scripts: atomic commands that open subgoal boxes, sequenced with
//! `THEN` and nested with `WITH`.
//!
//! ```text
//! script   := withexpr ("THEN" withexpr)*
//! withexpr := atomic ["WITH" withexpr]
//! atomic   := "OBTAIN" term | "CASE" term | "CHOOSE" var "," term
//!           | "STRONG_INDUCT" "(" var ["," "[" "Arbitrary" var ("," var)* "]"] ")"
//!           | "INDUCT" var
//! ```
//!
//! Terms are s-expressions. The interpreter never removes anything from
//! the search state; it only opens boxes and queues facts.

use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

use crate::boxes::BoxSet;
use crate::kernel::{Justification, Rule};
use crate::search::{Outcome, SearchConfig, SearchState};
use crate::syntax::{self, Elaborator, Pos, Sexp};
use crate::term::{logic, Name, Term, Type};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScriptError {
    #[error("script {pos}: {msg}")]
    Parse { pos: Pos, msg: String },
    #[error("script stuck at {cmd}")]
    ScriptStuck { cmd: String, cbox: Option<BoxSet> },
    #[error("CHOOSE {0} rebinds a problem variable")]
    Freshness(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Obtain(Sexp),
    Case(Sexp),
    Choose(String, Sexp),
    StrongInduct(String, Vec<String>),
    Induct(String),
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::Obtain(t) => write!(f, "OBTAIN {t}"),
            Command::Case(t) => write!(f, "CASE {t}"),
            Command::Choose(x, t) => write!(f, "CHOOSE {x}, {t}"),
            Command::StrongInduct(v, arbs) if arbs.is_empty() => write!(f, "STRONG_INDUCT ({v})"),
            Command::StrongInduct(v, arbs) => write!(f, "STRONG_INDUCT ({v}, [Arbitrary {}])", arbs.join(", ")),
            Command::Induct(v) => write!(f, "INDUCT {v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Script {
    Atomic(Command),
    Then(Box<Script>, Box<Script>),
    With(Command, Box<Script>),
}

/// Fully parenthesized, so the rendering shows how the parse grouped.
impl fmt::Display for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Script::Atomic(c) => write!(f, "{c}"),
            Script::Then(a, b) => write!(f, "({a} THEN {b})"),
            Script::With(c, b) => write!(f, "({c} WITH {b})"),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    at: usize,
}

impl<'a> Parser<'a> {
    fn pos(&self) -> Pos {
        let before = &self.src[..self.at];
        let line = before.matches('\n').count() + 1;
        let col = before.rfind('\n').map_or(before.chars().count(), |i| before[i + 1..].chars().count()) + 1;
        Pos { line, col }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ScriptError> {
        Err(ScriptError::Parse { pos: self.pos(), msg: msg.into() })
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.at..];
        self.at += rest.len() - rest.trim_start().len();
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.at == self.src.len()
    }

    fn peek_word(&mut self) -> &'a str {
        self.skip_ws();
        let rest = &self.src[self.at..];
        let end = rest.find(|c: char| !(c.is_alphanumeric() || c == '_' || c == '\'')).unwrap_or(rest.len());
        &rest[..end]
    }

    fn word(&mut self) -> Result<&'a str, ScriptError> {
        let w = self.peek_word();
        if w.is_empty() {
            return self.err("expected a word");
        }
        self.at += w.len();
        Ok(w)
    }

    fn keyword(&mut self, k: &str) -> bool {
        if self.peek_word() == k {
            self.at += k.len();
            true
        } else {
            false
        }
    }

    fn punct(&mut self, c: char) -> Result<(), ScriptError> {
        self.skip_ws();
        if self.src[self.at..].starts_with(c) {
            self.at += c.len_utf8();
            Ok(())
        } else {
            self.err(format!("expected '{c}'"))
        }
    }

    fn term(&mut self) -> Result<Sexp, ScriptError> {
        self.skip_ws();
        let (s, used) = syntax::read_one_prefix(&self.src[self.at..], self.pos())
            .map_err(|e| ScriptError::Parse { pos: self.pos(), msg: e.to_string() })?;
        self.at += used;
        Ok(s)
    }

    fn seq(&mut self) -> Result<Script, ScriptError> {
        let mut s = self.with_expr()?;
        while self.keyword("THEN") {
            s = Script::Then(Box::new(s), Box::new(self.with_expr()?));
        }
        Ok(s)
    }

    fn with_expr(&mut self) -> Result<Script, ScriptError> {
        let a = self.atomic()?;
        if self.keyword("WITH") {
            return Ok(Script::With(a, Box::new(self.with_expr()?)));
        }
        Ok(Script::Atomic(a))
    }

    fn atomic(&mut self) -> Result<Command, ScriptError> {
        match self.word()? {
            "OBTAIN" => Ok(Command::Obtain(self.term()?)),
            "CASE" => Ok(Command::Case(self.term()?)),
            "CHOOSE" => {
                let x = self.word()?.to_string();
                self.punct(',')?;
                Ok(Command::Choose(x, self.term()?))
            }
            "INDUCT" => Ok(Command::Induct(self.word()?.to_string())),
            "STRONG_INDUCT" => {
                self.punct('(')?;
                let v = self.word()?.to_string();
                let mut arbs = Vec::new();
                if self.punct(',').is_ok() {
                    self.punct('[')?;
                    if !self.keyword("Arbitrary") {
                        return self.err("expected Arbitrary");
                    }
                    arbs.push(self.word()?.to_string());
                    while self.punct(',').is_ok() {
                        arbs.push(self.word()?.to_string());
                    }
                    self.punct(']')?;
                }
                self.punct(')')?;
                Ok(Command::StrongInduct(v, arbs))
            }
            w => self.err(format!("unknown command '{w}'")),
        }
    }
}

/// Parse a script. The empty string is the empty script.
pub fn parse(src: &str) -> Result<Option<Script>, ScriptError> {
    let mut p = Parser { src, at: 0 };
    if p.at_end() {
        return Ok(None);
    }
    let s = p.seq()?;
    if !p.at_end() {
        return p.err("trailing input");
    }
    Ok(Some(s))
}

struct Thread {
    ambient: BoxSet,
    todo: VecDeque<Script>,
    /// Subgoal box whose resolution the thread waits for.
    waiting: Option<(u32, Command)>,
    /// Command whose terms could not be elaborated yet.
    blocked: Option<Command>,
}

enum Exec {
    Opened(u32),
    Done,
    NotReady,
}

/// Script cursor state; consulted by the search loop after every pull.
pub struct Interpreter {
    threads: Vec<Thread>,
    /// Commands executed so far, in order.
    pub log: Vec<String>,
}

impl Interpreter {
    pub fn new(script: Option<Script>) -> Interpreter {
        let threads = script
            .map(|s| Thread { ambient: BoxSet::single(0), todo: VecDeque::from([s]), waiting: None, blocked: None })
            .into_iter()
            .collect();
        Interpreter { threads, log: Vec::new() }
    }

    /// Run every thread as far as it can go without waiting.
    pub fn advance(&mut self, st: &mut SearchState<'_>) {
        let mut i = 0;
        while i < self.threads.len() {
            let mut spawned = Vec::new();
            let th = &mut self.threads[i];
            loop {
                if st.is_dead(&th.ambient) {
                    th.todo.clear();
                    th.waiting = None;
                    th.blocked = None;
                    break;
                }
                if let Some((prim, _)) = &th.waiting {
                    if !st.is_dead(&BoxSet::single(*prim)) {
                        break;
                    }
                    th.waiting = None;
                }
                let Some(next) = th.todo.pop_front() else { break };
                let (cmd, sub) = match next {
                    Script::Then(a, b) => {
                        th.todo.push_front(*b);
                        th.todo.push_front(*a);
                        continue;
                    }
                    Script::Atomic(c) => (c, None),
                    Script::With(c, s) => (c, Some(*s)),
                };
                match exec(&cmd, &th.ambient, st) {
                    Exec::NotReady => {
                        th.blocked = Some(cmd.clone());
                        th.todo.push_front(match sub {
                            Some(s) => Script::With(cmd, Box::new(s)),
                            None => Script::Atomic(cmd),
                        });
                        break;
                    }
                    Exec::Opened(prim) => {
                        self.log.push(cmd.to_string());
                        th.blocked = None;
                        if let Some(s) = sub {
                            spawned.push(Thread {
                                ambient: BoxSet::single(prim),
                                todo: VecDeque::from([s]),
                                waiting: None,
                                blocked: None,
                            });
                        }
                        th.waiting = Some((prim, cmd));
                    }
                    Exec::Done => {
                        self.log.push(cmd.to_string());
                        th.blocked = None;
                        if let Some(s) = sub {
                            th.todo.push_front(s);
                        }
                    }
                }
            }
            self.threads.extend(spawned);
            i += 1;
        }
    }

    /// The first command that has not completed, with its subgoal box.
    pub fn stuck(&self, st: &SearchState<'_>) -> Option<ScriptError> {
        for th in &self.threads {
            if st.is_dead(&th.ambient) {
                continue;
            }
            if let Some((prim, cmd)) = &th.waiting {
                if !st.is_dead(&BoxSet::single(*prim)) {
                    return Some(ScriptError::ScriptStuck { cmd: cmd.to_string(), cbox: Some(BoxSet::single(*prim)) });
                }
            }
            if let Some(cmd) = &th.blocked {
                return Some(ScriptError::ScriptStuck { cmd: cmd.to_string(), cbox: None });
            }
        }
        None
    }
}

/// Elaborate a script term; `None` while it mentions names not in scope.
fn elab(st: &SearchState<'_>, s: &Sexp, extra: Option<&str>) -> Option<(Term, Option<Type>)> {
    let mut e = Elaborator::new(&st.theory.sig).with_frees(&st.names);
    e.implicit_frees = extra.is_some();
    let t = e.term(s, Some(&Type::bool())).ok()?;
    let implicit = e.implicit_frees();
    let ty = match extra {
        Some(x) => {
            if implicit.keys().any(|k| &**k != x) {
                return None;
            }
            implicit.get(x).cloned().or_else(|| st.names.get(x).cloned())
        }
        None => None,
    };
    Some((st.theory.unfold(&t), ty))
}

fn single_prim(b: &BoxSet) -> Option<u32> {
    match b.members() {
        [p] => Some(*p),
        _ => None,
    }
}

fn exec(cmd: &Command, ambient: &BoxSet, st: &mut SearchState<'_>) -> Exec {
    let label = match cmd {
        Command::Obtain(_) => "OBTAIN",
        Command::Case(_) => "CASE",
        Command::Choose(..) => "CHOOSE",
        Command::StrongInduct(..) => "STRONG_INDUCT",
        Command::Induct(_) => "INDUCT",
    };
    let open = |st: &mut SearchState<'_>, h: Term| match st.create_box(ambient, vec![h], vec![], label) {
        Some(p) => Exec::Opened(p),
        None => Exec::NotReady,
    };
    match cmd {
        Command::Obtain(s) => match elab(st, s, None) {
            Some((t, _)) => open(st, logic::neg(&t)),
            None => Exec::NotReady,
        },
        Command::Case(s) => match elab(st, s, None) {
            Some((t, _)) => open(st, t),
            None => Exec::NotReady,
        },
        Command::Choose(x, s) => {
            let Some((body, Some(ty))) = elab(st, s, Some(x)) else { return Exec::NotReady };
            let ex = logic::mk_exists_free(x, ty, &body);
            st.skolem_names.insert(ex.clone(), Name::from(x.as_str()));
            open(st, logic::mk_not(ex))
        }
        Command::Induct(v) => {
            let Some(prim) = single_prim(ambient) else { return Exec::NotReady };
            let Some(ty) = st.boxes.get(prim).and_then(|p| p.has_var(v)).cloned() else { return Exec::NotReady };
            if !ty.is_nat() {
                return Exec::NotReady;
            }
            st.induct.insert(prim, Name::from(v.as_str()));
            open(st, logic::mk_eq(Term::Free(v.as_str().into(), ty), Term::num(0)))
        }
        Command::StrongInduct(v, arbs) => {
            let Some(prim) = single_prim(ambient) else { return Exec::NotReady };
            let rule = Rule::StrongIndHyp {
                prim,
                var: v.as_str().into(),
                arbitrary: arbs.iter().map(|a| Name::from(a.as_str())).collect(),
            };
            match Justification::derive(st.kctx(), rule, vec![]) {
                Ok(j) => {
                    st.add_fact(j, label);
                    Exec::Done
                }
                Err(_) => Exec::NotReady,
            }
        }
    }
}

/// Reject CHOOSE commands that rebind one of the problem's variables.
pub fn check_fresh(script: &Script, vars: &[(Name, Type)]) -> Result<(), ScriptError> {
    let cmd_ok = |c: &Command| match c {
        Command::Choose(x, _) if vars.iter().any(|(v, _)| **v == *x.as_str()) => Err(ScriptError::Freshness(x.clone())),
        _ => Ok(()),
    };
    match script {
        Script::Atomic(c) => cmd_ok(c),
        Script::Then(a, b) => check_fresh(a, vars).and_then(|()| check_fresh(b, vars)),
        Script::With(c, b) => cmd_ok(c).and_then(|()| check_fresh(b, vars)),
    }
}

/// Run the search with the script consulted after every pull.
pub fn run(st: &mut SearchState<'_>, cfg: &SearchConfig, interp: &mut Interpreter) -> Outcome {
    interp.advance(st);
    while st.step_once(cfg) {
        interp.advance(st);
    }
    st.outcome.clone().expect("run ends with an outcome")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn show(src: &str) -> String {
        parse(src).unwrap().unwrap().to_string()
    }

    #[test]
    fn parses_larger_prime_script() {
        let src = "CHOOSE p, (and (prime p) (dvd p (+ (fact n) 1))) THEN CASE (<= p n) WITH OBTAIN (dvd p (fact n))";
        assert_eq!(
            show(src),
            "(CHOOSE p, (and (prime p) (dvd p (+ (fact n) 1))) THEN (CASE (<= p n) WITH OBTAIN (dvd p (fact n))))"
        );
    }

    #[test]
    fn then_is_left_associative() {
        assert_eq!(show("CASE a THEN CASE b THEN CASE c"), "((CASE a THEN CASE b) THEN CASE c)");
    }

    #[test]
    fn with_binds_tighter() {
        assert_eq!(show("CASE a WITH CASE b THEN CASE c"), "((CASE a WITH CASE b) THEN CASE c)");
        assert_eq!(show("CASE a WITH CASE b WITH CASE c"), "(CASE a WITH (CASE b WITH CASE c))");
    }

    #[test]
    fn induction_commands() {
        let s = parse("STRONG_INDUCT (n, [Arbitrary m, k])").unwrap().unwrap();
        assert_eq!(s, Script::Atomic(Command::StrongInduct("n".into(), vec!["m".into(), "k".into()])));
        assert_eq!(parse("INDUCT n").unwrap().unwrap(), Script::Atomic(Command::Induct("n".into())));
        assert_eq!(show("STRONG_INDUCT (n)"), "STRONG_INDUCT (n)");
    }

    fn state_run(th: &crate::theory::Theory, src: Option<&str>) -> (Outcome, usize, Vec<String>) {
        let tm = |s: &str| crate::syntax::parse_term(&th.sig, &[("p".into(), Type::nat())].into_iter().collect(), s).unwrap();
        let g = crate::search::Goal { vars: vec![("p".into(), Type::nat())], assumptions: vec![tm("(prime p)")], conclusion: tm("(> p 1)") };
        let mut st = SearchState::init(&g, th).unwrap();
        let mut it = Interpreter::new(src.map(|s| parse(s).unwrap().unwrap()));
        let out = run(&mut st, &SearchConfig::default(), &mut it);
        (out, st.pulled, st.trace.iter().map(|r| r.render()).collect())
    }

    #[test]
    fn empty_script_changes_nothing() {
        let th = crate::theory::Theory::builtin_nat();
        let mut st = SearchState::init(&crate::search::Goal { vars: vec![], assumptions: vec![], conclusion: logic::mk_true() }, &th).unwrap();
        let mut it = Interpreter::new(None);
        let before = st.queue_len();
        it.advance(&mut st);
        assert_eq!((st.queue_len(), st.boxes.len()), (before, 1));
        assert_eq!(state_run(&th, None).2, state_run(&th, None).2);
    }

    #[test]
    fn obtaining_a_known_fact_resolves_at_once() {
        let th = crate::theory::Theory::builtin_nat();
        let (out, _, trace) = state_run(&th, Some("OBTAIN (prime p)"));
        assert!(matches!(out, Outcome::Proved(_)));
        let opened = trace.iter().position(|r| r.contains("OBTAIN() {1} => (not (prime p))")).unwrap();
        let next_in_box = trace[opened + 1..].iter().find(|r| r.contains(" {1} => ")).unwrap();
        assert!(next_in_box.contains("not_pair(") && next_in_box.ends_with("{1} => False"), "{trace:#?}");
    }

    #[test]
    fn choose_must_be_fresh() {
        let vars = vec![(Name::from("n"), Type::nat())];
        let s = parse("CASE a WITH CHOOSE n, (prime n)").unwrap().unwrap();
        assert_eq!(check_fresh(&s, &vars), Err(ScriptError::Freshness("n".into())));
        let s = parse("CHOOSE p, (prime p)").unwrap().unwrap();
        assert_eq!(check_fresh(&s, &vars), Ok(()));
    }

    #[test]
    fn empty_and_errors() {
        assert_eq!(parse("  ").unwrap(), None);
        assert!(parse("OBTAIN").is_err());
        assert!(parse("FROB x").is_err());
        assert!(parse("CASE a THEN").is_err());
        assert!(parse("CASE a b").is_err());
    }
}
