//! S-expression reader and a small type-inferring elaborator from the
//! surface syntax into [`Term`]s.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigUint;
use thiserror::Error;

use crate::term::{logic, Name, Term, Type};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error("{pos}: {msg}")]
    Parse { pos: Pos, msg: String },
    #[error("{pos}: {msg}")]
    Elab { pos: Pos, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom(String, Pos),
    Str(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    pub fn pos(&self) -> Pos {
        match self {
            Sexp::Atom(_, p) | Sexp::Str(_, p) | Sexp::List(_, p) => *p,
        }
    }

    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(s, _) => Some(s),
            _ => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(v, _) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(s, _) => write!(f, "{s}"),
            Sexp::Str(s, _) => write!(f, "{s:?}"),
            Sexp::List(v, _) => {
                write!(f, "(")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
        }
    }
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

impl<'a> Reader<'a> {
    fn new(src: &'a str, start: Pos) -> Self {
        Reader { chars: src.chars().peekable(), pos: start }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.col = 1;
        } else {
            self.pos.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn err(&self, msg: impl Into<String>) -> SyntaxError {
        SyntaxError::Parse { pos: self.pos, msg: msg.into() }
    }

    fn read(&mut self) -> Result<Option<Sexp>, SyntaxError> {
        self.skip_ws();
        let start = self.pos;
        let Some(&c) = self.chars.peek() else { return Ok(None) };
        match c {
            '(' => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.chars.peek() {
                        None => return Err(SyntaxError::Parse { pos: start, msg: "unclosed '('".into() }),
                        Some(')') => {
                            self.bump();
                            return Ok(Some(Sexp::List(items, start)));
                        }
                        Some(_) => items.push(self.read()?.expect("non-empty input")),
                    }
                }
            }
            ')' => Err(self.err("unexpected ')'")),
            '"' => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return Err(SyntaxError::Parse { pos: start, msg: "unterminated string".into() }),
                        Some('"') => return Ok(Some(Sexp::Str(s, start))),
                        Some('\\') => match self.bump() {
                            Some('n') => s.push('\n'),
                            Some(c) => s.push(c),
                            None => return Err(self.err("unterminated escape")),
                        },
                        Some(c) => s.push(c),
                    }
                }
            }
            _ => {
                let mut s = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == '"' || c == ';' {
                        break;
                    }
                    s.push(c);
                    self.bump();
                }
                Ok(Some(Sexp::Atom(s, start)))
            }
        }
    }
}

/// Read every top-level s-expression in `src`.
pub fn read_all(src: &str) -> Result<Vec<Sexp>, SyntaxError> {
    read_all_at(src, Pos { line: 1, col: 1 })
}

pub fn read_all_at(src: &str, start: Pos) -> Result<Vec<Sexp>, SyntaxError> {
    let mut r = Reader::new(src, start);
    let mut out = Vec::new();
    while let Some(s) = r.read()? {
        out.push(s);
    }
    Ok(out)
}

/// Read exactly one s-expression from the front of `src`, returning the
/// remaining text.
pub fn read_one_prefix(src: &str, start: Pos) -> Result<(Sexp, usize), SyntaxError> {
    let mut r = Reader::new(src, start);
    let s = r.read()?.ok_or_else(|| r.err("expected a term"))?;
    let consumed = src.len() - r.chars.collect::<String>().len();
    Ok((s, consumed))
}

/// Constants and base types available to the elaborator.
#[derive(Debug, Clone, Default)]
pub struct Signature {
    pub bases: BTreeSet<Name>,
    pub consts: BTreeMap<Name, Type>,
}

impl Signature {
    pub fn new() -> Self {
        let mut sig = Signature::default();
        sig.bases.insert("nat".into());
        sig.bases.insert("bool".into());
        let b = Type::bool();
        let bb = Type::curried(&[b.clone(), b.clone()], b.clone());
        sig.consts.insert(logic::TRUE.into(), b.clone());
        sig.consts.insert(logic::FALSE.into(), b.clone());
        sig.consts.insert(logic::NOT.into(), Type::fun(b.clone(), b));
        for op in [logic::AND, logic::OR, logic::IMP] {
            sig.consts.insert(op.into(), bb.clone());
        }
        sig
    }

    pub fn parse_type(&self, s: &Sexp) -> Result<Type, SyntaxError> {
        match s {
            Sexp::Atom(a, pos) => {
                if self.bases.contains(a.as_str()) {
                    Ok(Type::base(a))
                } else {
                    Err(SyntaxError::Elab { pos: *pos, msg: format!("unknown type '{a}'") })
                }
            }
            Sexp::List(items, pos) => match items.split_first() {
                Some((Sexp::Atom(h, _), rest)) if h == "=>" && rest.len() >= 2 => {
                    let tys = rest.iter().map(|t| self.parse_type(t)).collect::<Result<Vec<_>, _>>()?;
                    let (last, init) = tys.split_last().unwrap();
                    Ok(Type::curried(init, last.clone()))
                }
                _ => Err(SyntaxError::Elab { pos: *pos, msg: format!("malformed type {s}") }),
            },
            Sexp::Str(_, pos) => Err(SyntaxError::Elab { pos: *pos, msg: "string is not a type".into() }),
        }
    }
}

// Inference types: known structure plus unification variables.
#[derive(Debug, Clone)]
enum IType {
    Base(Name),
    Fun(Box<IType>, Box<IType>),
    Var(usize),
}

impl IType {
    fn from_type(t: &Type) -> IType {
        match t {
            Type::Base(n) => IType::Base(n.clone()),
            Type::Fun(d, c) => IType::Fun(Box::new(IType::from_type(d)), Box::new(IType::from_type(c))),
        }
    }
}

#[derive(Debug, Clone)]
enum ITerm {
    Const(Name, IType),
    Num(BigUint),
    Free(Name, IType),
    Schematic(Name, IType),
    Bound(u32),
    Abs(Name, IType, Box<ITerm>),
    App(Box<ITerm>, Box<ITerm>),
}

/// Elaboration context: declared free variables and schematic types that
/// persist across the terms of one declaration.
pub struct Elaborator<'a> {
    sig: &'a Signature,
    frees: BTreeMap<Name, Type>,
    /// Allow undeclared lowercase names as free variables of inferred type.
    pub implicit_frees: bool,
    subst: Vec<Option<IType>>,
    schem: BTreeMap<Name, IType>,
    implicit: BTreeMap<Name, IType>,
}

impl<'a> Elaborator<'a> {
    pub fn new(sig: &'a Signature) -> Self {
        Elaborator {
            sig,
            frees: BTreeMap::new(),
            implicit_frees: false,
            subst: Vec::new(),
            schem: BTreeMap::new(),
            implicit: BTreeMap::new(),
        }
    }

    pub fn with_frees(mut self, frees: &BTreeMap<Name, Type>) -> Self {
        self.frees = frees.clone();
        self
    }

    fn fresh(&mut self) -> IType {
        self.subst.push(None);
        IType::Var(self.subst.len() - 1)
    }

    fn resolve(&self, t: &IType) -> IType {
        match t {
            IType::Var(v) => match &self.subst[*v] {
                Some(t) => self.resolve(t),
                None => t.clone(),
            },
            _ => t.clone(),
        }
    }

    fn occurs(&self, v: usize, t: &IType) -> bool {
        match self.resolve(t) {
            IType::Var(w) => v == w,
            IType::Fun(a, b) => self.occurs(v, &a) || self.occurs(v, &b),
            IType::Base(_) => false,
        }
    }

    fn unify(&mut self, a: &IType, b: &IType) -> bool {
        let (a, b) = (self.resolve(a), self.resolve(b));
        match (&a, &b) {
            (IType::Var(x), IType::Var(y)) if x == y => true,
            (IType::Var(x), other) | (other, IType::Var(x)) => {
                if self.occurs(*x, other) {
                    return false;
                }
                self.subst[*x] = Some(other.clone());
                true
            }
            (IType::Base(m), IType::Base(n)) => m == n,
            (IType::Fun(a1, b1), IType::Fun(a2, b2)) => self.unify(a1, a2) && self.unify(b1, b2),
            _ => false,
        }
    }

    fn zonk_type(&self, t: &IType) -> Option<Type> {
        match self.resolve(t) {
            IType::Base(n) => Some(Type::Base(n)),
            IType::Fun(a, b) => Some(Type::fun(self.zonk_type(&a)?, self.zonk_type(&b)?)),
            IType::Var(_) => None,
        }
    }

    fn show(&self, t: &IType) -> String {
        match self.resolve(t) {
            IType::Base(n) => n.to_string(),
            IType::Fun(a, b) => format!("(=> {} {})", self.show(&a), self.show(&b)),
            IType::Var(v) => format!("'t{v}"),
        }
    }

    fn zonk(&self, t: &ITerm, pos: Pos) -> Result<Term, SyntaxError> {
        let ty = |it: &IType, what: &str| {
            self.zonk_type(it)
                .ok_or_else(|| SyntaxError::Elab { pos, msg: format!("cannot infer the type of {what}") })
        };
        Ok(match t {
            ITerm::Const(n, it) => Term::Const(n.clone(), ty(it, n)?),
            ITerm::Num(n) => Term::Num(n.clone()),
            ITerm::Free(n, it) => Term::Free(n.clone(), ty(it, n)?),
            ITerm::Schematic(n, it) => {
                let tt = ty(it, &format!("?{n}"))?;
                let numc = n.starts_with("NUMC") && tt.is_nat();
                Term::Schematic(n.clone(), tt, numc)
            }
            ITerm::Bound(i) => Term::Bound(*i),
            ITerm::Abs(h, it, b) => Term::abs(h, ty(it, h)?, self.zonk(b, pos)?),
            ITerm::App(f, a) => Term::app(self.zonk(f, pos)?, self.zonk(a, pos)?),
        })
    }

    /// Elaborate `s` and check it has type `expected` (when given).
    pub fn term(&mut self, s: &Sexp, expected: Option<&Type>) -> Result<Term, SyntaxError> {
        let mut env = Vec::new();
        let (it, ity) = self.elab(s, &mut env)?;
        if let Some(e) = expected {
            if !self.unify(&ity, &IType::from_type(e)) {
                return Err(SyntaxError::Elab {
                    pos: s.pos(),
                    msg: format!("expected type {e}, found {}", self.show(&ity)),
                });
            }
        }
        let t = self.zonk(&it, s.pos())?;
        debug_assert!(t.type_of().is_ok(), "elaborated ill-typed term {t}");
        Ok(t)
    }

    /// Free variables introduced implicitly so far, with their types.
    pub fn implicit_frees(&self) -> BTreeMap<Name, Type> {
        self.implicit
            .iter()
            .filter_map(|(n, t)| Some((n.clone(), self.zonk_type(t)?)))
            .collect()
    }

    fn elab(&mut self, s: &Sexp, env: &mut Vec<(String, IType)>) -> Result<(ITerm, IType), SyntaxError> {
        let err = |msg: String| SyntaxError::Elab { pos: s.pos(), msg };
        match s {
            Sexp::Str(..) => Err(err("unexpected string in term".into())),
            Sexp::Atom(a, _) => {
                if let Ok(n) = a.parse::<BigUint>() {
                    return Ok((ITerm::Num(n), IType::Base("nat".into())));
                }
                if let Some(name) = a.strip_prefix('?') {
                    if name.is_empty() {
                        return Err(err("empty schematic name".into()));
                    }
                    let ty = match self.schem.get(name) {
                        Some(t) => t.clone(),
                        None => {
                            let t = if name.starts_with("NUMC") { IType::Base("nat".into()) } else { self.fresh() };
                            self.schem.insert(name.into(), t.clone());
                            t
                        }
                    };
                    return Ok((ITerm::Schematic(name.into(), ty.clone()), ty));
                }
                if let Some(k) = env.iter().rev().position(|(n, _)| n == a) {
                    let ty = env[env.len() - 1 - k].1.clone();
                    return Ok((ITerm::Bound(k as u32), ty));
                }
                if let Some(ty) = self.frees.get(a.as_str()) {
                    let it = IType::from_type(ty);
                    return Ok((ITerm::Free(a.as_str().into(), it.clone()), it));
                }
                if a == logic::EQ {
                    let v = self.fresh();
                    let ty = IType::Fun(
                        Box::new(v.clone()),
                        Box::new(IType::Fun(Box::new(v), Box::new(IType::Base("bool".into())))),
                    );
                    return Ok((ITerm::Const(logic::EQ.into(), ty.clone()), ty));
                }
                if let Some(ty) = self.sig.consts.get(a.as_str()) {
                    let it = IType::from_type(ty);
                    return Ok((ITerm::Const(a.as_str().into(), it.clone()), it));
                }
                if self.implicit_frees && a.chars().next().is_some_and(|c| c.is_alphabetic()) {
                    let ty = match self.implicit.get(a.as_str()) {
                        Some(t) => t.clone(),
                        None => {
                            let t = self.fresh();
                            self.implicit.insert(a.as_str().into(), t.clone());
                            t
                        }
                    };
                    return Ok((ITerm::Free(a.as_str().into(), ty.clone()), ty));
                }
                Err(err(format!("unknown symbol '{a}'")))
            }
            Sexp::List(items, _) => {
                let Some((head, args)) = items.split_first() else {
                    return Err(err("empty application".into()));
                };
                if let Some(h) = head.atom() {
                    if matches!(h, "forall" | "exists" | "lambda") && !env.iter().any(|(n, _)| n == h) {
                        return self.elab_binder(h, args, s, env);
                    }
                }
                let (mut f, mut fty) = self.elab(head, env)?;
                if args.is_empty() {
                    return Err(err("application without arguments".into()));
                }
                for a in args {
                    let (at, aty) = self.elab(a, env)?;
                    let res = self.fresh();
                    let want = IType::Fun(Box::new(aty.clone()), Box::new(res.clone()));
                    if !self.unify(&fty, &want) {
                        return Err(SyntaxError::Elab {
                            pos: a.pos(),
                            msg: format!(
                                "cannot apply {} of type {} to {} of type {}",
                                head,
                                self.show(&fty),
                                a,
                                self.show(&aty)
                            ),
                        });
                    }
                    f = ITerm::App(Box::new(f), Box::new(at));
                    fty = res;
                }
                Ok((f, fty))
            }
        }
    }

    fn elab_binder(
        &mut self,
        q: &str,
        args: &[Sexp],
        s: &Sexp,
        env: &mut Vec<(String, IType)>,
    ) -> Result<(ITerm, IType), SyntaxError> {
        let err = |msg: String| SyntaxError::Elab { pos: s.pos(), msg };
        let [binder, body] = args else {
            return Err(err(format!("({q} (x T) body) expected")));
        };
        let Some([Sexp::Atom(x, _), ty]) = binder.list() else {
            return Err(err(format!("({q} (x T) body) expected")));
        };
        let ty = IType::from_type(&self.sig.parse_type(ty)?);
        env.push((x.clone(), ty.clone()));
        let r = self.elab(body, env);
        env.pop();
        let (b, bty) = r?;
        let lam = ITerm::Abs(x.as_str().into(), ty.clone(), Box::new(b));
        if q == "lambda" {
            return Ok((lam, IType::Fun(Box::new(ty), Box::new(bty))));
        }
        let bool_t = IType::Base("bool".into());
        if !self.unify(&bty, &bool_t) {
            return Err(err(format!("body of {q} must be bool")));
        }
        let qty = IType::Fun(Box::new(IType::Fun(Box::new(ty), Box::new(bool_t.clone()))), Box::new(bool_t.clone()));
        Ok((ITerm::App(Box::new(ITerm::Const(q.into(), qty)), Box::new(lam)), bool_t))
    }
}

/// Parse a single closed term (no schematics declared in advance).
pub fn parse_term(sig: &Signature, frees: &BTreeMap<Name, Type>, src: &str) -> Result<Term, SyntaxError> {
    let forms = read_all(src)?;
    let [one] = forms.as_slice() else {
        return Err(SyntaxError::Parse { pos: Pos { line: 1, col: 1 }, msg: "expected exactly one term".into() });
    };
    Elaborator::new(sig).with_frees(frees).term(one, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig() -> Signature {
        let mut s = Signature::new();
        let nat = Type::nat();
        s.consts.insert("prime".into(), Type::fun(nat.clone(), Type::bool()));
        s.consts.insert("dvd".into(), Type::curried(&[nat.clone(), nat.clone()], Type::bool()));
        s.consts.insert(">".into(), Type::curried(&[nat.clone(), nat.clone()], Type::bool()));
        s.consts.insert("+".into(), Type::curried(&[nat.clone(), nat.clone()], nat));
        s
    }

    #[test]
    fn parses_prime_definition() {
        let src = "(= (prime ?p) (and (> ?p 1) (forall (m nat) (=> (dvd m ?p) (or (= m 1) (= m ?p))))))";
        let t = parse_term(&sig(), &BTreeMap::new(), src).unwrap();
        assert_eq!(t.type_of().unwrap(), Type::bool());
        assert_eq!(t.to_string(), src);
    }

    #[test]
    fn infers_schematic_types() {
        let t = parse_term(&sig(), &BTreeMap::new(), "(= ?a ?b)");
        assert!(t.is_err(), "unconstrained equality must not default");
        let t = parse_term(&sig(), &BTreeMap::new(), "(= (+ ?a 1) ?b)").unwrap();
        let mut tys = BTreeMap::new();
        t.schematic_types(&mut tys);
        assert!(tys.values().all(|t| t.is_nat()));
    }

    #[test]
    fn reports_positions() {
        let e = parse_term(&sig(), &BTreeMap::new(), "(prime\n  (prime 1))").unwrap_err();
        match e {
            SyntaxError::Elab { pos, .. } => assert_eq!(pos.line, 2),
            other => panic!("{other:?}"),
        }
        assert!(read_all("(a b").is_err());
    }

    #[test]
    fn second_order_schematic() {
        let t = parse_term(&sig(), &BTreeMap::new(), "(forall (n nat) (> (?f n) (?f (+ n 1))))").unwrap();
        let mut tys = BTreeMap::new();
        t.schematic_types(&mut tys);
        assert_eq!(tys["f"], Type::fun(Type::nat(), Type::nat()));
    }
}
