//! Simply-typed terms with schematic variables, substitution and
//! syntactic matching (first-order and restricted second-order).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_bigint::BigUint;
use thiserror::Error;

pub type Name = Arc<str>;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Base(Name),
    Fun(Arc<Type>, Arc<Type>),
}

impl Type {
    pub fn base(name: &str) -> Type {
        Type::Base(name.into())
    }

    pub fn nat() -> Type {
        Type::base("nat")
    }

    pub fn bool() -> Type {
        Type::base("bool")
    }

    pub fn fun(dom: Type, cod: Type) -> Type {
        Type::Fun(Arc::new(dom), Arc::new(cod))
    }

    /// `[a, b] -> c` as `a => b => c`.
    pub fn curried(args: &[Type], result: Type) -> Type {
        args.iter()
            .rev()
            .fold(result, |acc, a| Type::fun(a.clone(), acc))
    }

    pub fn is_fun(&self) -> bool {
        matches!(self, Type::Fun(..))
    }

    pub fn is_bool(&self) -> bool {
        matches!(self, Type::Base(n) if &**n == "bool")
    }

    pub fn is_nat(&self) -> bool {
        matches!(self, Type::Base(n) if &**n == "nat")
    }

    pub fn dest_fun(&self) -> Option<(&Type, &Type)> {
        match self {
            Type::Fun(d, c) => Some((d, c)),
            Type::Base(_) => None,
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Base(n) => write!(f, "{n}"),
            Type::Fun(d, c) => write!(f, "(=> {d} {c})"),
        }
    }
}

impl fmt::Debug for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Printing hint for a bound variable. Ignored by equality, hashing and
/// ordering so that alpha-equivalent terms compare equal.
#[derive(Clone)]
pub struct Hint(pub Name);

impl PartialEq for Hint {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}
impl Eq for Hint {}
impl Hash for Hint {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}
impl PartialOrd for Hint {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Hint {
    fn cmp(&self, _: &Self) -> std::cmp::Ordering {
        std::cmp::Ordering::Equal
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Const(Name, Type),
    /// Natural-number literal.
    Num(BigUint),
    Free(Name, Type),
    /// Schematic variable; `numc` restricts it to numerals.
    Schematic(Name, Type, bool),
    /// de Bruijn index, 0 is the innermost binder.
    Bound(u32),
    Abs(Hint, Type, Arc<Term>),
    App(Arc<Term>, Arc<Term>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("ill-typed term: {0}")]
    IllTyped(String),
    #[error("invalid pattern: {0}")]
    InvalidPattern(String),
}

pub type Subst = BTreeMap<Name, Term>;

impl Term {
    pub fn cnst(name: &str, ty: Type) -> Term {
        Term::Const(name.into(), ty)
    }

    pub fn free(name: &str, ty: Type) -> Term {
        Term::Free(name.into(), ty)
    }

    pub fn var(name: &str, ty: Type) -> Term {
        let numc = name.starts_with("NUMC") && ty.is_nat();
        Term::Schematic(name.into(), ty, numc)
    }

    pub fn num(n: u64) -> Term {
        Term::Num(BigUint::from(n))
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Arc::new(f), Arc::new(a))
    }

    pub fn apps(f: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(f, Term::app)
    }

    pub fn abs(hint: &str, ty: Type, body: Term) -> Term {
        Term::Abs(Hint(hint.into()), ty, Arc::new(body))
    }

    /// Head and argument list of an application spine.
    pub fn strip_app(&self) -> (&Term, Vec<&Term>) {
        let mut args = Vec::new();
        let mut t = self;
        while let Term::App(f, a) = t {
            args.push(&**a);
            t = f;
        }
        args.reverse();
        (t, args)
    }

    pub fn head_const(&self) -> Option<&str> {
        match self.strip_app().0 {
            Term::Const(n, _) => Some(n),
            _ => None,
        }
    }

    pub fn as_num(&self) -> Option<&BigUint> {
        match self {
            Term::Num(n) => Some(n),
            _ => None,
        }
    }

    pub fn has_schematics(&self) -> bool {
        match self {
            Term::Schematic(..) => true,
            Term::Abs(_, _, b) => b.has_schematics(),
            Term::App(f, a) => f.has_schematics() || a.has_schematics(),
            _ => false,
        }
    }

    pub fn schematics(&self, out: &mut BTreeSet<Name>) {
        match self {
            Term::Schematic(n, ..) => {
                out.insert(n.clone());
            }
            Term::Abs(_, _, b) => b.schematics(out),
            Term::App(f, a) => {
                f.schematics(out);
                a.schematics(out);
            }
            _ => {}
        }
    }

    pub fn schematic_types(&self, out: &mut BTreeMap<Name, Type>) {
        match self {
            Term::Schematic(n, ty, _) => {
                out.insert(n.clone(), ty.clone());
            }
            Term::Abs(_, _, b) => b.schematic_types(out),
            Term::App(f, a) => {
                f.schematic_types(out);
                a.schematic_types(out);
            }
            _ => {}
        }
    }

    pub fn contains_free(&self, name: &str) -> bool {
        match self {
            Term::Free(n, _) => &**n == name,
            Term::Abs(_, _, b) => b.contains_free(name),
            Term::App(f, a) => f.contains_free(name) || a.contains_free(name),
            _ => false,
        }
    }

    pub fn frees(&self, out: &mut BTreeSet<Name>) {
        match self {
            Term::Free(n, _) => {
                out.insert(n.clone());
            }
            Term::Abs(_, _, b) => b.frees(out),
            Term::App(f, a) => {
                f.frees(out);
                a.frees(out);
            }
            _ => {}
        }
    }

    pub fn contains(&self, sub: &Term) -> bool {
        if self == sub {
            return true;
        }
        match self {
            Term::Abs(_, _, b) => b.contains(sub),
            Term::App(f, a) => f.contains(sub) || a.contains(sub),
            _ => false,
        }
    }

    /// True if the term has a bound index pointing outside of itself.
    pub fn has_loose_bound(&self) -> bool {
        self.loose_above(0)
    }

    fn loose_above(&self, depth: u32) -> bool {
        match self {
            Term::Bound(i) => *i >= depth,
            Term::Abs(_, _, b) => b.loose_above(depth + 1),
            Term::App(f, a) => f.loose_above(depth) || a.loose_above(depth),
            _ => false,
        }
    }

    /// Type of a closed term.
    pub fn type_of(&self) -> Result<Type, TermError> {
        typecheck_in(self, &mut Vec::new())
    }

    /// Replace every occurrence of `from` (closed) by `to` (closed).
    pub fn replace(&self, from: &Term, to: &Term) -> Term {
        if self == from {
            return to.clone();
        }
        match self {
            Term::Abs(h, ty, b) => Term::Abs(h.clone(), ty.clone(), Arc::new(b.replace(from, to))),
            Term::App(f, a) => Term::app(f.replace(from, to), a.replace(from, to)),
            _ => self.clone(),
        }
    }

    /// Turn free variable `name` into a bound variable of a new binder.
    pub fn abstract_free(&self, name: &str) -> Term {
        fn go(t: &Term, name: &str, depth: u32) -> Term {
            match t {
                Term::Free(n, _) if &**n == name => Term::Bound(depth),
                Term::Abs(h, ty, b) => Term::Abs(h.clone(), ty.clone(), Arc::new(go(b, name, depth + 1))),
                Term::App(f, a) => Term::app(go(f, name, depth), go(a, name, depth)),
                _ => t.clone(),
            }
        }
        go(self, name, 0)
    }
}

/// Shift loose bound indices `>= cutoff` by `by`.
pub fn shift(t: &Term, by: i64, cutoff: u32) -> Term {
    if by == 0 {
        return t.clone();
    }
    match t {
        Term::Bound(i) if *i >= cutoff => Term::Bound((*i as i64 + by) as u32),
        Term::Abs(h, ty, b) => Term::Abs(h.clone(), ty.clone(), Arc::new(shift(b, by, cutoff + 1))),
        Term::App(f, a) => Term::app(shift(f, by, cutoff), shift(a, by, cutoff)),
        _ => t.clone(),
    }
}

/// Substitute `arg` for the outermost loose index of `body` (beta step).
pub fn instantiate(body: &Term, arg: &Term) -> Term {
    fn go(t: &Term, arg: &Term, depth: u32) -> Term {
        match t {
            Term::Bound(i) if *i == depth => shift(arg, depth as i64, 0),
            Term::Bound(i) if *i > depth => Term::Bound(i - 1),
            Term::Abs(h, ty, b) => Term::Abs(h.clone(), ty.clone(), Arc::new(go(b, arg, depth + 1))),
            Term::App(f, a) => Term::app(go(f, arg, depth), go(a, arg, depth)),
            _ => t.clone(),
        }
    }
    go(body, arg, 0)
}

pub fn beta_norm(t: &Term) -> Term {
    match t {
        Term::App(f, a) => {
            let f = beta_norm(f);
            let a = beta_norm(a);
            match f {
                Term::Abs(_, _, body) => beta_norm(&instantiate(&body, &a)),
                f => Term::app(f, a),
            }
        }
        Term::Abs(h, ty, b) => Term::Abs(h.clone(), ty.clone(), Arc::new(beta_norm(b))),
        _ => t.clone(),
    }
}

pub fn typecheck(t: &Term) -> Result<Type, TermError> {
    t.type_of()
}

fn typecheck_in(t: &Term, env: &mut Vec<Type>) -> Result<Type, TermError> {
    match t {
        Term::Const(_, ty) | Term::Free(_, ty) | Term::Schematic(_, ty, _) => Ok(ty.clone()),
        Term::Num(_) => Ok(Type::nat()),
        Term::Bound(i) => {
            let i = *i as usize;
            if i < env.len() {
                Ok(env[env.len() - 1 - i].clone())
            } else {
                Err(TermError::IllTyped(format!("dangling bound index {i}")))
            }
        }
        Term::Abs(_, ty, body) => {
            env.push(ty.clone());
            let r = typecheck_in(body, env);
            env.pop();
            Ok(Type::fun(ty.clone(), r?))
        }
        Term::App(f, a) => {
            let fty = typecheck_in(f, env)?;
            let aty = typecheck_in(a, env)?;
            match fty.dest_fun() {
                Some((d, c)) if *d == aty => Ok(c.clone()),
                Some((d, _)) => Err(TermError::IllTyped(format!(
                    "argument {a} has type {aty}, expected {d}"
                ))),
                None => Err(TermError::IllTyped(format!("{f} of type {fty} applied to {a}"))),
            }
        }
    }
}

/// Count of leaves plus App/Abs nodes.
pub fn term_size(t: &Term) -> usize {
    match t {
        Term::Abs(_, _, b) => 1 + term_size(b),
        Term::App(f, a) => 1 + term_size(f) + term_size(a),
        _ => 1,
    }
}

/// Closed, schematic-free subterms of `t` that are not of function type,
/// not under a binder, including `t` itself. Deduplicated, in pre-order.
pub fn subterms(t: &Term) -> Vec<Term> {
    fn go(t: &Term, out: &mut Vec<Term>, seen: &mut BTreeSet<Term>) {
        if let Ok(ty) = t.type_of() {
            if !ty.is_fun() && !t.has_schematics() && seen.insert(t.clone()) {
                out.push(t.clone());
            }
        }
        if let Term::App(f, a) = t {
            go(f, out, seen);
            go(a, out, seen);
        }
    }
    let mut out = Vec::new();
    go(t, &mut out, &mut BTreeSet::new());
    out
}

/// Apply a substitution, beta-reducing redexes created by instantiating
/// function-typed schematics.
pub fn apply_subst(s: &Subst, t: &Term) -> Term {
    if s.is_empty() {
        return t.clone();
    }
    let mut created = false;
    let r = subst_rec(s, t, &mut created);
    if created {
        beta_norm(&r)
    } else {
        r
    }
}

fn subst_rec(s: &Subst, t: &Term, created: &mut bool) -> Term {
    match t {
        Term::Schematic(n, ..) => match s.get(n) {
            Some(v) => {
                if matches!(v, Term::Abs(..)) {
                    *created = true;
                }
                v.clone()
            }
            None => t.clone(),
        },
        Term::Abs(h, ty, b) => Term::Abs(h.clone(), ty.clone(), Arc::new(subst_rec(s, b, created))),
        Term::App(f, a) => Term::app(subst_rec(s, f, created), subst_rec(s, a, created)),
        _ => t.clone(),
    }
}

/// A term used as a pattern, with its second-order validity precomputed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    pub term: Term,
    pub valid: bool,
}

impl Pattern {
    pub fn new(term: Term) -> Pattern {
        let valid = pattern_is_valid(&term);
        Pattern { term, valid }
    }
}

fn schematic_head(t: &Term) -> Option<(&Name, Vec<&Term>)> {
    let (h, args) = t.strip_app();
    match h {
        Term::Schematic(n, ..) if !args.is_empty() => Some((n, args)),
        _ => None,
    }
}

fn distinct_bounds(args: &[&Term]) -> Option<Vec<u32>> {
    let mut out = Vec::with_capacity(args.len());
    for a in args {
        match a {
            Term::Bound(i) if !out.contains(i) => out.push(*i),
            _ => return None,
        }
    }
    Some(out)
}

/// A pattern is valid if some traversal order meets every function-position
/// schematic first applied to distinct bound variables.
pub fn pattern_is_valid(p: &Term) -> bool {
    let mut assigned: BTreeSet<Name> = BTreeSet::new();
    let mut work: Vec<&Term> = vec![p];
    loop {
        if work.is_empty() {
            return true;
        }
        let mut progressed = false;
        let mut next = Vec::new();
        for t in std::mem::take(&mut work) {
            match schematic_head(t) {
                Some((n, args)) => {
                    if assigned.contains(n) {
                        let mut vs = BTreeSet::new();
                        for a in &args {
                            a.schematics(&mut vs);
                        }
                        if vs.iter().all(|v| assigned.contains(v)) {
                            progressed = true;
                        } else {
                            next.push(t);
                        }
                    } else if distinct_bounds(&args).is_some() {
                        assigned.insert(n.clone());
                        progressed = true;
                    } else {
                        next.push(t);
                    }
                }
                None => {
                    progressed = true;
                    match t {
                        Term::Schematic(n, ..) => {
                            assigned.insert(n.clone());
                        }
                        Term::App(f, a) => {
                            next.push(f);
                            next.push(a);
                        }
                        Term::Abs(_, _, b) => next.push(b),
                        _ => {}
                    }
                }
            }
        }
        work = next;
        if !progressed {
            return false;
        }
    }
}

/// Syntactic first-order matching. Schematics in function position are
/// treated as ordinary heads and bind to the corresponding function part.
pub fn fo_match(p: &Pattern, t: &Term, partial: &Subst) -> Vec<Subst> {
    let mut s = partial.clone();
    let mut env = Vec::new();
    if fo_rec(&p.term, t, &mut s, &mut env) {
        vec![s]
    } else {
        Vec::new()
    }
}

fn bind(s: &mut Subst, name: &Name, ty: &Type, numc: bool, t: &Term, env: &mut Vec<Type>) -> bool {
    if t.has_loose_bound() {
        return false;
    }
    if numc && t.as_num().is_none() {
        return false;
    }
    if let Some(old) = s.get(name) {
        return old == t;
    }
    match typecheck_in(t, env) {
        Ok(tt) if tt == *ty => {
            s.insert(name.clone(), t.clone());
            true
        }
        _ => false,
    }
}

fn fo_rec(p: &Term, t: &Term, s: &mut Subst, env: &mut Vec<Type>) -> bool {
    match (p, t) {
        (Term::Schematic(n, ty, numc), _) => bind(s, n, ty, *numc, t, env),
        (Term::App(pf, pa), Term::App(tf, ta)) => fo_rec(pf, tf, s, env) && fo_rec(pa, ta, s, env),
        (Term::Abs(_, pty, pb), Term::Abs(_, tty, tb)) => {
            if pty != tty {
                return false;
            }
            env.push(tty.clone());
            let r = fo_rec(pb, tb, s, env);
            env.pop();
            r
        }
        _ => p == t,
    }
}

/// Second-order matching under the distinct-bound-variable restriction.
/// Agrees with [`fo_match`] on first-order patterns.
pub fn ho_match(p: &Pattern, t: &Term, partial: &Subst) -> Result<Vec<Subst>, TermError> {
    if !p.valid {
        return Err(TermError::InvalidPattern(p.term.to_string()));
    }
    let mut s = partial.clone();
    Ok(match ho_rec(&p.term, t, &mut s) {
        Ok(true) => vec![s],
        Ok(false) => Vec::new(),
        Err(e) => return Err(e),
    })
}

/// Worklist second-order matcher. Pairs are (pattern, term, binder types).
fn ho_rec(p: &Term, t: &Term, s: &mut Subst) -> Result<bool, TermError> {
    let mut work: Vec<(Term, Term, Vec<Type>)> = vec![(p.clone(), t.clone(), Vec::new())];
    while !work.is_empty() {
        let mut progressed = false;
        let mut deferred = Vec::new();
        for (p, t, mut env) in std::mem::take(&mut work) {
            if let Some((name, args)) = schematic_head(&p) {
                if let Some(val) = s.get(name) {
                    let mut vs = BTreeSet::new();
                    for a in &args {
                        a.schematics(&mut vs);
                    }
                    if !vs.iter().all(|v| s.contains_key(v)) {
                        deferred.push((p, t, env));
                        continue;
                    }
                    progressed = true;
                    let _ = val;
                    let inst = apply_subst(s, &p);
                    if inst != t {
                        return Ok(false);
                    }
                    continue;
                }
                let Some(bounds) = distinct_bounds(&args) else {
                    deferred.push((p, t, env));
                    continue;
                };
                progressed = true;
                let Some(lam) = abstract_bounds(&t, &bounds, &env) else {
                    return Ok(false);
                };
                let (h, _) = p.strip_app();
                let Term::Schematic(_, sty, _) = h else { unreachable!() };
                match lam.type_of() {
                    Ok(ty) if ty == *sty => {
                        s.insert(name.clone(), lam);
                    }
                    _ => return Ok(false),
                }
                continue;
            }
            progressed = true;
            match (&p, &t) {
                (Term::Schematic(n, ty, numc), _) => {
                    if !bind(s, n, ty, *numc, &t, &mut env) {
                        return Ok(false);
                    }
                }
                (Term::App(pf, pa), Term::App(tf, ta)) => {
                    deferred.push(((**pf).clone(), (**tf).clone(), env.clone()));
                    deferred.push(((**pa).clone(), (**ta).clone(), env));
                }
                (Term::Abs(_, pty, pb), Term::Abs(_, tty, tb)) => {
                    if pty != tty {
                        return Ok(false);
                    }
                    env.push(tty.clone());
                    deferred.push(((**pb).clone(), (**tb).clone(), env));
                }
                _ => {
                    if p != t {
                        return Ok(false);
                    }
                }
            }
        }
        work = deferred;
        if !progressed {
            return Err(TermError::InvalidPattern(p.to_string()));
        }
    }
    Ok(true)
}

/// Build `λx1..xk. t` where `xj` replaces loose index `bounds[j]` of `t`.
/// Fails if `t` has any other loose index.
fn abstract_bounds(t: &Term, bounds: &[u32], env: &[Type]) -> Option<Term> {
    let k = bounds.len() as u32;
    fn go(t: &Term, bounds: &[u32], k: u32, depth: u32) -> Option<Term> {
        Some(match t {
            Term::Bound(i) if *i >= depth => {
                let loose = i - depth;
                let j = bounds.iter().position(|b| *b == loose)? as u32;
                Term::Bound(depth + (k - 1 - j))
            }
            Term::Abs(h, ty, b) => Term::Abs(h.clone(), ty.clone(), Arc::new(go(b, bounds, k, depth + 1)?)),
            Term::App(f, a) => Term::app(go(f, bounds, k, depth)?, go(a, bounds, k, depth)?),
            _ => t.clone(),
        })
    }
    let mut body = go(t, bounds, k, 0)?;
    for b in bounds.iter().rev() {
        let ty = env.get(env.len().checked_sub(1 + *b as usize)?)?.clone();
        body = Term::Abs(Hint("x".into()), ty, Arc::new(body));
    }
    Some(eta_contract(&body))
}

/// `λx. f x` to `f` when `x` does not occur in `f`.
pub fn eta_contract(t: &Term) -> Term {
    match t {
        Term::Abs(h, ty, body) => {
            let body = eta_contract(body);
            if let Term::App(f, a) = &body {
                if **a == Term::Bound(0) && !f.loose_above(0) {
                    return shift(f, -1, 0);
                }
            }
            Term::Abs(h.clone(), ty.clone(), Arc::new(body))
        }
        Term::App(f, a) => Term::app(eta_contract(f), eta_contract(a)),
        _ => t.clone(),
    }
}

// ---------------------------------------------------------------------------
// Logical vocabulary.

pub mod logic {
    use super::*;

    pub const NOT: &str = "not";
    pub const AND: &str = "and";
    pub const OR: &str = "or";
    pub const IMP: &str = "=>";
    pub const EQ: &str = "=";
    pub const FORALL: &str = "forall";
    pub const EXISTS: &str = "exists";
    pub const TRUE: &str = "True";
    pub const FALSE: &str = "False";

    fn bin_bool() -> Type {
        Type::curried(&[Type::bool(), Type::bool()], Type::bool())
    }

    pub fn mk_false() -> Term {
        Term::cnst(FALSE, Type::bool())
    }

    pub fn mk_true() -> Term {
        Term::cnst(TRUE, Type::bool())
    }

    pub fn mk_not(t: Term) -> Term {
        Term::app(Term::cnst(NOT, Type::fun(Type::bool(), Type::bool())), t)
    }

    pub fn mk_and(a: Term, b: Term) -> Term {
        Term::apps(Term::cnst(AND, bin_bool()), [a, b])
    }

    pub fn mk_or(a: Term, b: Term) -> Term {
        Term::apps(Term::cnst(OR, bin_bool()), [a, b])
    }

    pub fn mk_imp(a: Term, b: Term) -> Term {
        Term::apps(Term::cnst(IMP, bin_bool()), [a, b])
    }

    pub fn eq_const(ty: Type) -> Term {
        Term::cnst(EQ, Type::curried(&[ty.clone(), ty], Type::bool()))
    }

    /// Panics on ill-typed `a`.
    pub fn mk_eq(a: Term, b: Term) -> Term {
        let ty = a.type_of().expect("mk_eq: ill-typed side");
        Term::apps(eq_const(ty), [a, b])
    }

    pub fn quant_const(name: &str, ty: Type) -> Term {
        Term::cnst(name, Type::fun(Type::fun(ty, Type::bool()), Type::bool()))
    }

    /// `Q x. body` where `body` is already abstracted (uses Bound(0)).
    pub fn mk_quant(q: &str, hint: &str, ty: Type, body: Term) -> Term {
        Term::app(quant_const(q, ty.clone()), Term::abs(hint, ty, body))
    }

    pub fn mk_forall_free(name: &str, ty: Type, body: &Term) -> Term {
        mk_quant(FORALL, name, ty, body.abstract_free(name))
    }

    pub fn mk_exists_free(name: &str, ty: Type, body: &Term) -> Term {
        mk_quant(EXISTS, name, ty, body.abstract_free(name))
    }

    pub fn mk_conj(ts: &[Term]) -> Term {
        match ts.split_last() {
            None => mk_true(),
            Some((last, init)) => init
                .iter()
                .rev()
                .fold(last.clone(), |acc, t| mk_and(t.clone(), acc)),
        }
    }

    pub fn mk_disj(ts: &[Term]) -> Term {
        match ts.split_last() {
            None => mk_false(),
            Some((last, init)) => init
                .iter()
                .rev()
                .fold(last.clone(), |acc, t| mk_or(t.clone(), acc)),
        }
    }

    pub fn is_false(t: &Term) -> bool {
        matches!(t, Term::Const(n, _) if &**n == FALSE)
    }

    pub fn is_true(t: &Term) -> bool {
        matches!(t, Term::Const(n, _) if &**n == TRUE)
    }

    pub fn dest_unop<'a>(t: &'a Term, op: &str) -> Option<&'a Term> {
        match t {
            Term::App(f, a) => match &**f {
                Term::Const(n, _) if &**n == op => Some(a),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn dest_binop<'a>(t: &'a Term, op: &str) -> Option<(&'a Term, &'a Term)> {
        match t {
            Term::App(f, b) => match &**f {
                Term::App(g, a) => match &**g {
                    Term::Const(n, _) if &**n == op => Some((a, b)),
                    _ => None,
                },
                _ => None,
            },
            _ => None,
        }
    }

    pub fn dest_not(t: &Term) -> Option<&Term> {
        dest_unop(t, NOT)
    }

    pub fn dest_and(t: &Term) -> Option<(&Term, &Term)> {
        dest_binop(t, AND)
    }

    pub fn dest_or(t: &Term) -> Option<(&Term, &Term)> {
        dest_binop(t, OR)
    }

    pub fn dest_imp(t: &Term) -> Option<(&Term, &Term)> {
        dest_binop(t, IMP)
    }

    pub fn dest_eq(t: &Term) -> Option<(&Term, &Term)> {
        dest_binop(t, EQ)
    }

    /// `(hint, type, body)` of a quantifier application.
    pub fn dest_quant<'a>(t: &'a Term, q: &str) -> Option<(&'a Name, &'a Type, &'a Term)> {
        match dest_unop(t, q)? {
            Term::Abs(h, ty, b) => Some((&h.0, ty, b)),
            _ => None,
        }
    }

    pub fn dest_forall(t: &Term) -> Option<(&Name, &Type, &Term)> {
        dest_quant(t, FORALL)
    }

    pub fn dest_exists(t: &Term) -> Option<(&Name, &Type, &Term)> {
        dest_quant(t, EXISTS)
    }

    /// Classical negation: strips a leading `not` instead of adding one.
    pub fn neg(t: &Term) -> Term {
        match dest_not(t) {
            Some(inner) => inner.clone(),
            None => mk_not(t.clone()),
        }
    }

    /// Split a curried implication chain `A1 => ... => An => C`.
    pub fn strip_imp(t: &Term) -> (Vec<Term>, Term) {
        let mut prems = Vec::new();
        let mut cur = t;
        while let Some((a, b)) = dest_imp(cur) {
            prems.push(a.clone());
            cur = b;
        }
        (prems, cur.clone())
    }

    pub fn flatten_disj(t: &Term) -> Vec<Term> {
        match dest_or(t) {
            Some((a, b)) => {
                let mut v = flatten_disj(a);
                v.extend(flatten_disj(b));
                v
            }
            None => vec![t.clone()],
        }
    }

    pub fn flatten_conj(t: &Term) -> Vec<Term> {
        match dest_and(t) {
            Some((a, b)) => {
                let mut v = flatten_conj(a);
                v.extend(flatten_conj(b));
                v
            }
            None => vec![t.clone()],
        }
    }
}

// ---------------------------------------------------------------------------
// Printing in the s-expression surface syntax.

const BINDERS: [&str; 2] = [logic::FORALL, logic::EXISTS];

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut names = Vec::new();
        write_term(self, &mut names, f)
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn fresh_hint(hint: &str, names: &[String], t: &Term) -> String {
    let mut used = BTreeSet::new();
    t.frees(&mut used);
    let mut candidate = hint.to_string();
    let mut k = 0;
    while names.contains(&candidate) || used.contains(candidate.as_str()) {
        k += 1;
        candidate = format!("{hint}{k}");
    }
    candidate
}

fn write_term(t: &Term, names: &mut Vec<String>, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match t {
        Term::Const(n, _) | Term::Free(n, _) => write!(f, "{n}"),
        Term::Num(n) => write!(f, "{n}"),
        Term::Schematic(n, ..) => write!(f, "?{n}"),
        Term::Bound(i) => match names.len().checked_sub(1 + *i as usize) {
            Some(k) => write!(f, "{}", names[k]),
            None => write!(f, "#{i}"),
        },
        Term::Abs(h, ty, body) => {
            let name = fresh_hint(&h.0, names, body);
            write!(f, "(lambda ({name} {ty}) ")?;
            names.push(name);
            write_term(body, names, f)?;
            names.pop();
            write!(f, ")")
        }
        Term::App(..) => {
            let (head, args) = t.strip_app();
            if let (Term::Const(q, _), [Term::Abs(h, ty, body)]) = (head, args.as_slice()) {
                if BINDERS.contains(&&**q) {
                    let name = fresh_hint(&h.0, names, body);
                    write!(f, "({q} ({name} {ty}) ")?;
                    names.push(name);
                    write_term(body, names, f)?;
                    names.pop();
                    return write!(f, ")");
                }
            }
            write!(f, "(")?;
            write_term(head, names, f)?;
            for a in args {
                write!(f, " ")?;
                write_term(a, names, f)?;
            }
            write!(f, ")")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::logic::*;
    use super::*;

    fn nat() -> Type {
        Type::nat()
    }
    fn p() -> Term {
        Term::free("p", nat())
    }
    fn even() -> Term {
        Term::cnst("even", Type::fun(nat(), Type::bool()))
    }
    fn plus(a: Term, b: Term) -> Term {
        Term::apps(Term::cnst("+", Type::curried(&[nat(), nat()], nat())), [a, b])
    }
    fn le(a: Term, b: Term) -> Term {
        Term::apps(Term::cnst("<=", Type::curried(&[nat(), nat()], Type::bool())), [a, b])
    }

    #[test]
    fn typecheck_examples() {
        assert_eq!(typecheck(&Term::app(even(), p())).unwrap(), Type::bool());
        assert_eq!(typecheck(&p()).unwrap(), nat());
        assert!(matches!(
            typecheck(&Term::app(p(), Term::num(0))),
            Err(TermError::IllTyped(_))
        ));
        assert!(typecheck(&Term::Bound(0)).is_err());
    }

    #[test]
    fn sizes() {
        assert_eq!(term_size(&p()), 1);
        assert_eq!(term_size(&Term::app(even(), p())), 3);
    }

    #[test]
    fn subterm_examples() {
        let ep = Term::app(even(), p());
        assert_eq!(subterms(&ep), vec![ep.clone(), p()]);
        assert_eq!(subterms(&p()), vec![p()]);
        let dvd = Term::cnst("dvd", Type::curried(&[nat(), nat()], Type::bool()));
        let t = Term::apps(dvd, [Term::num(2), p()]);
        assert_eq!(subterms(&t), vec![t.clone(), Term::num(2), p()]);
    }

    #[test]
    fn subst_beta() {
        let f = Term::var("f", Type::fun(nat(), nat()));
        let m = Term::free("m", nat());
        let n = Term::free("n", nat());
        let pat = le(Term::app(f.clone(), m.clone()), Term::app(f, n.clone()));
        let lam = Term::abs("x", nat(), plus(Term::Bound(0), Term::num(1)));
        let s: Subst = [("f".into(), lam)].into_iter().collect();
        let r = apply_subst(&s, &pat);
        assert_eq!(r, le(plus(m, Term::num(1)), plus(n, Term::num(1))));
        assert_eq!(typecheck(&r).unwrap(), Type::bool());
        assert_eq!(apply_subst(&Subst::new(), &pat), pat);
    }

    #[test]
    fn fo_match_examples() {
        let a = Term::var("A", Type::bool());
        let b = Term::var("B", Type::bool());
        let pat = Pattern::new(mk_or(a, b));
        let two = Term::num(2);
        let t = mk_or(mk_eq(two.clone(), Term::num(1)), mk_eq(two.clone(), p()));
        let r = fo_match(&pat, &t, &Subst::new());
        assert_eq!(r.len(), 1);
        assert_eq!(r[0]["A"], mk_eq(two.clone(), Term::num(1)));
        assert_eq!(r[0]["B"], mk_eq(two, p()));

        let numc = Pattern::new(plus(Term::var("NUMC1", nat()), Term::var("NUMC2", nat())));
        assert!(fo_match(&numc, &plus(Term::free("n", nat()), Term::num(2)), &Subst::new()).is_empty());
        assert_eq!(fo_match(&numc, &plus(Term::num(3), Term::num(2)), &Subst::new()).len(), 1);
    }

    #[test]
    fn ho_match_monotone() {
        let f = Term::var("f", Type::fun(nat(), nat()));
        let g = Term::cnst("g", Type::fun(nat(), nat()));
        let body = |h: &Term| le(Term::app(h.clone(), Term::Bound(0)), Term::app(h.clone(), plus(Term::Bound(0), Term::num(1))));
        let pat = Pattern::new(Term::abs("n", nat(), body(&f)));
        assert!(pat.valid);
        let t = Term::abs("n", nat(), body(&g));
        let r = ho_match(&pat, &t, &Subst::new()).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0]["f"], g);
        let inst = apply_subst(&r[0], &pat.term);
        assert_eq!(inst, t);
    }

    #[test]
    fn invalid_ho_pattern() {
        let f = Term::var("f", Type::fun(nat(), nat()));
        let x = Term::var("x", nat());
        let pat = Pattern::new(Term::app(f, x));
        assert!(!pat.valid);
        assert!(matches!(
            ho_match(&pat, &Term::app(Term::cnst("g", Type::fun(nat(), nat())), p()), &Subst::new()),
            Err(TermError::InvalidPattern(_))
        ));
    }

    #[test]
    fn display_quantifier() {
        let m = Term::free("m", nat());
        let t = mk_forall_free("m", nat(), &le(m, p()));
        assert_eq!(t.to_string(), "(forall (m nat) (<= m p))");
    }
}
