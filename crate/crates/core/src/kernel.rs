//! Justifications and the replay checker.
//!
//! Every derived fact carries a [`Justification`]: a node of a derivation
//! DAG naming one rule of a small fixed rule set, its premises, and the
//! conclusion it claims. [`replay`] recomputes each conclusion from the
//! rule and the premises' claims and compares, so that heuristics producing
//! facts never need to be trusted.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::arith;
use crate::boxes::{BoxRegistry, BoxSet};
use crate::term::{apply_subst, beta_norm, instantiate, logic, term_size, Name, Subst, Term, Type};
use crate::theory::Theory;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    /// Assumption `idx` of primitive box `prim`.
    Assume { prim: u32, idx: usize },
    /// Instance of a theory axiom.
    Axiom { name: Name, subst: Subst },
    ConjI,
    ConjE1,
    ConjE2,
    /// `A` to `A | B`.
    DisjI1(Term),
    /// `B` to `A | B`.
    DisjI2(Term),
    /// `A | B` with the negation of one disjunct gives the other.
    DisjE,
    MP,
    /// Contraposition of premise `k` (0-based) of an implication chain:
    /// premises are the chain, the other antecedents in order, then `~C`.
    MT(usize),
    NotE,
    NotNotE,
    /// `~(A & B)` with `A` (or `B`) gives the negation of the other conjunct.
    NotConjE,
    NotDisjE1,
    NotDisjE2,
    NotImpE1,
    NotImpE2,
    NotAllE,
    NotExE,
    ForallE(Term),
    EqMP,
    Refl(Term),
    Sym,
    Trans,
    Cong,
    NumEval(Term),
    /// `a = b` where both sides flatten to the same operand multiset of an
    /// associative-commutative operator.
    AcPerm { op: Name, lhs: Term, rhs: Term },
    /// Negated assumptions of a resolved primitive box.
    Resolved { prim: u32 },
    /// Body of an existential instantiated at a fresh constant.
    Skolem { name: Name },
    /// Discharge of a skolem constant over a derivation.
    ExE { name: Name },
    /// Induction hypothesis for variable `var` of primitive box `prim`.
    IndHyp { prim: u32, var: Name },
    /// Resolution of `prim` discharging its induction hypotheses.
    NatInduct { prim: u32, var: Name },
    StrongIndHyp { prim: u32, var: Name, arbitrary: Vec<Name> },
    StrongInduct { prim: u32, var: Name, arbitrary: Vec<Name> },
}

impl Rule {
    pub fn label(&self) -> String {
        match self {
            Rule::Assume { prim, idx } => format!("Assume({prim},{idx})"),
            Rule::Axiom { name, .. } => format!("Axiom({name})"),
            Rule::DisjI1(_) => "DisjI1".into(),
            Rule::DisjI2(_) => "DisjI2".into(),
            Rule::MT(k) => format!("MT({k})"),
            Rule::ForallE(_) => "ForallE".into(),
            Rule::Refl(_) => "Refl".into(),
            Rule::NumEval(_) => "NumEval".into(),
            Rule::AcPerm { op, .. } => format!("AcPerm({op})"),
            Rule::Resolved { prim } => format!("Resolved({prim})"),
            Rule::Skolem { name } => format!("Skolem({name})"),
            Rule::ExE { name } => format!("ExE({name})"),
            Rule::IndHyp { prim, var } => format!("IndHyp({prim},{var})"),
            Rule::NatInduct { prim, var } => format!("NatInduct({prim},{var})"),
            Rule::StrongIndHyp { prim, var, .. } => format!("StrongIndHyp({prim},{var})"),
            Rule::StrongInduct { prim, var, .. } => format!("StrongInduct({prim},{var})"),
            other => format!("{other:?}"),
        }
    }
}

#[derive(Debug)]
pub struct JNode {
    pub rule: Rule,
    pub premises: Vec<Justification>,
    pub concl: Term,
    pub cbox: BoxSet,
}

/// Shared, immutable derivation node.
#[derive(Clone)]
pub struct Justification(pub Arc<JNode>);

impl fmt::Debug for Justification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ⊢ {} [{}]", self.0.cbox, self.0.concl, self.0.rule.label())
    }
}

impl PartialEq for Justification {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KernelError {
    #[error("malformed justification: {0}")]
    Malformed(String),
}

fn bad<T>(msg: impl Into<String>) -> Result<T, KernelError> {
    Err(KernelError::Malformed(msg.into()))
}

/// Everything the checker consults.
#[derive(Clone, Copy)]
pub struct Ctx<'a> {
    pub theory: &'a Theory,
    pub boxes: &'a BoxRegistry,
}

impl Justification {
    pub fn concl(&self) -> &Term {
        &self.0.concl
    }

    pub fn cbox(&self) -> &BoxSet {
        &self.0.cbox
    }

    pub fn rule(&self) -> &Rule {
        &self.0.rule
    }

    pub fn premises(&self) -> &[Justification] {
        &self.0.premises
    }

    /// Build a node, computing (and thereby checking) its conclusion.
    pub fn derive(ctx: Ctx<'_>, rule: Rule, premises: Vec<Justification>) -> Result<Justification, KernelError> {
        let (concl, cbox) = compute(ctx, &rule, &premises)?;
        Ok(Justification(Arc::new(JNode { rule, premises, concl, cbox })))
    }

    /// Build a node with a claimed conclusion that is not checked. Used by
    /// mutation tests to forge derivations.
    pub fn forge(rule: Rule, premises: Vec<Justification>, concl: Term, cbox: BoxSet) -> Justification {
        Justification(Arc::new(JNode { rule, premises, concl, cbox }))
    }

    pub fn node_count(&self) -> usize {
        let mut seen = BTreeSet::new();
        fn go(j: &Justification, seen: &mut BTreeSet<usize>) {
            if seen.insert(Arc::as_ptr(&j.0) as usize) {
                for p in j.premises() {
                    go(p, seen);
                }
            }
        }
        go(self, &mut seen);
        seen.len()
    }

    /// Axiom names used anywhere in the derivation.
    pub fn axioms_used(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        let mut seen = BTreeSet::new();
        fn go(j: &Justification, seen: &mut BTreeSet<usize>, out: &mut BTreeSet<Name>) {
            if !seen.insert(Arc::as_ptr(&j.0) as usize) {
                return;
            }
            if let Rule::Axiom { name, .. } = j.rule() {
                out.insert(name.clone());
            }
            for p in j.premises() {
                go(p, seen, out);
            }
        }
        go(self, &mut seen, &mut out);
        out
    }
}

/// Structural conclusion of `j` recomputed from its rule and premises.
pub fn conclusion_of(ctx: Ctx<'_>, j: &Justification) -> Result<(Term, BoxSet), KernelError> {
    compute(ctx, j.rule(), j.premises())
}

fn prem<'a>(ps: &'a [Justification], n: usize, rule: &str) -> Result<&'a [Justification], KernelError> {
    if ps.len() != n {
        return bad(format!("{rule} expects {n} premises, got {}", ps.len()));
    }
    Ok(ps)
}

fn merged(ctx: Ctx<'_>, ps: &[Justification]) -> BoxSet {
    ctx.boxes.merge_all(ps.iter().map(|p| p.cbox()))
}

/// Conjunction of the assumptions of `prim` mentioning any of `vars`, and
/// whether any assumption was left out.
pub fn induction_predicate(reg: &BoxRegistry, prim: u32, vars: &[Name]) -> Option<Term> {
    let pb = reg.get(prim)?;
    let mentioned: Vec<Term> = pb
        .assumptions
        .iter()
        .filter(|a| vars.iter().any(|v| a.contains_free(v)))
        .cloned()
        .collect();
    if mentioned.is_empty() {
        return None;
    }
    Some(logic::mk_conj(&mentioned))
}

fn nat_var(reg: &BoxRegistry, prim: u32, var: &str) -> Result<Type, KernelError> {
    let pb = reg.get(prim).ok_or_else(|| KernelError::Malformed(format!("no box {prim}")))?;
    match pb.has_var(var) {
        Some(t) => Ok(t.clone()),
        None => bad(format!("{var} is not a variable of box {prim}")),
    }
}

/// `P(n-1)` for the induction on `var` in box `prim`: the negation of the
/// assumptions mentioning `var`, at the predecessor.
pub fn induction_hypothesis(reg: &BoxRegistry, prim: u32, var: &Name) -> Option<Term> {
    let a = induction_predicate(reg, prim, std::slice::from_ref(var))?;
    let ty = reg.get(prim)?.has_var(var)?.clone();
    if !ty.is_nat() {
        return None;
    }
    let n = Term::Free(var.clone(), ty);
    let pred = arith::mk_minus(n.clone(), Term::num(1));
    Some(logic::neg(&a).replace(&n, &pred))
}

/// `forall m. m < n --> (forall arbs. ~A(m, arbs))`.
pub fn strong_induction_hypothesis(reg: &BoxRegistry, prim: u32, var: &Name, arbitrary: &[Name]) -> Option<Term> {
    let pb = reg.get(prim)?;
    let mut vars = vec![var.clone()];
    vars.extend(arbitrary.iter().cloned());
    let a = induction_predicate(reg, prim, &vars)?;
    let mut p = logic::neg(&a);
    for x in arbitrary.iter().rev() {
        let ty = pb.has_var(x)?.clone();
        p = logic::mk_forall_free(x, ty, &p);
    }
    let ty = pb.has_var(var)?.clone();
    if !ty.is_nat() {
        return None;
    }
    let n = Term::Free(var.clone(), ty.clone());
    // Bind a fresh name for m that cannot clash with frees of p.
    let m_name = "m'";
    let m = Term::free(m_name, ty.clone());
    let body = logic::mk_imp(arith::mk_lt(m.clone(), n.clone()), p.replace(&n, &m));
    Some(logic::mk_quant(logic::FORALL, "m", ty, body.abstract_free(m_name)))
}

fn discharge_concl(ctx: Ctx<'_>, prim: u32, body: &Justification) -> Result<(Term, BoxSet), KernelError> {
    if !logic::is_false(body.concl()) {
        return bad("resolution needs a contradiction");
    }
    if !body.cbox().contains(prim) {
        return bad(format!("box {prim} is not a member of {}", body.cbox()));
    }
    if ctx.boxes.get(prim).is_none() {
        return bad(format!("no box {prim}"));
    }
    Ok((ctx.boxes.negated_assumptions(prim), ctx.boxes.export_target(body.cbox(), prim)))
}

fn check_generalizable(ctx: Ctx<'_>, prim: u32, vars: &[Name], target: &BoxSet) -> Result<(), KernelError> {
    let pb = ctx.boxes.get(prim).unwrap();
    let outside = ctx.boxes.assumptions(target);
    for v in vars {
        if outside.iter().any(|a| a.contains_free(v)) {
            return bad(format!("{v} occurs in assumptions outside box {prim}"));
        }
        if pb.assumptions.iter().any(|a| a.contains_free(v))
            && induction_predicate(ctx.boxes, prim, vars).is_none()
        {
            return bad("empty induction predicate");
        }
    }
    Ok(())
}

fn compute(ctx: Ctx<'_>, rule: &Rule, ps: &[Justification]) -> Result<(Term, BoxSet), KernelError> {
    use logic::*;
    let bx = merged(ctx, ps);
    match rule {
        Rule::Assume { prim, idx } => {
            prem(ps, 0, "Assume")?;
            let pb = ctx.boxes.get(*prim).ok_or_else(|| KernelError::Malformed(format!("no box {prim}")))?;
            match pb.assumptions.get(*idx) {
                Some(a) => Ok((a.clone(), BoxSet::single(*prim))),
                None => bad(format!("box {prim} has no assumption {idx}")),
            }
        }
        Rule::Axiom { name, subst } => {
            prem(ps, 0, "Axiom")?;
            let ax = ctx
                .theory
                .axiom(name)
                .ok_or_else(|| KernelError::Malformed(format!("unknown axiom {name}")))?;
            let mut tys = BTreeMap::new();
            ax.schematic_types(&mut tys);
            for (v, t) in subst {
                match tys.get(v) {
                    Some(ty) if t.type_of().ok().as_ref() == Some(ty) => {}
                    _ => return bad(format!("bad instantiation of ?{v} in {name}")),
                }
            }
            let inst = apply_subst(subst, ax);
            if inst.has_schematics() {
                return bad(format!("incomplete instantiation of {name}"));
            }
            Ok((inst, BoxSet::empty()))
        }
        Rule::ConjI => {
            let ps = prem(ps, 2, "ConjI")?;
            Ok((mk_and(ps[0].concl().clone(), ps[1].concl().clone()), bx))
        }
        Rule::ConjE1 | Rule::ConjE2 => {
            let ps = prem(ps, 1, "ConjE")?;
            let Some((a, b)) = dest_and(ps[0].concl()) else { return bad("ConjE on non-conjunction") };
            Ok((if *rule == Rule::ConjE1 { a } else { b }.clone(), bx))
        }
        Rule::DisjI1(b) => {
            let ps = prem(ps, 1, "DisjI1")?;
            Ok((mk_or(ps[0].concl().clone(), b.clone()), bx))
        }
        Rule::DisjI2(a) => {
            let ps = prem(ps, 1, "DisjI2")?;
            Ok((mk_or(a.clone(), ps[0].concl().clone()), bx))
        }
        Rule::DisjE => {
            let ps = prem(ps, 2, "DisjE")?;
            let Some((a, b)) = dest_or(ps[0].concl()) else { return bad("DisjE on non-disjunction") };
            let n = ps[1].concl();
            if *n == neg(a) {
                Ok((b.clone(), bx))
            } else if *n == neg(b) {
                Ok((a.clone(), bx))
            } else {
                bad("DisjE: second premise negates neither disjunct")
            }
        }
        Rule::MP => {
            let ps = prem(ps, 2, "MP")?;
            let Some((a, b)) = dest_imp(ps[0].concl()) else { return bad("MP on non-implication") };
            if a != ps[1].concl() {
                return bad("MP: antecedent mismatch");
            }
            Ok((b.clone(), bx))
        }
        Rule::MT(k) => {
            let Some(chain) = ps.first() else { return bad("MT without premises") };
            let (ants, c) = strip_imp(chain.concl());
            if *k >= ants.len() || ps.len() != ants.len() + 1 {
                return bad("MT: premise count mismatch");
            }
            let mut rest = ps[1..].iter();
            for (i, a) in ants.iter().enumerate() {
                if i == *k {
                    continue;
                }
                if rest.next().map(|p| p.concl()) != Some(a) {
                    return bad(format!("MT: antecedent {i} mismatch"));
                }
            }
            if rest.next().map(|p| p.concl()) != Some(&neg(&c)) {
                return bad("MT: last premise must negate the conclusion");
            }
            Ok((neg(&ants[*k]), bx))
        }
        Rule::NotE => {
            let ps = prem(ps, 2, "NotE")?;
            let (a, b) = (ps[0].concl(), ps[1].concl());
            if *b == mk_not(a.clone()) || *a == mk_not(b.clone()) {
                Ok((mk_false(), bx))
            } else {
                bad("NotE: premises are not complementary")
            }
        }
        Rule::NotNotE => {
            let ps = prem(ps, 1, "NotNotE")?;
            match dest_not(ps[0].concl()).and_then(dest_not) {
                Some(a) => Ok((a.clone(), bx)),
                None => bad("NotNotE on non-double-negation"),
            }
        }
        Rule::NotConjE => {
            let ps = prem(ps, 2, "NotConjE")?;
            let Some((a, b)) = dest_not(ps[0].concl()).and_then(dest_and) else {
                return bad("NotConjE on non-negated conjunction");
            };
            if ps[1].concl() == a {
                Ok((neg(b), bx))
            } else if ps[1].concl() == b {
                Ok((neg(a), bx))
            } else {
                bad("NotConjE: second premise is neither conjunct")
            }
        }
        Rule::NotDisjE1 | Rule::NotDisjE2 => {
            let ps = prem(ps, 1, "NotDisjE")?;
            let Some((a, b)) = dest_not(ps[0].concl()).and_then(dest_or) else {
                return bad("NotDisjE on non-negated disjunction");
            };
            Ok((neg(if *rule == Rule::NotDisjE1 { a } else { b }), bx))
        }
        Rule::NotImpE1 | Rule::NotImpE2 => {
            let ps = prem(ps, 1, "NotImpE")?;
            let Some((a, b)) = dest_not(ps[0].concl()).and_then(dest_imp) else {
                return bad("NotImpE on non-negated implication");
            };
            Ok((if *rule == Rule::NotImpE1 { a.clone() } else { neg(b) }, bx))
        }
        Rule::NotAllE | Rule::NotExE => {
            let ps = prem(ps, 1, "NotQuant")?;
            let (from, to) = if *rule == Rule::NotAllE { (FORALL, EXISTS) } else { (EXISTS, FORALL) };
            let Some((h, ty, body)) = dest_not(ps[0].concl()).and_then(|t| dest_quant(t, from)) else {
                return bad("negated quantifier expected");
            };
            Ok((mk_quant(to, h, ty.clone(), neg(body)), bx))
        }
        Rule::ForallE(t) => {
            let ps = prem(ps, 1, "ForallE")?;
            let Some((_, ty, body)) = dest_forall(ps[0].concl()) else { return bad("ForallE on non-forall") };
            if t.type_of().ok().as_ref() != Some(ty) || t.has_schematics() || t.has_loose_bound() {
                return bad("ForallE: bad instance");
            }
            Ok((beta_norm(&instantiate(body, t)), bx))
        }
        Rule::EqMP => {
            let ps = prem(ps, 2, "EqMP")?;
            let Some((a, b)) = dest_eq(ps[0].concl()) else { return bad("EqMP on non-equality") };
            if a != ps[1].concl() {
                return bad("EqMP: left side mismatch");
            }
            Ok((b.clone(), bx))
        }
        Rule::Refl(t) => {
            prem(ps, 0, "Refl")?;
            if t.type_of().is_err() || t.has_loose_bound() {
                return bad("Refl of ill-typed term");
            }
            Ok((mk_eq(t.clone(), t.clone()), BoxSet::empty()))
        }
        Rule::Sym => {
            let ps = prem(ps, 1, "Sym")?;
            let Some((a, b)) = dest_eq(ps[0].concl()) else { return bad("Sym on non-equality") };
            Ok((mk_eq(b.clone(), a.clone()), bx))
        }
        Rule::Trans => {
            let ps = prem(ps, 2, "Trans")?;
            let (Some((a, b)), Some((b2, c))) = (dest_eq(ps[0].concl()), dest_eq(ps[1].concl())) else {
                return bad("Trans on non-equality");
            };
            if b != b2 {
                return bad("Trans: middle terms differ");
            }
            Ok((mk_eq(a.clone(), c.clone()), bx))
        }
        Rule::Cong => {
            let ps = prem(ps, 2, "Cong")?;
            let (Some((f, g)), Some((a, b))) = (dest_eq(ps[0].concl()), dest_eq(ps[1].concl())) else {
                return bad("Cong on non-equality");
            };
            let fa = Term::app(f.clone(), a.clone());
            if fa.type_of().is_err() {
                return bad("Cong: ill-typed application");
            }
            Ok((mk_eq(fa, Term::app(g.clone(), b.clone())), bx))
        }
        Rule::NumEval(stmt) => {
            prem(ps, 0, "NumEval")?;
            if arith::eval_bool(stmt) == Some(true) {
                Ok((stmt.clone(), BoxSet::empty()))
            } else {
                bad(format!("NumEval: {stmt} does not evaluate to true"))
            }
        }
        Rule::AcPerm { op, lhs, rhs } => {
            prem(ps, 0, "AcPerm")?;
            if !ctx.theory.is_ac(op) {
                return bad(format!("{op} is not declared AC"));
            }
            if lhs.type_of().is_err() || lhs.type_of() != rhs.type_of() {
                return bad("AcPerm: type mismatch");
            }
            let mut l = ac_flatten(op, lhs);
            let mut r = ac_flatten(op, rhs);
            l.sort();
            r.sort();
            if l != r {
                return bad("AcPerm: operand multisets differ");
            }
            Ok((mk_eq(lhs.clone(), rhs.clone()), BoxSet::empty()))
        }
        Rule::Resolved { prim } | Rule::NatInduct { prim, .. } | Rule::StrongInduct { prim, .. } => {
            let ps = prem(ps, 1, "Resolved")?;
            let (concl, target) = discharge_concl(ctx, *prim, &ps[0])?;
            match rule {
                Rule::NatInduct { var, .. } => {
                    let ty = nat_var(ctx.boxes, *prim, var)?;
                    if !ty.is_nat() {
                        return bad("induction variable must be nat");
                    }
                    check_generalizable(ctx, *prim, std::slice::from_ref(var), &target)?;
                }
                Rule::StrongInduct { var, arbitrary, .. } => {
                    let ty = nat_var(ctx.boxes, *prim, var)?;
                    if !ty.is_nat() {
                        return bad("induction variable must be nat");
                    }
                    for a in arbitrary {
                        nat_var(ctx.boxes, *prim, a)?;
                    }
                    let mut vars = vec![var.clone()];
                    vars.extend(arbitrary.iter().cloned());
                    check_generalizable(ctx, *prim, &vars, &target)?;
                }
                _ => {}
            }
            Ok((concl, target))
        }
        Rule::Skolem { name } => {
            let ps = prem(ps, 1, "Skolem")?;
            let Some((_, ty, body)) = dest_exists(ps[0].concl()) else { return bad("Skolem on non-existential") };
            if ps[0].concl().contains_free(name) {
                return bad(format!("skolem constant {name} occurs in its own definition"));
            }
            Ok((beta_norm(&instantiate(body, &Term::Free(name.clone(), ty.clone()))), ps[0].cbox().clone()))
        }
        Rule::ExE { name } => {
            let ps = prem(ps, 2, "ExE")?;
            if dest_exists(ps[0].concl()).is_none() {
                return bad("ExE: first premise must be existential");
            }
            if ps[0].concl().contains_free(name) || ps[1].concl().contains_free(name) {
                return bad(format!("ExE: {name} escapes its scope"));
            }
            if ctx.boxes.assumptions(&bx).iter().any(|a| a.contains_free(name)) {
                return bad(format!("ExE: {name} occurs in box assumptions of {bx}"));
            }
            Ok((ps[1].concl().clone(), bx))
        }
        Rule::IndHyp { prim, var } => {
            let ps = prem(ps, 1, "IndHyp")?;
            let ty = nat_var(ctx.boxes, *prim, var)?;
            let n = Term::Free(var.clone(), ty);
            let want = mk_not(mk_eq(n, Term::num(0)));
            if *ps[0].concl() != want {
                return bad("IndHyp: premise must be n ~= 0");
            }
            let Some(h) = induction_hypothesis(ctx.boxes, *prim, var) else {
                return bad("IndHyp: no assumption mentions the variable");
            };
            Ok((h, ctx.boxes.merge(&BoxSet::single(*prim), ps[0].cbox())))
        }
        Rule::StrongIndHyp { prim, var, arbitrary } => {
            prem(ps, 0, "StrongIndHyp")?;
            match strong_induction_hypothesis(ctx.boxes, *prim, var, arbitrary) {
                Some(h) => Ok((h, BoxSet::single(*prim))),
                None => bad("StrongIndHyp: ill-formed induction"),
            }
        }
    }
}

/// Operands of a maximal `op`-chain, left to right.
pub fn ac_flatten(op: &str, t: &Term) -> Vec<Term> {
    match logic::dest_binop(t, op) {
        Some((a, b)) => {
            let mut v = ac_flatten(op, a);
            v.extend(ac_flatten(op, b));
            v
        }
        None => vec![t.clone()],
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayFailure {
    /// Premise indices from the root to the failing node.
    pub path: Vec<usize>,
    pub message: String,
}

impl fmt::Display for ReplayFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at node path {:?}: {}", self.path, self.message)
    }
}

/// Scopes opened by discharge nodes along a path.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
struct Scope {
    skolems: BTreeMap<Name, Term>,
    ind: BTreeSet<(u32, Name)>,
    strong: BTreeSet<(u32, Name, Vec<Name>)>,
}

/// Replay a derivation. With `closed`, every skolem constant and induction
/// hypothesis must be discharged inside the derivation; otherwise they are
/// accepted as pending hypotheses (each checked locally).
pub fn replay_checked(ctx: Ctx<'_>, j: &Justification, closed: bool) -> Result<(), ReplayFailure> {
    let mut memo: HashMap<usize, Result<(), ReplayFailure>> = HashMap::new();
    check_local(ctx, j, &mut Vec::new(), &mut memo)?;
    if closed {
        let mut seen = BTreeSet::new();
        check_scopes(j, &Scope::default(), &mut Vec::new(), &mut seen)?;
    }
    Ok(())
}

/// True iff `j` is a closed, fully valid derivation.
pub fn replay(ctx: Ctx<'_>, j: &Justification) -> bool {
    replay_checked(ctx, j, true).is_ok()
}

fn check_local(
    ctx: Ctx<'_>,
    j: &Justification,
    path: &mut Vec<usize>,
    memo: &mut HashMap<usize, Result<(), ReplayFailure>>,
) -> Result<(), ReplayFailure> {
    let key = Arc::as_ptr(&j.0) as usize;
    if let Some(r) = memo.get(&key) {
        return r.clone().map_err(|mut e| {
            let mut p = path.clone();
            p.extend(e.path.iter().skip(p.len().min(e.path.len())));
            e.path = p;
            e
        });
    }
    for (k, p) in j.premises().iter().enumerate() {
        path.push(k);
        let r = check_local(ctx, p, path, memo);
        path.pop();
        if let Err(e) = r {
            memo.insert(key, Err(e.clone()));
            return Err(e);
        }
    }
    let r = match compute(ctx, j.rule(), j.premises()) {
        Ok((c, b)) if c == *j.concl() && b == *j.cbox() => Ok(()),
        Ok((c, b)) => Err(ReplayFailure {
            path: path.clone(),
            message: format!(
                "{} claims {} in {} but derives {} in {}",
                j.rule().label(),
                j.concl(),
                j.cbox(),
                c,
                b
            ),
        }),
        Err(e) => Err(ReplayFailure { path: path.clone(), message: e.to_string() }),
    };
    memo.insert(key, r.clone());
    r
}

fn check_scopes(
    j: &Justification,
    scope: &Scope,
    path: &mut Vec<usize>,
    seen: &mut BTreeSet<(usize, u64)>,
) -> Result<(), ReplayFailure> {
    use std::hash::{Hash, Hasher};
    let mut h = std::collections::hash_map::DefaultHasher::new();
    scope.hash(&mut h);
    if !seen.insert((Arc::as_ptr(&j.0) as usize, h.finish())) {
        return Ok(());
    }
    let fail = |path: &Vec<usize>, msg: String| Err(ReplayFailure { path: path.clone(), message: msg });
    match j.rule() {
        Rule::Skolem { name } => match scope.skolems.get(name) {
            Some(def) if def == j.premises()[0].concl() => {}
            Some(_) => return fail(path, format!("skolem {name} used with two definitions")),
            None => return fail(path, format!("skolem constant {name} is not discharged")),
        },
        Rule::IndHyp { prim, var } if !scope.ind.contains(&(*prim, var.clone())) => {
            return fail(path, format!("induction hypothesis for {var} in box {prim} is not discharged"));
        }
        Rule::StrongIndHyp { prim, var, arbitrary } if !scope.strong.contains(&(*prim, var.clone(), arbitrary.clone())) => {
            return fail(path, format!("strong induction hypothesis for {var} is not discharged"));
        }
        _ => {}
    }
    for (k, p) in j.premises().iter().enumerate() {
        let mut sub = scope.clone();
        match j.rule() {
            Rule::ExE { name } if k == 1 => {
                sub.skolems.insert(name.clone(), j.premises()[0].concl().clone());
            }
            Rule::NatInduct { prim, var } => {
                sub.ind.insert((*prim, var.clone()));
            }
            Rule::StrongInduct { prim, var, arbitrary } => {
                sub.strong.insert((*prim, var.clone(), arbitrary.clone()));
            }
            _ => {}
        }
        path.push(k);
        let r = check_scopes(p, &sub, path, seen);
        path.pop();
        r?;
    }
    Ok(())
}

/// Skolem constants used but not discharged in `j`, in order of first
/// introduction (outermost last).
pub fn pending_skolems(j: &Justification) -> Vec<(Name, Justification)> {
    let mut out: Vec<(Name, Justification)> = Vec::new();
    let mut seen = BTreeSet::new();
    fn go(j: &Justification, bound: &BTreeSet<Name>, out: &mut Vec<(Name, Justification)>, seen: &mut BTreeSet<(usize, Vec<Name>)>) {
        if !seen.insert((Arc::as_ptr(&j.0) as usize, bound.iter().cloned().collect())) {
            return;
        }
        if let Rule::Skolem { name } = j.rule() {
            if !bound.contains(name) && !out.iter().any(|(n, _)| n == name) {
                out.push((name.clone(), j.premises()[0].clone()));
            }
        }
        for (k, p) in j.premises().iter().enumerate() {
            if let (Rule::ExE { name }, 1) = (j.rule(), k) {
                let mut b = bound.clone();
                b.insert(name.clone());
                go(p, &b, out, seen);
            } else {
                go(p, bound, out, seen);
            }
        }
    }
    go(j, &BTreeSet::new(), &mut out, &mut seen);
    out
}

/// Undischarged induction hypotheses `(prim, var, strong arbitraries)`.
pub fn pending_inductions(j: &Justification) -> BTreeSet<(u32, Name, Option<Vec<Name>>)> {
    let mut out = BTreeSet::new();
    let mut seen = BTreeSet::new();
    fn go(
        j: &Justification,
        bound: &BTreeSet<(u32, Name)>,
        out: &mut BTreeSet<(u32, Name, Option<Vec<Name>>)>,
        seen: &mut BTreeSet<(usize, usize)>,
    ) {
        if !seen.insert((Arc::as_ptr(&j.0) as usize, bound.len())) {
            return;
        }
        match j.rule() {
            Rule::IndHyp { prim, var } if !bound.contains(&(*prim, var.clone())) => {
                out.insert((*prim, var.clone(), None));
            }
            Rule::StrongIndHyp { prim, var, arbitrary } if !bound.contains(&(*prim, var.clone())) => {
                out.insert((*prim, var.clone(), Some(arbitrary.clone())));
            }
            _ => {}
        }
        let mut b = bound.clone();
        match j.rule() {
            Rule::NatInduct { prim, var } | Rule::StrongInduct { prim, var, .. } => {
                b.insert((*prim, var.clone()));
            }
            _ => {}
        }
        for p in j.premises() {
            go(p, &b, out, seen);
        }
    }
    go(j, &BTreeSet::new(), &mut out, &mut seen);
    out
}

/// Wrap `j` in `ExE` nodes for every pending skolem constant that no
/// longer occurs in its conclusion or box assumptions. Later constants are
/// wrapped first so that earlier ones scope over them.
pub fn discharge_skolems(ctx: Ctx<'_>, j: Justification) -> Justification {
    let mut cur = j;
    loop {
        let pending = pending_skolems(&cur);
        let assumptions = ctx.boxes.assumptions(cur.cbox());
        // Discharge the most recently introduced eligible constant. The
        // ordering is by the size of the defining existential, then name,
        // which puts constants defined in terms of others innermost.
        let mut candidates: Vec<&(Name, Justification)> = pending
            .iter()
            .filter(|(n, e)| {
                !cur.concl().contains_free(n)
                    && !assumptions.iter().any(|a| a.contains_free(n))
                    && !pending.iter().any(|(m, e2)| m != n && e2.concl().contains_free(n))
                    && !e.concl().contains_free(n)
            })
            .collect();
        candidates.sort_by_key(|(n, e)| (std::cmp::Reverse(term_size(e.concl())), n.clone()));
        let Some((name, existence)) = candidates.first().map(|(n, e)| (n.clone(), e.clone())) else {
            return cur;
        };
        match Justification::derive(ctx, Rule::ExE { name }, vec![existence, cur.clone()]) {
            Ok(w) => cur = w,
            Err(_) => return cur,
        }
    }
}

/// Justification exported when primitive box `prim`, a member of the box of
/// `contradiction`, is resolved. Uses an induction discharge if the
/// contradiction relies on an induction hypothesis of `prim`.
pub fn discharge_box(reg: &BoxRegistry, prim: u32, contradiction: &Justification) -> Justification {
    let pend = pending_inductions(contradiction);
    let rule = match pend.iter().find(|(p, ..)| *p == prim) {
        Some((_, var, None)) => Rule::NatInduct { prim, var: var.clone() },
        Some((_, var, Some(arbs))) => Rule::StrongInduct { prim, var: var.clone(), arbitrary: arbs.clone() },
        None => Rule::Resolved { prim },
    };
    let concl = reg.negated_assumptions(prim);
    let target = reg.export_target(contradiction.cbox(), prim);
    Justification::forge(rule, vec![contradiction.clone()], concl, target)
}

/// Goal `[A1..An] ==> C` restated as assumptions `A1..An, ~C`, with
/// abbreviations unfolded and double negation collapsed.
pub fn contradiction_form(theory: &Theory, assumptions: &[Term], conclusion: &Term) -> Vec<Term> {
    let mut out: Vec<Term> = assumptions.iter().map(|a| theory.unfold(a)).collect();
    out.push(logic::neg(&theory.unfold(conclusion)));
    out
}
