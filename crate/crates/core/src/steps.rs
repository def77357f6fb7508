//! Proof steps: functions from one or two items to new items.
//!
//! Built-in logic steps come first in the registry, followed by one step
//! per theorem declared in the theory, in declaration order. Every emitted
//! proposition carries a justification built through the kernel.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::arith;
use crate::boxes::BoxSet;
use crate::kernel::{Ctx, Justification, Rule};
use crate::rewrite::RewriteTable;
use crate::search::{Item, ItemId, ItemKind};
use crate::term::{apply_subst, logic, term_size, Name, Pattern, Subst, Term, Type};
use crate::theory::{Direction, TheoremSpec, Theory};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("theorem '{0}' needs more than two matched premises")]
    TooManyPremises(String),
    #[error("theorem '{0}' is not usable as declared: {1}")]
    BadShape(String, String),
    #[error("unknown axiom '{0}'")]
    UnknownAxiom(String),
    #[error("'{0}' is not a natural-number variable introduced by box {1}")]
    NoEligibleVariable(String, u32),
    #[error("{0}")]
    Kernel(String),
}

/// Induction hypothesis `P(n-1)` of primitive box `prim` from a proof of
/// `n ~= 0` in a box at or below it.
pub fn nat_induct(kctx: Ctx<'_>, prim: u32, var: &str, fact: &Justification) -> Result<Justification, StepError> {
    let eligible = kctx.boxes.get(prim).and_then(|p| p.has_var(var)).is_some_and(Type::is_nat);
    if !eligible {
        return Err(StepError::NoEligibleVariable(var.into(), prim));
    }
    Justification::derive(kctx, Rule::IndHyp { prim, var: var.into() }, vec![fact.clone()])
        .map_err(|e| StepError::Kernel(e.to_string()))
}

/// Read-only view of the search state handed to step bodies.
#[derive(Clone, Copy)]
pub struct Env<'a> {
    pub kctx: Ctx<'a>,
    pub table: &'a RewriteTable,
    /// Primitive boxes with standard induction enabled, with the variable.
    pub induct: &'a BTreeMap<u32, Name>,
}

impl<'a> Env<'a> {
    fn derive(&self, rule: Rule, premises: Vec<Justification>) -> Option<Justification> {
        Justification::derive(self.kctx, rule, premises).ok()
    }

    /// Matches of `p` against a proposition item, each with a proof of the
    /// instantiated pattern.
    fn match_prop(&self, p: &Pattern, x: &Item, partial: &Subst) -> Vec<(Subst, Justification)> {
        let Some(j) = &x.just else { return Vec::new() };
        self.table
            .ematch_with(self.kctx, p, &x.tname, partial)
            .into_iter()
            .filter_map(|r| Some((r.subst, self.eq_mp(r.eq_just, j.clone())?)))
            .collect()
    }

    /// `a = b` and `a` give `b`, skipping reflexive equalities.
    fn eq_mp(&self, eq: Justification, a: Justification) -> Option<Justification> {
        match logic::dest_eq(eq.concl()) {
            Some((l, r)) if l == r => Some(a),
            _ => self.derive(Rule::EqMP, vec![eq, a]),
        }
    }

    /// Proof of ground `stmt` when it is a proposition item up to the
    /// table (the item `y`) or evaluates to true after replacing arguments
    /// by known numerals.
    fn prove_numeric(&self, stmt: &Term) -> Option<Justification> {
        if arith::eval_bool(stmt) == Some(true) {
            return self.derive(Rule::NumEval(stmt.clone()), vec![]);
        }
        let (h, args) = stmt.strip_app();
        let [a, b] = args.as_slice() else { return None };
        let mut eqs = Vec::new();
        let mut vals = Vec::new();
        for x in [*a, *b] {
            let n = match arith::eval_nat(x) {
                Some(v) => Term::Num(v),
                None => self.table.numerals_equal_to(x).into_iter().next()?,
            };
            let (_, j) = self.table.equiv(self.kctx, x, &n).or_else(|| {
                let e = logic::mk_eq(x.clone(), n.clone());
                Some((BoxSet::empty(), self.derive(Rule::NumEval(e), vec![])?))
            })?;
            eqs.push(j);
            vals.push(n);
        }
        let evaluated = Term::apps(h.clone(), vals);
        let base = self.derive(Rule::NumEval(evaluated), vec![])?;
        let refl = self.derive(Rule::Refl(h.clone()), vec![])?;
        let c1 = self.derive(Rule::Cong, vec![refl, eqs[0].clone()])?;
        let c2 = self.derive(Rule::Cong, vec![c1, eqs[1].clone()])?;
        let back = self.derive(Rule::Sym, vec![c2])?;
        self.derive(Rule::EqMP, vec![back, base])
    }
}

/// What an update adds to the state.
#[derive(Clone, Debug)]
pub enum Payload {
    Item { kind: ItemKind, tname: Term, just: Option<Justification>, cbox: BoxSet },
    /// A new primitive box under `parent` with the given assumptions.
    NewBox { parent: BoxSet, assumptions: Vec<Term> },
}

impl Payload {
    pub fn prop(j: Justification) -> Payload {
        let kind = if logic::dest_or(j.concl()).is_some() { ItemKind::DisjActive } else { ItemKind::Prop };
        Payload::Item { kind, tname: j.concl().clone(), cbox: j.cbox().clone(), just: Some(j) }
    }

    pub fn term(t: Term, cbox: BoxSet) -> Payload {
        Payload::Item { kind: ItemKind::Term, tname: t, just: None, cbox }
    }

    pub fn tname(&self) -> Option<&Term> {
        match self {
            Payload::Item { tname, .. } => Some(tname),
            Payload::NewBox { .. } => None,
        }
    }
}

/// Output of one step invocation.
#[derive(Clone, Debug)]
pub struct Emit {
    pub inputs: Vec<ItemId>,
    pub payload: Vec<Payload>,
}

fn emit(inputs: &[&Item], payload: Vec<Payload>) -> Vec<Emit> {
    if payload.is_empty() {
        return Vec::new();
    }
    vec![Emit { inputs: inputs.iter().map(|i| i.id).collect(), payload }]
}

fn props(inputs: &[&Item], js: impl IntoIterator<Item = Option<Justification>>) -> Vec<Emit> {
    js.into_iter().flatten().flat_map(|j| emit(inputs, vec![Payload::prop(j)])).collect()
}

#[derive(Clone, Debug)]
enum Builtin {
    ConjSplit,
    DisjCase,
    DisjResolve,
    NotPair,
    NeqRefl,
    NumContra,
    NumEvalTerm,
    NotNormalize,
    NotConj,
    Implication,
    ForallInst,
    NatInduct,
}

#[derive(Clone, Debug)]
struct TheoremStep {
    axiom: Name,
    direction: Direction,
    prems: Vec<Term>,
    concl: Term,
    /// Trigger pattern of a premise-free forward step.
    trigger: Option<Pattern>,
}

#[derive(Clone, Debug)]
enum StepKind {
    Builtin(Builtin),
    Theorem(TheoremStep),
}

#[derive(Clone, Debug)]
pub struct ProofStep {
    pub name: String,
    pub arity: u8,
    kind: StepKind,
}

/// Built-in steps in registration order.
pub fn builtin_steps() -> Vec<ProofStep> {
    use Builtin::*;
    [
        ("conj_split", 1, ConjSplit),
        ("not_normalize", 1, NotNormalize),
        ("num_contra", 1, NumContra),
        ("num_eval", 1, NumEvalTerm),
        ("neq_refl", 1, NeqRefl),
        ("nat_induct", 1, NatInduct),
        ("disj_case", 1, DisjCase),
        ("not_pair", 2, NotPair),
        ("disj_resolve", 2, DisjResolve),
        ("not_conj", 2, NotConj),
        ("implication", 2, Implication),
        ("forall_inst", 2, ForallInst),
    ]
    .into_iter()
    .map(|(name, arity, b)| ProofStep { name: name.into(), arity, kind: StepKind::Builtin(b) })
    .collect()
}

/// Smallest subterm of `t` containing every schematic of `t`.
fn trigger_of(t: &Term) -> Option<Term> {
    let mut all = BTreeSet::new();
    t.schematics(&mut all);
    if all.is_empty() {
        return None;
    }
    let mut best: Option<Term> = None;
    let mut stack = vec![t];
    while let Some(s) = stack.pop() {
        if s.has_loose_bound() {
            continue;
        }
        let mut here = BTreeSet::new();
        s.schematics(&mut here);
        if here != all {
            continue;
        }
        if !matches!(s, Term::Schematic(..)) && best.as_ref().is_none_or(|b| term_size(s) < term_size(b)) {
            best = Some(s.clone());
        }
        if let Term::App(f, a) = s {
            stack.push(f);
            stack.push(a);
        }
    }
    best
}

/// Turn a declared theorem use into a proof step.
pub fn step_from_theorem(theory: &Theory, spec: &TheoremSpec) -> Result<ProofStep, StepError> {
    let stmt = theory.axiom(&spec.axiom).ok_or_else(|| StepError::UnknownAxiom(spec.axiom.to_string()))?;
    let (prems, concl) = logic::strip_imp(stmt);
    let bad = |m: &str| StepError::BadShape(spec.axiom.to_string(), m.into());
    let mut cvars = BTreeSet::new();
    concl.schematics(&mut cvars);
    let mut pvars = BTreeSet::new();
    for p in &prems {
        p.schematics(&mut pvars);
    }
    let (arity, trigger, prems, concl) = match spec.direction {
        Direction::Forward => {
            if prems.len() > 2 {
                return Err(StepError::TooManyPremises(spec.axiom.to_string()));
            }
            if prems.is_empty() {
                let trig = trigger_of(&concl).ok_or_else(|| bad("a premise-free forward step needs schematics"))?;
                (1, Some(Pattern::new(trig)), prems, concl)
            } else {
                if !cvars.is_subset(&pvars) {
                    return Err(bad("conclusion has schematics not bound by the premises"));
                }
                (prems.len() as u8, None, prems, concl)
            }
        }
        Direction::Backward(k) => {
            if prems.len() > 2 {
                return Err(StepError::TooManyPremises(spec.axiom.to_string()));
            }
            let mut bound = cvars.clone();
            for (i, p) in prems.iter().enumerate() {
                if i + 1 != k {
                    p.schematics(&mut bound);
                }
            }
            let mut kvars = BTreeSet::new();
            prems[k - 1].schematics(&mut kvars);
            if !kvars.is_subset(&bound) {
                return Err(bad("negated premise has unbound schematics"));
            }
            (prems.len() as u8, None, prems, concl)
        }
        Direction::Rewrite => (1, None, prems, concl),
        Direction::Resolve => (1, None, Vec::new(), stmt.clone()),
    };
    Ok(ProofStep {
        name: spec.axiom.to_string(),
        arity,
        kind: StepKind::Theorem(TheoremStep { axiom: spec.axiom.clone(), direction: spec.direction.clone(), prems, concl, trigger }),
    })
}

/// Built-in steps followed by the theory's theorem steps.
pub fn registry(theory: &Theory) -> Result<Vec<ProofStep>, StepError> {
    let mut out = builtin_steps();
    for spec in &theory.steps {
        out.push(step_from_theorem(theory, spec)?);
    }
    Ok(out)
}

fn is_prop(x: &Item) -> bool {
    x.just.is_some()
}

impl ProofStep {
    /// Apply to a single item.
    pub fn unary(&self, env: &Env<'_>, x: &Item) -> Vec<Emit> {
        match &self.kind {
            StepKind::Builtin(b) if self.arity == 1 => builtin_unary(b, env, x),
            StepKind::Theorem(t) if self.arity == 1 || t.direction == Direction::Forward => theorem_unary(t, env, x),
            _ => Vec::new(),
        }
    }

    /// Apply to an ordered pair of items.
    pub fn binary(&self, env: &Env<'_>, x: &Item, y: &Item) -> Vec<Emit> {
        if !is_prop(x) || !is_prop(y) {
            return Vec::new();
        }
        match &self.kind {
            StepKind::Builtin(b) if self.arity == 2 => builtin_binary(b, env, x, y),
            StepKind::Theorem(t) if self.arity == 2 => theorem_binary(t, env, x, y),
            _ => Vec::new(),
        }
    }

    /// Cheap test whether the item can fill the first slot of a binary
    /// step; used to skip pair enumeration.
    pub fn may_lead(&self, x: &Item) -> bool {
        if !is_prop(x) {
            return false;
        }
        let t = &x.tname;
        match &self.kind {
            StepKind::Builtin(Builtin::DisjResolve) => matches!(x.kind, ItemKind::Disj | ItemKind::DisjActive),
            StepKind::Builtin(Builtin::NotConj) => logic::dest_not(t).and_then(logic::dest_and).is_some(),
            StepKind::Builtin(Builtin::Implication) => logic::dest_imp(t).is_some(),
            StepKind::Builtin(Builtin::ForallInst) => logic::dest_forall(t).is_some(),
            _ => true,
        }
    }
}

fn builtin_unary(b: &Builtin, env: &Env<'_>, x: &Item) -> Vec<Emit> {
    use logic::*;
    let t = &x.tname;
    match b {
        Builtin::ConjSplit => {
            if !is_prop(x) {
                return Vec::new();
            }
            let b = Type::bool();
            let pat = Pattern::new(mk_and(Term::var("A", b.clone()), Term::var("B", b)));
            let mut out = Vec::new();
            for (_, j) in env.match_prop(&pat, x, &Subst::new()) {
                let l = env.derive(Rule::ConjE1, vec![j.clone()]);
                let r = env.derive(Rule::ConjE2, vec![j]);
                let payload: Vec<Payload> = [l, r].into_iter().flatten().map(Payload::prop).collect();
                out.extend(emit(&[x], payload));
            }
            out
        }
        Builtin::NotNormalize => {
            let Some(j) = x.just.clone() else { return Vec::new() };
            let Some(inner) = dest_not(t) else { return Vec::new() };
            let d = |r: Rule| env.derive(r, vec![j.clone()]);
            let js = if dest_not(inner).is_some() {
                vec![d(Rule::NotNotE)]
            } else if dest_or(inner).is_some() {
                vec![d(Rule::NotDisjE1), d(Rule::NotDisjE2)]
            } else if dest_imp(inner).is_some() {
                vec![d(Rule::NotImpE1), d(Rule::NotImpE2)]
            } else if dest_forall(inner).is_some() {
                vec![d(Rule::NotAllE)]
            } else if dest_exists(inner).is_some() {
                vec![d(Rule::NotExE)]
            } else {
                Vec::new()
            };
            let payload: Vec<Payload> = js.into_iter().flatten().map(Payload::prop).collect();
            emit(&[x], payload)
        }
        Builtin::NumContra => {
            let Some(j) = x.just.clone() else { return Vec::new() };
            if is_false(t) {
                return Vec::new();
            }
            // Ground numeral facts that evaluate to false.
            if arith::eval_bool(t) == Some(false) {
                let n = env.derive(Rule::NumEval(mk_not(t.clone())), vec![]);
                return props(&[x], [n.and_then(|n| env.derive(Rule::NotE, vec![j, n]))]);
            }
            // Equalities between distinct numerals up to the table.
            let pat = Pattern::new(mk_eq(Term::var("NUMC1", Type::nat()), Term::var("NUMC2", Type::nat())));
            let mut out = Vec::new();
            for (s, inst) in env.match_prop(&pat, x, &Subst::new()) {
                if s["NUMC1"] == s["NUMC2"] {
                    continue;
                }
                let n = env.derive(Rule::NumEval(mk_not(inst.concl().clone())), vec![]);
                out.extend(props(&[x], [n.and_then(|n| env.derive(Rule::NotE, vec![inst, n]))]));
            }
            out
        }
        Builtin::NumEvalTerm => {
            if x.kind != ItemKind::Term || matches!(t, Term::Num(_)) || !t.type_of().is_ok_and(|ty| ty.is_nat()) {
                return Vec::new();
            }
            let mut out = Vec::new();
            if let Some(v) = arith::eval_nat(t) {
                let e = mk_eq(t.clone(), Term::Num(v));
                out.extend(props(&[x], [env.derive(Rule::NumEval(e), vec![])]));
                return out;
            }
            // Operators applied to arguments known to equal numerals.
            for op in [arith::PLUS, arith::TIMES, arith::MINUS] {
                let pat = Pattern::new(Term::apps(arith::nat_binop(op), [Term::var("NUMC1", Type::nat()), Term::var("NUMC2", Type::nat())]));
                for r in env.table.ematch(env.kctx, &pat, t) {
                    let inst = apply_subst(&r.subst, &pat.term);
                    let Some(v) = arith::eval_nat(&inst) else { continue };
                    let ev = env.derive(Rule::NumEval(mk_eq(inst, Term::Num(v))), vec![]);
                    out.extend(props(&[x], [ev.and_then(|ev| env.derive(Rule::Trans, vec![r.eq_just, ev]))]));
                }
            }
            out
        }
        Builtin::NeqRefl => {
            let Some(j) = x.just.clone() else { return Vec::new() };
            let Some((l, r)) = dest_not(t).and_then(dest_eq) else { return Vec::new() };
            match env.table.equiv(env.kctx, l, r) {
                Some((_, eq)) => props(&[x], [env.derive(Rule::NotE, vec![eq, j])]),
                None => Vec::new(),
            }
        }
        Builtin::NatInduct => {
            let Some(j) = x.just.clone() else { return Vec::new() };
            let Some((n, zero)) = dest_not(t).and_then(dest_eq) else { return Vec::new() };
            if zero.as_num().is_none_or(|z| z != &num_bigint::BigUint::from(0u32)) {
                return Vec::new();
            }
            let Term::Free(var, _) = n else { return Vec::new() };
            let closure = env.kctx.boxes.closure(&x.cbox).unwrap_or_default();
            let mut out = Vec::new();
            for (&prim, v) in env.induct {
                if v == var && closure.contains(prim) {
                    out.extend(props(&[x], [nat_induct(env.kctx, prim, var, &j).ok()]));
                }
            }
            out
        }
        Builtin::DisjCase => {
            if x.kind != ItemKind::DisjActive {
                return Vec::new();
            }
            let Some((a, _)) = dest_or(t) else { return Vec::new() };
            emit(&[x], vec![Payload::NewBox { parent: x.cbox.clone(), assumptions: vec![a.clone()] }])
        }
        _ => Vec::new(),
    }
}

fn builtin_binary(b: &Builtin, env: &Env<'_>, x: &Item, y: &Item) -> Vec<Emit> {
    use logic::*;
    let (jx, jy) = (x.just.clone().unwrap(), y.just.clone().unwrap());
    let t = &x.tname;
    let ground = |p: Term| Pattern::new(p);
    match b {
        Builtin::NotPair => {
            // x and a fact matching the negation of x. Only one orientation
            // is tried so that each pair contributes once.
            if dest_not(t).is_some() || is_false(t) {
                return Vec::new();
            }
            let mut out = Vec::new();
            for (_, ny) in env.match_prop(&ground(mk_not(t.clone())), y, &Subst::new()) {
                out.extend(props(&[x, y], [env.derive(Rule::NotE, vec![jx.clone(), ny])]));
            }
            out
        }
        Builtin::DisjResolve => {
            let Some((a, bb)) = dest_or(t) else { return Vec::new() };
            let mut out = Vec::new();
            for side in [a, bb] {
                for (_, n) in env.match_prop(&ground(neg(side)), y, &Subst::new()) {
                    out.extend(props(&[x, y], [env.derive(Rule::DisjE, vec![jx.clone(), n])]));
                }
            }
            out
        }
        Builtin::NotConj => {
            let Some((a, bb)) = dest_not(t).and_then(dest_and) else { return Vec::new() };
            let mut out = Vec::new();
            for side in [a, bb] {
                for (_, f) in env.match_prop(&ground(side.clone()), y, &Subst::new()) {
                    out.extend(props(&[x, y], [env.derive(Rule::NotConjE, vec![jx.clone(), f])]));
                }
            }
            out
        }
        Builtin::Implication => {
            let Some((a, c)) = dest_imp(t) else { return Vec::new() };
            let mut out = Vec::new();
            for (_, f) in env.match_prop(&ground(a.clone()), y, &Subst::new()) {
                out.extend(props(&[x, y], [env.derive(Rule::MP, vec![jx.clone(), f])]));
            }
            if logic::strip_imp(t).0.len() == 1 {
                for (_, f) in env.match_prop(&ground(neg(c)), y, &Subst::new()) {
                    out.extend(props(&[x, y], [env.derive(Rule::MT(0), vec![jx.clone(), f])]));
                }
            }
            out
        }
        Builtin::ForallInst => forall_inst(env, x, y, jx, jy),
        _ => Vec::new(),
    }
}

/// `forall xs. body` with a fact matching the trigger part of `body`.
fn forall_inst(env: &Env<'_>, x: &Item, y: &Item, jx: Justification, _jy: Justification) -> Vec<Emit> {
    use logic::*;
    // Strip quantifiers, replacing bound variables by schematics.
    let mut body = x.tname.clone();
    let mut vars: Vec<(Name, Type)> = Vec::new();
    while let Some((h, ty, b)) = dest_forall(&body) {
        let name: Name = format!("{h}'{}", vars.len()).into();
        let inst = crate::term::instantiate(b, &Term::Schematic(name.clone(), ty.clone(), false));
        vars.push((name, ty.clone()));
        body = crate::term::beta_norm(&inst);
    }
    if body.has_loose_bound() {
        return Vec::new();
    }
    // (trigger, what to derive from the instance and the matched fact)
    let mut triggers: Vec<(Term, u8)> = Vec::new();
    if let Some((a, _)) = dest_imp(&body) {
        triggers.push((a.clone(), 0));
    } else if let Some((a, b)) = dest_not(&body).and_then(dest_and) {
        triggers.push((a.clone(), 1));
        triggers.push((b.clone(), 1));
    } else {
        triggers.push((neg(&body), 2));
    }
    let mut out = Vec::new();
    for (trig, mode) in triggers {
        let pat = Pattern::new(trig);
        for (s, fact) in env.match_prop(&pat, y, &Subst::new()) {
            if !vars.iter().all(|(v, _)| s.contains_key(v)) {
                continue;
            }
            let mut inst = Some(jx.clone());
            for (v, _) in &vars {
                inst = inst.and_then(|j| env.derive(Rule::ForallE(s[v].clone()), vec![j]));
            }
            let Some(inst) = inst else { continue };
            debug_assert_eq!(inst.concl(), &apply_subst(&s, &body));
            let res = match mode {
                0 => env.derive(Rule::MP, vec![inst, fact]),
                1 => env.derive(Rule::NotConjE, vec![inst, fact]),
                _ => env.derive(Rule::NotE, vec![inst, fact]),
            };
            out.extend(props(&[x, y], [res]));
        }
    }
    out
}

fn axiom_inst(env: &Env<'_>, name: &Name, s: &Subst) -> Option<Justification> {
    env.derive(Rule::Axiom { name: name.clone(), subst: s.clone() }, vec![])
}

/// Restrict a substitution to the schematics of an axiom.
fn restrict(env: &Env<'_>, name: &Name, s: &Subst) -> Subst {
    let mut vars = BTreeSet::new();
    if let Some(ax) = env.kctx.theory.axiom(name) {
        ax.schematics(&mut vars);
    }
    s.iter().filter(|(k, _)| vars.contains(*k)).map(|(k, v)| (k.clone(), v.clone())).collect()
}

fn theorem_unary(t: &TheoremStep, env: &Env<'_>, x: &Item) -> Vec<Emit> {
    use logic::*;
    match (&t.direction, t.prems.len()) {
        (Direction::Forward, 0) => {
            if x.kind != ItemKind::Term {
                return Vec::new();
            }
            let trig = t.trigger.as_ref().unwrap();
            let mut out = Vec::new();
            for r in env.table.ematch(env.kctx, trig, &x.tname) {
                out.extend(props(&[x], [axiom_inst(env, &t.axiom, &restrict(env, &t.axiom, &r.subst))]));
            }
            out
        }
        (Direction::Forward, 1) => {
            let mut out = Vec::new();
            for (s, f) in env.match_prop(&Pattern::new(t.prems[0].clone()), x, &Subst::new()) {
                let ax = axiom_inst(env, &t.axiom, &restrict(env, &t.axiom, &s));
                out.extend(props(&[x], [ax.and_then(|a| env.derive(Rule::MP, vec![a, f]))]));
            }
            out
        }
        (Direction::Forward, 2) => {
            // First premise from the item, the side condition by evaluation.
            let mut out = Vec::new();
            for (first, second) in [(0, 1)] {
                for (s, f) in env.match_prop(&Pattern::new(t.prems[first].clone()), x, &Subst::new()) {
                    let other = apply_subst(&s, &t.prems[second]);
                    if other.has_schematics() {
                        continue;
                    }
                    let Some(g) = env.prove_numeric(&other) else { continue };
                    let fs = if first == 0 { [f, g] } else { [g, f] };
                    out.extend(props(&[x], [modus_ponens(env, &t.axiom, &s, &fs)]));
                }
            }
            out
        }
        (Direction::Backward(k), 1) => {
            let mut out = Vec::new();
            for (s, f) in env.match_prop(&Pattern::new(neg(&t.concl)), x, &Subst::new()) {
                let ax = axiom_inst(env, &t.axiom, &restrict(env, &t.axiom, &s));
                out.extend(props(&[x], [ax.and_then(|a| env.derive(Rule::MT(k - 1), vec![a, f]))]));
            }
            out
        }
        (Direction::Rewrite, _) => {
            if x.kind != ItemKind::Term {
                return Vec::new();
            }
            let Some((lhs, _)) = dest_eq(&t.concl) else { return Vec::new() };
            let mut out = Vec::new();
            for r in env.table.ematch(env.kctx, &Pattern::new(lhs.clone()), &x.tname) {
                let ax = axiom_inst(env, &t.axiom, &restrict(env, &t.axiom, &r.subst));
                let eq = ax.and_then(|a| match dest_eq(r.eq_just.concl()) {
                    Some((l, rr)) if l == rr => Some(a),
                    _ => env.derive(Rule::Trans, vec![r.eq_just.clone(), a]),
                });
                out.extend(props(&[x], [eq]));
            }
            out
        }
        (Direction::Resolve, _) => {
            if x.just.is_none() || is_false(&x.tname) {
                return Vec::new();
            }
            let stmt = &t.concl;
            let mut out = Vec::new();
            // A fact matching the negation of the statement is absurd.
            for (s, f) in env.match_prop(&Pattern::new(neg(stmt)), x, &Subst::new()) {
                let ax = axiom_inst(env, &t.axiom, &restrict(env, &t.axiom, &s));
                out.extend(props(&[x], [ax.and_then(|a| env.derive(Rule::NotE, vec![f, a]))]));
            }
            // A disjunctive statement loses a disjunct refuted by the fact.
            if let Some((a, b)) = dest_or(stmt) {
                for side in [a, b] {
                    for (s, f) in env.match_prop(&Pattern::new(neg(side)), x, &Subst::new()) {
                        let ax = axiom_inst(env, &t.axiom, &restrict(env, &t.axiom, &s));
                        out.extend(props(&[x], [ax.and_then(|a| env.derive(Rule::DisjE, vec![a, f]))]));
                    }
                }
            }
            out
        }
        _ => Vec::new(),
    }
}

/// Apply the axiom chain `A1 --> A2 --> C` to proofs of both premises.
fn modus_ponens(env: &Env<'_>, axiom: &Name, s: &Subst, facts: &[Justification]) -> Option<Justification> {
    let mut j = axiom_inst(env, axiom, &restrict(env, axiom, s))?;
    for f in facts {
        j = env.derive(Rule::MP, vec![j, f.clone()])?;
    }
    Some(j)
}

fn theorem_binary(t: &TheoremStep, env: &Env<'_>, x: &Item, y: &Item) -> Vec<Emit> {
    use logic::*;
    let mut out = Vec::new();
    match &t.direction {
        Direction::Forward => {
            for (s1, f1) in env.match_prop(&Pattern::new(t.prems[0].clone()), x, &Subst::new()) {
                let p2 = Pattern::new(t.prems[1].clone());
                for (s2, f2) in env.match_prop(&p2, y, &s1) {
                    out.extend(props(&[x, y], [modus_ponens(env, &t.axiom, &s2, &[f1.clone(), f2])]));
                }
            }
        }
        Direction::Backward(k) => {
            // x refutes the conclusion, y proves the other premise.
            let other = 2 - *k;
            for (s1, f1) in env.match_prop(&Pattern::new(neg(&t.concl)), x, &Subst::new()) {
                for (s2, f2) in env.match_prop(&Pattern::new(t.prems[other].clone()), y, &s1) {
                    let ax = axiom_inst(env, &t.axiom, &restrict(env, &t.axiom, &s2));
                    out.extend(props(&[x, y], [ax.and_then(|a| env.derive(Rule::MT(k - 1), vec![a, f2, f1.clone()]))]));
                }
            }
        }
        _ => {}
    }
    out
}
