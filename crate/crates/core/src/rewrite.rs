//! The rewrite table: ground equalities closed under congruence, kept in
//! one union-find context per box, with E-matching of patterns up to the
//! known equalities.
//!
//! Every context stores a proof forest next to its union-find so that any
//! equivalence can be explained by a chain of `Trans`/`Sym`/`Cong` nodes
//! over the justifications of the recorded equalities.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::boxes::{BoxRegistry, BoxSet};
use crate::kernel::{ac_flatten, Ctx, Justification, Rule};
use crate::term::{apply_subst, ho_match, logic, Name, Pattern, Subst, Term, Type};

pub type TermId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Leaf,
    App(TermId, TermId),
}

/// Hash-consed store of every ground term the table has seen.
#[derive(Clone, Debug, Default)]
pub struct TermBank {
    terms: Vec<Term>,
    types: Vec<Type>,
    kinds: Vec<Kind>,
    index: HashMap<Term, TermId>,
}

impl TermBank {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, id: TermId) -> &Term {
        &self.terms[id as usize]
    }

    pub fn lookup(&self, t: &Term) -> Option<TermId> {
        self.index.get(t).copied()
    }

    fn intern(&mut self, t: &Term) -> TermId {
        if let Some(id) = self.lookup(t) {
            return id;
        }
        let kind = match t {
            Term::App(f, a) => Kind::App(self.intern(f), self.intern(a)),
            _ => Kind::Leaf,
        };
        let id = self.terms.len() as TermId;
        self.terms.push(t.clone());
        self.types.push(t.type_of().expect("registered terms are well-typed"));
        self.kinds.push(kind);
        self.index.insert(t.clone(), id);
        id
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Reason {
    Record(usize),
    Congruence(TermId, TermId),
}

#[derive(Clone, Copy, Debug)]
struct Edge {
    to: TermId,
    reason: Reason,
    /// The reason proves `self = to` rather than `to = self`.
    forward: bool,
}

/// Proof-forest edges in walk order, each with the node it leaves.
type Walk = Vec<(TermId, Edge)>;

/// Congruence closure of the records visible in one box.
#[derive(Clone, Debug, Default)]
struct Context {
    uf: Vec<TermId>,
    members: Vec<Vec<TermId>>,
    uses: Vec<Vec<TermId>>,
    sig: HashMap<(TermId, TermId), TermId>,
    forest: Vec<Option<Edge>>,
    numeral: Vec<Option<TermId>>,
    records: Vec<usize>,
}

impl Context {
    fn find(&self, mut x: TermId) -> TermId {
        while self.uf[x as usize] != x {
            x = self.uf[x as usize];
        }
        x
    }

    fn grow(&mut self, bank: &TermBank, touched: &mut BTreeSet<TermId>) {
        let start = self.uf.len();
        let mut pending = Vec::new();
        for id in start..bank.len() {
            let id = id as TermId;
            self.uf.push(id);
            self.members.push(vec![id]);
            self.uses.push(Vec::new());
            self.forest.push(None);
            self.numeral.push(matches!(bank.term(id), Term::Num(_)).then_some(id));
        }
        for id in start..bank.len() {
            let id = id as TermId;
            if let Kind::App(f, a) = bank.kinds[id as usize] {
                let (rf, ra) = (self.find(f), self.find(a));
                self.uses[rf as usize].push(id);
                if ra != rf {
                    self.uses[ra as usize].push(id);
                }
                match self.sig.get(&(rf, ra)) {
                    Some(&v) => pending.push((id, v, Reason::Congruence(id, v))),
                    None => {
                        self.sig.insert((rf, ra), id);
                    }
                }
            }
        }
        for (a, b, r) in pending {
            self.merge(bank, a, b, r, touched);
        }
    }

    fn reroot(&mut self, x: TermId) {
        let mut cur = x;
        let mut incoming: Option<Edge> = None;
        loop {
            let next = self.forest[cur as usize].take();
            self.forest[cur as usize] = incoming;
            match next {
                None => break,
                Some(e) => {
                    incoming = Some(Edge { to: cur, reason: e.reason, forward: !e.forward });
                    cur = e.to;
                }
            }
        }
    }

    /// Merge the classes of `a` and `b`, where `reason` proves `a = b`.
    fn merge(&mut self, bank: &TermBank, a: TermId, b: TermId, reason: Reason, touched: &mut BTreeSet<TermId>) {
        let mut queue = vec![(a, b, reason)];
        while let Some((a, b, reason)) = queue.pop() {
            let (ra, rb) = (self.find(a), self.find(b));
            if ra == rb {
                continue;
            }
            self.reroot(a);
            self.forest[a as usize] = Some(Edge { to: b, reason, forward: true });
            let (small, large) = if self.members[ra as usize].len() < self.members[rb as usize].len() {
                (ra, rb)
            } else {
                (rb, ra)
            };
            touched.extend(self.members[ra as usize].iter().copied());
            touched.extend(self.members[rb as usize].iter().copied());
            let uses = std::mem::take(&mut self.uses[small as usize]);
            for &u in &uses {
                if let Kind::App(f, x) = bank.kinds[u as usize] {
                    let key = (self.find(f), self.find(x));
                    if self.sig.get(&key) == Some(&u) {
                        self.sig.remove(&key);
                    }
                }
            }
            self.uf[small as usize] = large;
            let moved = std::mem::take(&mut self.members[small as usize]);
            self.members[large as usize].extend(moved);
            if self.numeral[large as usize].is_none() {
                self.numeral[large as usize] = self.numeral[small as usize];
            }
            for &u in &uses {
                if let Kind::App(f, x) = bank.kinds[u as usize] {
                    let key = (self.find(f), self.find(x));
                    match self.sig.get(&key) {
                        Some(&v) if self.find(v) != self.find(u) => queue.push((u, v, Reason::Congruence(u, v))),
                        Some(_) => {}
                        None => {
                            self.sig.insert(key, u);
                        }
                    }
                }
            }
            self.uses[large as usize].extend(uses);
        }
    }

    /// Proof-forest path from `x` to `y`: edges walked forward from `x`
    /// and edges walked backward into `y`.
    fn path(&self, x: TermId, y: TermId) -> (Walk, Walk) {
        let mut anc = HashMap::new();
        let mut cur = x;
        let mut k = 0usize;
        anc.insert(cur, k);
        while let Some(e) = self.forest[cur as usize] {
            cur = e.to;
            k += 1;
            anc.insert(cur, k);
        }
        let mut right = Vec::new();
        let mut cur = y;
        while !anc.contains_key(&cur) {
            let e = self.forest[cur as usize].expect("nodes of one class share a proof tree");
            right.push((cur, e));
            cur = e.to;
        }
        let depth = anc[&cur];
        let mut left = Vec::new();
        let mut c = x;
        for _ in 0..depth {
            let e = self.forest[c as usize].unwrap();
            left.push((c, e));
            c = e.to;
        }
        (left, right)
    }
}

/// A ground equality `lhs = rhs` with its justification; its box is the
/// justification's box.
#[derive(Clone, Debug)]
pub struct EqualityRecord {
    pub lhs: Term,
    pub rhs: Term,
    pub just: Justification,
}

impl EqualityRecord {
    /// Accepts only equalities between ground, non-function terms.
    pub fn new(just: Justification) -> Option<EqualityRecord> {
        let (l, r) = logic::dest_eq(just.concl())?;
        let ok = |t: &Term| !t.has_schematics() && !t.has_loose_bound() && t.type_of().is_ok_and(|ty| !ty.is_fun());
        (ok(l) && ok(r)).then(|| EqualityRecord { lhs: l.clone(), rhs: r.clone(), just: just.clone() })
    }

    pub fn cbox(&self) -> &BoxSet {
        self.just.cbox()
    }
}

#[derive(Clone, Debug)]
pub struct EMatchResult {
    pub subst: Subst,
    pub cbox: BoxSet,
    /// Proves `t = p(subst)` for the matched target `t`.
    pub eq_just: Justification,
}

/// Recipe for an equality proof, built during matching and materialized
/// only for successful matches.
#[derive(Clone, Debug)]
enum Plan {
    Refl(Term),
    Explain(TermId, TermId),
    Cong(Box<Plan>, Box<Plan>),
    Trans(Vec<Plan>),
    AcPerm(Name, Term, Term),
    /// Instance of an equational axiom, optionally reversed.
    Axiom(Name, Subst, bool),
}

/// At most this many operand expansions in one AC match.
const AC_EXPANSIONS: usize = 2;

#[derive(Clone, Debug, Default)]
pub struct RewriteTable {
    bank: TermBank,
    records: Vec<EqualityRecord>,
    contexts: BTreeMap<BoxSet, Context>,
}

impl RewriteTable {
    pub fn new() -> Self {
        let mut t = RewriteTable::default();
        t.contexts.insert(BoxSet::empty(), Context::default());
        t
    }

    pub fn bank(&self) -> &TermBank {
        &self.bank
    }

    pub fn records(&self) -> &[EqualityRecord] {
        &self.records
    }

    pub fn context_boxes(&self) -> impl Iterator<Item = &BoxSet> {
        self.contexts.keys()
    }

    pub fn term(&self, id: TermId) -> &Term {
        self.bank.term(id)
    }

    pub fn lookup(&self, t: &Term) -> Option<TermId> {
        self.bank.lookup(t)
    }

    fn sync(&mut self) -> BTreeSet<TermId> {
        let mut touched = BTreeSet::new();
        for cx in self.contexts.values_mut() {
            cx.grow(&self.bank, &mut touched);
        }
        touched
    }

    /// Register a ground term and its application subterms. Returns the
    /// terms whose class changed through congruence with existing terms.
    pub fn register_term(&mut self, t: &Term) -> (TermId, Vec<TermId>) {
        debug_assert!(!t.has_schematics() && !t.has_loose_bound());
        let id = self.bank.intern(t);
        let touched = self.sync();
        (id, touched.into_iter().collect())
    }

    /// Make sure a context for box `b` exists.
    pub fn ensure_context(&mut self, reg: &BoxRegistry, b: &BoxSet) {
        if self.contexts.contains_key(b) {
            return;
        }
        let mut cx = Context::default();
        let mut sink = BTreeSet::new();
        cx.grow(&self.bank, &mut sink);
        for (i, r) in self.records.iter().enumerate() {
            if reg.leq(r.cbox(), b) {
                let (l, rr) = (self.bank.lookup(&r.lhs).unwrap(), self.bank.lookup(&r.rhs).unwrap());
                cx.merge(&self.bank, l, rr, Reason::Record(i), &mut sink);
                cx.records.push(i);
            }
        }
        self.contexts.insert(b.clone(), cx);
    }

    /// Add an equality. Returns every registered term whose class changed
    /// in some context; empty if the equality was already known.
    pub fn add_equality(&mut self, reg: &BoxRegistry, rec: EqualityRecord) -> Vec<TermId> {
        let (l, _) = self.register_term(&rec.lhs);
        let (r, _) = self.register_term(&rec.rhs);
        self.ensure_context(reg, rec.cbox());
        let known = self
            .contexts
            .iter()
            .filter(|(b, _)| reg.leq(rec.cbox(), b))
            .all(|(_, cx)| cx.find(l) == cx.find(r));
        if known {
            return Vec::new();
        }
        let idx = self.records.len();
        let rbox = rec.cbox().clone();
        self.records.push(rec);
        let mut touched = BTreeSet::new();
        for (b, cx) in self.contexts.iter_mut() {
            if reg.leq(&rbox, b) {
                cx.records.push(idx);
                cx.merge(&self.bank, l, r, Reason::Record(idx), &mut touched);
            }
        }
        touched.into_iter().collect()
    }

    /// Equivalence classes (of size two or more) in the context of `b`,
    /// sorted; `None` if there is no such context.
    pub fn classes(&self, b: &BoxSet) -> Option<Vec<Vec<Term>>> {
        let cx = self.contexts.get(b)?;
        let mut out: Vec<Vec<Term>> = cx
            .members
            .iter()
            .filter(|m| m.len() > 1)
            .map(|m| {
                let mut v: Vec<Term> = m.iter().map(|&i| self.bank.term(i).clone()).collect();
                v.sort();
                v
            })
            .collect();
        out.sort();
        Some(out)
    }

    /// Whether `a` and `b` are equal in the context of box `b`.
    pub fn equal_in(&self, bx: &BoxSet, a: &Term, b: &Term) -> bool {
        if a == b {
            return true;
        }
        match (self.contexts.get(bx), self.lookup(a), self.lookup(b)) {
            (Some(cx), Some(x), Some(y)) => cx.find(x) == cx.find(y),
            _ => false,
        }
    }

    /// A minimal box in which `a` and `b` are equal, with a proof of `a = b`.
    pub fn equiv(&self, kctx: Ctx<'_>, a: &Term, b: &Term) -> Option<(BoxSet, Justification)> {
        if a == b {
            let j = Justification::derive(kctx, Rule::Refl(a.clone()), vec![]).ok()?;
            return Some((BoxSet::empty(), j));
        }
        let (x, y) = (self.lookup(a)?, self.lookup(b)?);
        let mut found: Vec<Justification> = Vec::new();
        let mut seen_records: Vec<&[usize]> = Vec::new();
        for cx in self.contexts.values() {
            if cx.find(x) != cx.find(y) || seen_records.contains(&cx.records.as_slice()) {
                continue;
            }
            seen_records.push(&cx.records);
            if let Some(j) = self.materialize(kctx, cx, &Plan::Explain(x, y)) {
                found.push(j);
            }
        }
        let best = minimal_by_box(kctx.boxes, found, |j| j.cbox().clone()).into_iter().next()?;
        Some((best.cbox().clone(), best))
    }

    fn explain(&self, kctx: Ctx<'_>, cx: &Context, x: TermId, y: TermId) -> Option<Justification> {
        if x == y {
            return Justification::derive(kctx, Rule::Refl(self.term(x).clone()), vec![]).ok();
        }
        let (left, right) = cx.path(x, y);
        let mut steps = Vec::new();
        for (from, e) in left {
            steps.push(self.edge_proof(kctx, cx, from, e)?);
        }
        for (from, e) in right.into_iter().rev() {
            let j = self.edge_proof(kctx, cx, from, e)?;
            steps.push(Justification::derive(kctx, Rule::Sym, vec![j]).ok()?);
        }
        chain(kctx, steps)
    }

    /// Proof of `from = e.to`.
    fn edge_proof(&self, kctx: Ctx<'_>, cx: &Context, from: TermId, e: Edge) -> Option<Justification> {
        let j = match e.reason {
            Reason::Record(i) => self.records[i].just.clone(),
            Reason::Congruence(u, v) => {
                let (Kind::App(f1, a1), Kind::App(f2, a2)) = (self.bank.kinds[u as usize], self.bank.kinds[v as usize]) else {
                    return None;
                };
                let jf = self.explain(kctx, cx, f1, f2)?;
                let ja = self.explain(kctx, cx, a1, a2)?;
                cong(kctx, jf, ja)?
            }
        };
        let _ = from;
        if e.forward {
            Some(j)
        } else {
            Justification::derive(kctx, Rule::Sym, vec![j]).ok()
        }
    }

    fn materialize(&self, kctx: Ctx<'_>, cx: &Context, plan: &Plan) -> Option<Justification> {
        match plan {
            Plan::Refl(t) => Justification::derive(kctx, Rule::Refl(t.clone()), vec![]).ok(),
            Plan::Explain(x, y) => self.explain(kctx, cx, *x, *y),
            Plan::Cong(f, a) => {
                let jf = self.materialize(kctx, cx, f)?;
                let ja = self.materialize(kctx, cx, a)?;
                cong(kctx, jf, ja)
            }
            Plan::Trans(ps) => {
                let js = ps.iter().map(|p| self.materialize(kctx, cx, p)).collect::<Option<Vec<_>>>()?;
                chain(kctx, js)
            }
            Plan::AcPerm(op, l, r) => {
                if l == r {
                    Justification::derive(kctx, Rule::Refl(l.clone()), vec![]).ok()
                } else {
                    Justification::derive(kctx, Rule::AcPerm { op: op.clone(), lhs: l.clone(), rhs: r.clone() }, vec![]).ok()
                }
            }
            Plan::Axiom(name, s, rev) => {
                let j = Justification::derive(kctx, Rule::Axiom { name: name.clone(), subst: s.clone() }, vec![]).ok()?;
                if *rev {
                    Justification::derive(kctx, Rule::Sym, vec![j]).ok()
                } else {
                    Some(j)
                }
            }
        }
    }

    /// All matches of `p` against `t` up to the known equalities, with the
    /// minimal boxes in which they hold. Sorted by substitution, then box.
    pub fn ematch(&self, kctx: Ctx<'_>, p: &Pattern, t: &Term) -> Vec<EMatchResult> {
        self.ematch_with(kctx, p, t, &Subst::new())
    }

    /// [`ematch`](RewriteTable::ematch) extending a partial substitution.
    pub fn ematch_with(&self, kctx: Ctx<'_>, p: &Pattern, t: &Term, partial: &Subst) -> Vec<EMatchResult> {
        let Some(tid) = self.lookup(t) else { return Vec::new() };
        if !p.valid {
            return Vec::new();
        }
        let mut raw: Vec<EMatchResult> = Vec::new();
        let mut seen_records: Vec<&[usize]> = Vec::new();
        for cx in self.contexts.values() {
            if seen_records.contains(&cx.records.as_slice()) {
                continue;
            }
            seen_records.push(&cx.records);
            let m = Matcher { tbl: self, cx, kctx };
            let mut found: BTreeMap<Subst, Plan> = BTreeMap::new();
            for (s, plan) in m.top(&p.term, tid, partial) {
                found.entry(s).or_insert(plan);
            }
            for (subst, plan) in found {
                if let Some(j) = self.materialize(kctx, cx, &plan) {
                    debug_assert_eq!(logic::dest_eq(j.concl()).map(|(_, r)| r.clone()), Some(apply_subst(&subst, &p.term)));
                    raw.push(EMatchResult { subst, cbox: j.cbox().clone(), eq_just: j });
                }
            }
        }
        let mut by_subst: BTreeMap<Subst, Vec<EMatchResult>> = BTreeMap::new();
        for r in raw {
            by_subst.entry(r.subst.clone()).or_default().push(r);
        }
        let mut out = Vec::new();
        for (_, rs) in by_subst {
            out.extend(minimal_by_box(kctx.boxes, rs, |r| r.cbox.clone()));
        }
        out
    }

    /// AC matching of a pattern headed by `op`; the general [`ematch`]
    /// dispatches here for every AC-headed subpattern.
    ///
    /// [`ematch`]: RewriteTable::ematch
    pub fn ematch_ac(&self, kctx: Ctx<'_>, p: &Pattern, t: &Term, op: &str) -> Vec<EMatchResult> {
        if logic::dest_binop(&p.term, op).is_none() || !kctx.theory.is_ac(op) {
            return Vec::new();
        }
        self.ematch(kctx, p, t)
    }

    /// Numerals known equal to `t` in some context.
    pub fn numerals_equal_to(&self, t: &Term) -> Vec<Term> {
        if matches!(t, Term::Num(_)) {
            return vec![t.clone()];
        }
        let Some(id) = self.lookup(t) else { return Vec::new() };
        let mut out: Vec<Term> = self
            .contexts
            .values()
            .filter_map(|cx| cx.numeral[cx.find(id) as usize].map(|n| self.term(n).clone()))
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// Terms equal to `t` in the context of box `b` (including `t`).
    pub fn class_in(&self, b: &BoxSet, t: &Term) -> Vec<Term> {
        match (self.contexts.get(b), self.lookup(t)) {
            (Some(cx), Some(id)) => cx.members[cx.find(id) as usize].iter().map(|&m| self.term(m).clone()).collect(),
            _ => vec![t.clone()],
        }
    }

    /// Classes per box context, in a stable order.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (b, cx) in &self.contexts {
            let _ = writeln!(out, "box {b}: {} records", cx.records.len());
            for class in self.classes(b).unwrap_or_default() {
                let names: Vec<String> = class.iter().map(|t| t.to_string()).collect();
                let _ = writeln!(out, "  {}", names.join(" == "));
            }
            let _ = cx;
        }
        out
    }
}

fn chain(kctx: Ctx<'_>, js: Vec<Justification>) -> Option<Justification> {
    let mut acc: Option<Justification> = None;
    let mut first: Option<Justification> = None;
    for j in js {
        if first.is_none() {
            first = Some(j.clone());
        }
        if logic::dest_eq(j.concl()).is_some_and(|(l, r)| l == r) {
            continue;
        }
        acc = Some(match acc {
            None => j,
            Some(a) => Justification::derive(kctx, Rule::Trans, vec![a, j]).ok()?,
        });
    }
    acc.or(first)
}

fn cong(kctx: Ctx<'_>, jf: Justification, ja: Justification) -> Option<Justification> {
    let (f, g) = logic::dest_eq(jf.concl())?;
    let (a, b) = logic::dest_eq(ja.concl())?;
    if f == g && a == b {
        return Justification::derive(kctx, Rule::Refl(Term::app(f.clone(), a.clone())), vec![]).ok();
    }
    Justification::derive(kctx, Rule::Cong, vec![jf, ja]).ok()
}

/// Keep the items whose box has no strictly smaller box among the others;
/// of equal boxes keep the first.
fn minimal_by_box<T>(reg: &BoxRegistry, items: Vec<T>, key: impl Fn(&T) -> BoxSet) -> Vec<T> {
    let boxes: Vec<BoxSet> = items.iter().map(&key).collect();
    let mut out = Vec::new();
    for (i, it) in items.into_iter().enumerate() {
        let dominated = boxes
            .iter()
            .enumerate()
            .any(|(j, b)| (b != &boxes[i] && reg.leq(b, &boxes[i])) || (b == &boxes[i] && j < i));
        if !dominated {
            out.push(it);
        }
    }
    out
}

fn left_chain(op: &Term, elems: &[Term]) -> Term {
    let mut it = elems.iter().cloned();
    let first = it.next().expect("non-empty chain");
    it.fold(first, |acc, e| Term::apps(op.clone(), [acc, e]))
}

/// Proof plan rewriting each element of a left-associated chain.
fn cong_fold(op: &Term, plans: Vec<Plan>) -> Plan {
    let mut it = plans.into_iter();
    let first = it.next().expect("non-empty chain");
    it.fold(first, |acc, p| Plan::Cong(Box::new(Plan::Cong(Box::new(Plan::Refl(op.clone())), Box::new(acc))), Box::new(p)))
}

fn ac_head(p: &Term) -> Option<(&Term, &Name)> {
    let (h, args) = p.strip_app();
    match (h, args.len()) {
        (Term::Const(n, _), 2) => Some((h, n)),
        _ => None,
    }
}

struct Matcher<'a> {
    tbl: &'a RewriteTable,
    cx: &'a Context,
    kctx: Ctx<'a>,
}

type Found = Vec<(Subst, Plan)>;

impl<'a> Matcher<'a> {
    fn root(&self, x: TermId) -> TermId {
        self.cx.find(x)
    }

    fn class(&self, x: TermId) -> &[TermId] {
        &self.cx.members[self.root(x) as usize]
    }

    fn term(&self, x: TermId) -> &Term {
        self.tbl.bank.term(x)
    }

    /// Matches at the top level, including the order-duality matchers.
    fn top(&self, p: &Term, t: TermId, partial: &Subst) -> Found {
        let mut out = self.m(p, t, partial);
        use crate::arith::{nat_rel, LE, LT};
        // (negated?, relation, dual relation, axiom): the pattern
        // `~(a R b)` also matches `b D a`, and `a D b` also matches
        // `~(b R a)`, through `axiom: ~(?a R ?b) = (?b D ?a)`.
        for (rel, dual, axiom) in [(LT, LE, "not_less"), (LE, LT, "not_le")] {
            if self.kctx.theory.axiom(axiom).is_none() {
                continue;
            }
            if let Some((a, b)) = logic::dest_not(p).and_then(|i| logic::dest_binop(i, rel)) {
                let alt = Term::apps(nat_rel(dual), [b.clone(), a.clone()]);
                for (s, plan) in self.m(&alt, t, partial) {
                    let inst: Subst = [("a".into(), apply_subst(&s, a)), ("b".into(), apply_subst(&s, b))].into();
                    out.push((s, Plan::Trans(vec![plan, Plan::Axiom(axiom.into(), inst, true)])));
                }
            }
            if let Some((a, b)) = logic::dest_binop(p, dual) {
                let alt = logic::mk_not(Term::apps(nat_rel(rel), [b.clone(), a.clone()]));
                for (s, plan) in self.m(&alt, t, partial) {
                    let inst: Subst = [("a".into(), apply_subst(&s, b)), ("b".into(), apply_subst(&s, a))].into();
                    out.push((s, Plan::Trans(vec![plan, Plan::Axiom(axiom.into(), inst, false)])));
                }
            }
        }
        out
    }

    /// Extensions of `s` under which `p` matches `t`, each with a plan
    /// proving `t = p(s')`.
    fn m(&self, p: &Term, t: TermId, s: &Subst) -> Found {
        let bank = &self.tbl.bank;
        match p {
            Term::Schematic(x, ty, numc) => {
                if let Some(bound) = s.get(x) {
                    return match bank.lookup(bound) {
                        Some(q) if self.root(q) == self.root(t) => vec![(s.clone(), Plan::Explain(t, q))],
                        _ => Vec::new(),
                    };
                }
                if bank.types[t as usize] != *ty {
                    return Vec::new();
                }
                let (val, plan) = if *numc {
                    match self.cx.numeral[self.root(t) as usize] {
                        Some(n) => (self.term(n).clone(), Plan::Explain(t, n)),
                        None => return Vec::new(),
                    }
                } else {
                    (self.term(t).clone(), Plan::Refl(self.term(t).clone()))
                };
                let mut s2 = s.clone();
                s2.insert(x.clone(), val);
                vec![(s2, plan)]
            }
            _ if !p.has_schematics() && bank.lookup(p).is_some() => {
                let q = bank.lookup(p).unwrap();
                if self.root(q) == self.root(t) {
                    vec![(s.clone(), Plan::Explain(t, q))]
                } else {
                    Vec::new()
                }
            }
            Term::Abs(..) => {
                let pat = Pattern::new(p.clone());
                let mut out = Vec::new();
                for &mbr in self.class(t) {
                    if matches!(self.term(mbr), Term::Abs(..)) {
                        for s2 in ho_match(&pat, self.term(mbr), s).unwrap_or_default() {
                            out.push((s2, Plan::Explain(t, mbr)));
                        }
                    }
                }
                out
            }
            Term::App(pf, pa) => {
                if let Some((op_t, op)) = ac_head(p) {
                    if self.kctx.theory.is_ac(op) {
                        return self.m_ac(p, op_t, op, t, s);
                    }
                }
                let mut out = Vec::new();
                for &mbr in self.class(t) {
                    let Kind::App(f, a) = bank.kinds[mbr as usize] else { continue };
                    for (s1, planf) in self.m(pf, f, s) {
                        for (s2, plana) in self.m(pa, a, &s1) {
                            out.push((
                                s2,
                                Plan::Trans(vec![Plan::Explain(t, mbr), Plan::Cong(Box::new(planf.clone()), Box::new(plana))]),
                            ));
                        }
                    }
                }
                out
            }
            _ => Vec::new(),
        }
    }

    /// Operand lists reachable from `elems` by at most [`AC_EXPANSIONS`]
    /// replacements of an operand with a known `op`-term in its class,
    /// each with a plan from `chain(elems)` to `chain(result)`.
    fn expansions(&self, op_t: &Term, op: &Name, elems: Vec<Term>) -> Vec<(Vec<Term>, Vec<Plan>)> {
        let mut out = vec![(elems, Vec::new())];
        let mut frontier = vec![0usize];
        for _ in 0..AC_EXPANSIONS {
            let mut next = Vec::new();
            for &k in &frontier {
                let (cur, plans) = out[k].clone();
                for (i, e) in cur.iter().enumerate() {
                    let Some(eid) = self.tbl.lookup(e) else { continue };
                    for &v in self.class(eid) {
                        let vt = self.term(v);
                        if v == eid || logic::dest_binop(vt, op).is_none() {
                            continue;
                        }
                        let mut replaced = cur.clone();
                        replaced[i] = vt.clone();
                        let step_plans: Vec<Plan> = cur
                            .iter()
                            .enumerate()
                            .map(|(j, x)| if j == i { Plan::Explain(eid, v) } else { Plan::Refl(x.clone()) })
                            .collect();
                        let flat: Vec<Term> = replaced.iter().flat_map(|x| ac_flatten(op, x)).collect();
                        let mut sorted = flat.clone();
                        sorted.sort();
                        if out.iter().any(|(o, _)| {
                            let mut so = o.clone();
                            so.sort();
                            so == sorted
                        }) {
                            continue;
                        }
                        let mut p2 = plans.clone();
                        p2.push(cong_fold(op_t, step_plans));
                        p2.push(Plan::AcPerm(op.clone(), left_chain(op_t, &replaced), left_chain(op_t, &flat)));
                        out.push((flat, p2));
                        next.push(out.len() - 1);
                    }
                }
            }
            frontier = next;
        }
        out
    }

    fn m_ac(&self, p: &Term, op_t: &Term, op: &Name, t: TermId, s: &Subst) -> Found {
        let pats = ac_flatten(op, p);
        let mut out = Vec::new();
        for &mbr in self.class(t) {
            let mt = self.term(mbr);
            if logic::dest_binop(mt, op).is_none() || self.tbl.bank.types[mbr as usize] != self.tbl.bank.types[t as usize] {
                continue;
            }
            let elems = ac_flatten(op, mt);
            let base = left_chain(op_t, &elems);
            for (flat, exp_plans) in self.expansions(op_t, op, elems.clone()) {
                for (s2, groups) in self.assign(op_t, &pats, &flat, s) {
                    // groups[i]: elements and per-element plans for pattern operand i.
                    let mut q = Vec::new();
                    let mut q_plans = Vec::new();
                    let mut q2 = Vec::new();
                    for (elems_i, plan_i, inst_i) in &groups {
                        match plan_i {
                            Some(pl) => {
                                q.push(elems_i[0].clone());
                                q_plans.push(pl.clone());
                                q2.push(inst_i.clone());
                            }
                            None => {
                                for e in elems_i {
                                    q.push(e.clone());
                                    q_plans.push(Plan::Refl(e.clone()));
                                    q2.push(e.clone());
                                }
                            }
                        }
                    }
                    let inst = apply_subst(&s2, p);
                    let mut plan = vec![Plan::Explain(t, mbr), Plan::AcPerm(op.clone(), mt.clone(), base.clone())];
                    plan.extend(exp_plans.iter().cloned());
                    plan.push(Plan::AcPerm(op.clone(), left_chain(op_t, &flat), left_chain(op_t, &q)));
                    plan.push(cong_fold(op_t, q_plans));
                    plan.push(Plan::AcPerm(op.clone(), left_chain(op_t, &q2), inst));
                    out.push((s2, Plan::Trans(plan)));
                }
            }
        }
        out
    }

    /// Assign pattern operands to distinct elements. Returns, per pattern
    /// operand, its elements, the plan proving element = instance (None for
    /// a remainder-absorbing schematic) and its instance.
    #[allow(clippy::type_complexity)]
    fn assign(&self, op_t: &Term, pats: &[Term], elems: &[Term], s: &Subst) -> Vec<(Subst, Vec<(Vec<Term>, Option<Plan>, Term)>)> {
        let is_free_var = |p: &Term, s: &Subst| matches!(p, Term::Schematic(x, _, false) if !s.contains_key(x));
        // The last unbound plain schematic absorbs the remainder.
        let absorber = pats.iter().rposition(|p| is_free_var(p, s));
        let mut order: Vec<usize> = (0..pats.len()).filter(|&i| !is_free_var(&pats[i], s)).collect();
        order.extend((0..pats.len()).filter(|&i| is_free_var(&pats[i], s) && Some(i) != absorber));
        let mut results = Vec::new();
        let mut slots: Vec<Option<(Vec<Term>, Option<Plan>, Term)>> = vec![None; pats.len()];
        self.assign_rec(op_t, pats, elems, &order, 0, &mut vec![false; elems.len()], s.clone(), &mut slots, absorber, &mut results);
        results
    }

    #[allow(clippy::too_many_arguments, clippy::type_complexity)]
    fn assign_rec(
        &self,
        op_t: &Term,
        pats: &[Term],
        elems: &[Term],
        order: &[usize],
        k: usize,
        used: &mut Vec<bool>,
        s: Subst,
        slots: &mut Vec<Option<(Vec<Term>, Option<Plan>, Term)>>,
        absorber: Option<usize>,
        out: &mut Vec<(Subst, Vec<(Vec<Term>, Option<Plan>, Term)>)>,
    ) {
        if k == order.len() {
            let rest: Vec<Term> = elems.iter().zip(used.iter()).filter(|(_, u)| !**u).map(|(e, _)| e.clone()).collect();
            let mut s2 = s;
            match absorber {
                None if rest.is_empty() => {}
                None => return,
                Some(_) if rest.is_empty() => return,
                Some(i) => {
                    let Term::Schematic(x, ty, _) = &pats[i] else { return };
                    let mut sorted = rest.clone();
                    sorted.sort();
                    let val = if sorted.len() == 1 { sorted[0].clone() } else { left_chain(op_t, &sorted) };
                    if val.type_of().ok().as_ref() != Some(ty) {
                        return;
                    }
                    s2.insert(x.clone(), val.clone());
                    slots[i] = Some((sorted, None, val));
                }
            }
            let groups = slots.iter().map(|g| g.clone().expect("every operand assigned")).collect();
            out.push((s2, groups));
            if let Some(i) = absorber {
                slots[i] = None;
            }
            return;
        }
        let i = order[k];
        for j in 0..elems.len() {
            if used[j] {
                continue;
            }
            let Some(eid) = self.tbl.lookup(&elems[j]) else { continue };
            for (s2, plan) in self.m(&pats[i], eid, &s) {
                used[j] = true;
                let inst = apply_subst(&s2, &pats[i]);
                slots[i] = Some((vec![elems[j].clone()], Some(plan), inst));
                self.assign_rec(op_t, pats, elems, order, k + 1, used, s2, slots, absorber, out);
                slots[i] = None;
                used[j] = false;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_term;
    use crate::theory::Theory;

    /// A theory with `f`, `g`, an AC operator `*` and free nat variables.
    fn setup(eqs: &[&str]) -> (Theory, BoxRegistry, Vec<Term>) {
        let mut th = Theory::builtin_nat();
        th.extend_from_str("t", "(const f (=> nat nat))\n(const g (=> nat nat nat))").unwrap();
        let eqs: Vec<Term> = eqs.iter().map(|s| tm(&th, s)).collect();
        let mut reg = BoxRegistry::new();
        reg.new_primitive(&BoxSet::empty(), eqs.clone(), vec![]).unwrap();
        (th, reg, eqs)
    }

    fn tm(th: &Theory, s: &str) -> Term {
        let frees = ["a", "b", "c", "p", "x", "y", "z"].iter().map(|n| (Name::from(*n), Type::nat())).collect();
        parse_term(&th.sig, &frees, s).unwrap()
    }

    fn table(th: &Theory, reg: &BoxRegistry, n: usize) -> RewriteTable {
        let ctx = Ctx { theory: th, boxes: reg };
        let mut tbl = RewriteTable::new();
        tbl.ensure_context(reg, &BoxSet::single(0));
        for idx in 0..n {
            let j = Justification::derive(ctx, Rule::Assume { prim: 0, idx }, vec![]).unwrap();
            tbl.add_equality(reg, EqualityRecord::new(j).unwrap());
        }
        tbl
    }

    #[test]
    fn register_is_idempotent() {
        let (th, reg, _) = setup(&["(= a b)"]);
        let mut tbl = table(&th, &reg, 0);
        let t = tm(&th, "(prime p)");
        let (i, _) = tbl.register_term(&t);
        let n = tbl.bank().len();
        assert_eq!(tbl.register_term(&t).0, i);
        assert_eq!(tbl.bank().len(), n);
        assert!(tbl.lookup(&tm(&th, "p")).is_some());
    }

    #[test]
    fn congruence_on_registration() {
        let (th, reg, _) = setup(&["(= a b)"]);
        let mut tbl = table(&th, &reg, 0);
        tbl.register_term(&tm(&th, "(f b)"));
        let ctx = Ctx { theory: &th, boxes: &reg };
        let j = Justification::derive(ctx, Rule::Assume { prim: 0, idx: 0 }, vec![]).unwrap();
        let touched = tbl.add_equality(&reg, EqualityRecord::new(j.clone()).unwrap());
        assert!(!touched.is_empty());
        assert!(tbl.add_equality(&reg, EqualityRecord::new(j).unwrap()).is_empty());
        let (_, touched) = tbl.register_term(&tm(&th, "(f a)"));
        assert!(touched.contains(&tbl.lookup(&tm(&th, "(f b)")).unwrap()));
        let (b, just) = tbl.equiv(ctx, &tm(&th, "(f a)"), &tm(&th, "(f b)")).unwrap();
        assert_eq!(b, BoxSet::single(0));
        assert!(crate::kernel::replay(ctx, &just));
        assert_eq!(just.concl(), &logic::mk_eq(tm(&th, "(f a)"), tm(&th, "(f b)")));
    }

    #[test]
    fn equiv_reflexive_is_boxless() {
        let (th, reg, _) = setup(&["(= a b)"]);
        let tbl = table(&th, &reg, 0);
        let ctx = Ctx { theory: &th, boxes: &reg };
        let (b, j) = tbl.equiv(ctx, &tm(&th, "c"), &tm(&th, "c")).unwrap();
        assert!(b.is_empty());
        assert_eq!(j.rule(), &Rule::Refl(tm(&th, "c")));
        assert!(tbl.equiv(ctx, &tm(&th, "a"), &tm(&th, "c")).is_none());
    }

    #[test]
    fn ematch_modulo_definition() {
        let (th, reg, _) = setup(&["(= (even p) (dvd 2 p))"]);
        let mut tbl = table(&th, &reg, 0);
        tbl.register_term(&tm(&th, "(even p)"));
        let ctx = Ctx { theory: &th, boxes: &reg };
        let j = Justification::derive(ctx, Rule::Assume { prim: 0, idx: 0 }, vec![]).unwrap();
        tbl.add_equality(&reg, EqualityRecord::new(j).unwrap());
        let pat = Pattern::new(tm(&th, "(dvd ?m p)"));
        let rs = tbl.ematch(ctx, &pat, &tm(&th, "(even p)"));
        assert_eq!(rs.len(), 1);
        assert_eq!(rs[0].subst["m"], Term::num(2));
        assert_eq!(rs[0].cbox, BoxSet::single(0));
        assert!(crate::kernel::replay(ctx, &rs[0].eq_just));
    }

    #[test]
    fn ematch_irreflexive_pattern() {
        let (th, reg, _) = setup(&["(= 2 p)"]);
        let mut tbl = table(&th, &reg, 0);
        tbl.register_term(&tm(&th, "(> p 2)"));
        let tbl = {
            let mut t2 = tbl;
            let ctx = Ctx { theory: &th, boxes: &reg };
            let j = Justification::derive(ctx, Rule::Assume { prim: 0, idx: 0 }, vec![]).unwrap();
            t2.add_equality(&reg, EqualityRecord::new(j).unwrap());
            t2
        };
        let ctx = Ctx { theory: &th, boxes: &reg };
        let rs = tbl.ematch(ctx, &Pattern::new(tm(&th, "(> ?n ?n)")), &tm(&th, "(> p 2)"));
        assert!(!rs.is_empty());
        for r in &rs {
            assert!(crate::kernel::replay(ctx, &r.eq_just));
        }
    }

    #[test]
    fn ac_worked_example() {
        let (th, reg, _) = setup(&["(= x (* y z))"]);
        let mut tbl = table(&th, &reg, 0);
        tbl.register_term(&tm(&th, "(* p x)"));
        let tbl = {
            let mut t2 = tbl;
            let ctx = Ctx { theory: &th, boxes: &reg };
            let j = Justification::derive(ctx, Rule::Assume { prim: 0, idx: 0 }, vec![]).unwrap();
            t2.add_equality(&reg, EqualityRecord::new(j).unwrap());
            t2
        };
        let ctx = Ctx { theory: &th, boxes: &reg };
        let rs = tbl.ematch_ac(ctx, &Pattern::new(tm(&th, "(* y ?a)")), &tm(&th, "(* p x)"), "*");
        let got: Vec<&Term> = rs.iter().map(|r| &r.subst["a"]).collect();
        assert_eq!(got, vec![&tm(&th, "(* p z)")]);
        assert!(crate::kernel::replay(ctx, &rs[0].eq_just));
    }

    #[test]
    fn ac_commutative_both_orders() {
        let (th, reg, _) = setup(&["(= a a)"]);
        let mut tbl = table(&th, &reg, 0);
        tbl.register_term(&tm(&th, "(* x y)"));
        let ctx = Ctx { theory: &th, boxes: &reg };
        let rs = tbl.ematch(ctx, &Pattern::new(tm(&th, "(* ?a ?b)")), &tm(&th, "(* x y)"));
        let pairs: BTreeSet<(Term, Term)> = rs.iter().map(|r| (r.subst["a"].clone(), r.subst["b"].clone())).collect();
        assert!(pairs.contains(&(tm(&th, "x"), tm(&th, "y"))));
        assert!(pairs.contains(&(tm(&th, "y"), tm(&th, "x"))));
        for r in &rs {
            assert!(crate::kernel::replay(ctx, &r.eq_just));
        }
    }

    #[test]
    fn duality_matcher() {
        let (th, reg, _) = setup(&["(= a a)"]);
        let mut tbl = table(&th, &reg, 0);
        tbl.register_term(&tm(&th, "(<= b a)"));
        let ctx = Ctx { theory: &th, boxes: &reg };
        let rs = tbl.ematch(ctx, &Pattern::new(tm(&th, "(not (< ?p ?q))")), &tm(&th, "(<= b a)"));
        assert_eq!(rs.len(), 1);
        assert_eq!(rs[0].subst["p"], tm(&th, "a"));
        assert_eq!(rs[0].eq_just.concl(), &logic::mk_eq(tm(&th, "(<= b a)"), tm(&th, "(not (< a b))")));
        assert!(crate::kernel::replay(ctx, &rs[0].eq_just));
    }
}
