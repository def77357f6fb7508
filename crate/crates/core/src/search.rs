//! Best-first saturation over items.
//!
//! Updates wait in a priority queue ordered by score and then by insertion
//! sequence. Pulling an update adds its items to the main list, feeds
//! ground equalities to the rewrite table and dispatches every proof step
//! on the new items, queueing whatever they emit.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, HashSet};

use serde::Serialize;

use crate::boxes::{self, BoxRegistry, BoxSet, Resolution};
use crate::kernel::{self, Ctx, Justification, Rule};
use crate::par;
use crate::rewrite::{EqualityRecord, RewriteTable};
use crate::steps::{self, Emit, Env, Payload, ProofStep, StepError};
use crate::term::{logic, subterms, term_size, Name, Term, Type};
use crate::theory::Theory;

pub type ItemId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ItemKind {
    Prop,
    Term,
    /// Disjunction that is not case-split.
    Disj,
    /// Disjunction eligible for case splitting.
    DisjActive,
}

#[derive(Clone, Debug)]
pub struct Item {
    pub id: ItemId,
    pub kind: ItemKind,
    pub tname: Term,
    pub just: Option<Justification>,
    pub score: i64,
    pub cbox: BoxSet,
    /// Index of the pull that added the item.
    pub origin: usize,
}

/// Increment weights of the scoring function.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Weights {
    pub base: i64,
    pub size: i64,
    pub depth: i64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights { base: 1, size: 1, depth: 10 }
    }
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub max_updates: usize,
    pub weights: Weights,
    /// Dispatch steps on worker threads (needs the `parallel` feature).
    pub parallel: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { max_updates: 2000, weights: Weights::default(), parallel: cfg!(feature = "parallel") }
    }
}

#[derive(Clone, Debug)]
pub enum Outcome {
    /// `False` in box `{0}`.
    Proved(Justification),
    Saturated,
    Timeout,
}

impl Outcome {
    pub fn name(&self) -> &'static str {
        match self {
            Outcome::Proved(_) => "Proved",
            Outcome::Saturated => "Saturated",
            Outcome::Timeout => "Timeout",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Update {
    pub step: String,
    pub inputs: Vec<ItemId>,
    pub payload: Vec<Payload>,
    pub score: i64,
    pub seq: u64,
}

struct Queued(Update);

impl PartialEq for Queued {
    fn eq(&self, o: &Self) -> bool {
        (self.0.score, self.0.seq) == (o.0.score, o.0.seq)
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Queued {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        (Reverse(self.0.score), Reverse(self.0.seq)).cmp(&(Reverse(o.0.score), Reverse(o.0.seq)))
    }
}

/// One pulled update, as rendered in traces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceRecord {
    /// Pull index, starting at 0.
    pub seq: usize,
    pub score: i64,
    pub step: String,
    pub inputs: Vec<ItemId>,
    pub payload: Vec<String>,
    #[serde(rename = "box")]
    pub cbox: String,
    /// Items added by this update.
    pub items: Vec<ItemId>,
    /// Pull indices of the updates that produced the inputs.
    pub edges: Vec<usize>,
}

impl TraceRecord {
    pub fn render(&self) -> String {
        let inputs: Vec<String> = self.inputs.iter().map(|i| format!("#{i}")).collect();
        format!(
            "[{}] score={} {}({}) {} => {}",
            self.seq,
            self.score,
            self.step,
            inputs.join(","),
            self.cbox,
            self.payload.join("; ")
        )
    }
}

#[derive(Debug, thiserror::Error)]
pub enum InitError {
    #[error("ill-formed goal: {0}")]
    IllFormedGoal(String),
    #[error(transparent)]
    Step(#[from] StepError),
}

/// Goal statement: variables, assumptions and a conclusion.
#[derive(Clone, Debug)]
pub struct Goal {
    pub vars: Vec<(Name, Type)>,
    pub assumptions: Vec<Term>,
    pub conclusion: Term,
}

pub struct SearchState<'t> {
    pub theory: &'t Theory,
    pub steps: Vec<ProofStep>,
    pub items: Vec<Item>,
    pub table: RewriteTable,
    pub boxes: BoxRegistry,
    queue: BinaryHeap<Queued>,
    next_seq: u64,
    pub pulled: usize,
    pub trace: Vec<TraceRecord>,
    /// Boxes in which `False` has been derived.
    pub resolved: Vec<BoxSet>,
    /// Primitive boxes with standard induction enabled.
    pub induct: BTreeMap<u32, Name>,
    /// Fixed names for the skolem constant of given existentials.
    pub skolem_names: HashMap<Term, Name>,
    /// Every free variable name in use, with its type.
    pub names: BTreeMap<Name, Type>,
    by_tname: HashMap<Term, Vec<ItemId>>,
    seen_updates: HashSet<(String, Vec<ItemId>, Vec<String>)>,
    /// Pull index that produced each item.
    producer: Vec<usize>,
    /// Score of the update currently being processed.
    current_score: i64,
    pub outcome: Option<Outcome>,
}

impl<'t> SearchState<'t> {
    /// Box 0 holds the goal in contradiction form; one score-0 update
    /// carries its assumptions.
    pub fn init(goal: &Goal, theory: &'t Theory) -> Result<SearchState<'t>, InitError> {
        for t in goal.assumptions.iter().chain([&goal.conclusion]) {
            match t.type_of() {
                Ok(ty) if ty.is_bool() => {}
                _ => return Err(InitError::IllFormedGoal(format!("{t} is not a proposition"))),
            }
            if t.has_schematics() || t.has_loose_bound() {
                return Err(InitError::IllFormedGoal(format!("{t} is not closed")));
            }
        }
        let mut st = SearchState {
            theory,
            steps: steps::registry(theory)?,
            items: Vec::new(),
            table: RewriteTable::new(),
            boxes: BoxRegistry::new(),
            queue: BinaryHeap::new(),
            next_seq: 0,
            pulled: 0,
            trace: Vec::new(),
            resolved: Vec::new(),
            induct: BTreeMap::new(),
            skolem_names: HashMap::new(),
            names: goal.vars.iter().cloned().collect(),
            by_tname: HashMap::new(),
            seen_updates: HashSet::new(),
            producer: Vec::new(),
            current_score: 0,
            outcome: None,
        };
        for t in goal.assumptions.iter().chain([&goal.conclusion]) {
            let mut fr = BTreeSet::new();
            t.frees(&mut fr);
            for f in fr {
                if !st.names.contains_key(&f) {
                    return Err(InitError::IllFormedGoal(format!("undeclared variable {f}")));
                }
            }
        }
        let hyps = kernel::contradiction_form(theory, &goal.assumptions, &goal.conclusion);
        let prim = st
            .boxes
            .new_primitive(&BoxSet::empty(), hyps, goal.vars.clone())
            .map_err(|e| InitError::IllFormedGoal(e.to_string()))?;
        let payload = st.assumption_payload(prim);
        st.push(Update { step: "init".into(), inputs: vec![], payload, score: 0, seq: 0 });
        Ok(st)
    }

    pub fn kctx(&self) -> Ctx<'_> {
        Ctx { theory: self.theory, boxes: &self.boxes }
    }

    fn assumption_payload(&self, prim: u32) -> Vec<Payload> {
        let n = self.boxes.get(prim).map_or(0, |p| p.assumptions.len());
        (0..n)
            .filter_map(|idx| Justification::derive(self.kctx(), Rule::Assume { prim, idx }, vec![]).ok())
            .map(Payload::prop)
            .collect()
    }

    fn push(&mut self, mut u: Update) {
        u.seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Queued(u));
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    /// Increment of an update emitting `payload`.
    pub fn increment(&self, w: &Weights, payload: &[Payload]) -> i64 {
        let mut size = 0;
        let mut depth = 0;
        for p in payload {
            match p {
                Payload::Item { tname, cbox, .. } => {
                    size += term_size(tname);
                    depth = depth.max(self.boxes.depth_beyond_root(cbox));
                }
                Payload::NewBox { parent, assumptions } => {
                    size += assumptions.iter().map(term_size).sum::<usize>();
                    depth = depth.max(self.boxes.depth_beyond_root(parent) + 1);
                }
            }
        }
        w.base + w.size * size as i64 + w.depth * depth as i64
    }

    /// Score of an update whose inputs carry `sources`.
    pub fn score(&self, w: &Weights, sources: &[i64], payload: &[Payload]) -> i64 {
        sources.iter().copied().max().unwrap_or(0) + self.increment(w, payload)
    }

    /// Whether `b` lies at or below a box already resolved.
    pub fn is_dead(&self, b: &BoxSet) -> bool {
        self.resolved.iter().any(|r| self.boxes.leq(r, b))
    }

    /// Open a primitive box under `parent`; its assumptions arrive through
    /// a zero-increment update.
    pub fn create_box(&mut self, parent: &BoxSet, assumptions: Vec<Term>, vars: Vec<(Name, Type)>, step: &str) -> Option<u32> {
        let prim = self.boxes.new_primitive(parent, assumptions, vars).ok()?;
        self.table.ensure_context(&self.boxes, &BoxSet::single(prim));
        let payload = self.assumption_payload(prim);
        let score = self.current_score;
        self.push(Update { step: step.into(), inputs: vec![], payload, score, seq: 0 });
        Some(prim)
    }

    /// Queue a justified proposition at zero increment.
    pub fn add_fact(&mut self, j: Justification, step: &str) {
        let score = self.current_score;
        self.push(Update { step: step.into(), inputs: vec![], payload: vec![Payload::prop(j)], score, seq: 0 });
    }

    fn fresh_skolem(&self, hint: &str) -> Name {
        let base = hint.trim_end_matches('\'');
        (0..).map(|i| format!("{base}{i}")).find(|n| !self.names.contains_key(n.as_str())).unwrap().into()
    }

    fn duplicate(&self, kind: ItemKind, tname: &Term, cbox: &BoxSet) -> bool {
        let is_term = kind == ItemKind::Term;
        let hit = |t: &Term| {
            self.by_tname.get(t).is_some_and(|ids| {
                ids.iter().any(|&i| {
                    let it = &self.items[i];
                    (it.kind == ItemKind::Term) == is_term && self.boxes.leq(&it.cbox, cbox)
                })
            })
        };
        if hit(tname) {
            return true;
        }
        !is_term && self.table.class_in(cbox, tname).iter().any(|t| t != tname && hit(t))
    }

    /// Pull and process one update. Returns false when the run has ended.
    pub fn step_once(&mut self, cfg: &SearchConfig) -> bool {
        if self.outcome.is_some() {
            return false;
        }
        if self.pulled >= cfg.max_updates {
            self.outcome = Some(Outcome::Timeout);
            return false;
        }
        // Updates whose every payload lies in a resolved box are dropped
        // on the way out without counting as pulls.
        let u = loop {
            let Some(Queued(u)) = self.queue.pop() else {
                self.outcome = Some(Outcome::Saturated);
                return false;
            };
            let dead = u.payload.iter().all(|p| match p {
                Payload::Item { cbox, .. } => self.is_dead(cbox),
                Payload::NewBox { parent, .. } => self.is_dead(parent),
            });
            if !dead || u.payload.is_empty() {
                break u;
            }
        };
        let pull = self.pulled;
        self.pulled += 1;
        self.current_score = u.score;
        let mut rec = TraceRecord {
            seq: pull,
            score: u.score,
            step: u.step.clone(),
            inputs: u.inputs.clone(),
            payload: Vec::new(),
            cbox: String::new(),
            items: Vec::new(),
            edges: {
                let mut e: Vec<usize> = u.inputs.iter().map(|&i| self.producer[i]).collect();
                e.sort();
                e.dedup();
                e
            },
        };
        let mut new_items = Vec::new();
        let mut boxes_shown = BTreeSet::new();
        for p in u.payload {
            match p {
                Payload::NewBox { parent, assumptions } => {
                    let shown = assumptions.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(", ");
                    if self.is_dead(&parent) {
                        continue;
                    }
                    if let Some(prim) = self.create_box(&parent, assumptions, vec![], "assume") {
                        rec.payload.push(format!("new box {{{prim}}} assuming {shown}"));
                        boxes_shown.insert(BoxSet::single(prim).to_string());
                    }
                }
                Payload::Item { kind, tname, just, cbox } => {
                    rec.payload.push(match kind {
                        ItemKind::Term => format!("TERM {tname}"),
                        _ => tname.to_string(),
                    });
                    boxes_shown.insert(cbox.to_string());
                    let subs = if kind == ItemKind::Term || logic::is_false(&tname) { Vec::new() } else { subterms(&tname) };
                    if let Some(id) = self.insert(kind, tname, just, cbox.clone(), u.score, pull) {
                        rec.items.push(id);
                        new_items.push(id);
                        // Subterms of a new proposition arrive with it.
                        for t in subs.into_iter().filter(|t| !matches!(t, Term::Num(_)) && !logic::is_true(t) && !logic::is_false(t)) {
                            if let Some(tid) = self.insert(ItemKind::Term, t, None, cbox.clone(), u.score, pull) {
                                rec.items.push(tid);
                                new_items.push(tid);
                            }
                        }
                    }
                }
            }
        }
        rec.cbox = boxes_shown.into_iter().collect::<Vec<_>>().join(" ");
        self.trace.push(rec);
        for id in new_items {
            if self.outcome.is_some() {
                break;
            }
            self.after_insert(id, cfg);
        }
        self.outcome.is_none()
    }

    fn insert(&mut self, kind: ItemKind, tname: Term, just: Option<Justification>, cbox: BoxSet, score: i64, pull: usize) -> Option<ItemId> {
        if self.is_dead(&cbox) {
            return None;
        }
        self.table.ensure_context(&self.boxes, &cbox);
        self.table.register_term(&tname);
        if self.duplicate(kind, &tname, &cbox) {
            return None;
        }
        let kind = match kind {
            ItemKind::DisjActive if self.boxes.depth_beyond_root(&cbox) >= 2 => ItemKind::Disj,
            k => k,
        };
        let id = self.items.len();
        self.by_tname.entry(tname.clone()).or_default().push(id);
        self.items.push(Item { id, kind, tname, just, score, cbox, origin: pull });
        self.producer.push(pull);
        Some(id)
    }

    fn after_insert(&mut self, id: ItemId, cfg: &SearchConfig) {
        let item = self.items[id].clone();
        let Some(j) = item.just.clone() else {
            self.dispatch(&[id], cfg);
            return;
        };
        if logic::is_false(&item.tname) {
            self.handle_false(j);
            return;
        }
        if let Some((_, ty, _)) = logic::dest_exists(&item.tname) {
            let name = match self.skolem_names.get(&item.tname) {
                Some(n) if !self.names.contains_key(n) => n.clone(),
                _ => {
                    let hint = logic::dest_exists(&item.tname).unwrap().0.clone();
                    self.fresh_skolem(&hint)
                }
            };
            let ty = ty.clone();
            if let Ok(sk) = Justification::derive(self.kctx(), Rule::Skolem { name: name.clone() }, vec![j.clone()]) {
                self.names.insert(name, ty);
                let score = item.score;
                self.push(Update { step: "skolemize".into(), inputs: vec![id], payload: vec![Payload::prop(sk)], score, seq: 0 });
            }
        }
        let mut redo = vec![id];
        if let Some(rec) = EqualityRecord::new(j) {
            let touched = self.table.add_equality(&self.boxes, rec);
            if !touched.is_empty() {
                let terms: Vec<Term> = touched.iter().map(|&t| self.table.term(t).clone()).collect();
                for other in &self.items {
                    if other.id != id && !self.is_dead(&other.cbox) && terms.iter().any(|t| other.tname.contains(t)) {
                        redo.push(other.id);
                    }
                }
            }
        }
        self.dispatch(&redo, cfg);
    }

    fn handle_false(&mut self, j: Justification) {
        let j = kernel::discharge_skolems(self.kctx(), j);
        let b = j.cbox().clone();
        match boxes::resolve(&self.boxes, &b, &j) {
            Resolution::Proved(j) | Resolution::Inconsistent(j) => {
                self.resolved.push(b);
                self.outcome = Some(Outcome::Proved(j));
            }
            Resolution::Exports(ex) => {
                self.resolved.push(b);
                let payload: Vec<Payload> = ex.into_iter().map(|(j, _)| Payload::prop(j)).collect();
                let score = self.current_score;
                self.push(Update { step: "resolve".into(), inputs: vec![], payload, score, seq: 0 });
            }
        }
    }

    /// Run every step on the given items, alone and paired with all live
    /// items, and queue the emitted updates.
    fn dispatch(&mut self, ids: &[ItemId], cfg: &SearchConfig) {
        let live: Vec<ItemId> = self.items.iter().filter(|i| !self.is_dead(&i.cbox)).map(|i| i.id).collect();
        let mut tasks: Vec<(usize, ItemId, Option<ItemId>)> = Vec::new();
        for &x in ids {
            for (si, s) in self.steps.iter().enumerate() {
                tasks.push((si, x, None));
                if s.arity == 1 {
                    continue;
                }
                for &y in &live {
                    if y == x {
                        continue;
                    }
                    if s.may_lead(&self.items[x]) {
                        tasks.push((si, x, Some(y)));
                    }
                    if s.may_lead(&self.items[y]) {
                        tasks.push((si, y, Some(x)));
                    }
                }
            }
        }
        tasks.sort();
        tasks.dedup();
        let env = Env { kctx: self.kctx(), table: &self.table, induct: &self.induct };
        let (steps, items) = (&self.steps, &self.items);
        let results: Vec<(usize, Vec<Emit>)> = par::map(&tasks, cfg.parallel, |&(si, x, y)| {
            let s = &steps[si];
            let out = match y {
                None => s.unary(&env, &items[x]),
                Some(y) => s.binary(&env, &items[x], &items[y]),
            };
            (si, out)
        });
        for (si, emits) in results {
            for e in emits {
                self.enqueue(si, e, &cfg.weights);
            }
        }
    }

    fn enqueue(&mut self, si: usize, e: Emit, w: &Weights) {
        let step = self.steps[si].name.clone();
        let key: Vec<String> = e
            .payload
            .iter()
            .map(|p| match p {
                Payload::Item { tname, cbox, kind, .. } => format!("{kind:?} {tname} {cbox}"),
                Payload::NewBox { parent, assumptions } => format!("box {parent} {assumptions:?}"),
            })
            .collect();
        if !self.seen_updates.insert((step.clone(), e.inputs.clone(), key)) {
            return;
        }
        let payload: Vec<Payload> = e
            .payload
            .into_iter()
            .filter(|p| match p {
                Payload::Item { kind, tname, cbox, .. } => {
                    let trivial = logic::dest_eq(tname).is_some_and(|(l, r)| l == r);
                    !trivial && !self.is_dead(cbox) && !self.duplicate(*kind, tname, cbox)
                }
                Payload::NewBox { parent, .. } => !self.is_dead(parent),
            })
            .collect();
        if payload.is_empty() {
            return;
        }
        let sources: Vec<i64> = e.inputs.iter().map(|&i| self.items[i].score).collect();
        let score = self.score(w, &sources, &payload);
        self.push(Update { step, inputs: e.inputs, payload, score, seq: 0 });
    }

    /// Run to completion.
    pub fn run(&mut self, cfg: &SearchConfig) -> Outcome {
        while self.step_once(cfg) {}
        self.outcome.clone().unwrap()
    }

    pub fn trace_text(&self) -> String {
        let mut s = String::new();
        for r in &self.trace {
            s.push_str(&r.render());
            s.push('\n');
        }
        s
    }

    pub fn trace_json(&self) -> String {
        let mut s = String::new();
        for r in &self.trace {
            s.push_str(&serde_json::to_string(r).expect("trace records serialize"));
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prop(name: &str) -> Term {
        Term::free(name, Type::bool())
    }

    fn goal(assumptions: Vec<Term>, conclusion: Term, vars: &[&str]) -> Goal {
        Goal { vars: vars.iter().map(|v| (Name::from(*v), Type::bool())).collect(), assumptions, conclusion }
    }

    #[test]
    fn a_implies_a() {
        let th = Theory::empty();
        let mut st = SearchState::init(&goal(vec![prop("A")], prop("A"), &["A"]), &th).unwrap();
        let out = st.run(&SearchConfig::default());
        assert!(matches!(out, Outcome::Proved(_)));
        assert!(st.pulled <= 2);
    }

    #[test]
    fn a_implies_b_saturates() {
        let th = Theory::empty();
        let mut st = SearchState::init(&goal(vec![prop("A")], prop("B"), &["A", "B"]), &th).unwrap();
        assert!(matches!(st.run(&SearchConfig::default()), Outcome::Saturated));
    }

    #[test]
    fn timeout_counts_pulls() {
        let th = Theory::empty();
        let mut st = SearchState::init(&goal(vec![prop("A")], prop("B"), &["A", "B"]), &th).unwrap();
        let cfg = SearchConfig { max_updates: 1, ..Default::default() };
        assert!(matches!(st.run(&cfg), Outcome::Timeout));
        assert_eq!(st.pulled, 1);
        assert_eq!(st.trace.len(), 1);
    }

    #[test]
    fn undeclared_variable_rejected() {
        let th = Theory::empty();
        assert!(SearchState::init(&goal(vec![prop("A")], prop("B"), &["A"]), &th).is_err());
    }

    #[test]
    fn init_places_negated_goal_in_box_zero() {
        let th = Theory::empty();
        let st = SearchState::init(&goal(vec![], prop("C"), &["C"]), &th).unwrap();
        assert_eq!(st.boxes.len(), 1);
        assert_eq!(st.boxes.get(0).unwrap().assumptions, vec![logic::neg(&prop("C"))]);
        assert_eq!(st.queue_len(), 1);
    }

    #[test]
    fn empty_run_leaves_one_record() {
        let th = Theory::empty();
        let mut st = SearchState::init(&goal(vec![], prop("C"), &["C"]), &th).unwrap();
        assert!(matches!(st.run(&SearchConfig::default()), Outcome::Saturated));
        assert_eq!(st.trace.len(), 1);
        assert_eq!(st.trace[0].step, "init");
        assert_eq!(st.trace[0].score, 0);
    }

    #[test]
    fn skolem_constants_are_fresh() {
        let th = Theory::builtin_nat();
        let tm = |s: &str| crate::syntax::parse_term(&th.sig, &Default::default(), s).unwrap();
        let g = Goal { vars: vec![], assumptions: vec![tm("(exists (x nat) (= x x))"), tm("(exists (x nat) (< x 3))")], conclusion: tm("False") };
        let mut st = SearchState::init(&g, &th).unwrap();
        st.run(&SearchConfig { max_updates: 50, ..Default::default() });
        let shown: Vec<String> = st.items.iter().map(|i| i.tname.to_string()).collect();
        assert!(st.names.contains_key("x0") && st.names.contains_key("x1"));
        assert!(shown.iter().any(|t| t == "(< x1 3)" || t == "(< x0 3)"), "{shown:?}");
    }

    #[test]
    fn trace_edges_point_backwards() {
        let th = Theory::builtin_nat();
        let tm = |s: &str| crate::syntax::parse_term(&th.sig, &[("p".into(), Type::nat())].into_iter().collect(), s).unwrap();
        let g = Goal { vars: vec![("p".into(), Type::nat())], assumptions: vec![tm("(prime p)"), tm("(> p 2)")], conclusion: tm("(odd p)") };
        let g = Goal { conclusion: th.unfold(&g.conclusion), ..g };
        let mut st = SearchState::init(&g, &th).unwrap();
        assert!(matches!(st.run(&SearchConfig::default()), Outcome::Proved(_)));
        let case = st.trace.iter().find(|r| r.step == "disj_case").unwrap();
        assert_eq!(case.cbox, "{1}");
        for r in &st.trace {
            assert!(r.edges.iter().all(|&e| e < r.seq), "{}", r.render());
            assert!(r.inputs.iter().all(|&i| r.edges.iter().any(|&e| st.trace[e].items.contains(&i))));
        }
    }
}
