//! Shared generators and brute-force oracles for the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;

use proptest::prelude::*;
use proptest::sample::Index;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use boxprove::boxes::{BoxRegistry, BoxSet};
use boxprove::kernel::{self, Ctx, Justification, Rule};
use boxprove::rewrite::{EqualityRecord, RewriteTable};
use boxprove::term::{logic, Pattern, Term, Type};
use boxprove::theory::Theory;

pub fn problem(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("problems").join(name)
}

pub fn theory_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("theories").join(name)
}

/// Draw `n` values from a strategy with a fixed seed.
pub fn sample<S: Strategy>(s: S, n: usize, seed: u8) -> Vec<S::Value> {
    let rng = TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]);
    let mut runner = TestRunner::new_with_rng(Config::default(), rng);
    (0..n).map(|_| s.new_tree(&mut runner).expect("strategy").current()).collect()
}

// ---- terms over a, b, c, d : nat; f : nat => nat; g : nat => nat => nat

fn nat() -> Type {
    Type::nat()
}

fn f_const() -> Term {
    Term::cnst("f", Type::fun(nat(), nat()))
}

fn g_const() -> Term {
    Term::cnst("g", Type::curried(&[nat(), nat()], nat()))
}

pub fn theory() -> Theory {
    let mut th = Theory::builtin_nat();
    th.extend_from_str("test", "(const f (=> nat nat))\n(const g (=> nat nat nat))").unwrap();
    th
}

fn tree(leaf: BoxedStrategy<Term>) -> impl Strategy<Value = Term> {
    leaf.prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|x| Term::app(f_const(), x)),
            (inner.clone(), inner).prop_map(|(x, y)| Term::apps(g_const(), [x, y])),
        ]
    })
}

pub fn ground_term() -> impl Strategy<Value = Term> {
    tree(prop::sample::select(vec!["a", "b", "c", "d"]).prop_map(|n| Term::free(n, nat())).boxed())
}

pub fn pattern_term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        2 => prop::sample::select(vec!["x", "y"]).prop_map(|n| Term::var(n, nat())),
        1 => prop::sample::select(vec!["a", "b"]).prop_map(|n| Term::free(n, nat())),
    ];
    tree(leaf.boxed())
}

/// Ground terms plus equalities assigned to primitive boxes 0..4, where
/// 1 and 2 sit under 0 and 3 sits under 1.
#[derive(Clone, Debug)]
pub struct CcInstance {
    pub pool: Vec<Term>,
    pub eqs: Vec<(Term, Term, u32)>,
    /// Which probe boxes get a context before the equalities arrive.
    pub early: Vec<bool>,
}

pub fn cc_instance() -> impl Strategy<Value = CcInstance> {
    (
        prop::collection::vec(ground_term(), 3..7),
        prop::collection::vec((any::<Index>(), any::<Index>(), 0u32..4), 1..7),
        prop::collection::vec(any::<bool>(), PROBES.len()),
    )
        .prop_map(|(pool, picks, early)| {
            let eqs = picks.iter().map(|(i, j, b)| (i.get(&pool).clone(), j.get(&pool).clone(), *b)).collect();
            CcInstance { pool, eqs, early }
        })
}

const PROBES: [&[u32]; 6] = [&[0], &[1], &[2], &[3], &[1, 2], &[2, 3]];

pub struct Built {
    pub th: Theory,
    pub reg: BoxRegistry,
    pub tbl: RewriteTable,
    pub probes: Vec<BoxSet>,
}

impl Built {
    pub fn ctx(&self) -> Ctx<'_> {
        Ctx { theory: &self.th, boxes: &self.reg }
    }
}

pub fn build(inst: &CcInstance, extra: &[Term]) -> Built {
    let th = theory();
    let mut reg = BoxRegistry::new();
    let parents = [BoxSet::empty(), BoxSet::single(0), BoxSet::single(0), BoxSet::single(1)];
    for (p, parent) in parents.iter().enumerate() {
        let mut hs: Vec<Term> =
            inst.eqs.iter().filter(|e| e.2 == p as u32).map(|(l, r, _)| logic::mk_eq(l.clone(), r.clone())).collect();
        if hs.is_empty() {
            hs.push(logic::mk_true());
        }
        reg.new_primitive(parent, hs, vec![]).unwrap();
    }
    let probes: Vec<BoxSet> = PROBES.iter().map(|p| reg.canonical(p.iter().copied())).collect();
    let mut tbl = RewriteTable::new();
    for (b, &e) in probes.iter().zip(&inst.early) {
        if e {
            tbl.ensure_context(&reg, b);
        }
    }
    for t in inst.pool.iter().chain(extra) {
        tbl.register_term(t);
    }
    {
        let ctx = Ctx { theory: &th, boxes: &reg };
        for p in 0..4u32 {
            let n = reg.get(p).unwrap().assumptions.len();
            for idx in 0..n {
                let j = Justification::derive(ctx, Rule::Assume { prim: p, idx }, vec![]).unwrap();
                if let Some(rec) = EqualityRecord::new(j) {
                    tbl.add_equality(&reg, rec);
                }
            }
        }
    }
    for b in &probes {
        tbl.ensure_context(&reg, b);
    }
    Built { th, reg, tbl, probes }
}

fn subterms(t: &Term, out: &mut BTreeSet<Term>) {
    if out.insert(t.clone()) {
        if let Term::App(f, x) = t {
            subterms(f, out);
            subterms(x, out);
        }
    }
}

/// Naive congruence closure over a fixed finite universe.
pub struct NaiveCc {
    ids: HashMap<Term, usize>,
    terms: Vec<Term>,
    parent: Vec<usize>,
}

impl NaiveCc {
    pub fn new<'a>(universe: impl IntoIterator<Item = &'a Term>, eqs: &[(Term, Term)]) -> NaiveCc {
        let mut all = BTreeSet::new();
        for t in universe {
            subterms(t, &mut all);
        }
        for (l, r) in eqs {
            subterms(l, &mut all);
            subterms(r, &mut all);
        }
        let terms: Vec<Term> = all.into_iter().collect();
        let ids = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        let mut cc = NaiveCc { ids, parent: (0..terms.len()).collect(), terms };
        for (l, r) in eqs {
            let (a, b) = (cc.ids[l], cc.ids[r]);
            cc.union(a, b);
        }
        loop {
            let mut sig: HashMap<(usize, usize), usize> = HashMap::new();
            let mut changed = false;
            for i in 0..cc.terms.len() {
                if let Term::App(f, x) = &cc.terms[i] {
                    let key = (cc.find(cc.ids[&**f]), cc.find(cc.ids[&**x]));
                    match sig.get(&key) {
                        Some(&j) if cc.find(j) != cc.find(i) => {
                            cc.union(i, j);
                            changed = true;
                        }
                        Some(_) => {}
                        None => {
                            sig.insert(key, i);
                        }
                    }
                }
            }
            if !changed {
                return cc;
            }
        }
    }

    fn find(&self, mut i: usize) -> usize {
        while self.parent[i] != i {
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.parent[a.max(b)] = a.min(b);
        }
    }

    pub fn equal(&self, a: &Term, b: &Term) -> bool {
        a == b || matches!((self.ids.get(a), self.ids.get(b)), (Some(&x), Some(&y)) if self.find(x) == self.find(y))
    }

    /// Classes of two or more non-function terms among `keep`, sorted.
    pub fn partition(&self, keep: &BTreeSet<Term>) -> Vec<Vec<Term>> {
        let mut groups: BTreeMap<usize, Vec<Term>> = BTreeMap::new();
        for t in keep {
            if let Some(&i) = self.ids.get(t) {
                groups.entry(self.find(i)).or_default().push(t.clone());
            }
        }
        normalize(groups.into_values().collect())
    }
}

fn normalize(mut v: Vec<Vec<Term>>) -> Vec<Vec<Term>> {
    for g in &mut v {
        g.sort();
    }
    v.retain(|g| g.len() > 1);
    v.sort();
    v
}

fn is_value(t: &Term) -> bool {
    t.type_of().is_ok_and(|ty| !ty.is_fun())
}

/// Equalities visible in box `b`.
pub fn visible(inst: &CcInstance, reg: &BoxRegistry, b: &BoxSet) -> Vec<(Term, Term)> {
    inst.eqs.iter().filter(|e| reg.leq(&BoxSet::single(e.2), b)).map(|(l, r, _)| (l.clone(), r.clone())).collect()
}

/// Compare per-box partitions of the table with the naive closure.
pub fn check_cc(inst: &CcInstance) -> Result<(), String> {
    let built = build(inst, &[]);
    let mut universe = BTreeSet::new();
    for t in &inst.pool {
        subterms(t, &mut universe);
    }
    for (l, r, _) in &inst.eqs {
        subterms(l, &mut universe);
        subterms(r, &mut universe);
    }
    universe.retain(is_value);
    for b in &built.probes {
        let oracle = NaiveCc::new(&universe, &visible(inst, &built.reg, b)).partition(&universe);
        let got = built.tbl.classes(b).ok_or_else(|| format!("no context for {b}"))?;
        let got = normalize(got.into_iter().map(|g| g.into_iter().filter(|t| universe.contains(t)).collect()).collect());
        if got != oracle {
            return Err(format!("box {b}: table {got:?} oracle {oracle:?}"));
        }
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct EmInstance {
    pub cc: CcInstance,
    pub pattern: Term,
    pub target: Term,
}

pub fn em_instance() -> impl Strategy<Value = EmInstance> {
    (cc_instance(), pattern_term(), any::<Index>()).prop_map(|(cc, pattern, i)| {
        let target = i.get(&cc.pool).clone();
        EmInstance { cc, pattern, target }
    })
}

fn schem_names(p: &Term) -> Vec<String> {
    let mut s = BTreeSet::new();
    p.schematics(&mut s);
    s.into_iter().map(|n| n.to_string()).collect()
}

fn apply(p: &Term, s: &BTreeMap<String, Term>) -> Term {
    match p {
        Term::Schematic(n, ..) => s[&n.to_string()].clone(),
        Term::App(f, x) => Term::app(apply(f, s), apply(x, s)),
        t => t.clone(),
    }
}

/// Statistics of one e-matching comparison.
#[derive(Default, Debug)]
pub struct EmStats {
    pub oracle: usize,
    pub extra: usize,
}

/// Every brute-force match must be covered (modulo equivalence, in a box
/// no larger) by an e-matching result; every result must replay and hold
/// in its box.
pub fn check_ematch(inst: &EmInstance) -> Result<EmStats, String> {
    let built = build(&inst.cc, &[]);
    let ctx = built.ctx();
    let results = built.tbl.ematch(ctx, &Pattern::new(inst.pattern.clone()), &inst.target);
    let mut values = BTreeSet::new();
    for t in inst.cc.pool.iter().chain(inst.cc.eqs.iter().flat_map(|e| [&e.0, &e.1])) {
        subterms(t, &mut values);
    }
    values.retain(is_value);
    let values: Vec<Term> = values.into_iter().collect();
    let vars = schem_names(&inst.pattern);
    let mut sigmas: Vec<BTreeMap<String, Term>> = vec![BTreeMap::new()];
    for v in &vars {
        sigmas = sigmas
            .into_iter()
            .flat_map(|s| {
                values.iter().map(move |t| {
                    let mut s2 = s.clone();
                    s2.insert(v.clone(), t.clone());
                    s2
                })
            })
            .collect();
    }
    let instances: Vec<Term> = sigmas.iter().map(|s| apply(&inst.pattern, s)).collect();
    let mut stats = EmStats::default();
    let mut covered = vec![false; results.len()];
    let mut boxes = built.probes.clone();
    boxes.push(BoxSet::empty());
    for b in &boxes {
        let cc = NaiveCc::new(values.iter().chain(&instances), &visible(&inst.cc, &built.reg, b));
        for (s, ps) in sigmas.iter().zip(&instances) {
            if !cc.equal(ps, &inst.target) {
                continue;
            }
            stats.oracle += 1;
            let hit = results.iter().position(|r| {
                built.reg.leq(&r.cbox, b) && vars.iter().all(|v| cc.equal(&r.subst[v.as_str()], &s[v]))
            });
            match hit {
                Some(k) => covered[k] = true,
                None => return Err(format!("box {b}: missing match {s:?} of {} against {}", inst.pattern, inst.target)),
            }
        }
    }
    for (r, c) in results.iter().zip(&covered) {
        let s: BTreeMap<String, Term> = r.subst.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
        let inst_p = apply(&inst.pattern, &s);
        if r.eq_just.concl() != &logic::mk_eq(inst.target.clone(), inst_p.clone()) {
            return Err(format!("result proves {} instead", r.eq_just.concl()));
        }
        if let Err(e) = kernel::replay_checked(ctx, &r.eq_just, true) {
            return Err(format!("result {:?} does not replay: {e}", r.subst));
        }
        let cc = NaiveCc::new(values.iter().chain([&inst_p]), &visible(&inst.cc, &built.reg, &r.cbox));
        if !cc.equal(&inst_p, &inst.target) {
            return Err(format!("unsound result {:?} in {}", r.subst, r.cbox));
        }
        if !c {
            stats.extra += 1;
        }
    }
    Ok(stats)
}

// ---- full runs

use boxprove::problem::Problem;
use boxprove::search::{Outcome, SearchConfig, SearchState};

pub fn load(name: &str) -> (Problem, Theory) {
    let p = Problem::read(&problem(name)).unwrap();
    let th = p.theory(Theory::builtin_nat()).unwrap();
    (p, th)
}

/// Run a problem under its script (when `scripted`) with default settings.
pub fn run<'t>(p: &Problem, th: &'t Theory, cfg: &SearchConfig, scripted: bool) -> (SearchState<'t>, Outcome) {
    let g = p.goal(th).unwrap();
    let mut st = SearchState::init(&g, th).unwrap();
    let script = if scripted { p.script.as_deref().and_then(|s| boxprove::script::parse(s).unwrap()) } else { None };
    let mut it = boxprove::script::Interpreter::new(script);
    let out = boxprove::script::run(&mut st, cfg, &mut it);
    (st, out)
}

fn nodes(j: &Justification, path: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, Justification)>) {
    out.push((path.clone(), j.clone()));
    for (k, p) in j.premises().iter().enumerate() {
        path.push(k);
        nodes(p, path, out);
        path.pop();
    }
}

fn replace_at(j: &Justification, path: &[usize], with: &Justification) -> Justification {
    let mut prem = j.premises().to_vec();
    prem[path[0]] = if path.len() == 1 { with.clone() } else { replace_at(&prem[path[0]], &path[1..], with) };
    Justification::forge(j.rule().clone(), prem, j.concl().clone(), j.cbox().clone())
}

/// Redirect `n` random premise edges of `proof` to other nodes of the same
/// derivation; returns how many mutants replay rejects.
pub fn mutation_rejections(ctx: Ctx<'_>, proof: &Justification, n: usize, seed: u64) -> usize {
    use rand::{rngs::StdRng, Rng, SeedableRng};
    let mut all = Vec::new();
    nodes(proof, &mut Vec::new(), &mut all);
    let edges: Vec<&Vec<usize>> = all.iter().map(|(p, _)| p).filter(|p| !p.is_empty()).collect();
    let mut rng = StdRng::seed_from_u64(seed);
    let mut rejected = 0;
    for _ in 0..n {
        let path = edges[rng.gen_range(0..edges.len())];
        let old = &all.iter().find(|(p, _)| p == path).unwrap().1;
        let with = loop {
            let cand = &all[rng.gen_range(0..all.len())].1;
            if cand != old {
                break cand;
            }
        };
        if !kernel::replay(ctx, &replace_at(proof, path, with)) {
            rejected += 1;
        }
    }
    rejected
}

// ---- box lattice

/// A registry of up to eight primitives, each parent a subset of the
/// earlier ones, with three box sets drawn from it.
pub fn box_world() -> impl Strategy<Value = (BoxRegistry, [BoxSet; 3])> {
    (1usize..9, prop::collection::vec(any::<u8>(), 8), prop::array::uniform3(any::<u8>())).prop_map(|(n, parents, sets)| {
        let mut reg = BoxRegistry::new();
        for (i, mask) in parents.iter().take(n).enumerate() {
            let parent = reg.canonical((0..i as u32).filter(|j| mask & (1 << j) != 0));
            reg.new_primitive(&parent, vec![logic::mk_true()], vec![]).unwrap();
        }
        let pick = |m: u8| reg.canonical((0..n as u32).filter(|j| m & (1 << j) != 0));
        let sets = [pick(sets[0]), pick(sets[1]), pick(sets[2])];
        (reg, sets)
    })
}

macro_rules! law {
    ($cond:expr, $($fmt:tt)*) => {
        if !$cond {
            return Err(format!($($fmt)*));
        }
    };
}

/// Join, order and export laws of the box lattice on one world.
pub fn check_box_laws(reg: &BoxRegistry, [a, b, c]: &[BoxSet; 3]) -> Result<(), String> {
    let e = BoxSet::empty();
    let ab = reg.merge(a, b);
    law!(ab == reg.merge(b, a), "merge not commutative on {a} {b}");
    law!(reg.merge(&ab, c) == reg.merge(a, &reg.merge(b, c)), "merge not associative on {a} {b} {c}");
    law!(&reg.merge(a, a) == a && &reg.merge(a, &e) == a, "merge not idempotent or unital on {a}");
    law!(reg.leq(a, &ab) && reg.leq(b, &ab), "{ab} not an upper bound of {a} {b}");
    law!(reg.leq(&ab, c) == (reg.leq(a, c) && reg.leq(b, c)), "{ab} not the least upper bound below {c}");
    let (ca, cb) = (reg.closure(a).unwrap(), reg.closure(b).unwrap());
    law!(reg.leq(a, b) == ca.is_subset(&cb), "leq disagrees with closure inclusion on {a} {b}");
    law!(!(reg.leq(a, b) && reg.leq(b, c)) || reg.leq(a, c), "leq not transitive on {a} {b} {c}");
    law!(!(reg.leq(a, b) && reg.leq(b, a)) || a == b, "leq not antisymmetric on {a} {b}");
    law!(!reg.leq(a, b) || reg.depth_beyond_root(a) <= reg.depth_beyond_root(b), "depth not monotone on {a} {b}");
    for &i in a.members() {
        for &j in a.members() {
            law!(i == j || !reg.closure(&BoxSet::single(j)).unwrap().contains(i), "{a} not an antichain");
        }
        let t = reg.export_target(a, i);
        law!(reg.leq(&t, a) && !reg.closure(&t).unwrap().contains(i), "bad export target {t} of {i} in {a}");
    }
    law!(&reg.parse_box(&a.to_string()).unwrap() == a, "{a} does not round-trip");
    Ok(())
}
