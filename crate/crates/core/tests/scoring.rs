use boxprove::boxes::BoxSet;
use boxprove::search::{Goal, ItemKind, SearchState, Weights};
use boxprove::steps::Payload;
use boxprove::term::{logic, term_size, Term, Type};
use boxprove::theory::Theory;

fn item(t: &Term, b: BoxSet) -> Payload {
    Payload::Item { kind: ItemKind::Prop, tname: t.clone(), just: None, cbox: b }
}

#[test]
fn worked_score_and_depth_penalty() {
    let th = Theory::builtin_nat();
    let (p, q) = (Term::free("p", Type::nat()), Term::free("q", Type::nat()));
    let goal = Goal { vars: vec![("p".into(), Type::nat()), ("q".into(), Type::nat())], assumptions: vec![], conclusion: logic::mk_true() };
    let mut st = SearchState::init(&goal, &th).unwrap();
    let t = logic::neg(&logic::mk_eq(p.clone(), q.clone()));
    assert_eq!(term_size(&t), 7);
    let w = Weights::default();
    assert_eq!(st.score(&w, &[0, 3], &[item(&t, BoxSet::single(0))]), 11);

    let b1 = st.create_box(&BoxSet::single(0), vec![logic::mk_eq(p.clone(), q.clone())], vec![], "test").unwrap();
    let b2 = st.create_box(&BoxSet::single(b1), vec![logic::mk_eq(q, p)], vec![], "test").unwrap();
    let s0 = st.score(&w, &[0, 3], &[item(&t, BoxSet::single(0))]);
    let s1 = st.score(&w, &[0, 3], &[item(&t, BoxSet::single(b1))]);
    let s2 = st.score(&w, &[0, 3], &[item(&t, BoxSet::single(b2))]);
    assert!(s0 < s1 && s1 < s2, "{s0} {s1} {s2}");
    assert_eq!(s1 - s0, w.depth);

    let custom = Weights { base: 2, size: 0, depth: 1 };
    assert_eq!(st.score(&custom, &[5], &[item(&t, BoxSet::single(b2))]), 5 + 2 + 2);
}
