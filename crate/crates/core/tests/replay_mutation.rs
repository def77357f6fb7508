mod common;

use boxprove::kernel::{self, Ctx};
use boxprove::search::{Outcome, SearchConfig};

#[test]
fn proof_replays_and_mutants_are_rejected() {
    let (p, th) = common::load("prime_odd.prob");
    let (st, out) = common::run(&p, &th, &SearchConfig::default(), true);
    let Outcome::Proved(proof) = out else { panic!("not proved") };
    let ctx = Ctx { theory: &th, boxes: &st.boxes };
    kernel::replay_checked(ctx, &proof, true).unwrap();
    let rejected = common::mutation_rejections(ctx, &proof, 200, 7);
    assert!(rejected >= 190, "only {rejected}/200 mutants rejected");
}

#[test]
fn forged_conclusion_is_rejected() {
    let (p, th) = common::load("prime_odd.prob");
    let (st, out) = common::run(&p, &th, &SearchConfig::default(), true);
    let Outcome::Proved(proof) = out else { panic!("not proved") };
    let ctx = Ctx { theory: &th, boxes: &st.boxes };
    let bogus = kernel::Justification::forge(
        proof.rule().clone(),
        proof.premises().to_vec(),
        boxprove::term::logic::mk_true(),
        proof.cbox().clone(),
    );
    assert!(!kernel::replay(ctx, &bogus));
}
