mod common;

use boxprove::search::{Outcome, SearchConfig};

/// The full trace of prime_odd is frozen; any change to scoring, step
/// order or rendering shows up here first.
#[test]
fn prime_odd_trace_is_frozen() {
    let (p, th) = common::load("prime_odd.prob");
    let (st, out) = common::run(&p, &th, &SearchConfig::default(), true);
    assert!(matches!(out, Outcome::Proved(_)));
    let expected = include_str!("golden/prime_odd.out");
    let got = format!("{}PROVED in {} updates\n", st.trace_text(), st.pulled);
    assert_eq!(got, expected);
}

#[test]
fn larger_prime_needs_its_script() {
    let (p, th) = common::load("larger_prime.prob");
    let (st, out) = common::run(&p, &th, &SearchConfig::default(), true);
    assert!(matches!(out, Outcome::Proved(_)), "{}", out.name());
    assert!(st.trace.iter().any(|r| r.step == "CHOOSE"));
    let (_, bare) = common::run(&p, &th, &SearchConfig::default(), false);
    assert!(matches!(bare, Outcome::Saturated | Outcome::Timeout));
}
