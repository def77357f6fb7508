mod common;

use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn lattice_laws((reg, sets) in common::box_world()) {
        common::check_box_laws(&reg, &sets).map_err(TestCaseError::fail)?;
    }
}
