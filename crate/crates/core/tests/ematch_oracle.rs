mod common;

use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn ematch_covers_brute_force(inst in common::em_instance()) {
        common::check_ematch(&inst).map_err(TestCaseError::fail)?;
    }
}
