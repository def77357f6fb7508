mod common;

use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn partitions_match_naive_closure(inst in common::cc_instance()) {
        common::check_cc(&inst).map_err(TestCaseError::fail)?;
    }
}
