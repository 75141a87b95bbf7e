mod support;

use support::oracles;

#[test]
fn min_cover_matches_exhaustive_search() {
    oracles::min_cover_matches_exhaustive_search();
}

#[test]
fn kernel_rows_match_direct_recomputation() {
    oracles::kernel_rows_match_direct_recomputation();
}

#[test]
fn mean_profile_satisfies_its_recurrence_exactly() {
    oracles::mean_profile_satisfies_its_recurrence_exactly();
}
