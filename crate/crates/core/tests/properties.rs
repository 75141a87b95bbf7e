mod support;

use support::props;

fn check(p: fn() -> Result<u32, String>) {
    if let Err(e) = p() {
        panic!("{e}");
    }
}

#[test]
fn kernels_shrink_as_the_horizon_grows() {
    check(props::kernels_shrink_as_the_horizon_grows);
}

#[test]
fn kernels_grow_with_epsilon() {
    check(props::kernels_grow_with_epsilon);
}

#[test]
fn complexity_is_nondecreasing_in_n() {
    check(props::complexity_is_nondecreasing_in_n);
}

#[test]
fn certificates_replay_bit_for_bit() {
    check(props::certificates_replay_bit_for_bit);
}

#[test]
fn certificates_and_refutations_never_coexist() {
    check(props::certificates_and_refutations_never_coexist);
}
