use ivl_core::dynamics::{q, ControlSchedule, Scalar, StatePoint, SymbolicPoint};
use ivl_core::examples::{build_example, BlockCode, ExampleId};
use ivl_core::metrics::{distances, exception_density, exception_set, limsup_mean_estimate, mean_profile, upper_density_estimate, TargetSet};

fn real(n: i64, d: i64) -> StatePoint {
    StatePoint::real(q(n, d))
}

fn a2_schedule(n: usize) -> ControlSchedule {
    let mut front = vec![0u8; n];
    front.push(2);
    ControlSchedule::splice(&front, &ControlSchedule::constant(0))
}

#[test]
fn interval_distances() {
    let q4 = TargetSet::interval(q(0, 1), q(1, 4)).unwrap();
    assert_eq!(q4.dist(&real(1, 2)).unwrap(), Scalar::exact(q(1, 4)));
    assert_eq!(q4.dist(&real(1, 8)).unwrap(), Scalar::exact(q(0, 1)));
    let q1 = TargetSet::interval(q(1, 4), q(1, 2)).unwrap();
    assert!(!q1.in_neighborhood(&real(1, 1), &q(1, 8)).unwrap());
    assert!(q1.in_neighborhood(&real(1, 1), &q(6, 10)).unwrap());
    assert!(q1.in_neighborhood(&real(3, 8), &q(1, 1000)).unwrap());
}

#[test]
fn block_language_distances() {
    let ex = build_example(ExampleId::A3_FEIM_not_FEI).unwrap();
    let b = StatePoint::Symbolic(SymbolicPoint::periodic(b"b").unwrap());
    assert_eq!(ex.target.dist(&b).unwrap(), Scalar::exact(q(1, 1)));
    let ab_b = StatePoint::Symbolic(SymbolicPoint::new(b"ab", b"b").unwrap());
    assert_eq!(ex.target.dist(&ab_b).unwrap(), Scalar::exact(q(1, 3)));
    let inside = StatePoint::Symbolic(BlockCode::default().point(&[0, 1], &[1, 0]).unwrap());
    assert!(ex.target.contains(&inside).unwrap());
}

#[test]
fn a2_running_mean_peaks_after_the_excursion() {
    let ex = build_example(ExampleId::A2_EIM_not_EI).unwrap();
    let n = 20;
    let p = mean_profile(&ex.system, &real(3, 8), &a2_schedule(n), &ex.target, 60).unwrap();
    // State index n+1 is 1, at distance 1/2; the first mean that sees it has n+2 terms.
    let peak = Scalar::exact(q(1, 2 * (n as i64 + 2)));
    assert_eq!(p.mean(n + 1), &Scalar::exact(q(0, 1)));
    assert_eq!(p.mean(n + 2), &peak);
    assert_eq!(p.running_max.last().unwrap(), &peak);
    assert!((n + 3..=60).all(|k| p.mean(k).lt_q(&q(1, 2 * (n as i64 + 2))).unwrap()));
}

#[test]
fn a4_two_step_mean_at_zero() {
    let ex = build_example(ExampleId::A4_FMEI_not_FEIM_MEI).unwrap();
    let p = mean_profile(&ex.system, &real(0, 1), &ControlSchedule::constant(0), &ex.target, 2).unwrap();
    assert_eq!(p.mean(2), &Scalar::exact(q(1, 8)));
}

#[test]
fn orbit_inside_q_has_zero_means() {
    let ex = build_example(ExampleId::A1_FEI_not_EI).unwrap();
    let p = mean_profile(&ex.system, &real(5, 16), &ControlSchedule::constant(0), &ex.target, 30).unwrap();
    assert!(p.values.iter().all(|v| v == &Scalar::exact(q(0, 1))));
}

#[test]
fn limsup_estimates() {
    let a4 = build_example(ExampleId::A4_FMEI_not_FEIM_MEI).unwrap();
    let e = limsup_mean_estimate(&a4.system, &real(1, 8), &ControlSchedule::constant(1), &a4.target, 512, 512).unwrap();
    assert!(e.estimate.lt_q(&q(1, 100)).unwrap());
    let a5 = build_example(ExampleId::A5_FMEI_not_MEI).unwrap();
    let e = limsup_mean_estimate(&a5.system, &real(5, 16), &ControlSchedule::constant(0), &a5.target, 512, 512).unwrap();
    assert!(!e.estimate.lt_q(&q(1, 16)).unwrap());
}

#[test]
fn upper_densities() {
    assert_eq!(upper_density_estimate(&[false; 40]), q(0, 1));
    let alt: Vec<bool> = (0..40).map(|k| k % 2 == 0).collect();
    let d = upper_density_estimate(&alt);
    assert!(d >= q(1, 2) && d <= q(1, 2) + q(1, 40));
}

#[test]
fn a2_exceptions_are_a_single_index() {
    let ex = build_example(ExampleId::A2_EIM_not_EI).unwrap();
    let n = 256;
    let d = distances(&ex.system, &real(3, 8), &a2_schedule(51), &ex.target, n).unwrap();
    let e = exception_set(&d, &q(1, 10)).unwrap();
    assert_eq!(e.iter().filter(|&&b| b).count(), 1);
    assert!(upper_density_estimate(&e) <= q(1, 128));
    assert!(exception_density(&ex.system, &real(3, 8), &a2_schedule(51), &ex.target, &q(1, 10), n).unwrap() <= q(1, 128));
}

#[test]
fn a5_decay_to_zero_is_exceptional() {
    let ex = build_example(ExampleId::A5_FMEI_not_MEI).unwrap();
    let x = StatePoint::real(q(3, 8) + q(1, 64));
    let dens = exception_density(&ex.system, &x, &ControlSchedule::constant(1), &ex.target, &q(1, 16), 256).unwrap();
    assert!(dens >= q(1, 2));
}
