use ivl_core::classify::Verdict;
use ivl_core::control_sets::{
    approx_reachability_check, controlled_invariance_check, dichotomy_probe, eimk_membership, meik_membership, no_return_check, reachable_set,
    DichotomyMode, DichotomyVerdict, ReturnStatus,
};
use ivl_core::dynamics::{q, ControlSchedule, StatePoint};
use ivl_core::examples::{build_example, ExampleId};
use ivl_core::metrics::TargetSet;
use ivl_core::spanning::{Resolution, TargetGrid};
use ivl_core::Exec;

fn real(n: i64, d: i64) -> StatePoint {
    StatePoint::real(q(n, d))
}

fn fine() -> Resolution {
    Resolution::Step(q(1, 1024))
}

#[test]
fn reach_sets() {
    let a1 = build_example(ExampleId::A1_FEI_not_EI).unwrap();
    let r0 = reachable_set(&a1.system, &real(5, 16), 0, &fine(), 1000, Exec::Sequential).unwrap();
    assert_eq!(r0.entries.len(), 1);
    let r = reachable_set(&a1.system, &real(5, 16), 3, &fine(), 1000, Exec::Sequential).unwrap();
    assert!(r.replay(&a1.system).unwrap());
    assert!(r.contains_cell_of(&a1.system, &real(5, 16)).unwrap());
    assert!(r.contains_cell_of(&a1.system, &real(1, 1)).unwrap());
    // Reach sets grow with the horizon.
    let r2 = reachable_set(&a1.system, &real(5, 16), 2, &fine(), 1000, Exec::Sequential).unwrap();
    for e in &r2.entries {
        assert!(r.contains_cell_of(&a1.system, &e.state).unwrap());
    }

    let a4 = build_example(ExampleId::A4_FMEI_not_FEIM_MEI).unwrap();
    let r = reachable_set(&a4.system, &real(1, 2), 1, &fine(), 1000, Exec::Sequential).unwrap();
    let mut states: Vec<String> = r.entries.iter().filter(|e| e.m == 1).map(|e| e.state.to_string()).collect();
    states.sort();
    assert_eq!(states, ["1", "5/16"]);
}

#[test]
fn reach_budget_is_enforced() {
    let a4 = build_example(ExampleId::A4_FMEI_not_FEIM_MEI).unwrap();
    assert!(reachable_set(&a4.system, &real(1, 8), 12, &Resolution::Step(q(1, 1 << 20)), 3, Exec::Sequential).is_err());
}

#[test]
fn controlled_invariance() {
    let a1 = build_example(ExampleId::A1_FEI_not_EI).unwrap();
    let rep = controlled_invariance_check(&a1.system, &a1.target, &a1.grid().unwrap(), 16, &q(1, 100), Exec::Parallel).unwrap();
    assert!(rep.passed(), "{:?}", rep.failing);

    let a4 = build_example(ExampleId::A4_FMEI_not_FEIM_MEI).unwrap();
    let grid = TargetGrid::new(&a4.target, Resolution::Step(q(1, 64))).unwrap();
    let rep = controlled_invariance_check(&a4.system, &a4.target, &grid, 16, &q(1, 100), Exec::Parallel).unwrap();
    assert_eq!(rep.kept.len() + rep.failing.len(), grid.len());
    assert!(rep.failing.contains(&real(0, 1)));
    assert!(rep.kept.iter().any(|(p, _)| *p == real(1, 4)));

    // A fixed point of F_0 on its own.
    let single = TargetSet::interval(q(5, 16), q(5, 16)).unwrap();
    let grid = TargetGrid::new(&single, Resolution::Step(q(1, 64))).unwrap();
    let rep = controlled_invariance_check(&a1.system, &single, &grid, 8, &q(1, 100), Exec::Sequential).unwrap();
    assert!(rep.passed());
    let reach = approx_reachability_check(&a1.system, &grid, &q(1, 100), 4, 1000, Exec::Sequential).unwrap();
    assert_eq!(reach.min(), q(1, 1));
}

#[test]
fn unreachable_component_is_flagged() {
    let a1 = build_example(ExampleId::A1_FEI_not_EI).unwrap();
    // 1 is fixed under both controls, so nothing else is reachable from it.
    let two = TargetSet::intervals(vec![(q(1, 4), q(5, 16)), (q(15, 16), q(1, 1))]).unwrap();
    let grid = TargetGrid::new(&two, Resolution::Step(q(1, 32))).unwrap();
    let rep = approx_reachability_check(&a1.system, &grid, &q(1, 100), 4, 1000, Exec::Sequential).unwrap();
    assert!(rep.flagged().any(|p| *p == real(1, 1)));
}

#[test]
fn no_return() {
    let a2 = build_example(ExampleId::A2_EIM_not_EI).unwrap();
    let mut front = vec![0u8; 51];
    front.push(2);
    let omega = ControlSchedule::splice(&front, &ControlSchedule::constant(0));
    let samples = vec![
        (real(25, 64), omega, 60),
        (real(5, 16), ControlSchedule::constant(0), 40),
        (real(3, 4), ControlSchedule::constant(0), 5),
    ];
    let out = no_return_check(&a2.system, &a2.target, &samples, &q(1, 100)).unwrap();
    assert!(out[0].flagged());
    assert!(matches!(out[1].status, ReturnStatus::Stayed));
    assert!(matches!(out[2].status, ReturnStatus::Skipped(_)));
}

#[test]
fn k_memberships() {
    let a2 = build_example(ExampleId::A2_EIM_not_EI).unwrap();
    let prob = a2.problem(Exec::Parallel).unwrap();
    assert!(eimk_membership(&prob, &real(3, 8), 10, &a2.budget()).unwrap().is_certified());

    let a4 = build_example(ExampleId::A4_FMEI_not_FEIM_MEI).unwrap();
    let prob = a4.problem(Exec::Parallel).unwrap();
    let mut b = a4.budget();
    b.refute_delta = q(1, 64);
    b.refute_horizon = 2;
    assert!(eimk_membership(&prob, &real(0, 1), 9, &b).unwrap().is_refuted());
    let v = meik_membership(&prob, &real(0, 1), 50, &a4.budget()).unwrap();
    let Verdict::Certified(c) = v else { panic!("{v:?}") };
    assert_eq!(c.family, [ControlSchedule::constant(1)]);

    let a5 = build_example(ExampleId::A5_FMEI_not_MEI).unwrap();
    let prob = a5.problem(Exec::Parallel).unwrap();
    let mut b = a5.budget();
    b.refute_delta = q(1, 128);
    b.refute_horizon = 24;
    assert!(meik_membership(&prob, &real(3, 8), 32, &b).unwrap().is_refuted());
}

#[test]
fn dichotomies() {
    let a4 = build_example(ExampleId::A4_FMEI_not_FEIM_MEI).unwrap();
    let prob = a4.problem_at(Resolution::Step(q(1, 64)), Exec::Parallel).unwrap();
    let rep = dichotomy_probe(&prob, 50..=50, &a4.budget(), DichotomyMode::LimsupMean).unwrap();
    assert!(matches!(rep.verdict, DichotomyVerdict::MeanEquiInvariantEvidence), "{rep}");

    let a2 = build_example(ExampleId::A2_EIM_not_EI).unwrap();
    let prob = a2.problem_at(Resolution::Step(q(1, 64)), Exec::Parallel).unwrap();
    let rep = dichotomy_probe(&prob, 10..=10, &a2.budget(), DichotomyMode::Mean).unwrap();
    assert!(matches!(rep.verdict, DichotomyVerdict::EquiInvariantInMeanEvidence), "{rep}");
}
