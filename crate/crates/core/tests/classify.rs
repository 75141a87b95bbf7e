use ivl_core::classify::{certify_point, refute_point, Notion, Verdict};
use ivl_core::dynamics::{q, Scalar, StatePoint};
use ivl_core::examples::{build_example, ExampleId};
use ivl_core::spanning::Resolution;
use ivl_core::Exec;

fn x38() -> StatePoint {
    StatePoint::Real(Scalar::exact(q(3, 8)))
}

#[test]
fn tight_budgets_give_inconclusive() {
    let ex = build_example(ExampleId::A5_FMEI_not_MEI).unwrap();
    let prob = ex.problem_at(Resolution::Step(q(1, 128)), Exec::Sequential).unwrap();
    let mut budget = ex.budget();
    budget.node_budget = 4;
    let v = refute_point(&prob, &x38(), Notion::MEI, &q(1, 32), &q(1, 128), 24, &budget).unwrap();
    assert!(matches!(v, Verdict::Inconclusive(_)), "{v}");

    budget.deltas.clear();
    let v = certify_point(&prob, &x38(), Notion::MEI, &q(1, 32), &budget).unwrap();
    assert!(matches!(v, Verdict::Inconclusive(_)), "{v}");
}

#[test]
fn a1_verdicts_at_three_eighths() {
    let ex = build_example(ExampleId::A1_FEI_not_EI).unwrap();
    let prob = ex.problem_at(Resolution::Step(q(1, 256)), Exec::Sequential).unwrap();
    let budget = ex.budget();
    let v = refute_point(&prob, &x38(), Notion::EI, &q(1, 8), &q(1, 64), 12, &budget).unwrap();
    let Verdict::Refuted(r) = &v else { panic!("{v}") };
    r.replay(&prob).unwrap();
    // Away from 3/8 the constant schedules keep a whole ball inside Q.
    let v = certify_point(&prob, &StatePoint::Real(Scalar::exact(q(5, 16))), Notion::EI, &q(1, 10), &budget).unwrap();
    let Verdict::Certified(c) = &v else { panic!("{v}") };
    c.replay(&prob).unwrap();
}
