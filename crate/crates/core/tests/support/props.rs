//! Property checks on coarse grids with cheap budgets. Each returns the
//! number of generated cases, or the minimal failing input.

use std::sync::OnceLock;

use ivl_core::classify::{certify_point, default_candidates, refute_point, ClassifyBudget, Notion, Problem, Record, Scope, Verdict};
use ivl_core::codec::{decode_witnesses, encode_witnesses};
use ivl_core::dynamics::{q, Q};
use ivl_core::examples::{build_example, Example, ExampleId};
use ivl_core::spanning::{complexity_profile, kernel_row, Mode, Optimality, Resolution, SpanBudget, TargetGrid};
use ivl_core::Exec;
use proptest::prelude::*;
use proptest::sample::Index;
use proptest::test_runner::{Config, TestRunner};

pub const CASES: u32 = 1000;

struct Fixture {
    ex: Example,
    grid: TargetGrid,
    prob: Problem,
    budget: ClassifyBudget,
}

fn coarse(id: ExampleId) -> Resolution {
    match id {
        ExampleId::A3_FEIM_not_FEI => Resolution::Depth(4),
        _ => Resolution::Step(q(1, 32)),
    }
}

fn fixtures() -> &'static Vec<Fixture> {
    static F: OnceLock<Vec<Fixture>> = OnceLock::new();
    F.get_or_init(|| {
        ExampleId::ALL
            .iter()
            .map(|&id| {
                let ex = build_example(id).unwrap();
                let res = coarse(id);
                let grid = TargetGrid::new(&ex.target, res.clone()).unwrap();
                let prob = ex.problem_at(res, Exec::Sequential).unwrap();
                let mut budget = ClassifyBudget::new(default_candidates(ex.system.alphabet_size()));
                budget.deltas = vec![q(1, 8), q(1, 16), q(1, 32)];
                budget.horizon = 24;
                budget.ball_samples = 2;
                budget.node_budget = 20_000;
                Fixture { ex, grid, prob, budget }
            })
            .collect()
    })
}

fn eps_of(i: usize) -> Q {
    [q(1, 100), q(1, 32), q(1, 16), q(1, 10), q(1, 8), q(1, 4), q(1, 2)][i % 7].clone()
}

fn word(alphabet: usize, raw: &[u8]) -> Vec<u8> {
    raw.iter().map(|u| u % alphabet as u8).collect()
}

fn mode(b: bool) -> Mode {
    if b {
        Mode::Mean
    } else {
        Mode::Plain
    }
}

/// EI, EIM, FEI and FEIM; the limsup notions need long tails.
fn cheap_notion(i: usize) -> Notion {
    [Notion::EI, Notion::EIM, Notion::FEI, Notion::FEIM][i % 4]
}

fn runner() -> TestRunner {
    TestRunner::new(Config { cases: CASES, failure_persistence: None, ..Config::default() })
}

fn finish(r: Result<(), proptest::test_runner::TestError<impl std::fmt::Debug>>) -> Result<u32, String> {
    r.map(|_| CASES).map_err(|e| e.to_string())
}

pub fn kernels_shrink_as_the_horizon_grows() -> Result<u32, String> {
    let strat = (0usize..5, prop::collection::vec(any::<u8>(), 2..12), 0usize..7, any::<bool>());
    finish(runner().run(&strat, |(e, raw, ei, m)| {
        let f = &fixtures()[e];
        let w = word(f.ex.system.alphabet_size(), &raw);
        let eps = eps_of(ei);
        let longer = kernel_row(&f.ex.system, &f.ex.target, &f.grid, &w, &eps, mode(m)).unwrap();
        let shorter = kernel_row(&f.ex.system, &f.ex.target, &f.grid, &w[..w.len() - 1], &eps, mode(m)).unwrap();
        prop_assert!(longer.is_subset(&shorter));
        Ok(())
    }))
}

pub fn kernels_grow_with_epsilon() -> Result<u32, String> {
    let strat = (0usize..5, prop::collection::vec(any::<u8>(), 1..12), 0usize..7, 0usize..7, any::<bool>());
    finish(runner().run(&strat, |(e, raw, a, b, m)| {
        let f = &fixtures()[e];
        let w = word(f.ex.system.alphabet_size(), &raw);
        let (lo, hi) = if eps_of(a) <= eps_of(b) { (eps_of(a), eps_of(b)) } else { (eps_of(b), eps_of(a)) };
        let small = kernel_row(&f.ex.system, &f.ex.target, &f.grid, &w, &lo, mode(m)).unwrap();
        let large = kernel_row(&f.ex.system, &f.ex.target, &f.grid, &w, &hi, mode(m)).unwrap();
        prop_assert!(small.is_subset(&large));
        Ok(())
    }))
}

pub fn complexity_is_nondecreasing_in_n() -> Result<u32, String> {
    let strat = (0usize..5, 0usize..7, any::<bool>(), 2usize..7);
    finish(runner().run(&strat, |(e, ei, m, n)| {
        let f = &fixtures()[e];
        let p = complexity_profile(&f.ex.system, &f.ex.target, &f.grid, &eps_of(ei), n, mode(m), &SpanBudget::default(), Exec::Sequential);
        // A grid point kept by no word is a legitimate error at small ε.
        if let Ok(p) = p {
            for w in p.entries.windows(2) {
                if w[0].tag == Optimality::Exact && w[1].tag == Optimality::Exact {
                    prop_assert!(w[0].r <= w[1].r, "{:?}", p.entries.iter().map(|e| e.r).collect::<Vec<_>>());
                }
            }
        }
        Ok(())
    }))
}

pub fn certificates_replay_bit_for_bit() -> Result<u32, String> {
    let strat = (prop::sample::select(vec![0usize, 1, 2, 4]), any::<Index>(), 0usize..4, 0usize..7);
    finish(runner().run(&strat, |(e, i, ni, ei)| {
        let f = &fixtures()[e];
        let x = &f.grid.points[i.index(f.grid.len())];
        let notion = cheap_notion(ni);
        let v = certify_point(&f.prob, x, notion, &eps_of(ei), &f.budget).unwrap();
        if let Verdict::Certified(c) = &v {
            c.replay(&f.prob).unwrap();
            let again = certify_point(&f.prob, x, notion, &eps_of(ei), &f.budget).unwrap();
            prop_assert_eq!(&again, &v);
            let bytes = encode_witnesses("p", &[("c".into(), v.clone())]);
            let decoded = decode_witnesses(&bytes, "p").unwrap();
            prop_assert_eq!(&encode_witnesses("p", &decoded), &bytes);
            let Verdict::Certified(d) = &decoded[0].1 else { unreachable!() };
            d.replay(&f.prob).unwrap();
        }
        Ok(())
    }))
}

pub fn certificates_and_refutations_never_coexist() -> Result<u32, String> {
    let strat = (prop::sample::select(vec![0usize, 1, 2, 4]), any::<Index>(), 0usize..4, 0usize..7, 2usize..10);
    finish(runner().run(&strat, |(e, i, ni, ei, n)| {
        let f = &fixtures()[e];
        let x = &f.grid.points[i.index(f.grid.len())];
        let notion = cheap_notion(ni);
        let eps = eps_of(ei);
        let record = |v: &Verdict| Record::from_verdict("p", Scope::Point(x.clone()), v);
        let cert = certify_point(&f.prob, x, notion, &eps, &f.budget).unwrap();
        if let Verdict::Certified(c) = &cert {
            // Probe at δ₀ = δ and N ≤ horizon, where a refutation is comparable.
            let r = refute_point(&f.prob, x, notion, &eps, &c.delta, n.min(c.horizon.steps()), &f.budget).unwrap();
            if let (Some(rc), Some(rr)) = (record(&cert), record(&r)) {
                prop_assert!(!rc.contradicts(&rr), "{notion} at {x} eps={eps}: {r:?}");
            }
        }
        let refuted = refute_point(&f.prob, x, notion, &eps, &q(1, 32), n, &f.budget).unwrap();
        if let Verdict::Refuted(r) = &refuted {
            r.replay(&f.prob).unwrap();
            let mut b = f.budget.clone();
            b.deltas.retain(|d| *d >= r.delta);
            let v = certify_point(&f.prob, x, notion, &eps, &b).unwrap();
            if let (Some(rc), Some(rr)) = (record(&v), record(&refuted)) {
                prop_assert!(!rc.contradicts(&rr), "{notion} at {x} eps={eps}: {v:?}");
            }
        }
        Ok(())
    }))
}

pub type Property = (&'static str, fn() -> Result<u32, String>);

pub const ALL: [Property; 5] = [
    ("kernel antitonicity in n", kernels_shrink_as_the_horizon_grows),
    ("kernel monotonicity in eps", kernels_grow_with_epsilon),
    ("r_inv monotone in n", complexity_is_nondecreasing_in_n),
    ("certificate replay bit-stability", certificates_replay_bit_for_bit),
    ("no certified/refuted coexistence", certificates_and_refutations_never_coexist),
];
