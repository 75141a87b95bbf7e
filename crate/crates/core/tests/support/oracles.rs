//! Independent recomputations checked against the library: brute-force set
//! cover, kernel membership from hand-coded maps, and the mean recurrence.
//! Each check panics on a mismatch and otherwise returns a one-line summary.

use fixedbitset::FixedBitSet;
use ivl_core::dynamics::{q, ControlSchedule, Scalar, StatePoint, Q};
use ivl_core::examples::{build_example, ExampleId};
use ivl_core::metrics::mean_profile;
use ivl_core::spanning::{kernel_member, kernel_row, min_cover, KernelRow, KernelTable, Mode, Optimality, SpanBudget, TargetGrid};
use num_traits::ToPrimitive;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn brute_force_cover(rows: &[FixedBitSet], universe: usize) -> Option<usize> {
    let mut best: Option<usize> = None;
    for mask in 0u32..1 << rows.len() {
        let size = mask.count_ones() as usize;
        if best.is_some_and(|b| size >= b) {
            continue;
        }
        let mut cov = FixedBitSet::with_capacity(universe);
        for (i, r) in rows.iter().enumerate() {
            if mask >> i & 1 == 1 {
                cov.union_with(r);
            }
        }
        if cov.count_ones(..) == universe {
            best = Some(size);
        }
    }
    best
}

pub fn min_cover_matches_exhaustive_search() -> String {
    let mut rng = StdRng::seed_from_u64(7);
    let mut solved = 0;
    for _ in 0..50 {
        let universe = rng.random_range(1..=20);
        let nrows = rng.random_range(1..=12);
        let density = rng.random_range(0.1..0.6);
        let mut rows: Vec<FixedBitSet> = Vec::new();
        // Tiny universes have few distinct rows; stop after a fixed number of draws.
        for _ in 0..200 {
            if rows.len() == nrows {
                break;
            }
            let mut b = FixedBitSet::with_capacity(universe);
            for e in 0..universe {
                if rng.random_bool(density) {
                    b.insert(e);
                }
            }
            if b.count_ones(..) > 0 && !rows.contains(&b) {
                rows.push(b);
            }
        }
        let table = KernelTable {
            horizon: 1,
            epsilon: q(1, 2),
            mode: Mode::Plain,
            grid_len: universe,
            rows: rows.iter().enumerate().map(|(i, b)| KernelRow { word: vec![i as u8], bits: b.clone(), multiplicity: 1 }).collect(),
            pruned: 0,
            indeterminate: 0,
            complete: true,
        };
        let grid = TargetGrid { points: (0..universe).map(|i| StatePoint::real(q(i as i64, 1))).collect(), resolution: ivl_core::spanning::Resolution::Step(q(1, 1)) };
        let expected = brute_force_cover(&rows, universe);
        match min_cover(&table, &grid, &SpanBudget::default()) {
            Ok(sol) => {
                assert_eq!(Some(sol.size), expected);
                assert_eq!(sol.tag, Optimality::Exact);
                let mut cov = FixedBitSet::with_capacity(universe);
                sol.rows.iter().for_each(|&r| cov.union_with(&rows[r]));
                assert_eq!(cov.count_ones(..), universe);
                solved += 1;
            }
            Err(_) => assert_eq!(expected, None),
        }
    }
    assert!(solved >= 25, "too few coverable instances: {solved}");
    format!("50 instances agree ({solved} coverable)")
}

/// Branch tables typed in from the printed formulas, exact where possible.
enum Oracle {
    A1,
    A2,
    A3,
    A4,
    A5,
}

#[derive(Clone, Debug)]
enum St {
    Exact(Q),
    Float(f64),
    Word(Vec<u8>),
}

fn f1_a1(x: &Q) -> Q {
    if *x < q(1, 4) {
        q(1, 1)
    } else if *x < q(3, 8) {
        q(1, 1) - q(4, 1) * (x - q(1, 4))
    } else if *x < q(1, 2) {
        q(1, 2)
    } else if *x < q(5, 8) {
        q(1, 1) + q(4, 1) * (x - q(5, 8))
    } else {
        q(1, 1)
    }
}

fn block_prefix(s: &[u8]) -> usize {
    // Longest prefix that is blocks followed by a proper block prefix.
    let mut i = 0;
    loop {
        if s[i..].starts_with(b"ab") {
            i += 2;
        } else if s[i..].starts_with(b"cde") {
            i += 3;
        } else {
            let rest = &s[i..];
            let partial = [&b"ab"[..], &b"cde"[..]].iter().map(|b| b.iter().zip(rest).take_while(|(x, y)| x == y).count()).max().unwrap();
            return i + partial;
        }
        if i + 3 >= s.len() {
            return usize::MAX;
        }
    }
}

impl Oracle {
    fn step(&self, s: &St, u: u8) -> St {
        match (self, s) {
            (Oracle::A1, St::Exact(x)) => St::Exact(match u {
                0 if *x < q(3, 8) => x.clone(),
                0 if *x < q(1, 2) => q(1, 1) + q(5, 1) * (x - q(1, 2)),
                0 => q(1, 1),
                _ => f1_a1(x),
            }),
            (Oracle::A2, St::Exact(x)) => St::Exact(match u {
                0 if *x < q(3, 8) => x.clone(),
                0 if *x < q(1, 2) => q(1, 1) + q(5, 1) * (x - q(1, 2)),
                0 if *x < q(5, 8) => q(1, 1),
                0 if *x < q(3, 4) => q(3, 8) - q(5, 1) * (x - q(3, 4)),
                0 => q(3, 8),
                1 => f1_a1(x),
                _ => q(1, 1),
            }),
            (Oracle::A4, St::Float(x)) => St::Float(match u {
                0 if *x < 0.25 => 0.5,
                0 if *x < 0.5 => 1.0 + 2.0 * (x - 0.5),
                0 => 1.0,
                _ if *x < 0.25 => 12.0 * (x - 0.25).powi(2) + 0.25,
                _ => (x - 0.25).powi(2) + 0.25,
            }),
            (Oracle::A5, St::Float(x)) => St::Float(match u {
                0 if *x < 0.25 => 0.125,
                0 if *x < 0.375 => 2.0 * x - 0.375,
                0 => (x - 0.375).powi(2) + 0.375,
                _ if *x < 0.0625 => 0.0,
                _ if *x < 0.125 => 2.0 * x - 0.125,
                _ if *x < 0.25 => 0.25 * (x - 0.125).cbrt() + 0.125,
                _ if *x < 0.5 => 0.5 - x,
                _ => 0.0,
            }),
            (Oracle::A3, St::Word(w)) => St::Word(match u {
                0 => w[2..].to_vec(),
                1 => w[3..].to_vec(),
                2 => vec![b'b'; w.len()],
                _ if w[0] == b'b' => b"ab".iter().copied().cycle().take(w.len()).collect(),
                _ => vec![b'b'; w.len()],
            }),
            _ => unreachable!(),
        }
    }

    /// Distance to Q, as an exact value or a float.
    fn dist(&self, s: &St) -> St {
        match s {
            St::Exact(x) => {
                let (a, b) = (q(1, 4), q(1, 2));
                St::Exact(if *x < a { a - x } else if *x > b { x - b } else { q(0, 1) })
            }
            St::Float(x) => {
                let (a, b) = match self {
                    Oracle::A4 => (0.0, 0.25),
                    _ => (0.25, 0.5),
                };
                St::Float(if *x < a { a - x } else if *x > b { x - b } else { 0.0 })
            }
            St::Word(w) => St::Exact(match block_prefix(w) {
                usize::MAX => q(0, 1),
                l => q(1, l as i64 + 1),
            }),
        }
    }
}

/// `Some(member)` when decidable with a margin; `None` when a float
/// comparison lands too close to ε.
fn oracle_member(o: &Oracle, start: St, word: &[u8], eps: &Q, mode: Mode) -> Option<bool> {
    let epsf = eps.to_f64().unwrap();
    let mut s = start;
    let mut sum_exact = q(0, 1);
    let mut sum_float = 0.0;
    for k in 0..word.len() {
        if k > 0 {
            s = o.step(&s, word[k - 1]);
        }
        let keep = match o.dist(&s) {
            St::Exact(d) => {
                sum_exact += &d;
                match mode {
                    Mode::Plain => d < *eps,
                    Mode::Mean => sum_exact.clone() / q(k as i64 + 1, 1) < *eps,
                }
            }
            St::Float(d) => {
                sum_float += d;
                let v = match mode {
                    Mode::Plain => d,
                    Mode::Mean => sum_float / (k + 1) as f64,
                };
                if (v - epsf).abs() < 1e-9 {
                    return None;
                }
                v < epsf
            }
            St::Word(_) => unreachable!(),
        };
        if !keep {
            return Some(false);
        }
    }
    Some(true)
}

fn start_state(o: &Oracle, x: &StatePoint) -> St {
    match (o, x) {
        (Oracle::A3, StatePoint::Symbolic(p)) => St::Word(p.head(400)),
        (Oracle::A4 | Oracle::A5, StatePoint::Real(Scalar::Exact(r))) => St::Float(r.to_f64().unwrap()),
        (_, StatePoint::Real(Scalar::Exact(r))) => St::Exact(r.clone()),
        _ => unreachable!("grid points are exact"),
    }
}

pub fn kernel_rows_match_direct_recomputation() -> String {
    let mut total = 0;
    let cases = [
        (ExampleId::A1_FEI_not_EI, Oracle::A1),
        (ExampleId::A2_EIM_not_EI, Oracle::A2),
        (ExampleId::A3_FEIM_not_FEI, Oracle::A3),
        (ExampleId::A4_FMEI_not_FEIM_MEI, Oracle::A4),
        (ExampleId::A5_FMEI_not_MEI, Oracle::A5),
    ];
    let mut rng = StdRng::seed_from_u64(11);
    let epsilons = [q(1, 100), q(1, 16), q(1, 10), q(1, 8), q(1, 4), q(1, 3)];
    for (id, oracle) in cases {
        let ex = build_example(id).unwrap();
        let grid = ex.grid().unwrap();
        let alphabet = ex.system.alphabet_size() as u8;
        let mut compared = 0;
        for _ in 0..100 {
            let len = rng.random_range(1..=12);
            let word: Vec<u8> = (0..len).map(|_| rng.random_range(0..alphabet)).collect();
            let i = rng.random_range(0..grid.len());
            let eps = &epsilons[rng.random_range(0..epsilons.len())];
            let mode = if rng.random_bool(0.5) { Mode::Plain } else { Mode::Mean };
            let row = kernel_row(&ex.system, &ex.target, &grid, &word, eps, mode).unwrap();
            let lib = kernel_member(&ex.system, &ex.target, &grid.points[i], &word, eps, mode);
            assert_eq!(row.contains(i), lib);
            if let Some(want) = oracle_member(&oracle, start_state(&oracle, &grid.points[i]), &word, eps, mode) {
                assert_eq!(lib, want, "{id} point {} word {word:?} eps {eps} {mode}", grid.points[i]);
                compared += 1;
            }
        }
        assert!(compared >= 90, "{id}: only {compared} pairs decidable");
        total += compared;
    }
    format!("500 pairs agree with the library, {total} also with the hand-coded maps")
}

pub fn mean_profile_satisfies_its_recurrence_exactly() -> String {
    let mut rng = StdRng::seed_from_u64(3);
    for id in [ExampleId::A1_FEI_not_EI, ExampleId::A2_EIM_not_EI, ExampleId::A3_FEIM_not_FEI] {
        let ex = build_example(id).unwrap();
        let grid = ex.grid().unwrap();
        let alphabet = ex.system.alphabet_size() as u8;
        for _ in 0..40 {
            let x = &grid.points[rng.random_range(0..grid.len())];
            let front: Vec<u8> = (0..rng.random_range(0..20)).map(|_| rng.random_range(0..alphabet)).collect();
            let omega = ControlSchedule::periodic(&front, &[rng.random_range(0..alphabet)]);
            let n = 40;
            let prof = mean_profile(&ex.system, x, &omega, &ex.target, n).unwrap();
            let traj = ex.system.trajectory(x, &omega, n - 1).unwrap();
            #[allow(clippy::needless_range_loop)]
            for k in 1..n {
                // m_{k+1} = (k m_k + d_k) / (k + 1)
                let d = ex.target.dist(&traj[k]).unwrap();
                let (Scalar::Exact(mk), Scalar::Exact(next), Scalar::Exact(d)) = (prof.mean(k), prof.mean(k + 1), d) else {
                    panic!("{id}: exact mode expected");
                };
                assert_eq!(next.clone(), (mk * q(k as i64, 1) + d) / q(k as i64 + 1, 1));
                let rm = prof.running_max[k].as_exact().unwrap();
                assert_eq!(rm.clone(), prof.running_max[k - 1].as_exact().unwrap().clone().max(next.clone()));
            }
        }
    }
    "120 exact profiles of length 40 satisfy the recurrence".into()
}
