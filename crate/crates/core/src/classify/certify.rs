use num_traits::{ToPrimitive, Zero};

use crate::dynamics::{fmt_q, q, ControlSchedule, Scalar, StatePoint, SymbolicPoint, Q};
use crate::error::{IvlError, Result};
use crate::metrics::{BlockLanguage, TargetSet};
use crate::par::Exec;

use super::{Certificate, ClassifyBudget, Evaluator, Horizon, Notion, Outcome, Problem, Verdict, Witness};

/// Grid and refined-grid points of Q within `delta` of `x`, plus `samples`
/// evenly spaced exact points on each side for interval spaces. `x` comes
/// first.
pub(crate) fn ball(prob: &Problem, x: &StatePoint, delta: &Q, samples: usize) -> Result<Vec<StatePoint>> {
    let mut out = vec![x.clone()];
    let near = |y: &StatePoint| -> Result<bool> {
        // Ambiguous distances keep the point: more points only make
        // certification harder.
        Ok(prob.sys.space.distance(x, y)?.lt_q(delta).unwrap_or(true))
    };
    for y in prob.grid.points.iter().chain(&prob.fine.points) {
        if y != x && near(y)? && !out.contains(y) {
            out.push(y.clone());
        }
    }
    let extra = match (x, &prob.target) {
        (StatePoint::Real(Scalar::Exact(c)), _) => (1..=samples)
            .flat_map(|j| {
                let off = delta * q(j as i64, samples as i64 + 1);
                [StatePoint::real(c - &off), StatePoint::real(c + &off)]
            })
            .collect(),
        (StatePoint::Symbolic(p), TargetSet::BlockLanguage(lang)) => block_samples(lang, p, delta, samples)?,
        _ => Vec::new(),
    };
    for p in extra {
        if prob.target.contains(&p)? && !out.contains(&p) {
            out.push(p);
        }
    }
    Ok(out)
}

/// Points of Q agreeing with `x` on its first `⌊1/δ⌋` symbols (hence within
/// δ), continued by different periodic block tails.
fn block_samples(lang: &BlockLanguage, x: &SymbolicPoint, delta: &Q, samples: usize) -> Result<Vec<StatePoint>> {
    if samples == 0 {
        return Ok(Vec::new());
    }
    let inv = delta.recip().floor().to_integer();
    let m = inv.to_usize().filter(|&m| m <= 1 << 16).unwrap_or(1 << 16);
    let longest = lang.blocks().iter().map(Vec::len).max().unwrap_or(1);
    let (blocks, fail) = lang.parse(&x.head(m + longest));
    if fail.is_some() {
        return Ok(Vec::new());
    }
    let mut used = 0;
    let mut keep = Vec::new();
    for b in blocks {
        if used >= m {
            break;
        }
        used += lang.blocks()[b].len();
        keep.push(b);
    }
    if used < m {
        return Ok(Vec::new());
    }
    let nb = lang.blocks().len();
    let mut tails: Vec<Vec<usize>> = (0..nb).map(|i| vec![i]).collect();
    for i in 0..nb {
        for j in 0..nb {
            if i != j {
                tails.push(vec![i, j]);
            }
        }
    }
    let head = lang.embed(&keep);
    tails
        .iter()
        .take(samples)
        .map(|t| Ok(StatePoint::Symbolic(SymbolicPoint::new(&head, &lang.embed(t))?)))
        .collect()
}

fn descending(deltas: &[Q]) -> Vec<Q> {
    let mut d: Vec<Q> = deltas.iter().filter(|d| **d > Q::zero()).cloned().collect();
    d.sort_by(|a, b| b.cmp(a));
    d.dedup();
    d
}

fn outcomes(eval: &Evaluator, ball: &[StatePoint], s: usize, exec: Exec) -> Vec<Outcome> {
    match exec {
        Exec::Sequential => {
            let mut out = Vec::with_capacity(ball.len());
            for y in ball {
                let o = eval.outcome(y, s);
                let stop = !o.passed();
                out.push(o);
                if stop {
                    break;
                }
            }
            out
        }
        Exec::Parallel => exec.map(ball, |y| eval.outcome(y, s)),
    }
}

fn single(eval: &Evaluator, x: &StatePoint, ball: &[StatePoint], exec: Exec) -> Option<(Vec<usize>, Vec<Witness>)> {
    for s in 0..eval.candidates.len() {
        if !eval.outcome(x, s).passed() {
            continue;
        }
        let outs = outcomes(eval, ball, s, exec);
        if outs.len() == ball.len() && outs.iter().all(Outcome::passed) {
            let witnesses = ball
                .iter()
                .zip(outs)
                .map(|(y, o)| match o {
                    Outcome::Pass(value) => Witness { point: y.clone(), schedule: 0, value },
                    _ => unreachable!(),
                })
                .collect();
            return Some((vec![s], witnesses));
        }
    }
    None
}

/// First-fit family: each ball point reuses an earlier member when one
/// passes, otherwise takes the first passing candidate.
fn family(eval: &Evaluator, ball: &[StatePoint], max_family: usize) -> Option<(Vec<usize>, Vec<Witness>)> {
    let mut fam: Vec<usize> = Vec::new();
    let mut witnesses = Vec::with_capacity(ball.len());
    for y in ball {
        let reuse = fam.iter().enumerate().find_map(|(i, &s)| match eval.outcome(y, s) {
            Outcome::Pass(v) => Some((i, v)),
            _ => None,
        });
        let (i, value) = match reuse {
            Some(hit) => hit,
            None if fam.len() < max_family => {
                let (s, v) = (0..eval.candidates.len()).filter(|s| !fam.contains(s)).find_map(|s| match eval.outcome(y, s) {
                    Outcome::Pass(v) => Some((s, v)),
                    _ => None,
                })?;
                fam.push(s);
                (fam.len() - 1, v)
            }
            None => return None,
        };
        witnesses.push(Witness { point: y.clone(), schedule: i, value });
    }
    Some((fam, witnesses))
}

pub(crate) fn certify_with(eval: &Evaluator, x: &StatePoint, notion: Notion, budget: &ClassifyBudget) -> Result<Option<Certificate>> {
    certify_inner(eval, x, notion, budget, Exec::Sequential)
}

fn certify_inner(eval: &Evaluator, x: &StatePoint, notion: Notion, budget: &ClassifyBudget, exec: Exec) -> Result<Option<Certificate>> {
    let prob = eval.prob;
    for delta in descending(&budget.deltas) {
        let ball = ball(prob, x, &delta, budget.ball_samples)?;
        let found = if notion.single() { single(eval, x, &ball, exec) } else { family(eval, &ball, budget.max_family) };
        if let Some((fam, witnesses)) = found {
            return Ok(Some(Certificate {
                notion,
                point: x.clone(),
                epsilon: eval.eps.clone(),
                delta,
                family: fam.iter().map(|&s| eval.candidates[s].clone()).collect(),
                horizon: eval.horizon.clone(),
                resolution: prob.grid.resolution.clone(),
                witnesses,
            }));
        }
    }
    Ok(None)
}

fn check_inputs(prob: &Problem, x: &StatePoint, eps: &Q) -> Result<()> {
    if *eps <= Q::zero() {
        return Err(IvlError::InvalidInput("epsilon must be positive".into()));
    }
    if !prob.target.contains(x)? {
        return Err(IvlError::InvalidInput(format!("{x} is not in the target set")));
    }
    Ok(())
}

/// Searches the δ ladder (largest first) and the candidate pool for a
/// certificate at `x`. Certificates are evidence up to their horizon only.
pub fn certify_point(prob: &Problem, x: &StatePoint, notion: Notion, eps: &Q, budget: &ClassifyBudget) -> Result<Verdict> {
    check_inputs(prob, x, eps)?;
    if budget.candidates.is_empty() {
        return Err(IvlError::InvalidInput("empty candidate schedule pool".into()));
    }
    let eval = Evaluator::new(prob, notion.criterion(), eps.clone(), budget.horizon_for(notion.criterion()), &budget.candidates);
    Ok(match certify_inner(&eval, x, notion, budget, prob.exec)? {
        Some(c) => Verdict::Certified(c),
        None => Verdict::Inconclusive(format!(
            "no {} schedule{} from {} candidates passes on any delta in the ladder at eps={} ({})",
            if notion.single() { "single" } else { "family of" },
            if notion.single() { "" } else { "s" },
            budget.candidates.len(),
            fmt_q(eps),
            eval.horizon
        )),
    })
}

/// Checks a given family on the δ-ball; every point must pass under some
/// member.
#[allow(clippy::too_many_arguments)]
pub fn check_family(
    prob: &Problem,
    x: &StatePoint,
    notion: Notion,
    eps: &Q,
    delta: &Q,
    fam: &[ControlSchedule],
    horizon: Horizon,
    samples: usize,
) -> Result<Verdict> {
    check_inputs(prob, x, eps)?;
    if fam.is_empty() || (notion.single() && fam.len() != 1) {
        return Err(IvlError::InvalidInput(format!("{notion} needs {} schedule(s)", if notion.single() { "exactly one" } else { "at least one" })));
    }
    let eval = Evaluator::new(prob, notion.criterion(), eps.clone(), horizon, fam);
    let pts = ball(prob, x, delta, samples)?;
    let outs: Vec<Vec<Outcome>> = prob.exec.map(&pts, |y| (0..fam.len()).map(|s| eval.outcome(y, s)).collect());
    let mut witnesses = Vec::with_capacity(pts.len());
    for (y, os) in pts.iter().zip(outs) {
        match os.into_iter().enumerate().find_map(|(i, o)| match o {
            Outcome::Pass(v) => Some((i, v)),
            _ => None,
        }) {
            Some((schedule, value)) => witnesses.push(Witness { point: y.clone(), schedule, value }),
            None => return Ok(Verdict::Inconclusive(format!("{y} fails under every member of the family"))),
        }
    }
    Ok(Verdict::Certified(Certificate {
        notion,
        point: x.clone(),
        epsilon: eps.clone(),
        delta: delta.clone(),
        family: fam.to_vec(),
        horizon: eval.horizon.clone(),
        resolution: prob.grid.resolution.clone(),
        witnesses,
    }))
}

/// Finite mean-L-stability: some member keeps the exception density below ε
/// at every ball point, over `n` steps.
pub fn mean_l_stability_check(prob: &Problem, x: &StatePoint, eps: &Q, delta: &Q, fam: &[ControlSchedule], n: usize) -> Result<Verdict> {
    check_family(prob, x, Notion::FMLS, eps, delta, fam, Horizon::Steps(n), 4)
}
