use std::collections::HashMap;
use std::sync::Mutex;

use crate::dynamics::{q, ControlSchedule, ControlSystem, Scalar, StatePoint, Q};
use crate::metrics::{exception_set, limsup_from_distances, upper_density_estimate, TargetSet};

use super::{Criterion, Horizon, Problem};

/// Result of checking one orbit against a criterion.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    /// The checked quantity (max distance, max mean, limsup estimate or
    /// density), strictly below ε.
    Pass(Scalar),
    /// The criterion failed at `index` with `value ≥ ε`.
    Fail { index: usize, value: Scalar },
    /// A comparison or branch selection was ambiguous at this index.
    Indeterminate(usize),
}

impl Outcome {
    pub fn passed(&self) -> bool {
        matches!(self, Outcome::Pass(_))
    }
}

fn orbit_distances(sys: &ControlSystem, target: &TargetSet, x: &StatePoint, omega: &ControlSchedule, n: usize) -> Result<Vec<Scalar>, usize> {
    let mut out = Vec::with_capacity(n);
    let mut state = x.clone();
    for m in 0..n {
        if m > 0 {
            let u = omega.at(m - 1).ok_or(m)?;
            state = sys.step(&state, u).map_err(|_| m)?;
        }
        out.push(target.dist(&state).map_err(|_| m)?);
    }
    Ok(out)
}

/// Checks the orbit of `x` under `omega` at the given horizon. Values equal
/// to ε fail.
pub fn evaluate(
    sys: &ControlSystem,
    target: &TargetSet,
    x: &StatePoint,
    omega: &ControlSchedule,
    criterion: Criterion,
    eps: &Q,
    horizon: &Horizon,
) -> Outcome {
    let n = horizon.steps();
    let d = match orbit_distances(sys, target, x, omega, n) {
        Ok(d) => d,
        Err(m) => return Outcome::Indeterminate(m),
    };
    let verdict = |index: usize, value: Scalar| match value.lt_q(eps) {
        Ok(true) => None,
        Ok(false) => Some(Outcome::Fail { index, value }),
        Err(_) => Some(Outcome::Indeterminate(index)),
    };
    match criterion {
        Criterion::Sup | Criterion::AllMean => {
            let mut sum = Scalar::zero();
            let mut worst = Scalar::zero();
            for (m, dm) in d.iter().enumerate() {
                let v = if criterion == Criterion::Sup {
                    dm.clone()
                } else {
                    sum = sum.add(dm);
                    sum.mul_q(&q(1, m as i64 + 1))
                };
                if let Some(o) = verdict(m, v.clone()) {
                    return o;
                }
                worst = worst.max(&v);
            }
            Outcome::Pass(worst)
        }
        Criterion::LimsupMean => {
            let (burn_in, window) = horizon.tail();
            let est = limsup_from_distances(&d, burn_in, window);
            if let Some(o) = verdict(burn_in, est.estimate.clone()) {
                return o;
            }
            if !est.nonincreasing {
                // Below ε but still rising: no evidence either way.
                return Outcome::Indeterminate(burn_in);
            }
            Outcome::Pass(est.estimate)
        }
        Criterion::Density => {
            let e = match exception_set(&d, eps) {
                Ok(e) => e,
                Err(_) => return Outcome::Indeterminate(0),
            };
            let density = Scalar::exact(upper_density_estimate(&e));
            verdict(n.div_ceil(2), density.clone()).unwrap_or(Outcome::Pass(density))
        }
    }
}

/// Memoized outcomes per (point, candidate index) for one criterion, ε and
/// horizon. Safe to share between workers.
pub struct Evaluator<'p> {
    pub prob: &'p Problem,
    pub criterion: Criterion,
    pub eps: Q,
    pub horizon: Horizon,
    pub candidates: &'p [ControlSchedule],
    cache: Mutex<HashMap<(StatePoint, usize), Outcome>>,
}

impl<'p> Evaluator<'p> {
    pub fn new(prob: &'p Problem, criterion: Criterion, eps: Q, horizon: Horizon, candidates: &'p [ControlSchedule]) -> Self {
        Evaluator { prob, criterion, eps, horizon, candidates, cache: Mutex::new(HashMap::new()) }
    }

    pub fn outcome(&self, y: &StatePoint, s: usize) -> Outcome {
        let key = (y.clone(), s);
        if let Some(o) = self.cache.lock().unwrap().get(&key) {
            return o.clone();
        }
        let o = self.run(y, &self.candidates[s]);
        self.cache.lock().unwrap().insert(key, o.clone());
        o
    }

    /// Uncached check against an arbitrary schedule.
    pub fn run(&self, y: &StatePoint, omega: &ControlSchedule) -> Outcome {
        evaluate(&self.prob.sys, &self.prob.target, y, omega, self.criterion, &self.eps, &self.horizon)
    }
}
