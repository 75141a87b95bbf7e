//! Resolution-stamped certificates and refutations for the equi-invariance
//! notions, plus consistency audits across notions and complexity profiles.

mod audit;
mod certify;
mod evaluate;
mod refute;
mod trap;
mod verdict;

use std::fmt;
use std::str::FromStr;

use crate::dynamics::{q, ControlSchedule, ControlSystem, Q};
use crate::error::{IvlError, Result};
use crate::metrics::TargetSet;
use crate::par::Exec;
use crate::spanning::TargetGrid;

pub use audit::{
    implication_audit, theorem_audit, ArrowViolation, AuditLine, AuditStatus, ImplicationReport, Record, Scope, TheoremInputs,
    TheoremReport, VerdictKind, ARROWS, NON_ARROWS,
};
pub use certify::{certify_point, check_family, mean_l_stability_check};
pub use evaluate::{evaluate, Evaluator, Outcome};
pub use refute::refute_point;
pub use trap::Trap;
pub use verdict::{
    Certificate, Escape, EscapeKind, Evidence, GrowthLevel, Horizon, Refutation, SetReport, Verdict, Witness,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Notion {
    EI,
    EIM,
    MEI,
    FEI,
    FEIM,
    FMEI,
    /// Finitely mean-L-stable.
    FMLS,
}

/// What is required of an orbit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Criterion {
    /// `d(φ(n), Q) < ε` for all n.
    Sup,
    /// Running means `< ε` for all n.
    AllMean,
    /// limsup of running means `< ε`.
    LimsupMean,
    /// Exceptions `d ≥ ε` have upper density `< ε`.
    Density,
}

impl Notion {
    pub const ALL: [Notion; 7] = [Notion::EI, Notion::EIM, Notion::MEI, Notion::FEI, Notion::FEIM, Notion::FMEI, Notion::FMLS];

    /// One control for the whole neighbourhood, rather than a finite family.
    pub fn single(self) -> bool {
        matches!(self, Notion::EI | Notion::EIM | Notion::MEI)
    }

    pub fn criterion(self) -> Criterion {
        match self {
            Notion::EI | Notion::FEI => Criterion::Sup,
            Notion::EIM | Notion::FEIM => Criterion::AllMean,
            Notion::MEI | Notion::FMEI => Criterion::LimsupMean,
            Notion::FMLS => Criterion::Density,
        }
    }

    /// The finite-family notion a single-control certificate embeds into.
    pub fn finite(self) -> Notion {
        match self {
            Notion::EI => Notion::FEI,
            Notion::EIM => Notion::FEIM,
            Notion::MEI => Notion::FMEI,
            n => n,
        }
    }
}

impl fmt::Display for Notion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Notion {
    type Err = IvlError;
    fn from_str(s: &str) -> Result<Self> {
        Notion::ALL
            .iter()
            .copied()
            .find(|n| n.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| IvlError::InvalidInput(format!("unknown notion {s:?}, expected one of EI EIM MEI FEI FEIM FMEI FMLS")))
    }
}

/// Search parameters for certificates and refutations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassifyBudget {
    /// Neighbourhood radii to try, largest first.
    pub deltas: Vec<Q>,
    /// Steps checked by sup and all-n-mean certificates.
    pub horizon: usize,
    /// Tail window for limsup and density criteria.
    pub burn_in: usize,
    pub window: usize,
    pub candidates: Vec<ControlSchedule>,
    pub max_family: usize,
    /// Extra exact points per neighbourhood, for radii below the grid step.
    pub ball_samples: usize,
    pub refute_delta: Q,
    pub refute_horizon: usize,
    /// Prefix-tree nodes a refutation may expand.
    pub node_budget: usize,
    /// Grid levels compared when looking for local complexity growth.
    pub growth_levels: usize,
}

impl ClassifyBudget {
    pub fn new(candidates: Vec<ControlSchedule>) -> Self {
        ClassifyBudget {
            deltas: (4..=10).map(|k| q(1, 1 << k)).collect(),
            horizon: 128,
            burn_in: 512,
            window: 512,
            candidates,
            max_family: 8,
            ball_samples: 4,
            refute_delta: q(1, 256),
            refute_horizon: 16,
            node_budget: 500_000,
            growth_levels: 3,
        }
    }

    pub fn horizon_for(&self, c: Criterion) -> Horizon {
        match c {
            Criterion::Sup | Criterion::AllMean => Horizon::Steps(self.horizon),
            Criterion::LimsupMean | Criterion::Density => Horizon::Tail { burn_in: self.burn_in, window: self.window },
        }
    }
}

/// Constant schedules, then splices `u^j v w^∞` for `1 ≤ j ≤ 4`.
pub fn default_candidates(alphabet: usize) -> Vec<ControlSchedule> {
    let us: Vec<u8> = (0..alphabet as u8).collect();
    let mut out: Vec<ControlSchedule> = us.iter().map(|&u| ControlSchedule::constant(u)).collect();
    for j in 1..=4 {
        for &u in &us {
            for &v in &us {
                if v == u {
                    continue;
                }
                for &w in &us {
                    let mut front = vec![u; j];
                    front.push(v);
                    let s = ControlSchedule::splice(&front, &ControlSchedule::constant(w));
                    if !out.contains(&s) {
                        out.push(s);
                    }
                }
            }
        }
    }
    out
}

/// A system, its target set and grids, with the trap sets used as escape
/// certificates.
#[derive(Clone, Debug)]
pub struct Problem {
    pub sys: ControlSystem,
    pub target: TargetSet,
    pub grid: TargetGrid,
    pub fine: TargetGrid,
    pub traps: Vec<Trap>,
    pub exec: Exec,
}

impl Problem {
    pub fn new(sys: ControlSystem, target: TargetSet, grid: TargetGrid, traps: Vec<Trap>, exec: Exec) -> Result<Self> {
        let fine = grid.refine(&target)?;
        Ok(Problem { sys, target, grid, fine, traps, exec })
    }
}

/// Certify, and refute when certification fails, every grid point.
pub fn classify_set(prob: &Problem, notion: Notion, eps: &Q, budget: &ClassifyBudget) -> Result<SetReport> {
    let eval = Evaluator::new(prob, notion.criterion(), eps.clone(), budget.horizon_for(notion.criterion()), &budget.candidates);
    let verdicts = prob
        .exec
        .map(&prob.grid.points, |x| -> Result<Verdict> {
            if let Some(c) = certify::certify_with(&eval, x, notion, budget)? {
                return Ok(Verdict::Certified(c));
            }
            refute::refute_with(prob, x, notion, eps, &budget.refute_delta, budget.refute_horizon, budget)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(SetReport::new(notion, eps.clone(), prob.grid.points.clone(), verdicts))
}

/// Certification first, refutation second, for one point.
pub fn classify_point(prob: &Problem, x: &crate::dynamics::StatePoint, notion: Notion, eps: &Q, budget: &ClassifyBudget) -> Result<Verdict> {
    match certify_point(prob, x, notion, eps, budget)? {
        v @ Verdict::Certified(_) => Ok(v),
        _ => refute_point(prob, x, notion, eps, &budget.refute_delta, budget.refute_horizon, budget),
    }
}
