//! Invariance kernels over target grids, spanning-set covers and complexity
//! profiles.

mod cover;
mod enumerate;
mod profile;

use std::fmt;
use std::str::FromStr;

use fixedbitset::FixedBitSet;
use num_traits::Zero;

use crate::dynamics::{fmt_q, q, ControlSystem, Scalar, StatePoint, SymbolicPoint, Q};
use crate::error::{IvlError, Result};
use crate::metrics::TargetSet;

pub use cover::{cover_lower_bound, greedy_cover, min_cover, solve_cover, CoverSolution, Optimality};
pub use enumerate::{enumerate_words, KernelRow, KernelTable, SpanBudget};
pub use profile::{
    bounded_complexity_verdict, complexity_profile, entropy_estimate, ComplexityProfile, ComplexityVerdict,
    EntropyEstimate, ProfileEntry,
};

/// Sup-norm kernels Q_{n,ω}^ε or running-mean kernels Q̂_{n,ω}^ε.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Plain,
    Mean,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Plain => "plain",
            Mode::Mean => "mean",
        })
    }
}

impl FromStr for Mode {
    type Err = IvlError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(Mode::Plain),
            "mean" => Ok(Mode::Mean),
            _ => Err(IvlError::InvalidInput(format!("unknown mode {s:?}, expected plain or mean"))),
        }
    }
}

/// Mesh of a target grid.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Resolution {
    /// Max gap of an interval grid.
    Step(Q),
    /// Number of leading blocks fixed in a block-language grid.
    Depth(usize),
}

impl Resolution {
    pub fn refine(&self) -> Resolution {
        match self {
            Resolution::Step(h) => Resolution::Step(h * q(1, 2)),
            Resolution::Depth(d) => Resolution::Depth(d + 1),
        }
    }

    /// Whether a grid at `self` contains every point of a grid at `other`.
    pub fn at_least_as_fine(&self, other: &Resolution) -> bool {
        match (self, other) {
            (Resolution::Step(a), Resolution::Step(b)) => a <= b && (b / a).is_integer(),
            (Resolution::Depth(a), Resolution::Depth(b)) => a >= b,
            _ => false,
        }
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resolution::Step(h) => write!(f, "step {}", fmt_q(h)),
            Resolution::Depth(d) => write!(f, "depth {d}"),
        }
    }
}

/// Finite surrogate for the compact target set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TargetGrid {
    pub points: Vec<StatePoint>,
    pub resolution: Resolution,
}

impl TargetGrid {
    /// Interval grids step through each component and include its endpoints.
    /// Block grids are all codes of `depth` blocks followed by the first block
    /// repeated forever.
    pub fn new(target: &TargetSet, resolution: Resolution) -> Result<Self> {
        let points = match (target, &resolution) {
            (TargetSet::IntervalUnion(parts), Resolution::Step(h)) => {
                if *h <= Q::zero() {
                    return Err(IvlError::InvalidInput("grid step must be positive".into()));
                }
                let mut pts = Vec::new();
                for (a, b) in parts {
                    let mut x = a.clone();
                    while &x < b {
                        pts.push(StatePoint::real(x.clone()));
                        x += h;
                    }
                    pts.push(StatePoint::real(b.clone()));
                }
                pts
            }
            (TargetSet::BlockLanguage(lang), Resolution::Depth(d)) => {
                let nb = lang.blocks().len();
                let tail = lang.blocks()[0].clone();
                let count = nb.checked_pow(*d as u32).filter(|&c| c <= 1 << 20).ok_or_else(|| {
                    IvlError::BudgetExceeded(format!("block grid of depth {d} is too large"))
                })?;
                (0..count)
                    .map(|mut code| {
                        let mut blocks = vec![0; *d];
                        for slot in blocks.iter_mut().rev() {
                            *slot = code % nb;
                            code /= nb;
                        }
                        let point = SymbolicPoint::new(&lang.embed(&blocks), &tail)?;
                        Ok(StatePoint::Symbolic(point))
                    })
                    .collect::<Result<_>>()?
            }
            _ => return Err(IvlError::InvalidInput("grid resolution does not match the target set".into())),
        };
        Ok(TargetGrid { points, resolution })
    }

    pub fn refine(&self, target: &TargetSet) -> Result<Self> {
        Self::new(target, self.resolution.refine())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of the grid point closest to `x` (first on ties).
    pub fn nearest(&self, x: &StatePoint, sys: &ControlSystem) -> Result<usize> {
        let mut best: Option<(Q, usize)> = None;
        for (i, p) in self.points.iter().enumerate() {
            let d = sys.space.distance(x, p)?.midpoint();
            if best.as_ref().is_none_or(|(b, _)| &d < b) {
                best = Some((d, i));
            }
        }
        best.map(|(_, i)| i).ok_or_else(|| IvlError::InvalidInput("empty grid".into()))
    }
}

/// Per-point running state of a kernel check.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Track {
    pub state: StatePoint,
    pub sum: Scalar,
}

/// Outcome of checking index `k` of an orbit against the kernel criterion.
pub(crate) enum Check {
    Keep(Track),
    Drop,
    Indeterminate,
}

/// Admits index `k` (state already at φ(k)) given the sum over indices `< k`.
pub(crate) fn admit(target: &TargetSet, eps: &Q, mode: Mode, state: StatePoint, prior: &Scalar, k: usize) -> Check {
    let d = match target.dist(&state) {
        Ok(d) => d,
        Err(_) => return Check::Indeterminate,
    };
    let sum = prior.add(&d);
    let test = match mode {
        Mode::Plain => d.lt_q(eps),
        Mode::Mean => sum.mul_q(&q(1, k as i64 + 1)).lt_q(eps),
    };
    match test {
        Ok(true) => Check::Keep(Track { state, sum }),
        Ok(false) => Check::Drop,
        Err(_) => Check::Indeterminate,
    }
}

/// Membership of one point in the kernel of `word` at horizon `|word|`.
pub fn kernel_member(sys: &ControlSystem, target: &TargetSet, x: &StatePoint, word: &[u8], eps: &Q, mode: Mode) -> bool {
    let mut track = Track { state: x.clone(), sum: Scalar::zero() };
    for k in 0..word.len() {
        if k > 0 {
            match sys.step(&track.state, word[k - 1]) {
                Ok(s) => track.state = s,
                Err(_) => return false,
            }
        }
        match admit(target, eps, mode, track.state.clone(), &track.sum, k) {
            Check::Keep(t) => track = t,
            _ => return false,
        }
    }
    true
}

/// Kernel Q_{n,w}^ε (or Q̂) of a single word of length `n ≥ 1`, over the grid.
/// Indeterminate points are left out.
pub fn kernel_row(sys: &ControlSystem, target: &TargetSet, grid: &TargetGrid, word: &[u8], eps: &Q, mode: Mode) -> Result<FixedBitSet> {
    if word.is_empty() || *eps <= Q::zero() {
        return Err(IvlError::InvalidInput("kernel rows need |w| >= 1 and eps > 0".into()));
    }
    let mut bits = FixedBitSet::with_capacity(grid.len());
    for (i, x) in grid.points.iter().enumerate() {
        if kernel_member(sys, target, x, word, eps, mode) {
            bits.insert(i);
        }
    }
    Ok(bits)
}
