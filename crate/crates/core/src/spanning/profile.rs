//! Complexity profiles r_inv(n, ε) / r̂_inv(n, ε), entropy slope and the
//! bounded-complexity verdict.

use fixedbitset::FixedBitSet;

use crate::dynamics::{ControlSystem, Word, Q};
use crate::error::{IvlError, Result};
use crate::metrics::TargetSet;
use crate::par::Exec;

use super::{enumerate_words, kernel_row, min_cover, Mode, Optimality, Resolution, SpanBudget, TargetGrid};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProfileEntry {
    pub n: usize,
    pub r: usize,
    pub tag: Optimality,
    pub lower_bound: usize,
    /// Whether the chosen words also span the twice-finer grid.
    pub refinement: Option<bool>,
    pub words: Vec<Word>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComplexityProfile {
    pub epsilon: Q,
    pub mode: Mode,
    pub resolution: Resolution,
    pub grid_len: usize,
    pub entries: Vec<ProfileEntry>,
}

impl ComplexityProfile {
    pub fn exact_entries(&self) -> impl Iterator<Item = &ProfileEntry> {
        self.entries.iter().filter(|e| e.tag == Optimality::Exact)
    }
}

/// Per-horizon covers for `n = 1..=n_max`. Horizons beyond an exhausted
/// enumeration budget carry the last solved size as a lower bound, which is
/// valid because both complexities are nondecreasing in `n`.
#[allow(clippy::too_many_arguments)]
pub fn complexity_profile(
    sys: &ControlSystem,
    target: &TargetSet,
    grid: &TargetGrid,
    eps: &Q,
    n_max: usize,
    mode: Mode,
    budget: &SpanBudget,
    exec: Exec,
) -> Result<ComplexityProfile> {
    let tables = enumerate_words(sys, target, grid, eps, n_max, mode, budget, exec)?;
    let fine = grid.refine(target)?;
    let mut entries: Vec<ProfileEntry> = Vec::with_capacity(tables.len());
    for t in &tables {
        if !t.complete {
            let floor = entries.last().map_or(1, |e| e.lower_bound);
            entries.push(ProfileEntry { n: t.horizon, r: floor, tag: Optimality::LowerBound, lower_bound: floor, refinement: None, words: Vec::new() });
            continue;
        }
        let cover = min_cover(t, grid, budget)?;
        let rows = exec
            .map(&cover.words, |w| kernel_row(sys, target, &fine, w, eps, mode))
            .into_iter()
            .collect::<Result<Vec<FixedBitSet>>>()?;
        let mut union = FixedBitSet::with_capacity(fine.len());
        for r in &rows {
            union.union_with(r);
        }
        entries.push(ProfileEntry {
            n: t.horizon,
            r: cover.size,
            tag: cover.tag,
            lower_bound: cover.lower_bound,
            refinement: Some(union.count_ones(..) == fine.len()),
            words: cover.words,
        });
    }
    Ok(ComplexityProfile { epsilon: eps.clone(), mode, resolution: grid.resolution.clone(), grid_len: grid.len(), entries })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntropyEstimate {
    /// `(n, ln r(n) / n)`.
    pub per_n: Vec<(usize, f64)>,
    /// Least-squares slope of `ln r(n)` against `n` over the tail half.
    pub slope: f64,
    /// Set when some entries are not exact, so the numbers only bound the truth.
    pub bound_only: bool,
}

/// Growth-rate estimate at the profile's fixed ε. Never extrapolates ε → 0.
pub fn entropy_estimate(profile: &ComplexityProfile) -> Result<EntropyEstimate> {
    let exact: Vec<&ProfileEntry> = profile.exact_entries().collect();
    if exact.len() < 4 {
        return Err(IvlError::InvalidInput("entropy estimate needs at least 4 exact entries".into()));
    }
    let per_n = profile.entries.iter().map(|e| (e.n, (e.r as f64).ln() / e.n as f64)).collect();
    let tail = &exact[exact.len() / 2..];
    let xs: Vec<f64> = tail.iter().map(|e| e.n as f64).collect();
    let ys: Vec<f64> = tail.iter().map(|e| (e.r as f64).ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    Ok(EntropyEstimate { per_n, slope, bound_only: exact.len() != profile.entries.len() })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ComplexityVerdict {
    BoundedEvidence(usize),
    GrowthEvidence,
    Inconclusive(String),
}

fn strict_increases(es: &[&ProfileEntry]) -> usize {
    es.windows(2).filter(|w| w[1].r > w[0].r).count()
}

/// Bounded when the exact tail half is constant and survives refinement.
/// Growth when the tail strictly increases at three or more horizons, or when
/// the tail is resolution-limited (fails refinement) after at least three
/// strict increases among refinement-checked entries.
pub fn bounded_complexity_verdict(profile: &ComplexityProfile) -> ComplexityVerdict {
    let exact: Vec<&ProfileEntry> = profile.exact_entries().collect();
    if exact.len() < 8 {
        return ComplexityVerdict::Inconclusive(format!("only {} exact entries, need 8", exact.len()));
    }
    let tail = &exact[exact.len() / 2..];
    let refined = |e: &&ProfileEntry| e.refinement == Some(true);
    if tail.iter().all(|e| e.r == tail[0].r) && tail.iter().all(refined) {
        return ComplexityVerdict::BoundedEvidence(tail[0].r);
    }
    if strict_increases(tail) >= 3 {
        return ComplexityVerdict::GrowthEvidence;
    }
    let trusted: Vec<&ProfileEntry> = exact.iter().copied().filter(refined).collect();
    if tail.iter().any(|e| e.refinement == Some(false)) && strict_increases(&trusted) >= 3 {
        return ComplexityVerdict::GrowthEvidence;
    }
    ComplexityVerdict::Inconclusive("tail neither constant under refinement nor growing".into())
}
