//! Distances to target sets, Birkhoff means and upper densities.

use num_bigint::BigInt;
use num_traits::Zero;

use crate::dynamics::{fmt_q, q, ControlSchedule, ControlSystem, Scalar, StatePoint, SymbolicPoint, Q};
use crate::error::{IvlError, Result};

/// Infinite concatenations of a finite set of blocks.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BlockLanguage {
    blocks: Vec<Vec<u8>>,
}

/// Position of the block-prefix automaton: `None` between blocks.
type Cursor = Option<(usize, usize)>;

impl BlockLanguage {
    pub fn new(blocks: Vec<Vec<u8>>) -> Result<Self> {
        if blocks.is_empty() || blocks.iter().any(|b| b.is_empty()) {
            return Err(IvlError::InvalidInput("blocks must be nonempty".into()));
        }
        for (i, a) in blocks.iter().enumerate() {
            if blocks[..i].iter().any(|b| b[0] == a[0]) {
                return Err(IvlError::InvalidInput("blocks must start with distinct symbols".into()));
            }
        }
        Ok(BlockLanguage { blocks })
    }

    pub fn blocks(&self) -> &[Vec<u8>] {
        &self.blocks
    }

    fn advance(&self, at: Cursor, c: u8) -> Option<Cursor> {
        let (b, pos) = match at {
            None => (self.blocks.iter().position(|b| b[0] == c)?, 0),
            Some((b, pos)) => {
                if self.blocks[b][pos] != c {
                    return None;
                }
                (b, pos)
            }
        };
        Some(if pos + 1 == self.blocks[b].len() { None } else { Some((b, pos + 1)) })
    }

    /// Greedy parse: complete blocks read, and the index where the word stops
    /// being a prefix of any concatenation (`None` if it never does).
    pub fn parse(&self, word: &[u8]) -> (Vec<usize>, Option<usize>) {
        let mut out = Vec::new();
        let mut at: Cursor = None;
        for (i, &c) in word.iter().enumerate() {
            match self.advance(at, c) {
                None => return (out, Some(i)),
                Some(next) => {
                    if next.is_none() {
                        out.push(at.map_or_else(|| self.blocks.iter().position(|b| b[0] == c).unwrap(), |(b, _)| b));
                    }
                    at = next;
                }
            }
        }
        (out, None)
    }

    /// Concatenation of the given blocks.
    pub fn embed(&self, blocks: &[usize]) -> Vec<u8> {
        blocks.iter().flat_map(|&b| self.blocks[b].iter().copied()).collect()
    }

    /// Length of the longest prefix of `x` extendable into the language,
    /// `None` when all of `x` is in it.
    pub fn longest_prefix(&self, x: &SymbolicPoint) -> Option<usize> {
        let mut at: Cursor = None;
        let mut i = 0;
        for &c in x.prefix() {
            match self.advance(at, c) {
                None => return Some(i),
                Some(next) => at = next,
            }
            i += 1;
        }
        // Each cycle pass starts in one of finitely many automaton states.
        let mut seen: Vec<Cursor> = Vec::new();
        loop {
            if seen.contains(&at) {
                return None;
            }
            seen.push(at);
            for &c in x.cycle() {
                match self.advance(at, c) {
                    None => return Some(i),
                    Some(next) => at = next,
                }
                i += 1;
            }
        }
    }

    pub fn distance(&self, x: &SymbolicPoint) -> Q {
        match self.longest_prefix(x) {
            None => Q::zero(),
            Some(l) => q(1, l as i64 + 1),
        }
    }
}

/// The target set Q.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TargetSet {
    /// Sorted, disjoint, nonempty closed intervals.
    IntervalUnion(Vec<(Q, Q)>),
    BlockLanguage(BlockLanguage),
}

impl TargetSet {
    pub fn intervals(mut parts: Vec<(Q, Q)>) -> Result<Self> {
        parts.sort();
        if parts.is_empty() || parts.iter().any(|(a, b)| a > b) || parts.windows(2).any(|w| w[0].1 >= w[1].0) {
            return Err(IvlError::InvalidInput("interval union must be nonempty, sorted and disjoint".into()));
        }
        Ok(TargetSet::IntervalUnion(parts))
    }

    pub fn interval(a: Q, b: Q) -> Result<Self> {
        Self::intervals(vec![(a, b)])
    }

    pub fn describe(&self) -> String {
        match self {
            TargetSet::IntervalUnion(parts) => parts
                .iter()
                .map(|(a, b)| format!("[{}, {}]", fmt_q(a), fmt_q(b)))
                .collect::<Vec<_>>()
                .join(" u "),
            TargetSet::BlockLanguage(l) => {
                let bs: Vec<String> = l.blocks.iter().map(|b| String::from_utf8_lossy(b).into_owned()).collect();
                format!("concatenations of {{{}}}", bs.join(", "))
            }
        }
    }

    pub fn contains(&self, x: &StatePoint) -> Result<bool> {
        Ok(self.dist(x)?.try_cmp_q(&Q::zero())? == std::cmp::Ordering::Equal)
    }

    /// inf over Q of the state-space metric.
    pub fn dist(&self, x: &StatePoint) -> Result<Scalar> {
        match (self, x) {
            (TargetSet::IntervalUnion(parts), StatePoint::Real(s)) => Ok(interval_distance(parts, s)),
            (TargetSet::BlockLanguage(l), StatePoint::Symbolic(p)) => Ok(Scalar::exact(l.distance(p))),
            _ => Err(IvlError::InvalidInput("target set does not match the state kind".into())),
        }
    }

    /// Whether `d(x, Q) < eps`.
    pub fn in_neighborhood(&self, x: &StatePoint, eps: &Q) -> Result<bool> {
        self.dist(x)?.lt_q(eps)
    }
}

fn interval_distance(parts: &[(Q, Q)], s: &Scalar) -> Scalar {
    let zero = Q::zero();
    if let Scalar::Exact(x) = s {
        let d = parts
            .iter()
            .map(|(a, b)| (a - x).max(x - b).max(zero.clone()))
            .min()
            .unwrap();
        return Scalar::exact(d);
    }
    // Distance to an interval is 1-Lipschitz; bound it over the enclosure.
    let (l, h) = (s.lower(), s.upper());
    let lo = parts.iter().map(|(a, b)| (a - &h).max(&l - b).max(zero.clone())).min().unwrap();
    let hi = parts.iter().map(|(a, b)| (a - &l).max(&h - b).max(zero.clone())).min().unwrap();
    Scalar::enclosure(&lo, &hi)
}

/// Distances `d(φ(i, x, ω), Q)` for `i < n`.
pub fn distances(sys: &ControlSystem, x: &StatePoint, omega: &ControlSchedule, target: &TargetSet, n: usize) -> Result<Vec<Scalar>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    sys.trajectory(x, omega, n - 1)?.iter().map(|s| target.dist(s)).collect()
}

/// Running means `(1/k) Σ_{i<k} d_i` for `k = 1..=n` and their prefix maxima.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeanProfile {
    pub values: Vec<Scalar>,
    pub running_max: Vec<Scalar>,
}

impl MeanProfile {
    pub fn from_distances(d: &[Scalar]) -> Self {
        let mut values = Vec::with_capacity(d.len());
        let mut running_max: Vec<Scalar> = Vec::with_capacity(d.len());
        let mut sum = Scalar::zero();
        for (i, di) in d.iter().enumerate() {
            sum = sum.add(di);
            let m = sum.mul_q(&q(1, i as i64 + 1));
            let r = match running_max.last() {
                None => m.clone(),
                Some(prev) => prev.max(&m),
            };
            values.push(m);
            running_max.push(r);
        }
        MeanProfile { values, running_max }
    }

    /// Value at `k` (1-based).
    pub fn mean(&self, k: usize) -> &Scalar {
        &self.values[k - 1]
    }
}

pub fn mean_profile(sys: &ControlSystem, x: &StatePoint, omega: &ControlSchedule, target: &TargetSet, n: usize) -> Result<MeanProfile> {
    if n == 0 {
        return Err(IvlError::InvalidInput("mean profile needs n >= 1".into()));
    }
    Ok(MeanProfile::from_distances(&distances(sys, x, omega, target, n)?))
}

/// Tail estimate of the limsup of running means.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LimsupEstimate {
    /// Max of the means over `n ∈ [burn_in, burn_in + window]`.
    pub estimate: Scalar,
    /// Every step in the window provably did not raise the mean.
    pub nonincreasing: bool,
}

pub fn limsup_mean_estimate(
    sys: &ControlSystem,
    x: &StatePoint,
    omega: &ControlSchedule,
    target: &TargetSet,
    burn_in: usize,
    window: usize,
) -> Result<LimsupEstimate> {
    if window == 0 {
        return Err(IvlError::InvalidInput("window must be at least 1".into()));
    }
    let end = burn_in + window;
    let d = distances(sys, x, omega, target, end)?;
    Ok(limsup_from_distances(&d, burn_in, window))
}

pub fn limsup_from_distances(d: &[Scalar], burn_in: usize, window: usize) -> LimsupEstimate {
    let profile = MeanProfile::from_distances(d);
    let first = burn_in.max(1);
    let end = burn_in + window;
    let mut estimate = profile.mean(first).clone();
    let mut nonincreasing = true;
    #[allow(clippy::needless_range_loop)]
    for n in first..=end {
        estimate = estimate.max(profile.mean(n));
        // mean_{n+1} <= mean_n  iff  d_n <= mean_n.
        if n < end && !matches!(d[n].try_cmp(profile.mean(n)), Ok(o) if o != std::cmp::Ordering::Greater) {
            nonincreasing = false;
        }
    }
    LimsupEstimate { estimate, nonincreasing }
}

/// Max of `#(E ∩ [0, n)) / n` over `n ∈ [⌈N/2⌉, N]`.
pub fn upper_density_estimate(e: &[bool]) -> Q {
    let n_total = e.len();
    if n_total == 0 {
        return Q::zero();
    }
    let start = n_total.div_ceil(2).max(1);
    let mut count = e[..start - 1].iter().filter(|&&b| b).count();
    let mut best = Q::zero();
    for n in start..=n_total {
        if e[n - 1] {
            count += 1;
        }
        let v = Q::new(BigInt::from(count), BigInt::from(n));
        if v > best {
            best = v;
        }
    }
    best
}

/// Exceptional indices `d(φ(k), Q) >= eps` for `k < n`. Ties count as exceptions.
pub fn exception_set(d: &[Scalar], eps: &Q) -> Result<Vec<bool>> {
    d.iter().map(|di| Ok(!di.lt_q(eps)?)).collect()
}

pub fn exception_density(
    sys: &ControlSystem,
    x: &StatePoint,
    omega: &ControlSchedule,
    target: &TargetSet,
    eps: &Q,
    n: usize,
) -> Result<Q> {
    if n == 0 {
        return Err(IvlError::InvalidInput("density horizon must be at least 1".into()));
    }
    let d = distances(sys, x, omega, target, n)?;
    Ok(upper_density_estimate(&exception_set(&d, eps)?))
}
