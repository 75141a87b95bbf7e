//! Reachable sets, control-set property checks and the dichotomy probes.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::RangeInclusive;

use num_traits::{ToPrimitive, Zero};

use crate::classify::{certify_point, classify_set, refute_point, ClassifyBudget, Notion, Problem, SetReport, Verdict};
use crate::dynamics::{fmt_q, q, word_str, ControlSchedule, ControlSystem, StatePoint, StateSpace, Word, Q};
use crate::error::{IvlError, Result};
use crate::metrics::TargetSet;
use crate::par::Exec;
use crate::spanning::{enumerate_words, Mode, Resolution, SpanBudget, TargetGrid};

/// A reached state with the step count and word that reach it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReachEntry {
    pub state: StatePoint,
    pub m: usize,
    pub word: Word,
}

/// States reachable from `source` within `horizon` steps, one representative
/// per grid cell. Cells are intervals of the grid step, or cylinders of the
/// grid depth (in symbols of the longest block) for symbolic spaces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReachSet {
    pub source: StatePoint,
    pub horizon: usize,
    pub resolution: Resolution,
    pub entries: Vec<ReachEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Cell {
    Interval(i64),
    Cylinder(Vec<u8>),
}

fn cell(space: &StateSpace, res: &Resolution, x: &StatePoint) -> Result<Cell> {
    match (x, res) {
        (StatePoint::Real(s), Resolution::Step(h)) => {
            let lo = match space {
                StateSpace::Interval { lo, .. } => lo.clone(),
                _ => Q::zero(),
            };
            let k = ((s.midpoint() - lo) / h).floor().to_integer().to_i64().ok_or_else(|| IvlError::InvalidInput("cell index overflow".into()))?;
            Ok(Cell::Interval(k))
        }
        (StatePoint::Symbolic(p), Resolution::Depth(d)) => Ok(Cell::Cylinder(p.head(*d))),
        _ => Err(IvlError::InvalidInput("reach resolution does not match the state space".into())),
    }
}

impl ReachSet {
    /// Replays every witness word and checks it lands in the recorded cell.
    pub fn replay(&self, sys: &ControlSystem) -> Result<bool> {
        for e in &self.entries {
            let y = sys.run(&self.source, &e.word)?;
            if e.word.len() != e.m || cell(&sys.space, &self.resolution, &y)? != cell(&sys.space, &self.resolution, &e.state)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn contains_cell_of(&self, sys: &ControlSystem, x: &StatePoint) -> Result<bool> {
        let c = cell(&sys.space, &self.resolution, x)?;
        for e in &self.entries {
            if cell(&sys.space, &self.resolution, &e.state)? == c {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// Breadth-first reach-set sweep with one witness per cell. The first word
/// to reach a cell (fewest steps, then lexicographically least) is kept and
/// only that representative is expanded further, so completeness holds only
/// down to the cell size.
pub fn reachable_set(sys: &ControlSystem, x: &StatePoint, n: usize, resolution: &Resolution, max_cells: usize, exec: Exec) -> Result<ReachSet> {
    if !sys.space.contains(x) {
        return Err(IvlError::OutOfSpace(x.to_string()));
    }
    let alphabet = sys.alphabet_size() as u8;
    let mut seen: BTreeMap<Cell, usize> = BTreeMap::new();
    let mut entries = vec![ReachEntry { state: x.clone(), m: 0, word: Vec::new() }];
    seen.insert(cell(&sys.space, resolution, x)?, 0);
    let mut frontier = vec![0usize];
    for m in 1..=n {
        if frontier.is_empty() {
            break;
        }
        let parents: Vec<&ReachEntry> = frontier.iter().map(|&i| &entries[i]).collect();
        let kids: Vec<Result<Vec<(Cell, ReachEntry)>>> = exec.map(&parents, |p| {
            (0..alphabet)
                .map(|u| {
                    let y = sys.step(&p.state, u)?;
                    let mut word = p.word.clone();
                    word.push(u);
                    Ok((cell(&sys.space, resolution, &y)?, ReachEntry { state: y, m, word }))
                })
                .collect()
        });
        let mut next = Vec::new();
        for batch in kids {
            for (c, e) in batch? {
                if seen.contains_key(&c) {
                    continue;
                }
                seen.insert(c, entries.len());
                next.push(entries.len());
                entries.push(e);
                if entries.len() > max_cells {
                    return Err(IvlError::BudgetExceeded(format!("reach set from {x} exceeds {max_cells} cells at step {m}")));
                }
            }
        }
        frontier = next;
    }
    Ok(ReachSet { source: x.clone(), horizon: n, resolution: resolution.clone(), entries })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvarianceReport {
    pub epsilon: Q,
    pub horizon: usize,
    /// Grid points with a word keeping them ε-near Q, and the first such word.
    pub kept: Vec<(StatePoint, Word)>,
    /// Grid points no word of length N keeps: non-invariance at this resolution.
    pub failing: Vec<StatePoint>,
}

impl InvarianceReport {
    pub fn passed(&self) -> bool {
        self.failing.is_empty()
    }
}

/// Existence of a keeping word of length `n` at every grid point
/// (nonempty kernel columns).
pub fn controlled_invariance_check(sys: &ControlSystem, target: &TargetSet, grid: &TargetGrid, n: usize, eps: &Q, exec: Exec) -> Result<InvarianceReport> {
    let tables = enumerate_words(sys, target, grid, eps, n, Mode::Plain, &SpanBudget::default(), exec)?;
    let table = tables.last().filter(|t| t.complete).ok_or(IvlError::IncompleteTable)?;
    let mut kept = Vec::new();
    let mut failing = Vec::new();
    for (i, p) in grid.points.iter().enumerate() {
        match table.rows.iter().find(|r| r.bits.contains(i)) {
            Some(r) => kept.push((p.clone(), r.word.clone())),
            None => failing.push(p.clone()),
        }
    }
    Ok(InvarianceReport { epsilon: eps.clone(), horizon: n, kept, failing })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReachabilityReport {
    pub epsilon: Q,
    pub horizon: usize,
    /// Per source: fraction of grid points within ε of its reach set.
    pub fractions: Vec<(StatePoint, Q)>,
}

impl ReachabilityReport {
    pub fn min(&self) -> Q {
        self.fractions.iter().map(|(_, f)| f.clone()).min().unwrap_or_else(Q::zero)
    }

    /// Sources that do not approximately reach the whole grid.
    pub fn flagged(&self) -> impl Iterator<Item = &StatePoint> {
        self.fractions.iter().filter(|(_, f)| *f < q(1, 1)).map(|(p, _)| p)
    }
}

fn near_fraction(sys: &ControlSystem, reach: &ReachSet, grid: &TargetGrid, eps: &Q) -> Result<Q> {
    let hit = match &sys.space {
        StateSpace::Interval { .. } => {
            // Midpoint-sorted reach states; an exact check runs on a window.
            let mut mids: Vec<(f64, &StatePoint)> = reach.entries.iter().map(|e| (e.state.as_real().map_or(0.0, |s| s.to_f64()), &e.state)).collect();
            mids.sort_by(|a, b| a.0.total_cmp(&b.0));
            let e = eps.to_f64().unwrap_or(1.0) + 1e-9;
            let mut hit = 0usize;
            for y in &grid.points {
                let yv = y.as_real().map_or(0.0, |s| s.to_f64());
                let start = mids.partition_point(|(v, _)| *v < yv - e);
                let mut found = false;
                for (v, s) in &mids[start..] {
                    if *v > yv + e {
                        break;
                    }
                    if sys.space.distance(s, y)?.lt_q(eps).unwrap_or(false) {
                        found = true;
                        break;
                    }
                }
                hit += found as usize;
            }
            hit
        }
        StateSpace::Symbolic { .. } => {
            let mut hit = 0usize;
            for y in &grid.points {
                for e in &reach.entries {
                    if sys.space.distance(&e.state, y)?.lt_q(eps).unwrap_or(false) {
                        hit += 1;
                        break;
                    }
                }
            }
            hit
        }
    };
    Ok(q(hit as i64, grid.len().max(1) as i64))
}

/// For each grid point as source, the share of grid points approximately
/// reached within `n` steps (reach cells at the grid resolution).
pub fn approx_reachability_check(sys: &ControlSystem, grid: &TargetGrid, eps: &Q, n: usize, max_cells: usize, exec: Exec) -> Result<ReachabilityReport> {
    if *eps <= Q::zero() {
        return Err(IvlError::InvalidInput("epsilon must be positive".into()));
    }
    let fractions = exec.map(&grid.points, |x| -> Result<(StatePoint, Q)> {
        let reach = reachable_set(sys, x, n, &grid.resolution, max_cells, Exec::Sequential)?;
        Ok((x.clone(), near_fraction(sys, &reach, grid, eps)?))
    });
    Ok(ReachabilityReport { epsilon: eps.clone(), horizon: n, fractions: fractions.into_iter().collect::<Result<_>>()? })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReturnStatus {
    /// The orbit stays ε-near Q throughout.
    Stayed,
    /// Left B_ε(Q) at `exit` and is back at the endpoint.
    Excursion { exit: usize, back: usize },
    /// Precondition failed: the start is not in Q or the endpoint is not ε-near Q.
    Skipped(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReturnSample {
    pub point: StatePoint,
    pub schedule: ControlSchedule,
    pub steps: usize,
    pub status: ReturnStatus,
}

impl ReturnSample {
    pub fn flagged(&self) -> bool {
        matches!(self.status, ReturnStatus::Excursion { .. })
    }
}

/// Flags sampled trajectories that start in Q, leave B_ε(Q) and come back:
/// evidence against the no-return property at this resolution.
pub fn no_return_check(sys: &ControlSystem, target: &TargetSet, samples: &[(StatePoint, ControlSchedule, usize)], eps: &Q) -> Result<Vec<ReturnSample>> {
    let mut out = Vec::with_capacity(samples.len());
    for (x, omega, n) in samples {
        let status = if !target.contains(x)? {
            ReturnStatus::Skipped(format!("{x} is not in Q"))
        } else {
            let traj = sys.trajectory(x, omega, *n)?;
            let near: Vec<Option<bool>> = traj.iter().map(|s| target.dist(s).ok().and_then(|d| d.lt_q(eps).ok())).collect();
            match near.last().copied().flatten() {
                Some(true) => match near.iter().position(|b| *b != Some(true)) {
                    None => ReturnStatus::Stayed,
                    Some(exit) if near[exit] == Some(false) => {
                        let back = (exit..near.len()).find(|&k| near[k] == Some(true)).unwrap_or(*n);
                        ReturnStatus::Excursion { exit, back }
                    }
                    Some(k) => ReturnStatus::Skipped(format!("distance at step {k} is ambiguous")),
                },
                Some(false) => ReturnStatus::Skipped("the endpoint is not within eps of Q".into()),
                None => ReturnStatus::Skipped("the endpoint distance is ambiguous".into()),
            }
        };
        out.push(ReturnSample { point: x.clone(), schedule: omega.clone(), steps: *n, status });
    }
    Ok(out)
}

fn membership(prob: &Problem, x: &StatePoint, notion: Notion, k: u32, budget: &ClassifyBudget) -> Result<Verdict> {
    if k == 0 {
        return Err(IvlError::InvalidInput("k must be at least 1".into()));
    }
    let eps = q(1, k as i64);
    match certify_point(prob, x, notion, &eps, budget)? {
        Verdict::Inconclusive(why) => match refute_point(prob, x, notion, &eps, &budget.refute_delta, budget.refute_horizon, budget)? {
            Verdict::Inconclusive(why2) => Ok(Verdict::Inconclusive(format!("{why}; {why2}"))),
            v => Ok(v),
        },
        v => Ok(v),
    }
}

/// Membership of `x` in EIM_k(Q): equi-invariance in the mean at ε = 1/k.
pub fn eimk_membership(prob: &Problem, x: &StatePoint, k: u32, budget: &ClassifyBudget) -> Result<Verdict> {
    membership(prob, x, Notion::EIM, k, budget)
}

/// Membership of `x` in MEI_k(Q): mean equi-invariance at ε = 1/k.
pub fn meik_membership(prob: &Problem, x: &StatePoint, k: u32, budget: &ClassifyBudget) -> Result<Verdict> {
    membership(prob, x, Notion::MEI, k, budget)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DichotomyMode {
    /// Running means over all horizons (EIM_k).
    Mean,
    /// Limsup of running means (MEI_k).
    LimsupMean,
}

impl std::str::FromStr for DichotomyMode {
    type Err = IvlError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(DichotomyMode::Mean),
            "limsup" | "limsup-mean" => Ok(DichotomyMode::LimsupMean),
            _ => Err(IvlError::InvalidInput(format!("unknown dichotomy mode {s:?}, expected mean or limsup"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DichotomyVerdict {
    EquiInvariantInMeanEvidence,
    UnstableInMeanEvidence { k: u32 },
    MeanEquiInvariantEvidence,
    MeanUnstableEvidence { k: u32 },
    Inconclusive(String),
}

#[derive(Clone, Debug)]
pub struct DichotomyReport {
    pub mode: DichotomyMode,
    pub verdict: DichotomyVerdict,
    /// Result of the syntactic density check on Q; probes run regardless.
    pub hypothesis: std::result::Result<(), String>,
    /// One set report per probed k, with replayable certificates/refutations.
    pub levels: Vec<(u32, SetReport)>,
}

impl fmt::Display for DichotomyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "dichotomy probe ({:?})", self.mode)?;
        match &self.hypothesis {
            Ok(()) => writeln!(f, "density hypothesis: ok")?,
            Err(w) => writeln!(f, "density hypothesis: WARNING {w}")?,
        }
        for (k, r) in &self.levels {
            let refuted = r.refuted().count();
            writeln!(f, "k={k} eps={} points={} certified={} refuted={refuted} -> {}", fmt_q(&r.epsilon), r.points.len(), r.certified(), r.summary())?;
        }
        writeln!(f, "verdict: {:?}", self.verdict)
    }
}

/// cl Int(Q) = cl Q, checked syntactically: interval components must be
/// nondegenerate. Block languages satisfy it by construction.
pub fn density_hypothesis(target: &TargetSet) -> std::result::Result<(), String> {
    match target {
        TargetSet::IntervalUnion(parts) => match parts.iter().find(|(a, b)| a >= b) {
            Some((a, _)) => Err(format!("isolated point {} has empty interior", fmt_q(a))),
            None if parts.is_empty() => Err("empty target set".into()),
            None => Ok(()),
        },
        TargetSet::BlockLanguage(_) => Ok(()),
    }
}

/// Equi-invariance evidence when every grid point is certified for every k;
/// instability evidence when for some k every grid point is refuted (an
/// empty EIM_k or MEI_k at this resolution).
pub fn dichotomy_probe(prob: &Problem, ks: RangeInclusive<u32>, budget: &ClassifyBudget, mode: DichotomyMode) -> Result<DichotomyReport> {
    if *ks.start() == 0 || ks.is_empty() {
        return Err(IvlError::InvalidInput("k range must be nonempty and start at 1 or more".into()));
    }
    let notion = match mode {
        DichotomyMode::Mean => Notion::EIM,
        DichotomyMode::LimsupMean => Notion::MEI,
    };
    let mut levels = Vec::new();
    for k in ks {
        levels.push((k, classify_set(prob, notion, &q(1, k as i64), budget)?));
    }
    let unstable = levels.iter().find(|(_, r)| !r.points.is_empty() && r.refuted().count() == r.points.len()).map(|(k, _)| *k);
    let verdict = match (unstable, mode) {
        (Some(k), DichotomyMode::Mean) => DichotomyVerdict::UnstableInMeanEvidence { k },
        (Some(k), DichotomyMode::LimsupMean) => DichotomyVerdict::MeanUnstableEvidence { k },
        (None, _) if levels.iter().all(|(_, r)| r.summary() == "Certified") => match mode {
            DichotomyMode::Mean => DichotomyVerdict::EquiInvariantInMeanEvidence,
            DichotomyMode::LimsupMean => DichotomyVerdict::MeanEquiInvariantEvidence,
        },
        (None, _) => {
            let (k, r) = levels.iter().find(|(_, r)| r.summary() != "Certified").expect("some level is not certified");
            DichotomyVerdict::Inconclusive(format!("k={k}: {} of {} points certified, {} refuted", r.certified(), r.points.len(), r.refuted().count()))
        }
    };
    Ok(DichotomyReport { mode, verdict, hypothesis: density_hypothesis(&prob.target), levels })
}

/// Human-readable witness for reach-set exports.
pub fn reach_witness(e: &ReachEntry) -> String {
    if e.word.is_empty() {
        "-".into()
    } else {
        word_str(&e.word)
    }
}
