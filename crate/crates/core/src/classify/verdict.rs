use std::fmt;

use crate::dynamics::{fmt_q, q, word_str, ControlSchedule, Scalar, StatePoint, Word, Q};
use crate::error::{IvlError, Result};
use crate::spanning::{enumerate_words, Mode, Resolution, SpanBudget, TargetGrid};

use super::{evaluate, Criterion, Notion, Outcome, Problem, Trap};

/// Steps checked by a certificate or refutation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Horizon {
    Steps(usize),
    /// Means over `n ∈ [burn_in, burn_in + window]`.
    Tail { burn_in: usize, window: usize },
}

impl Horizon {
    /// Number of orbit indices inspected.
    pub fn steps(&self) -> usize {
        match self {
            Horizon::Steps(n) => *n,
            Horizon::Tail { burn_in, window } => burn_in + window,
        }
    }

    pub fn tail(&self) -> (usize, usize) {
        match self {
            Horizon::Steps(n) => (n / 2, n - n / 2),
            Horizon::Tail { burn_in, window } => (*burn_in, *window),
        }
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Steps(n) => write!(f, "N={n}"),
            Horizon::Tail { burn_in, window } => write!(f, "burn_in={burn_in} window={window}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub point: StatePoint,
    /// Index into the certificate's family.
    pub schedule: usize,
    /// The passing value recorded at certification time.
    pub value: Scalar,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub notion: Notion,
    pub point: StatePoint,
    pub epsilon: Q,
    pub delta: Q,
    pub family: Vec<ControlSchedule>,
    pub horizon: Horizon,
    pub resolution: Resolution,
    pub witnesses: Vec<Witness>,
}

impl Certificate {
    /// Re-runs every witness and checks it reproduces the recorded value.
    pub fn replay(&self, prob: &Problem) -> Result<()> {
        self.replay_at(prob, &self.epsilon)
    }

    /// Replay at a looser tolerance `eps ≥ ε`.
    pub fn replay_at(&self, prob: &Problem, eps: &Q) -> Result<()> {
        if self.notion.single() && self.family.len() != 1 {
            return Err(IvlError::InvalidInput(format!("{} certificate needs exactly one schedule", self.notion)));
        }
        if eps < &self.epsilon {
            return Err(IvlError::InvalidInput("replay tolerance below the certified one".into()));
        }
        for w in &self.witnesses {
            let d = prob.sys.space.distance(&self.point, &w.point)?;
            if !d.lt_q(&self.delta)? {
                return Err(IvlError::InvalidInput(format!("witness {} lies outside the neighbourhood", w.point)));
            }
            let omega = self.family.get(w.schedule).ok_or_else(|| IvlError::InvalidInput("witness schedule out of range".into()))?;
            let got = evaluate(&prob.sys, &prob.target, &w.point, omega, self.notion.criterion(), eps, &self.horizon);
            if got != Outcome::Pass(w.value.clone()) {
                return Err(IvlError::InvalidInput(format!("witness {} under {} replayed as {:?}", w.point, omega, got)));
            }
        }
        Ok(())
    }

    /// A single-control certificate read as a finite-family one.
    pub fn as_finite(&self) -> Certificate {
        Certificate { notion: self.notion.finite(), ..self.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum EscapeKind {
    /// `d(φ(m), Q) ≥ ε`.
    Sup,
    /// Running mean over indices `0..=m` is `≥ ε`.
    Mean,
    /// `φ(m)` entered a forward-invariant set at distance `gap` from Q.
    Trap { lo: Q, hi: Q, gap: Q },
}

/// Violation by ball point `point` at index `index` for every word starting
/// with `prefix` (`|prefix| = index`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Escape {
    pub prefix: Word,
    pub point: StatePoint,
    pub index: usize,
    pub value: Scalar,
    pub kind: EscapeKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrowthLevel {
    pub resolution: Resolution,
    /// Ball points no two of which share a surviving word.
    pub witnesses: Vec<StatePoint>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Evidence {
    /// Prefix-free escapes covering every word of length N.
    EveryWord(Vec<Escape>),
    /// One ball point escapes under every word of length N.
    UncoverablePoint { point: StatePoint, escapes: Vec<Escape> },
    /// Pairwise-separated witnesses growing strictly across finer grids.
    LocalGrowth(Vec<GrowthLevel>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Refutation {
    pub notion: Notion,
    pub point: StatePoint,
    pub epsilon: Q,
    /// δ₀: every δ ≥ δ₀ is defeated.
    pub delta: Q,
    pub horizon: usize,
    pub resolution: Resolution,
    pub evidence: Evidence,
}

fn trap_applies(c: Criterion, gap: &Q, eps: &Q) -> bool {
    match c {
        Criterion::AllMean => gap > eps,
        _ => gap >= eps,
    }
}

impl Escape {
    /// Recomputes the violation.
    pub fn replay(&self, prob: &Problem, criterion: Criterion, eps: &Q) -> Result<()> {
        let fail = |msg: &str| Err(IvlError::InvalidInput(format!("escape of {} after {}: {msg}", self.point, word_str(&self.prefix))));
        if self.prefix.len() != self.index {
            return fail("prefix length differs from index");
        }
        let mut state = self.point.clone();
        let mut sum = Scalar::zero();
        for m in 0..=self.index {
            if m > 0 {
                state = prob.sys.step(&state, self.prefix[m - 1])?;
            }
            sum = sum.add(&prob.target.dist(&state)?);
        }
        let d = prob.target.dist(&state)?;
        let ok = match &self.kind {
            EscapeKind::Sup => criterion == Criterion::Sup && d == self.value && !d.lt_q(eps)?,
            EscapeKind::Mean => {
                let mean = sum.mul_q(&q(1, self.index as i64 + 1));
                criterion == Criterion::AllMean && mean == self.value && !mean.lt_q(eps)?
            }
            EscapeKind::Trap { lo, hi, gap } => {
                let t = Trap::verify(&prob.sys, &prob.target, lo.clone(), hi.clone())?;
                let inside = match &state {
                    StatePoint::Real(s) => s.within(lo, hi),
                    StatePoint::Symbolic(_) => false,
                };
                &t.gap == gap && inside && trap_applies(criterion, gap, eps)
            }
        };
        if ok {
            Ok(())
        } else {
            fail("violation not reproduced")
        }
    }
}

/// Prefixes must be pairwise incomparable and their cylinders must exhaust
/// `U^N`.
fn check_prefix_cover(escapes: &[Escape], alphabet: usize, n: usize) -> Result<()> {
    let mut prefixes: Vec<&Word> = escapes.iter().map(|e| &e.prefix).collect();
    prefixes.sort();
    for w in prefixes.windows(2) {
        if w[1].starts_with(w[0]) {
            return Err(IvlError::InvalidInput(format!("escape prefixes {} and {} overlap", word_str(w[0]), word_str(w[1]))));
        }
    }
    if prefixes.iter().any(|p| p.len() >= n) {
        return Err(IvlError::InvalidInput("escape index beyond the horizon".into()));
    }
    let a = alphabet as u128;
    let total = prefixes.iter().fold(0u128, |acc, p| acc.saturating_add(a.saturating_pow((n - p.len()) as u32)));
    let need = a.saturating_pow(n as u32);
    if total != need {
        return Err(IvlError::InvalidInput(format!("escapes cover {total} of {need} words")));
    }
    Ok(())
}

impl Refutation {
    pub fn replay(&self, prob: &Problem) -> Result<()> {
        let c = self.notion.criterion();
        let in_ball = |y: &StatePoint| -> Result<()> {
            if prob.sys.space.distance(&self.point, y)?.lt_q(&self.delta)? && prob.target.contains(y)? {
                Ok(())
            } else {
                Err(IvlError::InvalidInput(format!("{y} is not in the refuted neighbourhood")))
            }
        };
        match &self.evidence {
            Evidence::EveryWord(es) => {
                if !self.notion.single() {
                    return Err(IvlError::InvalidInput("per-word escapes only refute single-control notions".into()));
                }
                check_prefix_cover(es, prob.sys.alphabet_size(), self.horizon)?;
                for e in es {
                    in_ball(&e.point)?;
                    e.replay(prob, c, &self.epsilon)?;
                }
            }
            Evidence::UncoverablePoint { point, escapes } => {
                in_ball(point)?;
                check_prefix_cover(escapes, prob.sys.alphabet_size(), self.horizon)?;
                for e in escapes {
                    if &e.point != point {
                        return Err(IvlError::InvalidInput("escape at a different point".into()));
                    }
                    e.replay(prob, c, &self.epsilon)?;
                }
            }
            Evidence::LocalGrowth(levels) => {
                let mode = match c {
                    Criterion::Sup => Mode::Plain,
                    Criterion::AllMean => Mode::Mean,
                    _ => return Err(IvlError::InvalidInput("growth evidence needs a finite-horizon criterion".into())),
                };
                for w in levels.windows(2) {
                    if w[1].witnesses.len() <= w[0].witnesses.len() {
                        return Err(IvlError::InvalidInput("witness counts do not grow".into()));
                    }
                }
                for lvl in levels {
                    for y in &lvl.witnesses {
                        in_ball(y)?;
                    }
                    let grid = TargetGrid { points: lvl.witnesses.clone(), resolution: lvl.resolution.clone() };
                    let tables = enumerate_words(&prob.sys, &prob.target, &grid, &self.epsilon, self.horizon, mode, &SpanBudget::default(), prob.exec)?;
                    let last = tables.last().filter(|t| t.complete).ok_or(IvlError::IncompleteTable)?;
                    if last.rows.iter().any(|r| r.bits.count_ones(..) > 1) {
                        return Err(IvlError::InvalidInput("two growth witnesses share a word".into()));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Certified(Certificate),
    Refuted(Refutation),
    Inconclusive(String),
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Certified(_) => "Certified",
            Verdict::Refuted(_) => "RefutedAtResolution",
            Verdict::Inconclusive(_) => "Inconclusive",
        }
    }

    pub fn is_certified(&self) -> bool {
        matches!(self, Verdict::Certified(_))
    }

    pub fn is_refuted(&self) -> bool {
        matches!(self, Verdict::Refuted(_))
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Certified(c) => {
                let fam: Vec<String> = c.family.iter().map(|s| s.to_string()).collect();
                write!(
                    f,
                    "Certified {} at {} eps={} delta={} {} F={{{}}} ({} witnesses, {})",
                    c.notion,
                    c.point,
                    fmt_q(&c.epsilon),
                    fmt_q(&c.delta),
                    c.horizon,
                    fam.join(", "),
                    c.witnesses.len(),
                    c.resolution
                )
            }
            Verdict::Refuted(r) => {
                let ev = match &r.evidence {
                    Evidence::EveryWord(es) => format!("{} word escapes", es.len()),
                    Evidence::UncoverablePoint { point, escapes } => format!("{point} escapes under all words ({} prefixes)", escapes.len()),
                    Evidence::LocalGrowth(ls) => {
                        let s: Vec<String> = ls.iter().map(|l| l.witnesses.len().to_string()).collect();
                        format!("separated witnesses {}", s.join(" < "))
                    }
                };
                write!(f, "RefutedAtResolution {} at {} eps={} delta0={} N={} ({ev})", r.notion, r.point, fmt_q(&r.epsilon), fmt_q(&r.delta), r.horizon)
            }
            Verdict::Inconclusive(why) => write!(f, "Inconclusive ({why})"),
        }
    }
}

/// Per-point verdicts over a grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetReport {
    pub notion: Notion,
    pub epsilon: Q,
    pub points: Vec<StatePoint>,
    pub verdicts: Vec<Verdict>,
}

impl SetReport {
    pub fn new(notion: Notion, epsilon: Q, points: Vec<StatePoint>, verdicts: Vec<Verdict>) -> Self {
        SetReport { notion, epsilon, points, verdicts }
    }

    pub fn certified(&self) -> usize {
        self.verdicts.iter().filter(|v| v.is_certified()).count()
    }

    pub fn refuted(&self) -> impl Iterator<Item = (&StatePoint, &Verdict)> {
        self.points.iter().zip(&self.verdicts).filter(|(_, v)| v.is_refuted())
    }

    /// Set-level label: Certified only if every point is.
    pub fn summary(&self) -> &'static str {
        if self.certified() == self.verdicts.len() {
            "Certified"
        } else if self.verdicts.iter().any(|v| v.is_refuted()) {
            "RefutedAtResolution"
        } else {
            "Inconclusive"
        }
    }

    pub fn verdict_at(&self, x: &StatePoint) -> Option<&Verdict> {
        self.points.iter().position(|p| p == x).map(|i| &self.verdicts[i])
    }
}
