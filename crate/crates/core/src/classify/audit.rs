use std::fmt;

use crate::dynamics::{fmt_q, StatePoint, Q};
use crate::spanning::{ComplexityVerdict, Resolution};

use super::{Evidence, Notion, SetReport, Verdict};

/// Direct implications of the diagram; `implication_audit` uses their
/// transitive closure.
pub const ARROWS: [(Notion, Notion); 7] = [
    (Notion::EI, Notion::EIM),
    (Notion::EIM, Notion::MEI),
    (Notion::EI, Notion::FEI),
    (Notion::EIM, Notion::FEIM),
    (Notion::MEI, Notion::FMEI),
    (Notion::FEI, Notion::FEIM),
    (Notion::FEIM, Notion::FMEI),
];

/// Failed implications and the example expected to realize each.
pub const NON_ARROWS: [(Notion, Notion, &str); 7] = [
    (Notion::FEI, Notion::EI, "A1"),
    (Notion::FEIM, Notion::EIM, "A1"),
    (Notion::EIM, Notion::EI, "A2"),
    (Notion::FEIM, Notion::FEI, "A3"),
    (Notion::MEI, Notion::EIM, "A4"),
    (Notion::FMEI, Notion::FEIM, "A4"),
    (Notion::FMEI, Notion::MEI, "A5"),
];

fn closure() -> Vec<(Notion, Notion)> {
    let mut out: Vec<(Notion, Notion)> = ARROWS.to_vec();
    loop {
        let mut grew = false;
        for i in 0..out.len() {
            for j in 0..out.len() {
                let (a, b) = out[i];
                let (c, d) = out[j];
                if b == c && !out.contains(&(a, d)) {
                    out.push((a, d));
                    grew = true;
                }
            }
        }
        if !grew {
            return out;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Scope {
    /// Every grid point of the example's target set.
    Set,
    Point(StatePoint),
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::Set => f.write_str("set"),
            Scope::Point(p) => write!(f, "{p}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerdictKind {
    Certified,
    Refuted,
    Inconclusive,
}

/// One entry of the append-only verdict store.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub example: String,
    pub scope: Scope,
    pub notion: Notion,
    pub kind: VerdictKind,
    pub epsilon: Q,
    /// δ for certificates, δ₀ for refutations.
    pub delta: Q,
    pub horizon: usize,
    pub resolution: Resolution,
    /// Family size of a certificate; 0 for refutations.
    pub family: usize,
    /// Separated-witness counts per grid level of a local-growth refutation.
    pub separated: Vec<(Resolution, usize)>,
}

impl Record {
    pub fn from_verdict(example: &str, scope: Scope, v: &Verdict) -> Option<Record> {
        let rec = |notion, kind, epsilon: &Q, delta: &Q, horizon, resolution: &Resolution| Record {
            example: example.to_string(),
            scope,
            notion,
            kind,
            epsilon: epsilon.clone(),
            delta: delta.clone(),
            horizon,
            resolution: resolution.clone(),
            family: 0,
            separated: Vec::new(),
        };
        Some(match v {
            Verdict::Certified(c) => {
                Record { family: c.family.len(), ..rec(c.notion, VerdictKind::Certified, &c.epsilon, &c.delta, c.horizon.steps(), &c.resolution) }
            }
            Verdict::Refuted(r) => {
                let separated = match &r.evidence {
                    Evidence::LocalGrowth(levels) => levels.iter().map(|l| (l.resolution.clone(), l.witnesses.len())).collect(),
                    _ => Vec::new(),
                };
                Record { separated, ..rec(r.notion, VerdictKind::Refuted, &r.epsilon, &r.delta, r.horizon, &r.resolution) }
            }
            Verdict::Inconclusive(_) => return None,
        })
    }

    /// Point records for every decided point, plus a set record when the
    /// whole set is certified (with the weakest δ and horizon involved).
    pub fn from_set(example: &str, report: &SetReport) -> Vec<Record> {
        let mut out: Vec<Record> =
            report.points.iter().zip(&report.verdicts).filter_map(|(p, v)| Record::from_verdict(example, Scope::Point(p.clone()), v)).collect();
        if report.summary() == "Certified" && !out.is_empty() {
            let delta = out.iter().map(|r| r.delta.clone()).min().unwrap();
            let horizon = out.iter().map(|r| r.horizon).min().unwrap();
            let family = out.iter().map(|r| r.family).max().unwrap();
            out.push(Record {
                example: example.to_string(),
                scope: Scope::Set,
                notion: report.notion,
                kind: VerdictKind::Certified,
                epsilon: report.epsilon.clone(),
                delta,
                horizon,
                resolution: out[0].resolution.clone(),
                family,
                separated: Vec::new(),
            });
        }
        out
    }

    /// Whether a certified record and a refuted one cannot both hold:
    /// ε_c ≤ ε_r, δ_c ≥ δ₀ and N_c ≥ N_r. A local-growth refutation only
    /// bounds family sizes from below, so it additionally needs some level
    /// the certificate's grid contains with more separated witnesses than
    /// the certified family has schedules.
    pub fn contradicts(&self, refuted: &Record) -> bool {
        self.kind == VerdictKind::Certified
            && refuted.kind == VerdictKind::Refuted
            && self.epsilon <= refuted.epsilon
            && self.delta >= refuted.delta
            && self.horizon >= refuted.horizon
            && (refuted.separated.is_empty() || refuted.separated.iter().any(|(res, k)| self.resolution.at_least_as_fine(res) && self.family < *k))
    }

    fn overlaps(&self, other: &Record) -> bool {
        self.example == other.example
            && match (&self.scope, &other.scope) {
                (Scope::Point(a), Scope::Point(b)) => a == b,
                _ => true,
            }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArrowViolation {
    pub arrow: (Notion, Notion),
    pub certified: Record,
    pub refuted: Record,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ImplicationReport {
    pub violations: Vec<ArrowViolation>,
    /// Certified/refuted pairs along an arrow whose parameters are not
    /// comparable.
    pub skipped: usize,
    /// Non-arrows shown by some certified/refuted pair, with the example.
    pub realized: Vec<(Notion, Notion, String)>,
}

impl fmt::Display for ImplicationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "arrow violations: {}", self.violations.len())?;
        for v in &self.violations {
            writeln!(
                f,
                "  {} => {} violated in {} at {}: certified eps={} delta={} N={}, refuted eps={} delta0={} N={}",
                v.arrow.0,
                v.arrow.1,
                v.certified.example,
                v.refuted.scope,
                fmt_q(&v.certified.epsilon),
                fmt_q(&v.certified.delta),
                v.certified.horizon,
                fmt_q(&v.refuted.epsilon),
                fmt_q(&v.refuted.delta),
                v.refuted.horizon
            )?;
        }
        writeln!(f, "pairs skipped for incomparable parameters: {}", self.skipped)?;
        for (a, b, ex) in &self.realized {
            writeln!(f, "non-arrow {a} =/=> {b} realized by {ex}")?;
        }
        Ok(())
    }
}

/// Flags certified/refuted pairs along an implication that contradict each
/// other (see [`Record::contradicts`]). Non-arrows count as realized once
/// ε_c ≤ ε_r.
pub fn implication_audit(store: &[Record]) -> ImplicationReport {
    let arrows = closure();
    let mut report = ImplicationReport::default();
    let certified: Vec<&Record> = store.iter().filter(|r| r.kind == VerdictKind::Certified).collect();
    let refuted: Vec<&Record> = store.iter().filter(|r| r.kind == VerdictKind::Refuted).collect();
    for c in &certified {
        for r in &refuted {
            if !c.overlaps(r) {
                continue;
            }
            let arrow = (c.notion, r.notion);
            if c.notion == r.notion || arrows.contains(&arrow) {
                if c.contradicts(r) {
                    report.violations.push(ArrowViolation { arrow, certified: (*c).clone(), refuted: (*r).clone() });
                } else {
                    report.skipped += 1;
                }
            } else if c.epsilon <= r.epsilon
                && NON_ARROWS.iter().any(|&(a, b, _)| (a, b) == arrow)
                && !report.realized.iter().any(|(a, b, ex)| (*a, *b) == arrow && ex == &c.example)
            {
                report.realized.push((c.notion, r.notion, c.example.clone()));
            }
        }
    }
    report.realized.sort_by(|x, y| (x.0, x.1, &x.2).cmp(&(y.0, y.1, &y.2)));
    report
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AuditStatus {
    Consistent,
    Inconsistent,
    Unresolved,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditLine {
    pub check: &'static str,
    pub left: String,
    pub right: String,
    pub status: AuditStatus,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TheoremReport {
    pub lines: Vec<AuditLine>,
}

impl TheoremReport {
    pub fn inconsistencies(&self) -> usize {
        self.lines.iter().filter(|l| l.status == AuditStatus::Inconsistent).count()
    }
}

impl fmt::Display for TheoremReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.lines {
            writeln!(f, "{}: {} vs {} -> {:?}", l.check, l.left, l.right, l.status)?;
        }
        Ok(())
    }
}

/// Set-level verdicts and complexity verdicts computed at one ε.
#[derive(Clone, Copy, Debug, Default)]
pub struct TheoremInputs<'a> {
    pub fei: Option<&'a SetReport>,
    pub plain: Option<&'a ComplexityVerdict>,
    pub feim: Option<&'a SetReport>,
    pub mean: Option<&'a ComplexityVerdict>,
    pub fmei: Option<&'a SetReport>,
    pub fmls: Option<&'a SetReport>,
}

fn complexity_line(check: &'static str, set: &SetReport, cv: &ComplexityVerdict) -> AuditLine {
    let status = match (set.summary(), cv) {
        ("Certified", ComplexityVerdict::BoundedEvidence(_)) | ("RefutedAtResolution", ComplexityVerdict::GrowthEvidence) => AuditStatus::Consistent,
        ("Certified", ComplexityVerdict::GrowthEvidence) | ("RefutedAtResolution", ComplexityVerdict::BoundedEvidence(_)) => AuditStatus::Inconsistent,
        _ => AuditStatus::Unresolved,
    };
    let right = match cv {
        ComplexityVerdict::BoundedEvidence(c) => format!("BoundedEvidence({c})"),
        ComplexityVerdict::GrowthEvidence => "GrowthEvidence".into(),
        ComplexityVerdict::Inconclusive(_) => "Inconclusive".into(),
    };
    AuditLine { check, left: format!("{} {}", set.notion, set.summary()), right, status }
}

/// Cross-checks finite equi-invariance against bounded complexity (plain and
/// mean) and finite mean equi-invariance against finite mean-L-stability.
pub fn theorem_audit(inputs: TheoremInputs) -> TheoremReport {
    let mut lines = Vec::new();
    if let (Some(s), Some(v)) = (inputs.fei, inputs.plain) {
        lines.push(complexity_line("FEI vs bounded complexity", s, v));
    }
    if let (Some(s), Some(v)) = (inputs.feim, inputs.mean) {
        lines.push(complexity_line("FEIM vs bounded complexity in mean", s, v));
    }
    if let (Some(a), Some(b)) = (inputs.fmei, inputs.fmls) {
        let status = match (a.summary(), b.summary()) {
            (x, y) if x == y && x != "Inconclusive" => AuditStatus::Consistent,
            ("Certified", "RefutedAtResolution") | ("RefutedAtResolution", "Certified") => AuditStatus::Inconsistent,
            _ => AuditStatus::Unresolved,
        };
        lines.push(AuditLine {
            check: "FMEI vs finite mean-L-stability",
            left: format!("FMEI {}", a.summary()),
            right: format!("FMLS {}", b.summary()),
            status,
        });
    }
    TheoremReport { lines }
}
