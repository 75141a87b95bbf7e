//! The five appendix systems with their target sets, trap sets, extra
//! candidate schedules and claimed classifications.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::classify::{
    certify_point, classify_set, default_candidates, refute_point, ClassifyBudget, Notion, Problem, Record, Scope, SetReport, Trap, Verdict,
};
use crate::dynamics::{
    fmt_q, q, qi, Branch, ControlSchedule, ControlSystem, PiecewiseMap, StatePoint, StateSpace, StepMap, SymbolicMap,
    SymbolicPoint, Q,
};
use crate::error::{IvlError, Result};
use crate::metrics::{BlockLanguage, TargetSet};
use crate::par::Exec;
use crate::spanning::{Resolution, TargetGrid};

#[allow(non_camel_case_types)]
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExampleId {
    A1_FEI_not_EI,
    A2_EIM_not_EI,
    A3_FEIM_not_FEI,
    A4_FMEI_not_FEIM_MEI,
    A5_FMEI_not_MEI,
}

impl ExampleId {
    pub const ALL: [ExampleId; 5] =
        [ExampleId::A1_FEI_not_EI, ExampleId::A2_EIM_not_EI, ExampleId::A3_FEIM_not_FEI, ExampleId::A4_FMEI_not_FEIM_MEI, ExampleId::A5_FMEI_not_MEI];

    /// "A1" .. "A5".
    pub fn short(self) -> &'static str {
        match self {
            ExampleId::A1_FEI_not_EI => "A1",
            ExampleId::A2_EIM_not_EI => "A2",
            ExampleId::A3_FEIM_not_FEI => "A3",
            ExampleId::A4_FMEI_not_FEIM_MEI => "A4",
            ExampleId::A5_FMEI_not_MEI => "A5",
        }
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for ExampleId {
    type Err = IvlError;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        ExampleId::ALL
            .iter()
            .copied()
            .find(|id| id.short().eq_ignore_ascii_case(s) || id.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| IvlError::InvalidInput(format!("unknown example {s:?}, expected A1..A5")))
    }
}

/// The blocks `ab` and `cde` and their concatenations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockCode {
    lang: BlockLanguage,
}

impl Default for BlockCode {
    fn default() -> Self {
        BlockCode { lang: BlockLanguage::new(vec![b"ab".to_vec(), b"cde".to_vec()]).expect("valid blocks") }
    }
}

impl BlockCode {
    pub fn language(&self) -> &BlockLanguage {
        &self.lang
    }

    /// Block 0 is `ab`, block 1 is `cde`.
    pub fn embed(&self, blocks: &[usize]) -> Vec<u8> {
        self.lang.embed(blocks)
    }

    pub fn parse(&self, word: &[u8]) -> (Vec<usize>, Option<usize>) {
        self.lang.parse(word)
    }

    /// `embed(head) · embed(tail)^∞`.
    pub fn point(&self, head: &[usize], tail: &[usize]) -> Result<SymbolicPoint> {
        SymbolicPoint::new(&self.embed(head), &self.embed(tail))
    }

    pub fn distance(&self, x: &SymbolicPoint) -> Q {
        self.lang.distance(x)
    }

    /// Control word that follows the given blocks: σ² per `ab`, σ³ per `cde`.
    pub fn follow(blocks: &[usize]) -> Vec<u8> {
        blocks.iter().map(|&b| b as u8).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClaimScope {
    Set,
    Point(StatePoint),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expected {
    Certified,
    Refuted,
}

/// One entry of a claims matrix, with the parameters it is checked at.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Claim {
    pub notion: Notion,
    pub scope: ClaimScope,
    pub expected: Expected,
    pub epsilon: Q,
    /// δ₀ and N used when the claim is a refutation.
    pub delta0: Q,
    pub horizon: usize,
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = match &self.scope {
            ClaimScope::Set => String::new(),
            ClaimScope::Point(p) => format!("@{p}"),
        };
        write!(f, "{}:{:?}{at} eps={}", self.notion, self.expected, fmt_q(&self.epsilon))?;
        if self.expected == Expected::Refuted {
            write!(f, " delta0={} N={}", fmt_q(&self.delta0), self.horizon)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Example {
    pub id: ExampleId,
    pub system: ControlSystem,
    pub target: TargetSet,
    pub resolution: Resolution,
    /// Forward-invariant intervals away from Q, verified on use.
    pub traps: Vec<(Q, Q)>,
    /// Schedules from the constructions, appended to the default pool.
    pub candidates: Vec<ControlSchedule>,
    /// Radii from the constructions, appended to the default ladder.
    pub deltas: Vec<Q>,
    /// δ₀ and N for set-level refutation attempts.
    pub refute: (Q, usize),
    pub claims: Vec<Claim>,
}

impl Example {
    pub fn grid(&self) -> Result<TargetGrid> {
        TargetGrid::new(&self.target, self.resolution.clone())
    }

    pub fn problem(&self, exec: Exec) -> Result<Problem> {
        self.problem_at(self.resolution.clone(), exec)
    }

    pub fn problem_at(&self, resolution: Resolution, exec: Exec) -> Result<Problem> {
        let traps = self
            .traps
            .iter()
            .map(|(a, b)| Trap::verify(&self.system, &self.target, a.clone(), b.clone()))
            .collect::<Result<Vec<_>>>()?;
        Problem::new(self.system.clone(), self.target.clone(), TargetGrid::new(&self.target, resolution)?, traps, exec)
    }

    pub fn budget(&self) -> ClassifyBudget {
        let mut pool = default_candidates(self.system.alphabet_size());
        for c in &self.candidates {
            if !pool.contains(c) {
                pool.push(c.clone());
            }
        }
        let mut b = ClassifyBudget::new(pool);
        b.deltas.extend(self.deltas.iter().cloned());
        b.refute_delta = self.refute.0.clone();
        b.refute_horizon = self.refute.1;
        b
    }

    /// Branch table, breakpoints, Q and claims as plain text.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "example {} ({})", self.id, self.id.short());
        match &self.system.space {
            StateSpace::Interval { lo, hi } => {
                let _ = writeln!(s, "state space [{}, {}]", fmt_q(lo), fmt_q(hi));
            }
            StateSpace::Symbolic { alphabet } => {
                let _ = writeln!(s, "state space one-sided shift over {{{}}}, metric 1/(i+1)", String::from_utf8_lossy(alphabet));
            }
        }
        for (u, m) in self.system.maps.iter().enumerate() {
            let _ = writeln!(s, "F{u}:");
            match m {
                StepMap::Piecewise(pm) => {
                    for b in pm.branches() {
                        let _ = writeln!(s, "  {}", b.describe());
                    }
                    for (bp, ok) in pm.breakpoints() {
                        let _ = writeln!(s, "  breakpoint {} {}", fmt_q(&bp), if ok { "continuous" } else { "DISCONTINUOUS" });
                    }
                }
                StepMap::Symbolic(sm) => {
                    let _ = writeln!(s, "  {}", sm.describe());
                }
            }
        }
        let _ = writeln!(s, "Q = {}", self.target.describe());
        let _ = writeln!(s, "grid {}", self.resolution);
        for (a, b) in &self.traps {
            let _ = writeln!(s, "trap [{}, {}]", fmt_q(a), fmt_q(b));
        }
        let _ = writeln!(s, "claims:");
        for c in &self.claims {
            let _ = writeln!(s, "  {c}");
        }
        s
    }
}

/// What a claim produced when rerun.
#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum ClaimOutcome {
    Set(SetReport),
    Point(Verdict),
}

#[derive(Clone, Debug)]
pub struct ClaimResult {
    pub claim: Claim,
    pub outcome: ClaimOutcome,
}

impl ClaimResult {
    pub fn label(&self) -> &'static str {
        match &self.outcome {
            ClaimOutcome::Set(r) => r.summary(),
            ClaimOutcome::Point(v) => v.label(),
        }
    }

    pub fn matches(&self) -> bool {
        let want = match self.claim.expected {
            Expected::Certified => "Certified",
            Expected::Refuted => "RefutedAtResolution",
        };
        self.label() == want
    }

    /// Store entries for the implication audit.
    pub fn records(&self, example: ExampleId) -> Vec<Record> {
        let name = example.short();
        match (&self.outcome, &self.claim.scope) {
            (ClaimOutcome::Set(r), _) => Record::from_set(name, r),
            (ClaimOutcome::Point(v), ClaimScope::Point(x)) => Record::from_verdict(name, Scope::Point(x.clone()), v).into_iter().collect(),
            (ClaimOutcome::Point(v), ClaimScope::Set) => Record::from_verdict(name, Scope::Set, v).into_iter().collect(),
        }
    }
}

/// Reruns one claim: set claims through `classify_set`, point claims by
/// certification first and refutation at the claim's δ₀ and N second.
/// Refutation claims only search radii δ ≥ δ₀ for a certificate.
pub fn reproduce_claim(prob: &Problem, budget: &ClassifyBudget, claim: &Claim) -> Result<ClaimResult> {
    let outcome = match &claim.scope {
        ClaimScope::Set => ClaimOutcome::Set(classify_set(prob, claim.notion, &claim.epsilon, budget)?),
        ClaimScope::Point(x) => {
            // A refutation claim is only contested by certificates it is
            // comparable with: δ ≥ δ₀ (the horizon already exceeds N).
            let mut b = budget.clone();
            if claim.expected == Expected::Refuted {
                b.deltas.retain(|d| *d >= claim.delta0);
            }
            let v = if b.deltas.is_empty() { Verdict::Inconclusive(String::new()) } else { certify_point(prob, x, claim.notion, &claim.epsilon, &b)? };
            ClaimOutcome::Point(match (v, claim.expected) {
                (v @ Verdict::Certified(_), _) => v,
                (v, Expected::Certified) => v,
                (_, Expected::Refuted) => refute_point(prob, x, claim.notion, &claim.epsilon, &claim.delta0, claim.horizon, budget)?,
            })
        }
    };
    Ok(ClaimResult { claim: claim.clone(), outcome })
}

pub fn reproduce_claims(ex: &Example, exec: Exec) -> Result<Vec<ClaimResult>> {
    let prob = ex.problem(exec)?;
    let budget = ex.budget();
    ex.claims.iter().map(|c| reproduce_claim(&prob, &budget, c)).collect()
}

fn interval(maps: Vec<Vec<Branch>>) -> Result<Vec<StepMap>> {
    maps.into_iter().map(|b| Ok(StepMap::Piecewise(PiecewiseMap::new(b, &qi(0), &qi(1))?))).collect()
}

fn identity(lo: Q, hi: Q) -> Branch {
    Branch::affine(lo, hi, qi(1), qi(0), qi(0))
}

fn a1_f1() -> Vec<Branch> {
    vec![
        Branch::constant(qi(0), q(1, 4), qi(1)),
        Branch::affine(q(1, 4), q(3, 8), qi(-4), q(1, 4), qi(1)),
        Branch::constant(q(3, 8), q(1, 2), q(1, 2)),
        Branch::affine(q(1, 2), q(5, 8), qi(4), q(5, 8), qi(1)),
        Branch::constant(q(5, 8), qi(1), qi(1)),
    ]
}

fn real(r: Q) -> StatePoint {
    StatePoint::real(r)
}

fn claim(notion: Notion, scope: ClaimScope, expected: Expected, epsilon: Q, delta0: Q, horizon: usize) -> Claim {
    Claim { notion, scope, expected, epsilon, delta0, horizon }
}

fn set_certified(notion: Notion, eps: Q) -> Claim {
    claim(notion, ClaimScope::Set, Expected::Certified, eps, qi(0), 0)
}

fn point_refuted(notion: Notion, x: StatePoint, eps: Q, delta0: Q, horizon: usize) -> Claim {
    claim(notion, ClaimScope::Point(x), Expected::Refuted, eps, delta0, horizon)
}

/// Claimed classifications with the resolutions they are reproduced at.
pub fn claims_matrix(id: ExampleId) -> Vec<Claim> {
    use Notion::*;
    let x38 = || real(q(3, 8));
    match id {
        ExampleId::A1_FEI_not_EI => vec![
            set_certified(FEI, q(1, 10)),
            point_refuted(EI, x38(), q(1, 8), q(1, 256), 16),
            claim(EI, ClaimScope::Point(real(q(5, 16))), Expected::Certified, q(1, 10), qi(0), 0),
            set_certified(FEIM, q(1, 16)),
            point_refuted(EIM, x38(), q(1, 16), q(1, 256), 16),
        ],
        ExampleId::A2_EIM_not_EI => vec![
            claim(EIM, ClaimScope::Point(x38()), Expected::Certified, q(1, 100), qi(0), 0),
            set_certified(EIM, q(1, 100)),
            point_refuted(EI, x38(), q(1, 8), q(1, 256), 16),
        ],
        ExampleId::A3_FEIM_not_FEI => {
            let x = StatePoint::Symbolic(BlockCode::default().point(&[], &[0]).expect("valid point"));
            vec![
                set_certified(EIM, q(1, 4)),
                set_certified(FEIM, q(1, 4)),
                point_refuted(FEI, x.clone(), q(1, 4), q(1, 8), 12),
                point_refuted(EI, x, q(1, 4), q(1, 8), 12),
            ]
        }
        ExampleId::A4_FMEI_not_FEIM_MEI => vec![
            set_certified(MEI, q(1, 50)),
            set_certified(FMEI, q(1, 50)),
            point_refuted(FEIM, real(qi(0)), q(1, 9), q(1, 64), 2),
            point_refuted(EIM, real(qi(0)), q(1, 9), q(1, 64), 2),
        ],
        ExampleId::A5_FMEI_not_MEI => vec![
            set_certified(FMEI, q(1, 100)),
            set_certified(FMLS, q(1, 100)),
            point_refuted(MEI, x38(), q(1, 32), q(1, 128), 24),
        ],
    }
}

/// Recovery schedules of the block example: follow the first `p` blocks,
/// jump to `b^∞`, then to `(ab)^∞` and stay.
fn recovery_schedules(depth: usize) -> Vec<ControlSchedule> {
    let mut out = Vec::new();
    for p in 3..=depth {
        for code in 0..1usize << p {
            let mut front: Vec<u8> = (0..p).map(|i| ((code >> (p - 1 - i)) & 1) as u8).collect();
            front.extend([2, 3]);
            out.push(ControlSchedule::splice(&front, &ControlSchedule::constant(0)));
        }
    }
    out
}

pub fn build_example(id: ExampleId) -> Result<Example> {
    let unit = |lo: Q, hi: Q| StateSpace::Interval { lo, hi };
    let step = Resolution::Step(q(1, 1024));
    let (system, target, resolution, traps, candidates, deltas) = match id {
        ExampleId::A1_FEI_not_EI => {
            let f0 = vec![
                identity(qi(0), q(3, 8)),
                Branch::affine(q(3, 8), q(1, 2), qi(5), q(1, 2), qi(1)),
                Branch::constant(q(1, 2), qi(1), qi(1)),
            ];
            let sys = ControlSystem::new("A1", unit(qi(0), qi(1)), interval(vec![f0, a1_f1()])?)?;
            (sys, TargetSet::interval(q(1, 4), q(1, 2))?, step, vec![(q(5, 8), qi(1)), (qi(1), qi(1))], vec![], vec![])
        }
        ExampleId::A2_EIM_not_EI => {
            let f0 = vec![
                identity(qi(0), q(3, 8)),
                Branch::affine(q(3, 8), q(1, 2), qi(5), q(1, 2), qi(1)),
                Branch::constant(q(1, 2), q(5, 8), qi(1)),
                Branch::affine(q(5, 8), q(3, 4), qi(-5), q(3, 4), q(3, 8)),
                Branch::constant(q(3, 4), qi(1), q(3, 8)),
            ];
            let f2 = vec![Branch::constant(qi(0), qi(1), qi(1))];
            let sys = ControlSystem::new("A2", unit(qi(0), qi(1)), interval(vec![f0, a1_f1(), f2])?)?;
            // 0^N 2 0^∞ with N = 51, so the single excursion to 1 averages below 1/100,
            // on the radius that keeps 3/8 + 5^N h below 1/2.
            let n = 51;
            let mut front = vec![0u8; n];
            front.push(2);
            let omega = ControlSchedule::splice(&front, &ControlSchedule::constant(0));
            let delta = q(1, 8) / Q::from_integer(num_bigint::BigInt::from(5).pow(n as u32));
            (sys, TargetSet::interval(q(1, 4), q(1, 2))?, step, vec![], vec![omega], vec![delta])
        }
        ExampleId::A3_FEIM_not_FEI => {
            let code = BlockCode::default();
            let b_inf = SymbolicPoint::periodic(b"b")?;
            let maps = vec![
                StepMap::Symbolic(SymbolicMap::Shift(2)),
                StepMap::Symbolic(SymbolicMap::Shift(3)),
                StepMap::Symbolic(SymbolicMap::Constant(b_inf.clone())),
                StepMap::Symbolic(SymbolicMap::CylinderSwitch { cylinder: b"b".to_vec(), inside: SymbolicPoint::periodic(b"ab")?, outside: b_inf }),
            ];
            let sys = ControlSystem::new("A3", StateSpace::Symbolic { alphabet: b"abcde".to_vec() }, maps)?;
            let target = TargetSet::BlockLanguage(code.language().clone());
            (sys, target, Resolution::Depth(8), vec![], recovery_schedules(8), vec![])
        }
        ExampleId::A4_FMEI_not_FEIM_MEI => {
            let f0 = vec![
                Branch::constant(qi(0), q(1, 4), q(1, 2)),
                Branch::affine(q(1, 4), q(1, 2), qi(2), q(1, 2), qi(1)),
                Branch::constant(q(1, 2), qi(1), qi(1)),
            ];
            let f1 = vec![Branch::quadratic(qi(0), q(1, 4), qi(12), q(1, 4), q(1, 4)), Branch::quadratic(q(1, 4), qi(1), qi(1), q(1, 4), q(1, 4))];
            let sys = ControlSystem::new("A4", unit(qi(0), qi(1)), interval(vec![f0, f1])?)?;
            (sys, TargetSet::interval(qi(0), q(1, 4))?, step, vec![], vec![], vec![])
        }
        ExampleId::A5_FMEI_not_MEI => {
            let f0 = vec![
                Branch::constant(qi(0), q(1, 4), q(1, 8)),
                Branch::affine(q(1, 4), q(3, 8), qi(2), qi(0), q(-3, 8)),
                Branch::quadratic(q(3, 8), qi(1), qi(1), q(3, 8), q(3, 8)),
            ];
            let f1 = vec![
                Branch::constant(qi(0), q(1, 16), qi(0)),
                Branch::affine(q(1, 16), q(1, 8), qi(2), qi(0), q(-1, 8)),
                Branch::cube_root(q(1, 8), q(1, 4), q(1, 4), q(1, 8), q(1, 8)),
                Branch::affine(q(1, 4), q(1, 2), qi(-1), qi(0), q(1, 2)),
                Branch::constant(q(1, 2), qi(1), qi(0)),
            ];
            let sys = ControlSystem::new("A5", unit(qi(0), qi(1)), interval(vec![f0, f1])?)?;
            (sys, TargetSet::interval(q(1, 4), q(1, 2))?, step, vec![(qi(0), q(1, 8))], vec![], vec![])
        }
    };
    // The block example is refuted on coarse cylinders; the interval ones on
    // the finest grid spacing that still holds grid neighbours.
    let refute = match id {
        ExampleId::A3_FEIM_not_FEI => (q(1, 8), 12),
        _ => (q(1, 256), 16),
    };
    Ok(Example { id, system, target, resolution, traps, candidates, deltas, refute, claims: claims_matrix(id) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Scalar;

    fn step(id: ExampleId, x: Q, u: u8) -> StatePoint {
        build_example(id).unwrap().system.step(&StatePoint::real(x), u).unwrap()
    }

    #[test]
    fn printed_branches() {
        assert_eq!(step(ExampleId::A1_FEI_not_EI, q(7, 16), 0), real(q(11, 16)));
        assert_eq!(step(ExampleId::A1_FEI_not_EI, q(7, 16), 1), real(q(1, 2)));
        assert_eq!(step(ExampleId::A1_FEI_not_EI, q(5, 16), 0), real(q(5, 16)));
        assert_eq!(step(ExampleId::A4_FMEI_not_FEIM_MEI, qi(0), 0), real(q(1, 2)));
        assert_eq!(step(ExampleId::A4_FMEI_not_FEIM_MEI, qi(0), 1), real(qi(1)));
        assert_eq!(step(ExampleId::A2_EIM_not_EI, qi(1), 0), real(q(3, 8)));
    }

    #[test]
    fn every_breakpoint_is_continuous() {
        for id in ExampleId::ALL {
            for m in &build_example(id).unwrap().system.maps {
                if let StepMap::Piecewise(pm) = m {
                    assert!(pm.breakpoints().iter().all(|(_, ok)| *ok), "{id}");
                }
            }
        }
    }

    #[test]
    fn cube_root_branch_endpoints() {
        assert_eq!(step(ExampleId::A5_FMEI_not_MEI, q(1, 8), 1), real(q(1, 8)));
        let StatePoint::Real(s) = step(ExampleId::A5_FMEI_not_MEI, q(3, 16), 1) else { panic!() };
        // (1/4)(1/16)^(1/3) + 1/8
        let want = 0.25 * (1.0f64 / 16.0).cbrt() + 0.125;
        assert!((s.to_f64() - want).abs() < 1e-12);
        assert!(!matches!(s, Scalar::Exact(_)));
    }

    #[test]
    fn block_map_shifts() {
        let ex = build_example(ExampleId::A3_FEIM_not_FEI).unwrap();
        let code = BlockCode::default();
        let x = StatePoint::Symbolic(code.point(&[0, 1], &[0]).unwrap());
        let y = ex.system.step(&x, 1).unwrap();
        assert_eq!(y.to_string(), "de(ab)^inf");
        assert_eq!(ex.system.step(&y, 3).unwrap().to_string(), "(b)^inf");
        let b = StatePoint::Symbolic(SymbolicPoint::periodic(b"b").unwrap());
        assert_eq!(ex.system.step(&b, 3).unwrap().to_string(), "(ab)^inf");
    }

    #[test]
    fn traps_verify() {
        for id in ExampleId::ALL {
            build_example(id).unwrap().problem(Exec::Sequential).unwrap();
        }
    }

    #[test]
    fn ids_parse() {
        assert_eq!("a3".parse::<ExampleId>().unwrap(), ExampleId::A3_FEIM_not_FEI);
        assert_eq!("A5_FMEI_not_MEI".parse::<ExampleId>().unwrap(), ExampleId::A5_FMEI_not_MEI);
        assert!("A6".parse::<ExampleId>().is_err());
    }
}
