//! Control systems `x_{n+1} = F(x_n, u_n)` over an interval or a shift space.

use std::fmt;

use num_traits::{Signed, Zero};

use crate::error::{IvlError, Result};

use super::scalar::{fmt_q, Scalar, Q};
use super::schedule::ControlSchedule;
use super::symbolic::SymbolicPoint;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Shape {
    Constant,
    Affine,
    Quadratic,
    CubeRoot,
}

/// One branch `offset + scale · g(x − center)` on `[lo, hi)`, or `[lo, hi]`
/// when `hi_closed`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Branch {
    pub lo: Q,
    pub hi: Q,
    pub hi_closed: bool,
    pub shape: Shape,
    pub scale: Q,
    pub center: Q,
    pub offset: Q,
}

impl Branch {
    pub fn constant(lo: Q, hi: Q, value: Q) -> Self {
        Branch { lo, hi, hi_closed: false, shape: Shape::Constant, scale: Q::zero(), center: Q::zero(), offset: value }
    }

    /// `scale · (x − center) + offset`, written the way the case tables print it.
    pub fn affine(lo: Q, hi: Q, scale: Q, center: Q, offset: Q) -> Self {
        Branch { lo, hi, hi_closed: false, shape: Shape::Affine, scale, center, offset }
    }

    pub fn quadratic(lo: Q, hi: Q, scale: Q, center: Q, offset: Q) -> Self {
        Branch { lo, hi, hi_closed: false, shape: Shape::Quadratic, scale, center, offset }
    }

    pub fn cube_root(lo: Q, hi: Q, scale: Q, center: Q, offset: Q) -> Self {
        Branch { lo, hi, hi_closed: false, shape: Shape::CubeRoot, scale, center, offset }
    }

    pub fn formula(&self, x: &Scalar) -> Scalar {
        let shifted = || x.add_q(&-self.center.clone());
        let g = match self.shape {
            Shape::Constant => return Scalar::exact(self.offset.clone()),
            Shape::Affine => shifted(),
            Shape::Quadratic => shifted().square(),
            Shape::CubeRoot => shifted().cbrt(),
        };
        g.mul_q(&self.scale).add_q(&self.offset)
    }

    fn contains(&self, x: &Q) -> bool {
        x >= &self.lo && (x < &self.hi || (self.hi_closed && x == &self.hi))
    }

    /// Whether the branch domain meets the closed range `[a, b]`.
    fn meets(&self, a: &Q, b: &Q) -> bool {
        b >= &self.lo && (a < &self.hi || (self.hi_closed && a == &self.hi))
    }

    pub fn describe(&self) -> String {
        let dom = format!(
            "[{}, {}{}",
            fmt_q(&self.lo),
            fmt_q(&self.hi),
            if self.hi_closed { "]" } else { ")" }
        );
        let (s, c, o) = (fmt_q(&self.scale), fmt_q(&self.center), fmt_q(&self.offset));
        let body = match self.shape {
            Shape::Constant => o,
            Shape::Affine => format!("{s}*(x - {c}) + {o}"),
            Shape::Quadratic => format!("{s}*(x - {c})^2 + {o}"),
            Shape::CubeRoot => format!("{s}*(x - {c})^(1/3) + {o}"),
        };
        format!("{dom}: {body}")
    }
}

/// A map of an interval given by contiguous half-open branches.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PiecewiseMap {
    branches: Vec<Branch>,
    continuous: Vec<bool>,
}

impl PiecewiseMap {
    /// Branches must tile `[lo, hi]` in order; the last one is closed at `hi`.
    pub fn new(mut branches: Vec<Branch>, lo: &Q, hi: &Q) -> Result<Self> {
        if branches.is_empty() || &branches[0].lo != lo || &branches.last().unwrap().hi != hi {
            return Err(IvlError::InvalidInput("branches must tile the state interval".into()));
        }
        for w in branches.windows(2) {
            if w[0].hi != w[1].lo || w[0].lo >= w[0].hi {
                return Err(IvlError::InvalidInput(format!("branch gap or overlap at {}", fmt_q(&w[0].hi))));
            }
        }
        branches.last_mut().unwrap().hi_closed = true;
        let continuous = branches
            .windows(2)
            .map(|w| {
                let bp = Scalar::exact(w[1].lo.clone());
                let (l, r) = (w[0].formula(&bp), w[1].formula(&bp));
                l.is_exact() && l == r
            })
            .collect();
        Ok(PiecewiseMap { branches, continuous })
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    /// Interior breakpoints with their exact continuity status.
    pub fn breakpoints(&self) -> Vec<(Q, bool)> {
        self.branches[1..].iter().map(|b| b.lo.clone()).zip(self.continuous.iter().copied()).collect()
    }

    pub fn eval(&self, x: &Scalar) -> Result<Scalar> {
        if let Scalar::Exact(r) = x {
            let b = self
                .branches
                .iter()
                .find(|b| b.contains(r))
                .ok_or_else(|| IvlError::OutOfSpace(fmt_q(r)))?;
            return Ok(b.formula(x));
        }
        let (a, b) = (x.lower(), x.upper());
        let hit: Vec<usize> = (0..self.branches.len()).filter(|&i| self.branches[i].meets(&a, &b)).collect();
        match hit.as_slice() {
            [] => Err(IvlError::OutOfSpace(x.to_string())),
            [i] => Ok(self.branches[*i].formula(x)),
            _ => {
                // A straddled breakpoint is harmless only where the map is continuous.
                if let Some(i) = hit[1..].iter().find(|&&i| !self.continuous[i - 1]) {
                    return Err(IvlError::Ambiguous(format!(
                        "{x} straddles the discontinuity at {}",
                        fmt_q(&self.branches[*i].lo)
                    )));
                }
                let mut out: Option<Scalar> = None;
                for &i in &hit {
                    let br = &self.branches[i];
                    let piece = Scalar::enclosure(&a.clone().max(br.lo.clone()), &b.clone().min(br.hi.clone()));
                    let y = br.formula(&piece);
                    out = Some(match out {
                        None => y,
                        Some(o) => o.hull(&y),
                    });
                }
                Ok(out.unwrap())
            }
        }
    }
}

/// Maps of the shift space used by the block example.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SymbolicMap {
    /// σ^p.
    Shift(usize),
    Constant(SymbolicPoint),
    /// `inside` on the cylinder of points starting with `cylinder`, else `outside`.
    CylinderSwitch { cylinder: Vec<u8>, inside: SymbolicPoint, outside: SymbolicPoint },
}

impl SymbolicMap {
    pub fn eval(&self, x: &SymbolicPoint) -> SymbolicPoint {
        match self {
            SymbolicMap::Shift(p) => x.shift(*p),
            SymbolicMap::Constant(c) => c.clone(),
            SymbolicMap::CylinderSwitch { cylinder, inside, outside } => {
                if x.head(cylinder.len()) == *cylinder {
                    inside.clone()
                } else {
                    outside.clone()
                }
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            SymbolicMap::Shift(p) => format!("shift^{p}"),
            SymbolicMap::Constant(c) => format!("constant {c}"),
            SymbolicMap::CylinderSwitch { cylinder, inside, outside } => format!(
                "{inside} on [{}], else {outside}",
                String::from_utf8_lossy(cylinder)
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum StepMap {
    Piecewise(PiecewiseMap),
    Symbolic(SymbolicMap),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum StateSpace {
    /// `[lo, hi]` with the Euclidean metric.
    Interval { lo: Q, hi: Q },
    /// One-sided shift over `alphabet` with metric `1/(i+1)`.
    Symbolic { alphabet: Vec<u8> },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum StatePoint {
    Real(Scalar),
    Symbolic(SymbolicPoint),
}

impl StatePoint {
    pub fn real(r: Q) -> Self {
        StatePoint::Real(Scalar::exact(r))
    }

    pub fn as_real(&self) -> Option<&Scalar> {
        match self {
            StatePoint::Real(s) => Some(s),
            StatePoint::Symbolic(_) => None,
        }
    }

    pub fn as_symbolic(&self) -> Option<&SymbolicPoint> {
        match self {
            StatePoint::Symbolic(p) => Some(p),
            StatePoint::Real(_) => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        match self {
            StatePoint::Real(s) => s.is_exact(),
            StatePoint::Symbolic(_) => true,
        }
    }
}

impl fmt::Display for StatePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatePoint::Real(s) => s.fmt(f),
            StatePoint::Symbolic(p) => p.fmt(f),
        }
    }
}

impl StateSpace {
    pub fn contains(&self, x: &StatePoint) -> bool {
        match (self, x) {
            (StateSpace::Interval { lo, hi }, StatePoint::Real(s)) => s.within(lo, hi),
            (StateSpace::Symbolic { alphabet }, StatePoint::Symbolic(p)) => p.symbols().all(|c| alphabet.contains(&c)),
            _ => false,
        }
    }

    pub fn diameter(&self) -> Q {
        match self {
            StateSpace::Interval { lo, hi } => hi - lo,
            StateSpace::Symbolic { .. } => Q::from_integer(1.into()),
        }
    }

    /// Distance between two states.
    pub fn distance(&self, x: &StatePoint, y: &StatePoint) -> Result<Scalar> {
        match (x, y) {
            (StatePoint::Real(a), StatePoint::Real(b)) => {
                let d = a.sub(b);
                Ok(match d.try_cmp_q(&Q::zero()) {
                    Ok(std::cmp::Ordering::Less) => d.neg(),
                    Ok(_) => d,
                    Err(_) => Scalar::enclosure(&Q::zero(), &d.lower().abs().max(d.upper().abs())),
                })
            }
            (StatePoint::Symbolic(a), StatePoint::Symbolic(b)) => Ok(Scalar::exact(a.rho(b))),
            _ => Err(IvlError::InvalidInput("mixed state kinds".into())),
        }
    }

    fn clamp(&self, s: Scalar) -> Result<Scalar> {
        let StateSpace::Interval { lo, hi } = self else { return Ok(s) };
        match &s {
            Scalar::Exact(r) if r < lo || r > hi => Err(IvlError::OutOfSpace(fmt_q(r))),
            Scalar::Exact(_) => Ok(s),
            Scalar::Approx { .. } => {
                if s.within(lo, hi) {
                    return Ok(s);
                }
                let (a, b) = (s.lower().max(lo.clone()), s.upper().min(hi.clone()));
                if a > b {
                    return Err(IvlError::OutOfSpace(s.to_string()));
                }
                Ok(Scalar::enclosure(&a, &b))
            }
        }
    }
}

/// The object Σ: a state space and one map per control symbol.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ControlSystem {
    pub name: String,
    pub space: StateSpace,
    pub maps: Vec<StepMap>,
}

impl ControlSystem {
    pub fn new(name: &str, space: StateSpace, maps: Vec<StepMap>) -> Result<Self> {
        if maps.is_empty() || maps.len() > 10 {
            return Err(IvlError::InvalidInput("control alphabet must have 1 to 10 symbols".into()));
        }
        let kinds_match = maps.iter().all(|m| {
            matches!(
                (&space, m),
                (StateSpace::Interval { .. }, StepMap::Piecewise(_)) | (StateSpace::Symbolic { .. }, StepMap::Symbolic(_))
            )
        });
        if !kinds_match {
            return Err(IvlError::InvalidInput("map kind does not match the state space".into()));
        }
        Ok(ControlSystem { name: name.to_string(), space, maps })
    }

    pub fn alphabet_size(&self) -> usize {
        self.maps.len()
    }

    /// F_u(x).
    pub fn step(&self, x: &StatePoint, u: u8) -> Result<StatePoint> {
        if !self.space.contains(x) {
            return Err(IvlError::OutOfSpace(x.to_string()));
        }
        let map = self
            .maps
            .get(u as usize)
            .ok_or_else(|| IvlError::InvalidInput(format!("control symbol {u} not in alphabet")))?;
        match (map, x) {
            (StepMap::Piecewise(f), StatePoint::Real(s)) => Ok(StatePoint::Real(self.space.clamp(f.eval(s)?)?)),
            (StepMap::Symbolic(f), StatePoint::Symbolic(p)) => Ok(StatePoint::Symbolic(f.eval(p))),
            _ => Err(IvlError::OutOfSpace(x.to_string())),
        }
    }

    /// φ(k, x, ω) for k = 0..=n.
    pub fn trajectory(&self, x: &StatePoint, omega: &ControlSchedule, n: usize) -> Result<Vec<StatePoint>> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(x.clone());
        for k in 0..n {
            let u = omega
                .at(k)
                .ok_or_else(|| IvlError::InvalidInput(format!("schedule {omega} too short for horizon {n}")))?;
            let next = self.step(&out[k], u)?;
            out.push(next);
        }
        Ok(out)
    }

    /// φ(|w|, x, w).
    pub fn run(&self, x: &StatePoint, word: &[u8]) -> Result<StatePoint> {
        let mut s = x.clone();
        for &u in word {
            s = self.step(&s, u)?;
        }
        Ok(s)
    }
}
