use num_traits::Zero;

use crate::dynamics::{fmt_q, Scalar, StateSpace, StepMap, Q};
use crate::error::{IvlError, Result};
use crate::metrics::TargetSet;

use crate::dynamics::ControlSystem;

/// A closed interval mapped into itself by every control, at positive
/// distance `gap` from the target set. Orbits entering it never come back
/// within `gap` of Q.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Trap {
    pub lo: Q,
    pub hi: Q,
    pub gap: Q,
}

impl Trap {
    /// Checks forward invariance by interval evaluation of every map and
    /// computes the gap.
    pub fn verify(sys: &ControlSystem, target: &TargetSet, lo: Q, hi: Q) -> Result<Trap> {
        let (StateSpace::Interval { .. }, TargetSet::IntervalUnion(parts)) = (&sys.space, target) else {
            return Err(IvlError::InvalidInput("traps need an interval state space".into()));
        };
        if lo > hi {
            return Err(IvlError::InvalidInput("empty trap interval".into()));
        }
        let range = if lo == hi { Scalar::exact(lo.clone()) } else { Scalar::enclosure(&lo, &hi) };
        for (u, m) in sys.maps.iter().enumerate() {
            let StepMap::Piecewise(pm) = m else { unreachable!("interval systems have piecewise maps") };
            let image = pm.eval(&range)?;
            if !image.within(&lo, &hi) {
                return Err(IvlError::InvalidInput(format!("[{}, {}] is not invariant under control {u}", fmt_q(&lo), fmt_q(&hi))));
            }
        }
        let gap = parts
            .iter()
            .map(|(a, b)| if &hi < a { a - &hi } else if &lo > b { &lo - b } else { Q::zero() })
            .min()
            .unwrap_or_else(Q::zero);
        if gap.is_zero() {
            return Err(IvlError::InvalidInput("trap touches the target set".into()));
        }
        Ok(Trap { lo, hi, gap })
    }

    pub fn contains(&self, s: &Scalar) -> bool {
        s.within(&self.lo, &self.hi)
    }
}
