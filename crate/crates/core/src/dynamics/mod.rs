//! State spaces, scalars, control schedules and trajectories.

pub mod scalar;
pub mod schedule;
pub mod symbolic;
pub mod system;

pub use scalar::{fmt_decimal, fmt_q, q, qi, Scalar, Q};
pub use schedule::{parse_word, word_str, ControlSchedule, Word};
pub use symbolic::SymbolicPoint;
pub use system::{Branch, ControlSystem, PiecewiseMap, Shape, StatePoint, StateSpace, StepMap, SymbolicMap};
