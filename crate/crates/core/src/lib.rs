//! Invariance complexity and equi-invariance analysis for discrete-time
//! control systems with finite control alphabets.

pub mod classify;
pub mod codec;
pub mod control_sets;
pub mod dynamics;
pub mod error;
pub mod examples;
pub mod export;
pub mod metrics;
pub mod par;
pub mod spanning;

pub use error::{IvlError, Result};
pub use par::Exec;
