//! Checks shared by the test targets and the acceptance run.
#![allow(dead_code)]

pub mod oracles;
pub mod props;
