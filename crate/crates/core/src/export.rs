//! CSV exports. Exact values print as `p/q`; approximate ones as decimals
//! with the enclosure half-width in the neighbouring `_err` column.

use std::io::Write;

use crate::control_sets::{reach_witness, ReachSet};
use crate::dynamics::{fmt_q, ControlSchedule, ControlSystem, Scalar, StatePoint};
use crate::error::Result;
use crate::metrics::{MeanProfile, TargetSet};
use crate::spanning::ComplexityProfile;

fn value(s: &Scalar) -> (String, String) {
    match s {
        Scalar::Exact(r) => (fmt_q(r), "0".into()),
        _ => (s.to_string(), format!("{:.3e}", Scalar::exact(s.error_bound()).to_f64())),
    }
}

fn point(p: &StatePoint) -> (String, String) {
    match p {
        StatePoint::Real(s) => value(s),
        StatePoint::Symbolic(_) => (p.to_string(), "0".into()),
    }
}

/// Columns `n, epsilon, mode, r, tag`.
pub fn write_profile_csv<W: Write>(out: W, profile: &ComplexityProfile) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "epsilon", "mode", "r", "tag"])?;
    let eps = fmt_q(&profile.epsilon);
    for e in &profile.entries {
        w.write_record([e.n.to_string(), eps.clone(), profile.mode.to_string(), e.r.to_string(), e.tag.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `k, state, state_err, dist_to_Q, dist_err, running_mean, mean_err`
/// for `k = 0..=n`.
pub fn write_trajectory_csv<W: Write>(out: W, sys: &ControlSystem, target: &TargetSet, x: &StatePoint, omega: &ControlSchedule, n: usize) -> Result<()> {
    let traj = sys.trajectory(x, omega, n)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "state", "state_err", "dist_to_Q", "dist_err", "running_mean", "mean_err"])?;
    let mut sum = Scalar::zero();
    for (k, s) in traj.iter().enumerate() {
        let d = target.dist(s)?;
        sum = sum.add(&d);
        let mean = sum.mul_q(&crate::dynamics::q(1, k as i64 + 1));
        let (sv, se) = point(s);
        let (dv, de) = value(&d);
        let (mv, me) = value(&mean);
        w.write_record([k.to_string(), sv, se, dv, de, mv, me])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `k, mean_k, runmax_k`.
pub fn write_mean_profile_csv<W: Write>(out: W, profile: &MeanProfile) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "mean_k", "runmax_k"])?;
    for (i, (m, r)) in profile.values.iter().zip(&profile.running_max).enumerate() {
        w.write_record([(i + 1).to_string(), m.to_string(), r.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `state, m, word`.
pub fn write_reach_csv<W: Write>(out: W, reach: &ReachSet) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["state", "m", "word"])?;
    for e in &reach.entries {
        w.write_record([e.state.to_string(), e.m.to_string(), reach_witness(e)])?;
    }
    w.flush()?;
    Ok(())
}
