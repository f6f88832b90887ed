//! Time integration: the linear system, damped Euler, the nonlinearly damped p-system and
//! the heat oracle, plus weighted wave-energy monitors.
//!
//! Every simulation is single-threaded and calls its observer synchronously every
//! `stride` steps (step 0 included). Observers may abort the run by returning an error.

pub mod euler;
pub mod heat;
pub mod linear;
pub mod psystem;
pub mod wave;

use thiserror::Error;

pub use euler::{EulerForm, EulerFrame, EulerMonitor, EulerSim, EulerSpec};
pub use heat::{HeatMonitor, HeatSim};
pub use linear::{LinearMonitor, LinearSim};
pub use psystem::{PSystemFrame, PSystemMonitor, PSystemSim, PSystemSpec};
pub use wave::{LogWave, PowerWave, WaveRecord, WaveWeightSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("CFL violation: dt * speed / dx = {ratio:.4} exceeds {limit}")]
    CflViolation { ratio: f64, limit: f64 },
    #[error("solution reached the boundary at t = {t}: |U| = {value:e}")]
    DomainEscape { t: f64, value: f64 },
    #[error("smallness cap breached at t = {t}: H2 norm {value:e} > {cap:e}")]
    SmallnessBreached { t: f64, value: f64, cap: f64 },
    #[error("density {rho_min:e} fell below the vacuum floor at t = {t}")]
    VacuumApproached { t: f64, rho_min: f64 },
    #[error("damping exponent r = {0} outside (1, 3)")]
    RBandViolation(f64),
    #[error("non-finite state at t = {0}")]
    NonFinite(f64),
    #[error("antiderivative mass {mass:e} exceeds tolerance {tol:e}")]
    MassNotZero { mass: f64, tol: f64 },
    #[error("invalid solver parameter: {0}")]
    InvalidParameter(String),
}

/// Largest ratio `dt * speed / dx` accepted by any explicit stepper.
pub const CFL_MAX: f64 = 1.0;

/// Step count and step size that land exactly on `t_final` without exceeding `dt_max`.
pub fn plan_steps(t_final: f64, dt_max: f64) -> Result<(usize, f64), SolverError> {
    if !(t_final > 0.0 && t_final.is_finite() && dt_max > 0.0) {
        return Err(SolverError::InvalidParameter(format!(
            "need T > 0 and dt > 0, got T = {t_final}, dt = {dt_max}"
        )));
    }
    let steps = (t_final / dt_max - 1e-9).ceil().max(1.0) as usize;
    Ok((steps, t_final / steps as f64))
}

/// Standard RK4 combination `u += dt/6 (k1 + 2k2 + 2k3 + k4)`.
#[inline]
pub(crate) fn rk4_combine(u: &mut [f64], k: [&[f64]; 4], dt: f64) {
    let h = dt / 6.0;
    for i in 0..u.len() {
        u[i] += h * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
    }
}

/// `out = u + a * k`.
#[inline]
pub(crate) fn axpy_into(out: &mut [f64], u: &[f64], a: f64, k: &[f64]) {
    for i in 0..u.len() {
        out[i] = u[i] + a * k[i];
    }
}
