//! Space–time weighted energies of the antiderivative ("wave") unknowns.
//!
//! Power mode weighs the linear system's `W = ∫U₁` with `φ(s) = (a+s)^{2μ-1}`, `s = t+|x|`.
//! Log mode weighs the p-system's `w = ∫ρ` with `φ₁ = log^{2q}(a+s)` and
//! `φ₂ = log^{2q-r+1}(a+s)/(a+s)^r`.

use serde::{Deserialize, Serialize};

use super::SolverError;
use crate::grid::{Grid1D, StateField};
use crate::linalg::{Mat, SystemSpec};

/// Samples used when checking the weight conditions on `[0, s_max]`.
const CONDITION_SAMPLES: usize = 4096;
/// Largest `a = 2^k` tried before giving up.
const MAX_A_EXP: i32 = 60;
/// Generic constant in the log-mode conditions.
const LOG_C: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum WaveWeightSpec {
    Power { mu: f64, a: f64 },
    Log { q: f64, r: f64, a: f64 },
}

/// φ and its first three derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiDerivs {
    pub phi: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl WaveWeightSpec {
    pub fn power_phi(mu: f64, a: f64, s: f64) -> PhiDerivs {
        let p = 2.0 * mu - 1.0;
        let z = a + s;
        let phi = z.powf(p);
        PhiDerivs {
            phi,
            d1: p * phi / z,
            d2: p * (p - 1.0) * phi / (z * z),
            d3: p * (p - 1.0) * (p - 2.0) * phi / (z * z * z),
        }
    }

    /// `φ₁` derivatives (d3 unused, set to 0).
    pub fn log_phi1(q: f64, a: f64, s: f64) -> PhiDerivs {
        let z = a + s;
        let l = z.ln();
        PhiDerivs {
            phi: l.powf(2.0 * q),
            d1: 2.0 * q * l.powf(2.0 * q - 1.0) / z,
            d2: -2.0 * q * l.powf(2.0 * q - 2.0) * (l - 2.0 * q + 1.0) / (z * z),
            d3: 0.0,
        }
    }

    /// `(φ₂, φ₂')`.
    pub fn log_phi2(q: f64, r: f64, a: f64, s: f64) -> (f64, f64) {
        let z = a + s;
        let l = z.ln();
        let phi2 = l.powf(2.0 * q - r + 1.0) / z.powf(r);
        let d = l.powf(2.0 * q - r) * ((2.0 * q - r + 1.0) - r * l) / z.powf(r + 1.0);
        (phi2, d)
    }

    /// `𝒞₁(s) = -φ₂' - C(|φ₁'|^{r+1} + φ₂^{r+1}) / φ₁^r` with C = 1.
    pub fn log_c1(q: f64, r: f64, a: f64, s: f64) -> f64 {
        let p1 = Self::log_phi1(q, a, s);
        let (p2, dp2) = Self::log_phi2(q, r, a, s);
        -dp2 - LOG_C * (p1.d1.abs().powf(r + 1.0) + p2.abs().powf(r + 1.0)) / p1.phi.powf(r)
    }

    /// Whether the power-mode conditions hold at `s`; the sign conditions are non-strict
    /// when the exponent makes the derivative vanish identically (μ = 1/2 or μ = 1).
    fn power_ok(mu: f64, a: f64, kappa: f64, s: f64) -> bool {
        let p = 2.0 * mu - 1.0;
        let f = Self::power_phi(mu, a, s);
        let sign_ok = |v: f64, want_pos: bool, degenerate: bool| {
            if degenerate {
                v.abs() <= 1e-300 || (if want_pos { v > 0.0 } else { v < 0.0 })
            } else if want_pos {
                v > 0.0
            } else {
                v < 0.0
            }
        };
        let deg1 = p == 0.0;
        let deg2 = deg1 || p == 1.0;
        sign_ok(f.d1, true, deg1)
            && sign_ok(f.d2, false, deg2)
            && sign_ok(f.d3, true, deg2)
            && 0.25 * f.phi >= f.d1 / kappa
            && kappa * f.phi >= 2.5 * f.d1
    }

    fn log_ok(q: f64, r: f64, a: f64, s: f64) -> bool {
        let p1 = Self::log_phi1(q, a, s);
        let (p2, dp2) = Self::log_phi2(q, r, a, s);
        p1.phi > 0.0
            && p1.d1 > 0.0
            && p1.d2 < 0.0
            && p1.d1 * p1.d1 <= LOG_C * p1.phi * p1.d2.abs()
            && p2 > 0.0
            && dp2 < 0.0
            && Self::log_c1(q, r, a, s) > 0.0
    }

    fn sample_points(s_max: f64) -> impl Iterator<Item = f64> {
        let m = CONDITION_SAMPLES;
        // dense near 0, geometric towards s_max
        let top = (1.0 + s_max.max(0.0)).ln();
        (0..=m).map(move |i| (top * i as f64 / m as f64).exp() - 1.0)
    }

    /// Conditions hold at every sampled `s ∈ [0, s_max]`.
    pub fn conditions_hold(&self, kappa: f64, s_max: f64) -> bool {
        match *self {
            WaveWeightSpec::Power { mu, a } => {
                (0.5..=1.0).contains(&mu)
                    && a > 0.0
                    && Self::sample_points(s_max).all(|s| Self::power_ok(mu, a, kappa, s))
            }
            WaveWeightSpec::Log { q, r, a } => {
                q > 0.0
                    && r > 1.0
                    && r < 3.0
                    && a > 1.0
                    && Self::sample_points(s_max).all(|s| Self::log_ok(q, r, a, s))
            }
        }
    }

    /// Smallest `a = 2^k`, k ≥ 0, for which the power-mode conditions hold on `[0, s_max]`.
    pub fn select_power(mu: f64, kappa: f64, s_max: f64) -> Result<Self, SolverError> {
        if !(0.5..=1.0).contains(&mu) || !(kappa > 0.0) {
            return Err(SolverError::InvalidParameter(format!(
                "power weight needs mu in [1/2, 1] and kappa > 0, got mu = {mu}, kappa = {kappa}"
            )));
        }
        (0..MAX_A_EXP)
            .map(|k| WaveWeightSpec::Power { mu, a: 2f64.powi(k) })
            .find(|w| w.conditions_hold(kappa, s_max))
            .ok_or_else(|| SolverError::InvalidParameter("no admissible a for power weight".into()))
    }

    /// Smallest `a = 2^k`, k ≥ 1, for which the log-mode conditions hold on `[0, s_max]`.
    pub fn select_log(q: f64, r: f64, s_max: f64) -> Result<Self, SolverError> {
        if !(r > 1.0 && r < 3.0) {
            return Err(SolverError::RBandViolation(r));
        }
        if !(q > 0.0) {
            return Err(SolverError::InvalidParameter(format!("log weight needs q > 0, got {q}")));
        }
        (1..MAX_A_EXP)
            .map(|k| WaveWeightSpec::Log { q, r, a: 2f64.powi(k) })
            .find(|w| w.conditions_hold(1.0, s_max))
            .ok_or_else(|| SolverError::InvalidParameter("no admissible a for log weight".into()))
    }

    pub fn a(&self) -> f64 {
        match *self {
            WaveWeightSpec::Power { a, .. } | WaveWeightSpec::Log { a, .. } => a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveRecord {
    pub energy: f64,
    pub dissipation: f64,
    /// `∫U₁` (power) or `∫ρ` (log) over the grid.
    pub mass: f64,
}

/// Power-mode monitor for the linear system (requires `n1 = n2`, `A₁₂` invertible).
#[derive(Debug, Clone, PartialEq)]
pub struct PowerWave {
    pub mu: f64,
    pub a: f64,
    pub mass_tol: f64,
    /// Symmetric part of `A₁₂ D A₁₂⁻¹`.
    m_sym: Mat,
    /// `A₁₂ A₂₁`.
    a12a21: Mat,
    a12: Mat,
}

impl PowerWave {
    pub fn new(spec: &SystemSpec, wspec: WaveWeightSpec, mass_tol: f64) -> Result<Self, SolverError> {
        let WaveWeightSpec::Power { mu, a } = wspec else {
            return Err(SolverError::InvalidParameter("power monitor needs a power weight".into()));
        };
        if spec.n1 != spec.n2 {
            return Err(SolverError::InvalidParameter("wave monitor needs n1 = n2".into()));
        }
        let a12 = spec.a12();
        let inv = a12
            .inverse()
            .ok_or_else(|| SolverError::InvalidParameter("A12 is not invertible".into()))?;
        let m = a12.mul(spec.d.mat()).mul(&inv);
        let m_sym = m.add_scaled(&m.transpose(), 1.0).scale(0.5);
        Ok(Self { mu, a, mass_tol, m_sym, a12a21: a12.mul(&spec.a21()), a12 })
    }

    /// `W = ∫U₁`, `W_x = U₁`, `W_t = -A₁₂U₂`; returns the weighted energy
    /// `∫ ½φ(|W_t|² + A₁₂A₂₁W_x·W_x) + φ'W_t·W - ½φ''|W|² + ½φ' A₁₂DA₁₂⁻¹W·W`
    /// and the integrated dissipation density `(κφ - 5/2 φ')|W_t|² + ¼φ'|W_x|²`.
    pub fn evaluate(
        &self,
        u: &StateField,
        spec: &SystemSpec,
        grid: &Grid1D,
        t: f64,
    ) -> Result<WaveRecord, SolverError> {
        let n1 = spec.n1;
        let mut w = Vec::with_capacity(n1);
        let mut mass = 0.0f64;
        let mut scale = 0.0f64;
        for c in 0..n1 {
            let (wc, m) = grid.antiderivative(&u.comps[c]);
            mass = mass.max(m.abs());
            scale = scale.max(grid.integrate_map(&u.comps[c], |_, v| v.abs()));
            w.push(wc);
        }
        let tol = self.mass_tol * scale.max(f64::MIN_POSITIVE);
        if mass > tol && scale > 0.0 {
            return Err(SolverError::MassNotZero { mass, tol });
        }
        let mut energy = 0.0;
        let mut diss = 0.0;
        let mut wt = vec![0.0; n1];
        let mut wv = vec![0.0; n1];
        let mut wx = vec![0.0; n1];
        for i in 0..grid.n {
            let f = WaveWeightSpec::power_phi(self.mu, self.a, t + grid.x[i].abs());
            for r in 0..n1 {
                wt[r] = -(0..spec.n2).map(|j| self.a12[(r, j)] * u.comps[n1 + j][i]).sum::<f64>();
                wv[r] = w[r][i];
                wx[r] = u.comps[r][i];
            }
            let quad = |m: &Mat, x: &[f64]| -> f64 {
                (0..n1).map(|r| (0..n1).map(|s| m[(r, s)] * x[r] * x[s]).sum::<f64>()).sum()
            };
            let dot = |x: &[f64], y: &[f64]| -> f64 { x.iter().zip(y).map(|(a, b)| a * b).sum() };
            let e = 0.5 * f.phi * (dot(&wt, &wt) + quad(&self.a12a21, &wx)) + f.d1 * dot(&wt, &wv)
                - 0.5 * f.d2 * dot(&wv, &wv)
                + 0.5 * f.d1 * quad(&self.m_sym, &wv);
            let d = (spec.kappa * f.phi - 2.5 * f.d1) * dot(&wt, &wt) + 0.25 * f.d1 * dot(&wx, &wx);
            let qw = grid.quad_weight(i);
            energy += qw * e;
            diss += qw * d;
        }
        Ok(WaveRecord { energy, dissipation: diss, mass })
    }
}

/// Log-mode monitor for the p-system, `w = ∫ρ`, `w_x = ρ`, `w_t = -u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogWave {
    pub q: f64,
    pub r: f64,
    pub a: f64,
    pub eta3: f64,
}

impl LogWave {
    pub fn new(wspec: WaveWeightSpec, eta3: f64) -> Result<Self, SolverError> {
        match wspec {
            WaveWeightSpec::Log { q, r, a } => Ok(Self { q, r, a, eta3 }),
            _ => Err(SolverError::InvalidParameter("log monitor needs a log weight".into())),
        }
    }

    /// `𝒲_φ = ∫ ½φ₁(w_t² + w_x²) + η₃(φ₁' w w_t - ½φ₁'' w² + φ₂|w|^{r+1})` and
    /// `ℋ_φ = ∫ φ₁|w_t|^{r+1} + η₃(φ₁'|w_x|² - φ₂'|w|^{r+1})`.
    pub fn evaluate(&self, rho: &[f64], u: &[f64], grid: &Grid1D, t: f64) -> WaveRecord {
        let (w, mass) = grid.antiderivative(rho);
        let (q, r, a, e3) = (self.q, self.r, self.a, self.eta3);
        let mut energy = 0.0;
        let mut diss = 0.0;
        for i in 0..grid.n {
            let s = t + grid.x[i].abs();
            let p1 = WaveWeightSpec::log_phi1(q, a, s);
            let (p2, dp2) = WaveWeightSpec::log_phi2(q, r, a, s);
            let (wt, wx, wv) = (-u[i], rho[i], w[i]);
            let wr = wv.abs().powf(r + 1.0);
            let e = 0.5 * p1.phi * (wt * wt + wx * wx)
                + e3 * (p1.d1 * wv * wt - 0.5 * p1.d2 * wv * wv + p2 * wr);
            let d = p1.phi * wt.abs().powf(r + 1.0) + e3 * (p1.d1 * wx * wx - dp2 * wr);
            let qw = grid.quad_weight(i);
            energy += qw * e;
            diss += qw * d;
        }
        WaveRecord { energy, dissipation: diss, mass }
    }
}
