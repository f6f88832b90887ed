//! Damped isentropic Euler, `ρ_t + (ρu)_x = 0`, `(ρu)_t + (ρu² + P(ρ))_x = -λρu`,
//! with `P = Kρ^γ`.
//!
//! The symmetrized form steps the sound variable `c = 2/(γ-1)·√P'(ρ)` and `u`:
//! `c_t + u c_x + (γ-1)/2 c u_x = 0`, `u_t + u u_x + (γ-1)/2 c c_x = -λu`.
//! The momentum form steps `(n, m) = (ρ-ρ̄, ρu)` directly.

use serde::{Deserialize, Serialize};

use super::wave::WaveWeightSpec;
use super::{axpy_into, plan_steps, rk4_combine, SolverError, CFL_MAX};
use crate::analysis::TimeSeries;
use crate::grid::{Grid1D, StateField, WeightSpec};

/// Density floor relative to ρ̄.
pub const VACUUM_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EulerForm {
    SymmetrizedCu,
    MomentumNm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerSpec {
    pub gamma: f64,
    /// Pressure constant in `P = Kρ^γ`.
    pub k: f64,
    pub rho_bar: f64,
    pub lambda: f64,
    pub form: EulerForm,
    /// Abort threshold on `‖(ρ-ρ̄, u)‖_{H²}`.
    pub smallness_cap: f64,
    /// Fourth-difference stabilization `-ν/dx δ⁴` (0 disables).
    pub nu: f64,
}

impl EulerSpec {
    pub fn validate(&self) -> Result<(), SolverError> {
        let ok = self.gamma > 1.0
            && self.k > 0.0
            && self.rho_bar > 0.0
            && self.lambda > 0.0
            && self.smallness_cap > 0.0
            && self.nu >= 0.0
            && [self.gamma, self.k, self.rho_bar, self.lambda, self.smallness_cap, self.nu]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(SolverError::InvalidParameter(format!("invalid Euler parameters {self:?}")))
        }
    }

    pub fn pressure(&self, rho: f64) -> f64 {
        self.k * rho.powf(self.gamma)
    }

    /// `P'(ρ) = Kγρ^{γ-1}`.
    pub fn dpressure(&self, rho: f64) -> f64 {
        self.k * self.gamma * rho.powf(self.gamma - 1.0)
    }

    pub fn sound(&self, rho: f64) -> f64 {
        2.0 / (self.gamma - 1.0) * self.dpressure(rho).sqrt()
    }

    /// Inverse of [`sound`](Self::sound).
    pub fn rho_from_c(&self, c: f64) -> f64 {
        let dp = (0.5 * (self.gamma - 1.0) * c).powi(2);
        (dp / (self.k * self.gamma)).powf(1.0 / (self.gamma - 1.0))
    }
}

/// Primitive view handed to observers.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerFrame {
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    /// Stepped sound variable (symmetrized form) or `c(ρ)` (momentum form).
    pub c: Vec<f64>,
}

impl EulerFrame {
    pub fn perturbation(&self, rho_bar: f64) -> StateField {
        StateField { comps: vec![self.rho.iter().map(|r| r - rho_bar).collect(), self.u.clone()] }
    }
}

#[derive(Debug, Clone)]
pub struct EulerSim {
    pub spec: EulerSpec,
    pub grid: Grid1D,
    pub cfl: f64,
}

/// `‖f‖²_{H²}` with the scheme's own derivative `D` and `D∘D`.
pub fn h2_sq(grid: &Grid1D, f: &[f64]) -> f64 {
    let d1 = grid.d_dx(f);
    let d2 = grid.d_dx(&d1);
    grid.l2_sq(f) + grid.l2_sq(&d1) + grid.l2_sq(&d2)
}

impl EulerSim {
    pub fn new(spec: EulerSpec, grid: Grid1D, cfl: f64) -> Result<Self, SolverError> {
        spec.validate()?;
        if !(cfl > 0.0 && cfl < CFL_MAX) {
            return Err(SolverError::CflViolation { ratio: cfl, limit: CFL_MAX });
        }
        Ok(Self { spec, grid, cfl })
    }

    fn max_speed(&self, rho: &[f64], u: &[f64]) -> f64 {
        rho.iter().zip(u).map(|(&r, &v)| v.abs() + self.spec.dpressure(r).sqrt()).fold(0.0, f64::max)
    }

    fn rhs_cu(&self, c: &[f64], u: &[f64], tmp: &mut [Vec<f64>; 3], oc: &mut [f64], ou: &mut [f64]) {
        let g = &self.grid;
        let h = 0.5 * (self.spec.gamma - 1.0);
        let [cx, ux, d4] = tmp;
        g.d_dx_into(c, cx);
        g.d_dx_into(u, ux);
        for i in 0..g.n {
            oc[i] = -(u[i] * cx[i] + h * c[i] * ux[i]);
            ou[i] = -(u[i] * ux[i] + h * c[i] * cx[i]);
        }
        self.stabilize(c, d4, oc);
        self.stabilize(u, d4, ou);
    }

    fn rhs_nm(&self, n: &[f64], m: &[f64], tmp: &mut [Vec<f64>; 3], on: &mut [f64], om: &mut [f64]) {
        let g = &self.grid;
        let [flux, fx, d4] = tmp;
        g.d_dx_into(m, on);
        on.iter_mut().for_each(|v| *v = -*v);
        for i in 0..g.n {
            let rho = self.spec.rho_bar + n[i];
            flux[i] = m[i] * m[i] / rho + self.spec.pressure(rho);
        }
        g.d_dx_into(flux, fx);
        om.iter_mut().zip(fx.iter()).for_each(|(o, f)| *o = -f);
        self.stabilize(n, d4, on);
        self.stabilize(m, d4, om);
    }

    fn stabilize(&self, f: &[f64], d4: &mut [f64], out: &mut [f64]) {
        if self.spec.nu > 0.0 {
            let c = self.spec.nu / self.grid.dx;
            self.grid.fourth_diff_into(f, d4);
            out.iter_mut().zip(d4.iter()).for_each(|(o, d)| *o -= c * d);
        }
    }

    /// Converts the stepped pair into the primitive frame.
    fn frame(&self, a: &[f64], b: &[f64]) -> EulerFrame {
        let s = &self.spec;
        match s.form {
            EulerForm::SymmetrizedCu => EulerFrame {
                rho: a.iter().map(|&c| s.rho_from_c(c)).collect(),
                u: b.to_vec(),
                c: a.to_vec(),
            },
            EulerForm::MomentumNm => {
                let rho: Vec<f64> = a.iter().map(|n| s.rho_bar + n).collect();
                EulerFrame {
                    u: rho.iter().zip(b).map(|(r, m)| m / r).collect(),
                    c: rho.iter().map(|&r| s.sound(r)).collect(),
                    rho,
                }
            }
        }
    }

    /// Runs from primitive data `(ρ₀, u₀)`. The step is fixed from the initial wave speed;
    /// every sample re-checks the CFL ratio, the density floor and the smallness cap.
    pub fn simulate(
        &self,
        rho0: Vec<f64>,
        u0: Vec<f64>,
        t_final: f64,
        stride: usize,
        observer: &mut dyn FnMut(f64, &EulerFrame) -> Result<(), SolverError>,
    ) -> Result<EulerFrame, SolverError> {
        let s = self.spec;
        let g = &self.grid;
        let n = g.n;
        if let Some(&r) = rho0.iter().find(|&&r| r <= VACUUM_FLOOR * s.rho_bar) {
            return Err(SolverError::VacuumApproached { t: 0.0, rho_min: r });
        }
        let speed0 = self.max_speed(&rho0, &u0);
        let (steps, dt) = plan_steps(t_final, self.cfl * g.dx / speed0)?;
        let (mut a, mut b): (Vec<f64>, Vec<f64>) = match s.form {
            EulerForm::SymmetrizedCu => (rho0.iter().map(|&r| s.sound(r)).collect(), u0),
            EulerForm::MomentumNm => (
                rho0.iter().map(|r| r - s.rho_bar).collect(),
                rho0.iter().zip(&u0).map(|(r, u)| r * u).collect(),
            ),
        };
        let z = || vec![0.0; n];
        let (mut ka, mut kb) = ([z(), z(), z(), z()], [z(), z(), z(), z()]);
        let (mut ta, mut tb) = (z(), z());
        let mut tmp = [z(), z(), z()];
        let half = (-0.5 * s.lambda * dt).exp();
        let stride = stride.max(1);
        for step in 0..=steps {
            if step % stride == 0 {
                let t = step as f64 * dt;
                if a.iter().chain(&b).any(|v| !v.is_finite()) {
                    return Err(SolverError::NonFinite(t));
                }
                let f = self.frame(&a, &b);
                let rho_min = f.rho.iter().copied().fold(f64::INFINITY, f64::min);
                if rho_min.is_nan() || rho_min <= VACUUM_FLOOR * s.rho_bar {
                    return Err(SolverError::VacuumApproached { t, rho_min });
                }
                let pert = f.perturbation(s.rho_bar);
                let h2 = (h2_sq(g, &pert.comps[0]) + h2_sq(g, &pert.comps[1])).sqrt();
                if h2 > s.smallness_cap {
                    return Err(SolverError::SmallnessBreached { t, value: h2, cap: s.smallness_cap });
                }
                let ratio = dt * self.max_speed(&f.rho, &f.u) / g.dx;
                if ratio > CFL_MAX {
                    return Err(SolverError::CflViolation { ratio, limit: CFL_MAX });
                }
                observer(t, &f)?;
            }
            if step == steps {
                break;
            }
            // the damped variable is u (symmetrized) or m (momentum); both decay at rate λ
            b.iter_mut().for_each(|v| *v *= half);
            for stage in 0..4 {
                let (sa, sb): (&[f64], &[f64]) = if stage == 0 {
                    (&a, &b)
                } else {
                    let h = if stage == 3 { dt } else { 0.5 * dt };
                    axpy_into(&mut ta, &a, h, &ka[stage - 1]);
                    axpy_into(&mut tb, &b, h, &kb[stage - 1]);
                    (&ta, &tb)
                };
                match s.form {
                    EulerForm::SymmetrizedCu => self.rhs_cu(sa, sb, &mut tmp, &mut ka[stage], &mut kb[stage]),
                    EulerForm::MomentumNm => self.rhs_nm(sa, sb, &mut tmp, &mut ka[stage], &mut kb[stage]),
                }
            }
            rk4_combine(&mut a, [&ka[0], &ka[1], &ka[2], &ka[3]], dt);
            rk4_combine(&mut b, [&kb[0], &kb[1], &kb[2], &kb[3]], dt);
            b.iter_mut().for_each(|v| *v *= half);
        }
        Ok(self.frame(&a, &b))
    }
}

/// Observer for Euler runs.
///
/// Channels: `n_l2` = ‖ρ-ρ̄‖, `u_l2`, `l2`, `dx_l2` = ‖∂_x(ρ-ρ̄,u)‖, `h2` = ‖(ρ-ρ̄,u)‖_{H²},
/// `h2_sym` = ‖(c-c̄,u)‖²_{H²}, `x_func` (discrete a-priori functional), `rho_min`,
/// `c_roundtrip` (max |c - c(ρ(c))|), weights on `(ρ-ρ̄,u)`, and the momentum wave pair.
pub struct EulerMonitor {
    pub spec: EulerSpec,
    pub grid: Grid1D,
    pub weights: Vec<WeightSpec>,
    /// Power weight for the momentum wave unknown `M = ∫n`.
    pub momentum_wave: Option<WaveWeightSpec>,
    pub mass_tol: f64,
    pub series: TimeSeries,
    sup_h2: f64,
    integral: f64,
    last: Option<(f64, f64)>,
}

impl EulerMonitor {
    pub fn new(
        spec: EulerSpec,
        grid: Grid1D,
        weights: Vec<WeightSpec>,
        momentum_wave: Option<WaveWeightSpec>,
        mass_tol: f64,
    ) -> Self {
        let mut names: Vec<String> =
            ["n_l2", "u_l2", "l2", "dx_l2", "h2", "h2_sym", "x_func", "rho_min", "c_roundtrip"]
                .iter()
                .map(|s| s.to_string())
                .collect();
        names.extend(weights.iter().map(|w| format!("w_{}", w.label())));
        if momentum_wave.is_some() {
            names.push("wave_energy".into());
            names.push("wave_mass".into());
        }
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        Self {
            series: TimeSeries::new(&refs),
            spec,
            grid,
            weights,
            momentum_wave,
            mass_tol,
            sup_h2: 0.0,
            integral: 0.0,
            last: None,
        }
    }

    pub fn observe(&mut self, t: f64, f: &EulerFrame) -> Result<(), SolverError> {
        let g = &self.grid;
        let s = &self.spec;
        let pert = f.perturbation(s.rho_bar);
        let (nn, u) = (&pert.comps[0], &pert.comps[1]);
        let n_sq = g.l2_sq(nn);
        let u_sq = g.l2_sq(u);
        let nx = g.d_dx(nn);
        let ux = g.d_dx(u);
        let dx_sq = g.l2_sq(&nx) + g.l2_sq(&ux);
        let h2n = h2_sq(g, nn);
        let h2u = h2_sq(g, u);
        let c_bar = s.sound(s.rho_bar);
        let cc: Vec<f64> = f.c.iter().map(|c| c - c_bar).collect();
        let h2_sym = h2_sq(g, &cc) + h2u;
        // X(t) = sup ‖(n,u)‖²_{H²} + ∫ (‖u‖²_{H²} + ‖∂_x n‖²_{H¹})
        self.sup_h2 = self.sup_h2.max(h2n + h2u);
        let dens = h2u + g.l2_sq(&nx) + g.l2_sq(&g.d_dx(&nx));
        if let Some((t0, d0)) = self.last {
            self.integral += 0.5 * (t - t0) * (d0 + dens);
        }
        self.last = Some((t, dens));
        let rho_min = f.rho.iter().copied().fold(f64::INFINITY, f64::min);
        let round = f
            .rho
            .iter()
            .zip(&f.c)
            .map(|(&r, &c)| (s.sound(r) - c).abs())
            .fold(0.0, f64::max);
        let mut row = vec![
            n_sq.sqrt(),
            u_sq.sqrt(),
            (n_sq + u_sq).sqrt(),
            dx_sq.sqrt(),
            (h2n + h2u).sqrt(),
            h2_sym,
            self.sup_h2 + self.integral,
            rho_min,
            round,
        ];
        row.extend(self.weights.iter().map(|w| pert.l2_norm(g, *w)));
        if let Some(w) = self.momentum_wave {
            let (e, mass) = self.momentum_energy(f, w, t)?;
            row.push(e);
            row.push(mass);
        }
        self.series.push(t, &row);
        Ok(())
    }

    /// `∫ ½φ(M_t² + P'(ρ̄)M_x²) + φ'M_t M + λ/2 φ' M²` with `M = ∫n`, `M_x = n`, `M_t = -m`.
    fn momentum_energy(&self, f: &EulerFrame, w: WaveWeightSpec, t: f64) -> Result<(f64, f64), SolverError> {
        let WaveWeightSpec::Power { mu, a } = w else {
            return Err(SolverError::InvalidParameter("momentum wave needs a power weight".into()));
        };
        let g = &self.grid;
        let s = &self.spec;
        let n: Vec<f64> = f.rho.iter().map(|r| r - s.rho_bar).collect();
        let (mm, mass) = g.antiderivative(&n);
        let scale = g.integrate_map(&n, |_, v| v.abs());
        let tol = self.mass_tol * scale;
        if mass.abs() > tol && scale > 0.0 {
            return Err(SolverError::MassNotZero { mass: mass.abs(), tol });
        }
        let dp = s.dpressure(s.rho_bar);
        let mut e = 0.0;
        for i in 0..g.n {
            let p = WaveWeightSpec::power_phi(mu, a, t + g.x[i].abs());
            let mt = -f.rho[i] * f.u[i];
            let v = 0.5 * p.phi * (mt * mt + dp * n[i] * n[i])
                + p.d1 * mt * mm[i]
                + 0.5 * s.lambda * p.d1 * mm[i] * mm[i];
            e += g.quad_weight(i) * v;
        }
        Ok((e, mass))
    }
}
