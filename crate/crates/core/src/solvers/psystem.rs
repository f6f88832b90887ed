//! The p-system with nonlinear damping: `ρ_t + u_x = 0`, `u_t + ρ_x + |u|^{r-1}u = 0`.

use serde::{Deserialize, Serialize};

use super::wave::{LogWave, WaveWeightSpec};
use super::{axpy_into, plan_steps, rk4_combine, SolverError, CFL_MAX};
use crate::analysis::TimeSeries;
use crate::grid::{Boundary, Grid1D, StateField, WeightSpec, BOUNDARY_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PSystemSpec {
    pub r: f64,
    /// Weight of the cross term in `W*`/`H*`.
    pub eta2: f64,
    /// Fourth-difference stabilization `-ν/dx δ⁴` (0 disables).
    pub nu: f64,
}

impl PSystemSpec {
    pub fn new(r: f64, eta2: f64, nu: f64) -> Result<Self, SolverError> {
        if !(r > 1.0 && r < 3.0) {
            return Err(SolverError::RBandViolation(r));
        }
        if !(eta2 >= 0.0 && nu >= 0.0) {
            return Err(SolverError::InvalidParameter(format!("eta2 = {eta2}, nu = {nu}")));
        }
        Ok(Self { r, eta2, nu })
    }

    #[inline]
    pub fn damping(&self, u: f64) -> f64 {
        u.abs().powf(self.r - 1.0) * u
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PSystemFrame {
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
}

impl PSystemFrame {
    pub fn to_state(&self) -> StateField {
        StateField { comps: vec![self.rho.clone(), self.u.clone()] }
    }
}

#[derive(Debug, Clone)]
pub struct PSystemSim {
    pub spec: PSystemSpec,
    pub grid: Grid1D,
    pub cfl: f64,
    pub dt: f64,
}

impl PSystemSim {
    pub fn new(spec: PSystemSpec, grid: Grid1D, cfl: f64) -> Result<Self, SolverError> {
        PSystemSpec::new(spec.r, spec.eta2, spec.nu)?;
        if !(cfl > 0.0 && cfl < CFL_MAX) {
            return Err(SolverError::CflViolation { ratio: cfl, limit: CFL_MAX });
        }
        // characteristic speeds are ±1
        let dt = cfl * grid.dx;
        Ok(Self { spec, grid, cfl, dt })
    }

    fn rhs(&self, rho: &[f64], u: &[f64], scratch: &mut [f64], out_r: &mut [f64], out_u: &mut [f64]) {
        let g = &self.grid;
        g.d_dx_into(u, out_r);
        out_r.iter_mut().for_each(|v| *v = -*v);
        g.d_dx_into(rho, out_u);
        for (o, &ui) in out_u.iter_mut().zip(u) {
            *o = -*o - self.spec.damping(ui);
        }
        if self.spec.nu > 0.0 {
            let c = self.spec.nu / g.dx;
            g.fourth_diff_into(rho, scratch);
            out_r.iter_mut().zip(scratch.iter()).for_each(|(o, d)| *o -= c * d);
            g.fourth_diff_into(u, scratch);
            out_u.iter_mut().zip(scratch.iter()).for_each(|(o, d)| *o -= c * d);
        }
    }

    pub fn simulate(
        &self,
        mut f: PSystemFrame,
        t_final: f64,
        stride: usize,
        observer: &mut dyn FnMut(f64, &PSystemFrame) -> Result<(), SolverError>,
    ) -> Result<PSystemFrame, SolverError> {
        let (steps, dt) = plan_steps(t_final, self.dt)?;
        let n = self.grid.n;
        let z = || vec![0.0; n];
        let (mut kr, mut ku) = ([z(), z(), z(), z()], [z(), z(), z(), z()]);
        let (mut tr, mut tu, mut scratch) = (z(), z(), z());
        let stride = stride.max(1);
        for s in 0..=steps {
            if s % stride == 0 {
                let t = s as f64 * dt;
                if f.rho.iter().chain(&f.u).any(|v| !v.is_finite()) {
                    return Err(SolverError::NonFinite(t));
                }
                if self.grid.bc == Boundary::CompactSupport {
                    let b = self.grid.boundary_max(&f.rho).max(self.grid.boundary_max(&f.u));
                    if b > BOUNDARY_TOL {
                        return Err(SolverError::DomainEscape { t, value: b });
                    }
                }
                observer(t, &f)?;
            }
            if s == steps {
                break;
            }
            self.rhs(&f.rho, &f.u, &mut scratch, &mut kr[0], &mut ku[0]);
            for stage in 1..4 {
                let h = if stage == 3 { dt } else { 0.5 * dt };
                axpy_into(&mut tr, &f.rho, h, &kr[stage - 1]);
                axpy_into(&mut tu, &f.u, h, &ku[stage - 1]);
                self.rhs(&tr, &tu, &mut scratch, &mut kr[stage], &mut ku[stage]);
            }
            rk4_combine(&mut f.rho, [&kr[0], &kr[1], &kr[2], &kr[3]], dt);
            rk4_combine(&mut f.u, [&ku[0], &ku[1], &ku[2], &ku[3]], dt);
        }
        Ok(f)
    }
}

/// Observer for p-system runs.
///
/// Channels: `l2` = ‖(ρ,u)‖, `l2_sq`, `rho_l2`, `u_l2`, `lrp1` = ‖u‖^{r+1}_{L^{r+1}},
/// `damping` = 2·lrp1, `h1`, `h1_sq`, `dx_l2`, `w_star`, `h_star`, weights, and the
/// log-weighted wave pair when configured.
pub struct PSystemMonitor {
    pub spec: PSystemSpec,
    pub grid: Grid1D,
    pub weights: Vec<WeightSpec>,
    pub wave: Option<LogWave>,
    pub series: TimeSeries,
}

impl PSystemMonitor {
    pub fn new(
        spec: PSystemSpec,
        grid: Grid1D,
        weights: Vec<WeightSpec>,
        wave: Option<(WaveWeightSpec, f64)>,
    ) -> Result<Self, SolverError> {
        let wave = wave.map(|(w, eta3)| LogWave::new(w, eta3)).transpose()?;
        let mut names: Vec<String> = [
            "l2", "l2_sq", "rho_l2", "u_l2", "lrp1", "damping", "h1", "h1_sq", "dx_l2", "w_star",
            "h_star",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        names.extend(weights.iter().map(|w| format!("w_{}", w.label())));
        if wave.is_some() {
            names.push("wave_energy".into());
            names.push("wave_dissipation".into());
        }
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        Ok(Self { series: TimeSeries::new(&refs), spec, grid, weights, wave })
    }

    pub fn observe(&mut self, t: f64, f: &PSystemFrame) -> Result<(), SolverError> {
        let g = &self.grid;
        let r = self.spec.r;
        let rx = g.d_dx(&f.rho);
        let ux = g.d_dx(&f.u);
        let rho2 = g.l2_sq(&f.rho);
        let u2 = g.l2_sq(&f.u);
        let l2_sq = rho2 + u2;
        let lrp1 = g.integrate_map(&f.u, |_, v| v.abs().powf(r + 1.0));
        let dx_sq = g.l2_sq(&rx) + g.l2_sq(&ux);
        let h1_sq = l2_sq + dx_sq;
        // cross term (1/r)∫|u|^{r-1}u ρ_x and the pieces of H*
        let (mut cross, mut a, mut b, mut c) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..g.n {
            let w = g.quad_weight(i);
            let au = f.u[i].abs();
            let ur1 = au.powf(r - 1.0);
            cross += w * ur1 * f.u[i] * rx[i] / r;
            a += w * ur1 * ux[i] * ux[i];
            b += w * ur1 * rx[i] * rx[i];
            c += w * au.powf(2.0 * r - 2.0) * f.u[i] * rx[i];
        }
        let eta2 = self.spec.eta2;
        let w_star = h1_sq + eta2 * cross;
        // exact dissipation of W*: 2∫|u|^{r+1} + r∫|u|^{r-1}u_x² + η₂(∫|u|^{r-1}ρ_x² - ∫|u|^{2r-2}uρ_x - ∫|u|^{r-1}u_x²)
        let h_star = 2.0 * lrp1 + r * a + eta2 * (b - c - a);
        let mut row = vec![
            l2_sq.sqrt(),
            l2_sq,
            rho2.sqrt(),
            u2.sqrt(),
            lrp1,
            2.0 * lrp1,
            h1_sq.sqrt(),
            h1_sq,
            dx_sq.sqrt(),
            w_star,
            h_star,
        ];
        let st = f.to_state();
        row.extend(self.weights.iter().map(|w| st.l2_norm(g, *w)));
        if let Some(wave) = &self.wave {
            let rec = wave.evaluate(&f.rho, &f.u, g, t);
            row.push(rec.energy);
            row.push(rec.dissipation);
        }
        self.series.push(t, &row);
        Ok(())
    }
}
