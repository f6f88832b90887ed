//! Strang-split RK4 for `U_t + A U_x = -B U`.

use super::wave::PowerWave;
use super::{axpy_into, plan_steps, rk4_combine, SolverError, CFL_MAX};
use crate::analysis::TimeSeries;
use crate::corrector::{dissipation_components, eval_lyapunov, CorrectorCoeffs};
use crate::grid::{Boundary, Grid1D, StateField, WeightSpec, BOUNDARY_TOL};
use crate::linalg::{expm_sym, Mat, SymMatrix, SystemSpec};

#[derive(Debug, Clone)]
pub struct LinearSim {
    pub spec: SystemSpec,
    pub grid: Grid1D,
    pub cfl: f64,
    /// Largest stable step, `cfl * dx / ρ(A)`.
    pub dt: f64,
    pub speed: f64,
    /// Optional fourth-difference stabilization `-ν dx³ ∂⁴`.
    pub nu: f64,
}

impl LinearSim {
    pub fn new(spec: SystemSpec, grid: Grid1D, cfl: f64) -> Result<Self, SolverError> {
        if !(cfl > 0.0 && cfl < CFL_MAX) {
            return Err(SolverError::CflViolation { ratio: cfl, limit: CFL_MAX });
        }
        let speed = spec.spectral_radius();
        let dt = if speed > 0.0 { cfl * grid.dx / speed } else { cfl * grid.dx };
        Ok(Self { spec, grid, cfl, dt, speed, nu: 0.0 })
    }

    pub fn with_nu(mut self, nu: f64) -> Self {
        self.nu = nu;
        self
    }

    /// `exp(-B h)` restricted to the damped block, embedded in an n×n identity.
    pub fn damping_factor(&self, h: f64) -> Mat {
        let n = self.spec.n;
        let n1 = self.spec.n1;
        let neg_d = SymMatrix::new(self.spec.d.mat().scale(-1.0)).expect("D is symmetric");
        let e = expm_sym(&neg_d, h);
        let mut out = Mat::identity(n);
        for i in 0..self.spec.n2 {
            for j in 0..self.spec.n2 {
                out[(n1 + i, n1 + j)] = e[(i, j)];
            }
        }
        out
    }

    pub fn stepper(&self, dt: f64) -> Result<LinearStepper<'_>, SolverError> {
        let ratio = dt * self.speed / self.grid.dx;
        if ratio > self.cfl * (1.0 + 1e-12) {
            return Err(SolverError::CflViolation { ratio, limit: self.cfl });
        }
        Ok(LinearStepper::new(self, dt))
    }

    /// One Strang step of size `dt` (convenience wrapper allocating scratch).
    pub fn step(&self, state: &mut StateField, dt: f64) -> Result<(), SolverError> {
        self.stepper(dt)?.step(state);
        Ok(())
    }

    /// Steps to `t_final`, calling `observer(t, U)` every `stride` steps; returns the
    /// final state. Compact-support grids abort with `DomainEscape` when boundary values
    /// exceed `BOUNDARY_TOL` at a sample.
    pub fn simulate(
        &self,
        mut u: StateField,
        t_final: f64,
        stride: usize,
        observer: &mut dyn FnMut(f64, &StateField) -> Result<(), SolverError>,
    ) -> Result<StateField, SolverError> {
        let (steps, dt) = plan_steps(t_final, self.dt)?;
        let mut stepper = self.stepper(dt)?;
        let stride = stride.max(1);
        for s in 0..=steps {
            if s % stride == 0 {
                let t = s as f64 * dt;
                if !u.is_finite() {
                    return Err(SolverError::NonFinite(t));
                }
                if self.grid.bc == Boundary::CompactSupport {
                    let b = u.comps.iter().map(|c| self.grid.boundary_max(c)).fold(0.0, f64::max);
                    if b > BOUNDARY_TOL {
                        return Err(SolverError::DomainEscape { t, value: b });
                    }
                }
                observer(t, &u)?;
            }
            if s < steps {
                stepper.step(&mut u);
            }
        }
        Ok(u)
    }
}

/// Scratch buffers and the precomputed half-step damping for a fixed `dt`.
pub struct LinearStepper<'a> {
    sim: &'a LinearSim,
    dt: f64,
    half: Mat,
    k: [StateField; 4],
    tmp: StateField,
    du: StateField,
    d4: Vec<f64>,
}

impl<'a> LinearStepper<'a> {
    fn new(sim: &'a LinearSim, dt: f64) -> Self {
        let (n, m) = (sim.spec.n, sim.grid.n);
        let z = || StateField::zeros(n, m);
        Self {
            sim,
            dt,
            half: sim.damping_factor(0.5 * dt),
            k: [z(), z(), z(), z()],
            tmp: z(),
            du: z(),
            d4: vec![0.0; m],
        }
    }

    fn damp(&self, u: &mut StateField) {
        let n1 = self.sim.spec.n1;
        let n = self.sim.spec.n;
        if self.sim.spec.n2 == 1 {
            let f = self.half[(n1, n1)];
            u.comps[n1].iter_mut().for_each(|v| *v *= f);
            return;
        }
        let m = u.n_nodes();
        let mut buf = vec![0.0; n - n1];
        for i in 0..m {
            for (a, b) in buf.iter_mut().enumerate() {
                *b = (n1..n).map(|j| self.half[(n1 + a, j)] * u.comps[j][i]).sum();
            }
            for (a, b) in buf.iter().enumerate() {
                u.comps[n1 + a][i] = *b;
            }
        }
    }

    /// out = -A ∂_x u (- ν dx³ ∂⁴ u)
    fn rhs(sim: &LinearSim, u: &StateField, du: &mut StateField, d4: &mut [f64], out: &mut StateField) {
        let a = sim.spec.a.mat();
        for (c, d) in u.comps.iter().zip(du.comps.iter_mut()) {
            sim.grid.d_dx_into(c, d);
        }
        for i in 0..sim.spec.n {
            let o = &mut out.comps[i];
            o.iter_mut().for_each(|v| *v = 0.0);
            for j in 0..sim.spec.n {
                let aij = a[(i, j)];
                if aij == 0.0 {
                    continue;
                }
                for (ov, dv) in o.iter_mut().zip(&du.comps[j]) {
                    *ov -= aij * dv;
                }
            }
        }
        if sim.nu > 0.0 {
            let c = sim.nu / sim.grid.dx;
            for i in 0..sim.spec.n {
                sim.grid.fourth_diff_into(&u.comps[i], d4);
                for (ov, dv) in out.comps[i].iter_mut().zip(d4.iter()) {
                    *ov -= c * dv;
                }
            }
        }
    }

    pub fn step(&mut self, u: &mut StateField) {
        let dt = self.dt;
        self.damp(u);
        let sim = self.sim;
        let [k1, k2, k3, k4] = &mut self.k;
        Self::rhs(sim, u, &mut self.du, &mut self.d4, k1);
        for c in 0..sim.spec.n {
            axpy_into(&mut self.tmp.comps[c], &u.comps[c], 0.5 * dt, &k1.comps[c]);
        }
        Self::rhs(sim, &self.tmp, &mut self.du, &mut self.d4, k2);
        for c in 0..sim.spec.n {
            axpy_into(&mut self.tmp.comps[c], &u.comps[c], 0.5 * dt, &k2.comps[c]);
        }
        Self::rhs(sim, &self.tmp, &mut self.du, &mut self.d4, k3);
        for c in 0..sim.spec.n {
            axpy_into(&mut self.tmp.comps[c], &u.comps[c], dt, &k3.comps[c]);
        }
        Self::rhs(sim, &self.tmp, &mut self.du, &mut self.d4, k4);
        for c in 0..sim.spec.n {
            rk4_combine(
                &mut u.comps[c],
                [&k1.comps[c], &k2.comps[c], &k3.comps[c], &k4.comps[c]],
                dt,
            );
        }
        self.damp(u);
    }
}

/// Standard observer for linear runs: norms, energy law, Lyapunov pieces, weighted norms
/// and the optional wave-energy monitor.
pub struct LinearMonitor {
    pub spec: SystemSpec,
    pub grid: Grid1D,
    pub coeffs: Option<CorrectorCoeffs>,
    pub weights: Vec<WeightSpec>,
    pub wave: Option<PowerWave>,
    pub series: TimeSeries,
}

impl LinearMonitor {
    pub fn new(
        spec: SystemSpec,
        grid: Grid1D,
        coeffs: Option<CorrectorCoeffs>,
        weights: Vec<WeightSpec>,
        wave: Option<PowerWave>,
    ) -> Self {
        let mut names: Vec<String> = ["l2", "u1_l2", "u2_l2", "dx_l2", "h1", "energy", "damping"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        if coeffs.is_some() {
            for n in ["lyapunov", "lyapunov_star", "corrector", "dissipation"] {
                names.push(n.into());
            }
        }
        for w in &weights {
            names.push(format!("w_{}", w.label()));
        }
        if wave.is_some() {
            names.push("wave_energy".into());
            names.push("wave_dissipation".into());
        }
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let series = TimeSeries::new(&refs);
        Self { spec, grid, coeffs, weights, wave, series }
    }

    pub fn observe(&mut self, t: f64, u: &StateField) -> Result<(), SolverError> {
        let g = &self.grid;
        let s = &self.spec;
        let uw = WeightSpec::UNWEIGHTED;
        let du = u.d_dx(g);
        let u1 = u.l2_sq_range(g, 0..s.n1, uw);
        let u2 = u.l2_sq_range(g, s.n1..s.n, uw);
        let dx = du.l2_norm(g, uw);
        let energy = u1 + u2;
        // 2 (D U₂, U₂)
        let mut damping = 0.0;
        for i in 0..s.n2 {
            for j in 0..s.n2 {
                let dij = s.d.mat()[(i, j)];
                if dij != 0.0 {
                    damping += 2.0 * dij * g.inner(&u.comps[s.n1 + i], &u.comps[s.n1 + j], uw);
                }
            }
        }
        let mut row = vec![
            energy.sqrt(),
            u1.sqrt(),
            u2.sqrt(),
            dx,
            (energy + dx * dx).sqrt(),
            energy,
            damping,
        ];
        if let Some(c) = &self.coeffs {
            let p = eval_lyapunov(u, t, s, c, g);
            let d = dissipation_components(u, t, s, c, g);
            row.extend([p.total, p.without_time_weight(), p.corrector, d.aggregate]);
        }
        for w in &self.weights {
            row.push(u.l2_norm(g, *w));
        }
        if let Some(wave) = &self.wave {
            let r = wave.evaluate(u, s, g, t)?;
            row.push(r.energy);
            row.push(r.dissipation);
        }
        self.series.push(t, &row);
        Ok(())
    }
}
