//! Crank–Nicolson for `u_t = u_xx`; the decay oracle.

use super::{plan_steps, SolverError};
use crate::analysis::TimeSeries;
use crate::grid::{Boundary, Grid1D, WeightSpec};

#[derive(Debug, Clone)]
pub struct HeatSim {
    pub grid: Grid1D,
    /// Target step; the actual step lands exactly on T.
    pub dt: f64,
}

impl HeatSim {
    pub fn new(grid: Grid1D) -> Self {
        let dt = grid.dx;
        Self { grid, dt }
    }

    pub fn simulate(
        &self,
        mut u: Vec<f64>,
        t_final: f64,
        stride: usize,
        observer: &mut dyn FnMut(f64, &[f64]) -> Result<(), SolverError>,
    ) -> Result<Vec<f64>, SolverError> {
        let (steps, dt) = plan_steps(t_final, self.dt)?;
        let n = self.grid.n;
        let lam = dt / (self.grid.dx * self.grid.dx);
        let periodic = self.grid.bc == Boundary::Periodic;
        let mut rhs = vec![0.0; n];
        let stride = stride.max(1);
        for s in 0..=steps {
            if s % stride == 0 {
                let t = s as f64 * dt;
                if u.iter().any(|v| !v.is_finite()) {
                    return Err(SolverError::NonFinite(t));
                }
                observer(t, &u)?;
            }
            if s == steps {
                break;
            }
            // (I - λ/2 δ²) u⁺ = (I + λ/2 δ²) u
            for i in 0..n {
                let (l, r) = neighbours(&u, i, periodic);
                rhs[i] = u[i] + 0.5 * lam * (l - 2.0 * u[i] + r);
            }
            if periodic {
                solve_cyclic(-0.5 * lam, 1.0 + lam, -0.5 * lam, &mut rhs);
            } else {
                // homogeneous Dirichlet: end values pinned to zero
                rhs[0] = 0.0;
                rhs[n - 1] = 0.0;
                solve_dirichlet(-0.5 * lam, 1.0 + lam, &mut rhs);
            }
            std::mem::swap(&mut u, &mut rhs);
        }
        Ok(u)
    }
}

fn neighbours(u: &[f64], i: usize, periodic: bool) -> (f64, f64) {
    let n = u.len();
    let l = if i > 0 { u[i - 1] } else if periodic { u[n - 1] } else { 0.0 };
    let r = if i + 1 < n { u[i + 1] } else if periodic { u[0] } else { 0.0 };
    (l, r)
}

/// Thomas algorithm for a constant tridiagonal `(a, b, c)` system, overwriting `d`.
fn thomas(a: f64, b: f64, c: f64, d: &mut [f64]) {
    let n = d.len();
    let mut cp = vec![0.0; n];
    cp[0] = c / b;
    d[0] /= b;
    for i in 1..n {
        let m = b - a * cp[i - 1];
        cp[i] = c / m;
        d[i] = (d[i] - a * d[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        d[i] -= cp[i] * d[i + 1];
    }
}

/// Interior solve with zero end values.
fn solve_dirichlet(a: f64, b: f64, d: &mut [f64]) {
    let n = d.len();
    thomas(a, b, a, &mut d[1..n - 1]);
}

/// Periodic tridiagonal with sub `a`, diag `b`, super `c` via Sherman–Morrison.
fn solve_cyclic(a: f64, b: f64, c: f64, d: &mut [f64]) {
    let n = d.len();
    let gamma = -b;
    // modified diagonal: first b - γ, last b - a c / γ
    let solve_mod = |v: &mut [f64]| {
        let mut cp = vec![0.0; n];
        let mut bi = b - gamma;
        cp[0] = c / bi;
        v[0] /= bi;
        for i in 1..n {
            bi = if i == n - 1 { b - a * c / gamma } else { b };
            let m = bi - a * cp[i - 1];
            cp[i] = c / m;
            v[i] = (v[i] - a * v[i - 1]) / m;
        }
        for i in (0..n - 1).rev() {
            v[i] -= cp[i] * v[i + 1];
        }
    };
    solve_mod(d);
    let mut z = vec![0.0; n];
    z[0] = gamma;
    z[n - 1] = c;
    solve_mod(&mut z);
    let fact = (d[0] + a * d[n - 1] / gamma) / (1.0 + z[0] + a * z[n - 1] / gamma);
    for (di, zi) in d.iter_mut().zip(&z) {
        *di -= fact * zi;
    }
}

/// Channels `l2, dx_l2, mass` plus one per weight.
pub struct HeatMonitor {
    pub grid: Grid1D,
    pub weights: Vec<WeightSpec>,
    pub series: TimeSeries,
}

impl HeatMonitor {
    pub fn new(grid: Grid1D, weights: Vec<WeightSpec>) -> Self {
        let mut names = vec!["l2".to_string(), "dx_l2".into(), "mass".into()];
        names.extend(weights.iter().map(|w| format!("w_{}", w.label())));
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        Self { series: TimeSeries::new(&refs), grid, weights }
    }

    pub fn observe(&mut self, t: f64, u: &[f64]) -> Result<(), SolverError> {
        let g = &self.grid;
        let mut row = vec![g.l2(u, WeightSpec::UNWEIGHTED), g.l2(&g.d_dx(u), WeightSpec::UNWEIGHTED), g.integrate(u)];
        row.extend(self.weights.iter().map(|w| g.l2(u, *w)));
        self.series.push(t, &row);
        Ok(())
    }
}
