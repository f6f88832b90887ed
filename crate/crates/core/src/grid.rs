//! Uniform 1D grids, centered differences, trapezoid quadrature and weighted norms.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Boundary values allowed on compact-support runs before a run counts as escaped.
pub const BOUNDARY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid needs N >= 16 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("half width must be positive and finite, got {0}")]
    BadHalfWidth(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    CompactSupport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    pub half_width: f64,
    pub n: usize,
    pub bc: Boundary,
    pub dx: f64,
    pub x: Vec<f64>,
}

impl Grid1D {
    pub fn new(half_width: f64, n: usize, bc: Boundary) -> Result<Self, GridError> {
        if n < 16 {
            return Err(GridError::TooFewNodes(n));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(GridError::BadHalfWidth(half_width));
        }
        let dx = match bc {
            Boundary::Periodic => 2.0 * half_width / n as f64,
            Boundary::CompactSupport => 2.0 * half_width / (n - 1) as f64,
        };
        let x = (0..n).map(|i| -half_width + i as f64 * dx).collect();
        Ok(Self { half_width, n, bc, dx, x })
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.x.iter().map(|&x| f(x)).collect()
    }

    /// Trapezoid weight of node `i`.
    #[inline]
    pub fn quad_weight(&self, i: usize) -> f64 {
        match self.bc {
            Boundary::Periodic => self.dx,
            Boundary::CompactSupport if i == 0 || i + 1 == self.n => 0.5 * self.dx,
            Boundary::CompactSupport => self.dx,
        }
    }

    /// Second-order centered first derivative.
    pub fn d_dx_into(&self, f: &[f64], out: &mut [f64]) {
        let n = self.n;
        debug_assert!(f.len() == n && out.len() == n);
        let h = 0.5 / self.dx;
        for i in 1..n - 1 {
            out[i] = (f[i + 1] - f[i - 1]) * h;
        }
        match self.bc {
            Boundary::Periodic => {
                out[0] = (f[1] - f[n - 1]) * h;
                out[n - 1] = (f[0] - f[n - 2]) * h;
            }
            Boundary::CompactSupport => {
                out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) * h;
                out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) * h;
            }
        }
    }

    pub fn d_dx(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; f.len()];
        self.d_dx_into(f, &mut out);
        out
    }

    /// Three-point second difference; one-sided second-order closure off the periodic case.
    pub fn d2_dx2_into(&self, f: &[f64], out: &mut [f64]) {
        let n = self.n;
        let h = 1.0 / (self.dx * self.dx);
        for i in 1..n - 1 {
            out[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) * h;
        }
        match self.bc {
            Boundary::Periodic => {
                out[0] = (f[1] - 2.0 * f[0] + f[n - 1]) * h;
                out[n - 1] = (f[0] - 2.0 * f[n - 1] + f[n - 2]) * h;
            }
            Boundary::CompactSupport => {
                out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) * h;
                out[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) * h;
            }
        }
    }

    /// Undivided fourth difference `δ⁴f`; zero within two nodes of a non-periodic boundary.
    pub fn fourth_diff_into(&self, f: &[f64], out: &mut [f64]) {
        let n = self.n;
        let at = |i: isize| -> f64 { f[i.rem_euclid(n as isize) as usize] };
        for (i, o) in out.iter_mut().enumerate() {
            let periodic = self.bc == Boundary::Periodic;
            if !periodic && (i < 2 || i + 2 >= n) {
                *o = 0.0;
                continue;
            }
            let i = i as isize;
            *o = at(i - 2) - 4.0 * at(i - 1) + 6.0 * at(i) - 4.0 * at(i + 1) + at(i + 2);
        }
    }

    /// Trapezoid integral of nodal values.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        match self.bc {
            Boundary::Periodic => f.iter().sum::<f64>() * self.dx,
            Boundary::CompactSupport => {
                let n = f.len();
                (f.iter().sum::<f64>() - 0.5 * (f[0] + f[n - 1])) * self.dx
            }
        }
    }

    /// Trapezoid integral of `g(x_i, f_i)` without allocating.
    pub fn integrate_map(&self, f: &[f64], g: impl Fn(f64, f64) -> f64) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            s += self.quad_weight(i) * g(self.x[i], f[i]);
        }
        s
    }

    /// Weighted pairing `Σ_i w_i weight(x_i)² f_i g_i`.
    pub fn inner(&self, f: &[f64], g: &[f64], weight: WeightSpec) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            let w = weight.eval(self.x[i]);
            s += self.quad_weight(i) * w * w * f[i] * g[i];
        }
        s
    }

    /// Weighted L² norm of a scalar field.
    pub fn l2(&self, f: &[f64], weight: WeightSpec) -> f64 {
        self.inner(f, f, weight).sqrt()
    }

    pub fn l2_sq(&self, f: &[f64]) -> f64 {
        self.inner(f, f, WeightSpec::UNWEIGHTED)
    }

    /// `(∫|f|^p)^{1/p}`.
    pub fn lr_norm(&self, f: &[f64], p: f64) -> f64 {
        self.integrate_map(f, |_, v| v.abs().powf(p)).powf(1.0 / p)
    }

    pub fn h1_norm(&self, f: &[f64]) -> f64 {
        let df = self.d_dx(f);
        (self.l2_sq(f) + self.l2_sq(&df)).sqrt()
    }

    /// Cumulative trapezoid from the left node with the Euler–Maclaurin end correction
    /// `-dx²/12 (f'(x_i) - f'(x_0))`, which lifts it to fourth order; returns `(W, mass)`.
    ///
    /// On periodic grids the mass includes the wrap interval, so `mass` is the full
    /// periodic integral and `W` differs from a periodic antiderivative by a constant.
    pub fn antiderivative(&self, f: &[f64]) -> (Vec<f64>, f64) {
        let n = self.n;
        let df = self.d_dx(f);
        let c = self.dx * self.dx / 12.0;
        let mut w = vec![0.0; n];
        let mut trap = 0.0;
        for i in 1..n {
            trap += 0.5 * self.dx * (f[i - 1] + f[i]);
            w[i] = trap - c * (df[i] - df[0]);
        }
        let mass = match self.bc {
            Boundary::Periodic => trap + 0.5 * self.dx * (f[n - 1] + f[0]),
            Boundary::CompactSupport => w[n - 1],
        };
        (w, mass)
    }

    /// Largest magnitude over the two outermost nodes at each end.
    pub fn boundary_max(&self, f: &[f64]) -> f64 {
        let n = self.n;
        [f[0], f[1], f[n - 2], f[n - 1]].iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Spatial weight: `|x|^mu` or `log^q(1 + |x|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSpec {
    Power { mu: f64 },
    Logarithmic { q: f64 },
}

impl WeightSpec {
    pub const UNWEIGHTED: WeightSpec = WeightSpec::Power { mu: 0.0 };

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            WeightSpec::Power { mu } if mu == 0.0 => 1.0,
            WeightSpec::Power { mu } => x.abs().powf(mu),
            WeightSpec::Logarithmic { q } => x.abs().ln_1p().powf(q),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            WeightSpec::Power { mu } => format!("x_pow_{mu}"),
            WeightSpec::Logarithmic { q } => format!("log_pow_{q}"),
        }
    }
}

/// Grid samples of an n-component unknown, stored component-major.
#[derive(Debug, Clone, PartialEq)]
pub struct StateField {
    pub comps: Vec<Vec<f64>>,
}

impl StateField {
    pub fn zeros(n_comp: usize, n_nodes: usize) -> Self {
        Self { comps: vec![vec![0.0; n_nodes]; n_comp] }
    }

    pub fn n_comp(&self) -> usize {
        self.comps.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.comps.first().map_or(0, Vec::len)
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().flatten().all(|v| v.is_finite())
    }

    pub fn d_dx(&self, grid: &Grid1D) -> StateField {
        StateField { comps: self.comps.iter().map(|c| grid.d_dx(c)).collect() }
    }

    /// Σ_components of the weighted squared norm, square-rooted.
    pub fn l2_norm(&self, grid: &Grid1D, weight: WeightSpec) -> f64 {
        self.l2_sq_range(grid, 0..self.n_comp(), weight).sqrt()
    }

    pub fn l2_sq_range(
        &self,
        grid: &Grid1D,
        range: std::ops::Range<usize>,
        weight: WeightSpec,
    ) -> f64 {
        self.comps[range].iter().map(|c| grid.inner(c, c, weight)).sum()
    }

    pub fn h1_norm(&self, grid: &Grid1D) -> f64 {
        let d = self.d_dx(grid);
        (self.l2_norm(grid, WeightSpec::UNWEIGHTED).powi(2)
            + d.l2_norm(grid, WeightSpec::UNWEIGHTED).powi(2))
        .sqrt()
    }

    /// Vector pairing Σ_c inner(f_c, g_c).
    pub fn inner(&self, other: &StateField, grid: &Grid1D) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .map(|(f, g)| grid.inner(f, g, WeightSpec::UNWEIGHTED))
            .sum()
    }

    /// `M U` pointwise for an n×n matrix.
    pub fn apply(&self, m: &crate::linalg::Mat) -> StateField {
        let n = self.n_nodes();
        let mut out = StateField::zeros(m.rows, n);
        for i in 0..m.rows {
            for j in 0..m.cols {
                let a = m[(i, j)];
                if a == 0.0 {
                    continue;
                }
                for (o, v) in out.comps[i].iter_mut().zip(&self.comps[j]) {
                    *o += a * v;
                }
            }
        }
        out
    }

    /// CSV snapshot: header `x,U_1..U_n`.
    pub fn to_csv(&self, grid: &Grid1D) -> String {
        let mut s = String::from("x");
        for c in 0..self.n_comp() {
            s.push_str(&format!(",U_{}", c + 1));
        }
        s.push('\n');
        for i in 0..grid.n {
            s.push_str(&fmt_num(grid.x[i]));
            for c in &self.comps {
                s.push(',');
                s.push_str(&fmt_num(c[i]));
            }
            s.push('\n');
        }
        s
    }
}

/// Shortest round-trip formatting; identical bytes on every platform.
pub fn fmt_num(v: f64) -> String {
    format!("{v:e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn spacing() {
        let g = Grid1D::new(1.0, 16, Boundary::Periodic).unwrap();
        assert_eq!(g.dx, 0.125);
        let g = Grid1D::new(1.0, 17, Boundary::CompactSupport).unwrap();
        assert_eq!(g.dx, 0.125);
        assert_eq!(*g.x.last().unwrap(), 1.0);
        assert!(Grid1D::new(1.0, 8, Boundary::Periodic).is_err());
    }

    #[test]
    fn derivative_of_constant_and_affine() {
        let g = Grid1D::new(5.0, 64, Boundary::CompactSupport).unwrap();
        assert!(g.d_dx(&vec![3.0; 64]).iter().all(|&v| v == 0.0));
        let d = g.d_dx(&g.x);
        assert!(d.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn derivative_second_order_on_sine() {
        let l = 3.0;
        let err = |n| {
            let g = Grid1D::new(l, n, Boundary::Periodic).unwrap();
            let d = g.d_dx(&g.sample(|x| (PI * x / l).sin()));
            d.iter()
                .zip(&g.x)
                .map(|(v, &x)| (v - PI / l * (PI * x / l).cos()).abs())
                .fold(0.0, f64::max)
        };
        let r = err(64) / err(128);
        assert!((3.9..4.1).contains(&r), "ratio {r}");
    }

    #[test]
    fn gaussian_moment() {
        let g = Grid1D::new(20.0, 2001, Boundary::CompactSupport).unwrap();
        let f = g.sample(|x| (-x * x).exp());
        let v = g.l2(&f, WeightSpec::Power { mu: 1.0 }).powi(2);
        assert!(rel(v, (PI / 2.0).sqrt() / 4.0) < 1e-4);
        assert_eq!(g.l2(&vec![0.0; 2001], WeightSpec::UNWEIGHTED), 0.0);
    }

    #[test]
    fn lr_norm_gaussian() {
        let g = Grid1D::new(20.0, 2001, Boundary::CompactSupport).unwrap();
        let f = g.sample(|x| (-x * x).exp());
        assert!(rel(g.lr_norm(&f, 3.0).powi(3), (PI / 3.0).sqrt()) < 1e-4);
    }

    #[test]
    fn hat_profile_against_refined_grid() {
        let hat = |x: f64| (1.0 - x.abs()).max(0.0);
        let coarse = Grid1D::new(4.0, 401, Boundary::CompactSupport).unwrap();
        let fine = Grid1D::new(4.0, 3201, Boundary::CompactSupport).unwrap();
        let a = coarse.l2(&coarse.sample(hat), WeightSpec::UNWEIGHTED);
        let b = fine.l2(&fine.sample(hat), WeightSpec::UNWEIGHTED);
        assert!(rel(a, b) < 1e-3);
    }

    #[test]
    fn inner_is_squared_norm() {
        let g = Grid1D::new(4.0, 64, Boundary::Periodic).unwrap();
        let f = g.sample(|x| x.sin() + 0.3);
        let n = g.l2(&f, WeightSpec::UNWEIGHTED);
        assert!(rel(g.inner(&f, &f, WeightSpec::UNWEIGHTED), n * n) < 1e-14);
        assert_eq!(g.h1_norm(&vec![0.0; 64]), 0.0);
    }

    #[test]
    fn antiderivative_examples() {
        let g = Grid1D::new(20.0, 2001, Boundary::CompactSupport).unwrap();
        let (w, m) = g.antiderivative(&vec![0.0; 2001]);
        assert!(w.iter().all(|&v| v == 0.0) && m == 0.0);
        let dg = g.sample(|x| -2.0 * x * (-x * x).exp());
        let (w, m) = g.antiderivative(&dg);
        let err = w.iter().zip(&g.x).map(|(v, &x)| (v - (-x * x).exp()).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "err {err}");
        assert!(m.abs() < 1e-12);
        let (_, m) = g.antiderivative(&g.sample(|x| (-x * x).exp()));
        assert!(rel(m, PI.sqrt()) < 1e-6);
    }

    #[test]
    fn sbp_periodic() {
        let g = Grid1D::new(6.0, 128, Boundary::Periodic).unwrap();
        let f = g.sample(|x| (x * 0.7).sin() + (-x * x).exp());
        let h = g.sample(|x| (x * 1.3).cos() * x.exp().min(5.0));
        let s = g.inner(&g.d_dx(&f), &h, WeightSpec::UNWEIGHTED)
            + g.inner(&f, &g.d_dx(&h), WeightSpec::UNWEIGHTED);
        assert!(s.abs() < 1e-12 * 10.0);
    }

    #[test]
    fn log_weight() {
        let w = WeightSpec::Logarithmic { q: 2.0 };
        assert!((w.eval(-(1f64.exp() - 1.0)) - 1.0).abs() < 1e-14);
        assert_eq!(WeightSpec::UNWEIGHTED.eval(0.0), 1.0);
        assert_eq!(WeightSpec::Power { mu: 1.0 }.eval(0.0), 0.0);
    }
}
