//! Small dense linear algebra for the structural side of a system `U_t + A U_x = -B U`.
//!
//! Everything here is sized for n ≤ 8: row-major `Vec<f64>` storage, cyclic Jacobi for
//! symmetric eigenproblems, one-sided Jacobi for singular values.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative symmetry tolerance; inputs outside it are rejected, never symmetrized.
pub const SYM_TOL: f64 = 1e-12;
/// Singular values below `RANK_TOL * sigma_max` count as zero.
pub const RANK_TOL: f64 = 1e-10;
/// `D` must have smallest eigenvalue above this to count as positive definite.
pub const PD_TOL: f64 = 1e-12;
/// Cayley–Hamilton residual tolerance, relative to `max|A|^n`.
pub const CH_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not symmetric: |m[{i}][{j}] - m[{j}][{i}]| = {diff:e}")]
    AsymmetricMatrix { i: usize, j: usize, diff: f64 },
    #[error("damping block D is not positive definite (smallest eigenvalue {kappa:e})")]
    DNotPositiveDefinite { kappa: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Panics on ragged input; callers validate shapes first.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix rows");
        Self { rows: r, cols: c, data: rows.iter().flatten().copied().collect() }
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols.max(1)).map(|c| c.to_vec()).take(self.rows).collect()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn add_scaled(&self, other: &Mat, s: f64) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + s * b).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Copy of the block `[r0, r0+nr) × [c0, c0+nc)`.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Mat {
        let mut b = Mat::zeros(nr, nc);
        for i in 0..nr {
            for j in 0..nc {
                b[(i, j)] = self[(r0 + i, c0 + j)];
            }
        }
        b
    }

    /// Gauss–Jordan with partial pivoting; `None` when a pivot underflows `RANK_TOL·max|a|`.
    pub fn inverse(&self) -> Option<Mat> {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Mat::identity(n);
        let tol = RANK_TOL * self.max_abs();
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs()))?;
            if a[(piv, col)].abs() <= tol {
                return None;
            }
            for j in 0..n {
                a.data.swap(col * n + j, piv * n + j);
                inv.data.swap(col * n + j, piv * n + j);
            }
            let p = a[(col, col)];
            for j in 0..n {
                a[(col, j)] /= p;
                inv[(col, j)] /= p;
            }
            for i in 0..n {
                if i != col {
                    let f = a[(i, col)];
                    if f != 0.0 {
                        for j in 0..n {
                            a[(i, j)] -= f * a[(col, j)];
                            inv[(i, j)] -= f * inv[(col, j)];
                        }
                    }
                }
            }
        }
        Some(inv)
    }

    pub fn pow(&self, k: usize) -> Mat {
        let mut p = Mat::identity(self.rows);
        for _ in 0..k {
            p = p.mul(self);
        }
        p
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// A square matrix that passed the symmetry check.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(Mat);

impl SymMatrix {
    pub fn new(m: Mat) -> Result<Self, LinalgError> {
        if !m.is_square() {
            return Err(LinalgError::DimensionMismatch(format!(
                "expected a square matrix, got {}x{}",
                m.rows, m.cols
            )));
        }
        let scale = m.max_abs();
        for i in 0..m.rows {
            for j in (i + 1)..m.cols {
                let diff = (m[(i, j)] - m[(j, i)]).abs();
                if diff > SYM_TOL * scale {
                    return Err(LinalgError::AsymmetricMatrix { i, j, diff });
                }
            }
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        if rows.iter().any(|r| r.len() != rows.len()) {
            return Err(LinalgError::DimensionMismatch("matrix rows must form a square".into()));
        }
        Self::new(Mat::from_rows(rows))
    }

    pub fn n(&self) -> usize {
        self.0.rows
    }

    pub fn mat(&self) -> &Mat {
        &self.0
    }
}

/// Eigen-decomposition by cyclic Jacobi rotations. Eigenvalues ascending; eigenvectors are
/// the matching columns of the returned matrix.
pub fn sym_eigen(m: &SymMatrix) -> (Vec<f64>, Mat) {
    let n = m.n();
    let mut a = m.mat().clone();
    let mut v = Mat::identity(n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        let total: f64 = a.data.iter().map(|x| x * x).sum();
        if off <= 1e-30 * total.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let vals = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vecs = Mat::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            vecs[(k, new)] = v[(k, old)];
        }
    }
    (vals, vecs)
}

pub fn min_eig_sym(m: &SymMatrix) -> f64 {
    sym_eigen(m).0[0]
}

pub fn spectral_radius_sym(m: &SymMatrix) -> f64 {
    sym_eigen(m).0.iter().fold(0.0, |r, v| r.max(v.abs()))
}

/// `exp(t M)` for symmetric `M`.
pub fn expm_sym(m: &SymMatrix, t: f64) -> Mat {
    let (vals, vecs) = sym_eigen(m);
    let n = m.n();
    let mut out = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = (0..n).map(|k| vecs[(i, k)] * (t * vals[k]).exp() * vecs[(j, k)]).sum();
        }
    }
    out
}

/// Singular values (descending) by one-sided Jacobi on the columns.
pub fn singular_values(m: &Mat) -> Vec<f64> {
    let (rows, cols) = (m.rows, m.cols);
    let mut u = m.clone();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..rows {
                    let up = u[(i, p)];
                    let uq = u[(i, q)];
                    alpha += up * up;
                    beta += uq * uq;
                    gamma += up * uq;
                }
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let up = u[(i, p)];
                    let uq = u[(i, q)];
                    u[(i, p)] = c * up - s * uq;
                    u[(i, q)] = s * up + c * uq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> =
        (0..cols).map(|j| (0..rows).map(|i| u[(i, j)] * u[(i, j)]).sum::<f64>().sqrt()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Spectral norm ‖M‖₂.
pub fn op_norm2(m: &Mat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Numerical rank with the module-wide relative threshold.
pub fn numerical_rank(sv: &[f64]) -> usize {
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * smax).count()
}

/// Validated system: `A` symmetric n×n, `B = diag(0, D)` with `D` positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub n: usize,
    pub n1: usize,
    pub n2: usize,
    pub a: SymMatrix,
    pub d: SymMatrix,
    pub b: Mat,
    pub kappa: f64,
    pub flags: StructuralFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralFlags {
    pub a11_zero: bool,
    pub a12_invertible: bool,
    pub a12a21_posdef: bool,
    pub sk_holds: bool,
    pub kalman_rank: usize,
}

impl SystemSpec {
    pub fn a11(&self) -> Mat {
        self.a.mat().block(0, 0, self.n1, self.n1)
    }
    pub fn a12(&self) -> Mat {
        self.a.mat().block(0, self.n1, self.n1, self.n2)
    }
    pub fn a21(&self) -> Mat {
        self.a.mat().block(self.n1, 0, self.n2, self.n1)
    }
    pub fn a22(&self) -> Mat {
        self.a.mat().block(self.n1, self.n1, self.n2, self.n2)
    }

    /// `B A^k` for k = 0..n-1.
    pub fn ba_powers(&self) -> Vec<Mat> {
        let mut out = Vec::with_capacity(self.n);
        let mut cur = self.b.clone();
        for _ in 0..self.n {
            out.push(cur.clone());
            cur = cur.mul(self.a.mat());
        }
        out
    }

    /// Characteristic wave speed ρ(A).
    pub fn spectral_radius(&self) -> f64 {
        spectral_radius_sym(&self.a)
    }
}

pub fn validate_spec(a: SymMatrix, d: SymMatrix, n1: usize) -> Result<SystemSpec, LinalgError> {
    let n = a.n();
    let n2 = d.n();
    if n1 + n2 != n || n2 == 0 || n2 >= n {
        return Err(LinalgError::DimensionMismatch(format!(
            "need n1 + n2 = n with 1 <= n2 < n; got n = {n}, n1 = {n1}, n2 = {n2}"
        )));
    }
    let kappa = min_eig_sym(&d);
    if kappa <= PD_TOL {
        return Err(LinalgError::DNotPositiveDefinite { kappa });
    }
    let mut b = Mat::zeros(n, n);
    for i in 0..n2 {
        for j in 0..n2 {
            b[(n1 + i, n1 + j)] = d.mat()[(i, j)];
        }
    }
    let mut spec = SystemSpec {
        n,
        n1,
        n2,
        a,
        d,
        b,
        kappa,
        flags: StructuralFlags {
            a11_zero: false,
            a12_invertible: false,
            a12a21_posdef: false,
            sk_holds: false,
            kalman_rank: 0,
        },
    };
    let scale = spec.a.mat().max_abs().max(1.0);
    spec.flags.a11_zero = spec.a11().max_abs() <= SYM_TOL * scale;
    let a12 = spec.a12();
    spec.flags.a12_invertible = n1 == n2 && {
        let sv = singular_values(&a12);
        numerical_rank(&sv) == n1 && sv[0] > 0.0
    };
    let prod = a12.mul(&spec.a21());
    spec.flags.a12a21_posdef = match SymMatrix::new(prod) {
        Ok(p) => min_eig_sym(&p) > RANK_TOL * scale * scale,
        Err(_) => false,
    };
    let rank = build_kalman(&spec).rank;
    spec.flags.kalman_rank = rank;
    spec.flags.sk_holds = rank == n;
    Ok(spec)
}

/// Stacked `(B, BA, …, BA^{n-1})` with its numerical rank.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanMatrix {
    pub blocks: Mat,
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub rank_tol: f64,
}

pub fn build_kalman(spec: &SystemSpec) -> KalmanMatrix {
    kalman_from(spec.a.mat(), &spec.b)
}

/// Kalman matrix for an arbitrary pair; `build_kalman` is the validated entry point.
pub fn kalman_from(a: &Mat, b: &Mat) -> KalmanMatrix {
    let n = a.rows;
    let mut blocks = Mat::zeros(n * n, n);
    let mut cur = b.clone();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                blocks[(k * n + i, j)] = cur[(i, j)];
            }
        }
        cur = cur.mul(a);
    }
    let sv = singular_values(&blocks);
    let rank = numerical_rank(&sv);
    KalmanMatrix { blocks, singular_values: sv, rank, rank_tol: RANK_TOL }
}

/// N(y) = (Σ_k |B A^k y|²)^{1/2}.
pub fn kalman_seminorm(spec: &SystemSpec, y: &[f64]) -> f64 {
    spec.ba_powers()
        .iter()
        .map(|m| m.mul_vec(y).iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        .sqrt()
}

/// Coefficients with `A^n = Σ_j c[j] A^j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CayleyCoeffs {
    pub c: Vec<f64>,
}

impl CayleyCoeffs {
    /// `max|A^n - Σ c_j A^j|`.
    pub fn residual(&self, a: &Mat) -> f64 {
        let n = a.rows;
        let mut acc = a.pow(n);
        let mut p = Mat::identity(n);
        for cj in &self.c {
            acc = acc.add_scaled(&p, -cj);
            p = p.mul(a);
        }
        acc.max_abs()
    }
}

/// Faddeev–LeVerrier recursion for the characteristic polynomial.
pub fn cayley_coeffs(a: &Mat) -> CayleyCoeffs {
    assert!(a.is_square());
    let n = a.rows;
    // char poly λ^n + p[n-1] λ^{n-1} + … + p[0]
    let mut p = vec![0.0; n];
    let mut m = Mat::zeros(n, n);
    let mut lead = 1.0;
    for k in 1..=n {
        m = a.mul(&m).add_scaled(&Mat::identity(n), lead);
        let coeff = -a.mul(&m).trace() / k as f64;
        p[n - k] = coeff;
        lead = coeff;
    }
    CayleyCoeffs { c: p.iter().map(|v| -v).collect() }
}
