//! Lyapunov corrector: exponent sequence, coefficient search, and evaluation of the
//! functional `L(t) = ‖U‖²_{H¹} + η₀ t ‖U_x‖² + Σ_k ε_k (BA^{k-1}U, BA^k U_x)`.

use crate::grid::{Grid1D, StateField, WeightSpec};
use crate::linalg::{build_kalman, kalman_seminorm, op_norm2, SystemSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_DELTA: f64 = 0.1;
pub const DEFAULT_SAFETY: f64 = 0.5;
/// Unit-sphere samples used for the C_K estimate.
pub const CK_SAMPLES: usize = 10_000;
const CK_SAFETY: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrectorError {
    #[error("Kalman rank {rank} < n = {n}: no coercive corrector exists")]
    SKConditionFails { rank: usize, n: usize },
    #[error("base_eps underflowed at {base_eps:e} without satisfying the constraints: {report:?}")]
    ConstraintSearchFailed { base_eps: f64, report: ConstraintReport },
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("mu must exceed 1/2, got {0}")]
    MuOutOfRange(f64),
    #[error("delta and safety must be positive (safety < 1), got delta = {delta}, safety = {safety}")]
    BadParameters { delta: f64, safety: f64 },
}

/// Outcome of checking every constraint family; `ok()` is the conjunction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub exponents: bool,
    pub e1: bool,
    pub e11: bool,
    pub e2: bool,
    /// Σ ε_k ‖BA^{k-1}‖‖BA^k‖ ≤ 1, which yields the ½ / (3/2) norm-equivalence bracket.
    pub equivalence: bool,
    pub eta0: bool,
}

impl ConstraintReport {
    pub fn ok(&self) -> bool {
        self.exponents && self.e1 && self.e11 && self.e2 && self.equivalence && self.eta0
    }

    /// The four constraint families of the coefficient lemma.
    pub fn families_ok(&self) -> bool {
        self.exponents && self.e1 && self.e11 && self.e2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectorCoeffs {
    pub eps0: f64,
    pub delta: f64,
    pub safety: f64,
    pub base_eps: f64,
    pub m: Vec<f64>,
    pub eps: Vec<f64>,
    pub eta0: f64,
    pub c_bound: f64,
    pub c_k: f64,
    pub eps_star: f64,
    pub report: ConstraintReport,
}

/// `m_k = 1 + δ + Σ_{j=1..k} (2δ(n-j) + δ)` for k = 1..n-1.
pub fn select_exponents(n: usize, delta: f64) -> Vec<f64> {
    let mut m = Vec::with_capacity(n.saturating_sub(1));
    let mut acc = 1.0 + delta;
    for k in 1..n {
        acc += 2.0 * delta * (n - k) as f64 + delta;
        m.push(acc);
    }
    m
}

/// Exponent conditions; `m[k-1]` holds `m_k`.
pub fn exponents_valid(m: &[f64], delta: f64) -> bool {
    let n1 = m.len(); // n - 1
    if m.iter().any(|&v| v <= 1.0) {
        return false;
    }
    let tol = 1e-12;
    // interior concavity, k = 2..n-2 (k = 1 is governed by the ε₀ constraints)
    for k in 2..n1 {
        if m[k - 1] + tol < 0.5 * (m[k - 2] + m[k]) + delta {
            return false;
        }
    }
    if n1 >= 2 {
        let last = m[n1 - 1];
        for k in 1..=n1 - 1 {
            if last + tol < 0.5 * (m[k - 1] + m[n1 - 2]) + delta {
                return false;
            }
        }
    }
    true
}

/// Checks the Young-inequality constraint families for `ε_0` and `ε_1..ε_{n-1}`.
fn check_families(c: f64, eps0: f64, eps: &[f64]) -> (bool, bool, bool) {
    let n1 = eps.len();
    let e = |j: usize| if j == 0 { eps0 } else { eps[j - 1] };
    let le = |a: f64, b: f64| a <= b * (1.0 + 1e-12);
    let mut e1 = le(c * e(1) * e(1), e(0) * e(0) / 8.0);
    for k in 1..=n1 {
        e1 &= le(c * e(k) * e(k), e(k) * eps0 / 8.0);
    }
    let mut e11 = true;
    for k in 2..n1 {
        e11 &= le(c * e(k) * e(k), e(k - 1) * e(k + 1) / 8.0);
    }
    let mut e2 = true;
    let last = e(n1);
    for j in 0..=n1 {
        e2 &= le(c * last * last, e(j) * e(n1 - 1) / 8.0);
    }
    (e1, e11, e2)
}

fn ba_norms(spec: &SystemSpec) -> Vec<f64> {
    spec.ba_powers().iter().map(op_norm2).collect()
}

fn equivalence_sum(norms: &[f64], eps: &[f64]) -> f64 {
    eps.iter().enumerate().map(|(i, e)| e * norms[i] * norms[i + 1]).sum()
}

/// Full constraint check for a coefficient set against a spec.
pub fn validate_coefficients(spec: &SystemSpec, c: &CorrectorCoeffs) -> ConstraintReport {
    let (e1, e11, e2) = check_families(c.c_bound, c.eps0, &c.eps);
    let norms = ba_norms(spec);
    ConstraintReport {
        exponents: exponents_valid(&c.m, c.delta),
        e1,
        e11,
        e2,
        equivalence: equivalence_sum(&norms, &c.eps) <= 1.0,
        eta0: c.eta0 > 0.0
            && c.eta0 < c.eps_star / (4.0 * c.c_k)
            && c.eps0 > 0.0
            && c.eps0 < spec.kappa / 2.0,
    }
}

/// Estimate of `max_{|y|=1} |y|² / N(y)²` by sampling plus coordinate refinement, times 2.
pub fn estimate_c_k(spec: &SystemSpec) -> f64 {
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c0ef);
    let ratio = |y: &[f64]| {
        let norm2: f64 = y.iter().map(|v| v * v).sum();
        let s = kalman_seminorm(spec, y);
        norm2 / (s * s)
    };
    let mut best = vec![0.0; n];
    let mut best_val = 0.0;
    let mut y = vec![0.0; n];
    for _ in 0..CK_SAMPLES {
        for v in y.iter_mut() {
            // Box–Muller keeps the direction distribution uniform on the sphere
            let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
            let u2: f64 = rng.gen();
            *v = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        }
        let r = ratio(&y);
        if r > best_val {
            best_val = r;
            best.clone_from(&y);
        }
    }
    let mut step = 0.1;
    while step > 1e-9 {
        let mut improved = false;
        for i in 0..n {
            for sgn in [-1.0, 1.0] {
                let mut cand = best.clone();
                cand[i] += sgn * step;
                let r = ratio(&cand);
                if r > best_val {
                    best_val = r;
                    best = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    CK_SAFETY * best_val
}

pub fn select_coefficients(
    spec: &SystemSpec,
    delta: f64,
    safety: f64,
) -> Result<CorrectorCoeffs, CorrectorError> {
    if !(delta > 0.0 && safety > 0.0 && safety < 1.0) {
        return Err(CorrectorError::BadParameters { delta, safety });
    }
    let rank = build_kalman(spec).rank;
    if rank < spec.n {
        return Err(CorrectorError::SKConditionFails { rank, n: spec.n });
    }
    let eps0 = 0.5 * spec.kappa * safety;
    let norms = ba_norms(spec);
    let big = norms.iter().copied().fold(1.0f64, f64::max).max(op_norm2(spec.d.mat()));
    let c_bound = 8.0 * big * big;
    let m = select_exponents(spec.n, delta);
    let c_k = estimate_c_k(spec);

    let build = |base: f64| {
        let eps: Vec<f64> = m.iter().map(|mk| base.powf(*mk)).collect();
        let eps_star = eps.iter().copied().fold(spec.kappa, f64::min);
        let eta0 = safety * eps_star / (4.0 * c_k);
        CorrectorCoeffs {
            eps0,
            delta,
            safety,
            base_eps: base,
            m: m.clone(),
            eps,
            eta0,
            c_bound,
            c_k,
            eps_star,
            report: ConstraintReport {
                exponents: false,
                e1: false,
                e11: false,
                e2: false,
                equivalence: false,
                eta0: false,
            },
        }
    };

    // coarse halving to find a feasible point, then bisection back toward the boundary
    let mut hi = eps0;
    let mut lo = eps0;
    loop {
        let c = build(lo);
        if validate_coefficients(spec, &c).ok() {
            break;
        }
        hi = lo;
        lo *= 0.5;
        if lo < 1e-200 {
            let c = build(lo);
            let report = validate_coefficients(spec, &c);
            return Err(CorrectorError::ConstraintSearchFailed { base_eps: lo, report });
        }
    }
    if hi > lo {
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if validate_coefficients(spec, &build(mid)).ok() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let mut c = build(lo);
    c.report = validate_coefficients(spec, &c);
    debug_assert!(c.report.ok());
    Ok(c)
}

/// `(BA^{k-1}U, BA^k U_x)` for k = 1..n-1, weighted by ε_k.
pub fn eval_corrector(
    state: &StateField,
    spec: &SystemSpec,
    coeffs: &CorrectorCoeffs,
    grid: &Grid1D,
) -> f64 {
    let dx = state.d_dx(grid);
    corrector_with_derivative(state, &dx, spec, coeffs, grid)
}

fn corrector_with_derivative(
    state: &StateField,
    dx: &StateField,
    spec: &SystemSpec,
    coeffs: &CorrectorCoeffs,
    grid: &Grid1D,
) -> f64 {
    let pows = spec.ba_powers();
    let mut total = 0.0;
    for k in 1..spec.n {
        let p = state.apply(&pows[k - 1]);
        let q = dx.apply(&pows[k]);
        total += coeffs.eps[k - 1] * p.inner(&q, grid);
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovParts {
    pub h1_sq: f64,
    pub time_term: f64,
    pub corrector: f64,
    pub total: f64,
}

impl LyapunovParts {
    /// `L* = L - η₀ t ‖U_x‖²`.
    pub fn without_time_weight(&self) -> f64 {
        self.h1_sq + self.corrector
    }
}

pub fn eval_lyapunov(
    state: &StateField,
    t: f64,
    spec: &SystemSpec,
    coeffs: &CorrectorCoeffs,
    grid: &Grid1D,
) -> LyapunovParts {
    let dx = state.d_dx(grid);
    let u_sq = state.l2_norm(grid, WeightSpec::UNWEIGHTED).powi(2);
    let dx_sq = dx.l2_norm(grid, WeightSpec::UNWEIGHTED).powi(2);
    let corrector = corrector_with_derivative(state, &dx, spec, coeffs, grid);
    let time_term = coeffs.eta0 * t * dx_sq;
    LyapunovParts { h1_sq: u_sq + dx_sq, time_term, corrector, total: u_sq + dx_sq + time_term + corrector }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dissipation {
    pub u2_sq: f64,
    pub dx_u2_sq: f64,
    pub dx_u_sq: f64,
    /// Σ_k ε_k ‖BA^k U_x‖².
    pub corrector_sq: f64,
    /// `(κ/2)‖U₂‖² + κ(1/2 + η₀t)‖∂U₂‖² + (ε*/4C_K)‖∂U‖²`.
    pub aggregate: f64,
}

pub fn dissipation_components(
    state: &StateField,
    t: f64,
    spec: &SystemSpec,
    coeffs: &CorrectorCoeffs,
    grid: &Grid1D,
) -> Dissipation {
    let dx = state.d_dx(grid);
    let w = WeightSpec::UNWEIGHTED;
    let n = spec.n;
    let u2_sq = state.l2_sq_range(grid, spec.n1..n, w);
    let dx_u2_sq = dx.l2_sq_range(grid, spec.n1..n, w);
    let dx_u_sq = dx.l2_sq_range(grid, 0..n, w);
    let pows = spec.ba_powers();
    let corrector_sq = (1..n)
        .map(|k| coeffs.eps[k - 1] * dx.apply(&pows[k]).l2_sq_range(grid, 0..n, w))
        .sum();
    let k = spec.kappa;
    let aggregate = 0.5 * k * u2_sq
        + k * (0.5 + coeffs.eta0 * t) * dx_u2_sq
        + coeffs.eps_star / (4.0 * coeffs.c_k) * dx_u_sq;
    Dissipation { u2_sq, dx_u2_sq, dx_u_sq, corrector_sq, aggregate }
}

/// Coefficients for the |x|^μ-weighted functional and the damping threshold κ₀.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedCoeffs {
    pub mu: f64,
    pub eps_tilde: Vec<f64>,
    pub c_tilde: f64,
    pub kappa0: f64,
    pub kappa_ok: bool,
}

/// `C̃ = ‖A‖₂² (2μ/(2μ-1))² / 8`: the commutator `[|x|^μ, ∂_x]` contributes `μ|x|^{μ-1}`,
/// which the sharp Hardy constant `2/(2μ-1)` converts back into `|x|^μ ∂_x`.
pub fn select_weighted_coefficients(
    spec: &SystemSpec,
    mu: f64,
    delta: f64,
) -> Result<WeightedCoeffs, CorrectorError> {
    if mu <= 0.5 {
        return Err(CorrectorError::MuOutOfRange(mu));
    }
    if !spec.flags.a11_zero {
        return Err(CorrectorError::HypothesisViolated("A11 must vanish".into()));
    }
    let a_norm = op_norm2(spec.a.mat());
    let hardy = 2.0 * mu / (2.0 * mu - 1.0);
    let c_tilde = a_norm * a_norm * hardy * hardy / 8.0;
    let n = spec.n;
    let m = select_exponents(n, delta);
    let eps1 = 0.125;
    let build = |s: f64| -> Vec<f64> { m.iter().map(|mk| eps1 * s.powf(mk - m[0])).collect() };
    let chain_ok = |e: &[f64]| {
        e.iter().all(|&v| v <= 0.125 * (1.0 + 1e-12))
            && (1..e.len().saturating_sub(1))
                .all(|k| 8.0 * c_tilde * e[k] * e[k] <= e[k - 1] * e[k + 1] * (1.0 + 1e-12))
    };
    let mut s = 1.0;
    let mut eps_tilde = build(s);
    while !chain_ok(&eps_tilde) {
        s *= 0.5;
        eps_tilde = build(s);
        if s < 1e-200 {
            return Err(CorrectorError::HypothesisViolated(
                "weighted constraint chain infeasible".into(),
            ));
        }
    }
    let kappa0 = (4.0 * c_tilde / eps_tilde[0]).sqrt();
    Ok(WeightedCoeffs { mu, eps_tilde, c_tilde, kappa0, kappa_ok: spec.kappa >= kappa0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;
    use crate::linalg::{validate_spec, SymMatrix};

    fn spec(a: &[Vec<f64>], d: &[Vec<f64>], n1: usize) -> SystemSpec {
        validate_spec(SymMatrix::from_rows(a).unwrap(), SymMatrix::from_rows(d).unwrap(), n1).unwrap()
    }

    fn swap(kappa: f64) -> SystemSpec {
        spec(&[vec![0.0, 1.0], vec![1.0, 0.0]], &[vec![kappa]], 1)
    }

    #[test]
    fn exponent_examples() {
        let m = select_exponents(2, 0.1);
        assert_eq!(m.len(), 1);
        assert!((m[0] - 1.4).abs() < 1e-12);
        let m = select_exponents(3, 0.1);
        assert!((m[0] - 1.6).abs() < 1e-12);
        assert!((m[1] - 1.9).abs() < 1e-12);
        assert!(m[1] >= m[0] + 0.1);
        let m = select_exponents(6, 0.07);
        for k in 1..m.len() - 1 {
            assert!((m[k + 1] - 2.0 * m[k] + m[k - 1] + 0.14).abs() < 1e-12);
        }
        assert!(exponents_valid(&m, 0.07));
    }

    #[test]
    fn swap_coefficients_pass_all_constraints() {
        let s = swap(1.0);
        let c = select_coefficients(&s, DEFAULT_DELTA, DEFAULT_SAFETY).unwrap();
        assert!(c.report.ok(), "{:?}", c.report);
        assert!(validate_coefficients(&s, &c).ok());
        assert_eq!(c.eps0, 0.25);
    }

    #[test]
    fn identity_fails_sk() {
        let s = spec(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[vec![1.0]], 1);
        assert!(matches!(
            select_coefficients(&s, 0.1, 0.5),
            Err(CorrectorError::SKConditionFails { rank: 1, n: 2 })
        ));
    }

    #[test]
    fn halving_safety_halves_eta0_given_same_eps() {
        // η₀ is linear in safety for fixed ε*; ε* itself depends on safety through ε₀,
        // so compare at the level of the construction formula
        let s = swap(1.0);
        let a = select_coefficients(&s, 0.1, 0.5).unwrap();
        let b = select_coefficients(&s, 0.1, 0.25).unwrap();
        let ratio_a = a.eta0 / (a.eps_star / (4.0 * a.c_k));
        let ratio_b = b.eta0 / (b.eps_star / (4.0 * b.c_k));
        assert!((ratio_a / ratio_b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn c_k_matches_smallest_singular_value() {
        let s = spec(
            &[vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 2.0], vec![0.0, 2.0, 0.5]],
            &[vec![1.5]],
            2,
        );
        let k = build_kalman(&s);
        let smin = *k.singular_values.last().unwrap();
        let exact = 1.0 / (smin * smin);
        let est = estimate_c_k(&s) / 2.0;
        assert!((est - exact).abs() <= 1e-6 * exact, "{est} vs {exact}");
    }

    #[test]
    fn three_component_system() {
        let s = spec(
            &[vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]],
            &[vec![2.0]],
            2,
        );
        let c = select_coefficients(&s, 0.1, 0.5).unwrap();
        assert!(c.report.ok());
        assert_eq!(c.eps.len(), 2);
    }

    #[test]
    fn corrector_zero_and_constant() {
        let s = swap(1.0);
        let c = select_coefficients(&s, 0.1, 0.5).unwrap();
        let g = Grid1D::new(10.0, 64, Boundary::Periodic).unwrap();
        let zero = StateField::zeros(2, 64);
        assert_eq!(eval_corrector(&zero, &s, &c, &g), 0.0);
        let mut k = StateField::zeros(2, 64);
        k.comps[0].fill(1.3);
        k.comps[1].fill(-0.2);
        assert_eq!(eval_corrector(&k, &s, &c, &g), 0.0);
        assert_eq!(eval_lyapunov(&zero, 1.0, &s, &c, &g).total, 0.0);
    }

    #[test]
    fn corrector_quadrature_against_refined_grid() {
        let s = swap(1.0);
        let c = select_coefficients(&s, 0.1, 0.5).unwrap();
        let value = |n| {
            let g = Grid1D::new(20.0, n, Boundary::CompactSupport).unwrap();
            let mut u = StateField::zeros(2, n);
            u.comps[0] = g.sample(|x| (-x * x).exp());
            // a U₂ companion keeps the pairing (B U, BA U_x) nonzero
            u.comps[1] = g.sample(|x| (-(x - 0.5) * (x - 0.5)).exp());
            eval_corrector(&u, &s, &c, &g)
        };
        let (a, b) = (value(1601), value(6401));
        assert!(((a - b) / b).abs() < 1e-3, "{a} vs {b}");
    }

    #[test]
    fn corrector_order_two() {
        let s = swap(1.0);
        let c = select_coefficients(&s, 0.1, 0.5).unwrap();
        let value = |n| {
            let g = Grid1D::new(20.0, n, Boundary::CompactSupport).unwrap();
            let mut u = StateField::zeros(2, n);
            u.comps[0] = g.sample(|x| (-x * x).exp());
            u.comps[1] = g.sample(|x| (-(x - 0.5) * (x - 0.5)).exp());
            eval_corrector(&u, &s, &c, &g)
        };
        let (a, b, r) = (value(201), value(401), value(801));
        let ratio = (a - b) / (b - r);
        assert!((3.6..4.4).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn lyapunov_decomposition_and_equivalence() {
        let s = swap(1.0);
        let c = select_coefficients(&s, 0.1, 0.5).unwrap();
        let g = Grid1D::new(20.0, 801, Boundary::CompactSupport).unwrap();
        let mut u = StateField::zeros(2, 801);
        u.comps[0] = g.sample(|x| (-x * x).exp());
        u.comps[1] = g.sample(|x| x * (-x * x).exp());
        let p = eval_lyapunov(&u, 3.0, &s, &c, &g);
        let h1 = u.h1_norm(&g).powi(2);
        let dxs = u.d_dx(&g).l2_norm(&g, WeightSpec::UNWEIGHTED).powi(2);
        assert!((p.h1_sq - h1).abs() < 1e-12 * h1);
        assert!((p.time_term - c.eta0 * 3.0 * dxs).abs() < 1e-12 * h1);
        assert!((p.corrector - eval_corrector(&u, &s, &c, &g)).abs() < 1e-15);
        assert!((p.total - (p.h1_sq + p.time_term + p.corrector)).abs() < 1e-12 * h1);
        let ls = p.without_time_weight();
        assert!(0.5 * h1 <= ls && ls <= 1.5 * h1);
        // ε → 0 limit at t = 0 leaves the H¹ norm
        let mut c0 = c.clone();
        c0.eps.iter_mut().for_each(|e| *e = 0.0);
        assert_eq!(eval_lyapunov(&u, 0.0, &s, &c0, &g).total, p.h1_sq);
    }

    #[test]
    fn dissipation_components_examples() {
        let s = swap(1.0);
        let c = select_coefficients(&s, 0.1, 0.5).unwrap();
        let g = Grid1D::new(20.0, 801, Boundary::CompactSupport).unwrap();
        let z = dissipation_components(&StateField::zeros(2, 801), 0.0, &s, &c, &g);
        assert_eq!(z.aggregate, 0.0);
        let mut u = StateField::zeros(2, 801);
        u.comps[1] = g.sample(|x| (-x * x).exp());
        let d = dissipation_components(&u, 0.0, &s, &c, &g);
        assert_eq!(d.u2_sq, g.l2_sq(&u.comps[1]));
    }

    #[test]
    fn kalman_bound_on_smooth_state() {
        // Σ_{k≥0} |BA^k y|² ≥ |y|²/C_K pointwise, so with ε* ≤ every weight the corrector
        // dissipation plus κ‖∂U₂‖² dominates (ε*/C_K)‖∂U‖² up to the κ-term slack
        let s = swap(1.0);
        let c = select_coefficients(&s, 0.1, 0.5).unwrap();
        let g = Grid1D::new(20.0, 801, Boundary::CompactSupport).unwrap();
        let mut u = StateField::zeros(2, 801);
        u.comps[0] = g.sample(|x| (-(x - 1.0) * (x - 1.0)).exp());
        u.comps[1] = g.sample(|x| (0.5 * x).sin() * (-x * x / 4.0).exp());
        let d = dissipation_components(&u, 0.0, &s, &c, &g);
        let lhs = d.corrector_sq + c.eps_star * d.dx_u2_sq;
        assert!(lhs >= c.eps_star / c.c_k * d.dx_u_sq);
    }

    #[test]
    fn weighted_coefficients() {
        let s = swap(5.0);
        let w = select_weighted_coefficients(&s, 1.0, 0.1).unwrap();
        assert_eq!(w.eps_tilde, vec![0.125]);
        assert!((w.kappa0 - 4.0).abs() < 1e-12);
        assert!(w.kappa_ok);
        let id = spec(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[vec![1.0]], 1);
        assert!(matches!(
            select_weighted_coefficients(&id, 1.0, 0.1),
            Err(CorrectorError::HypothesisViolated(_))
        ));
        assert!(matches!(
            select_weighted_coefficients(&s, 0.5, 0.1),
            Err(CorrectorError::MuOutOfRange(_))
        ));
    }
}
