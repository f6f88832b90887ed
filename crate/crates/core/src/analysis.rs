//! Post-processing: decay fits, log-decay boundedness, energy-law residuals, the weighted
//! Hardy/CKN check, the differential-inequality certificate and weighted-bound checks.

use crate::grid::{fmt_num, Grid1D, WeightSpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MIN_FIT_SAMPLES: usize = 20;
pub const RATIO_CAP: f64 = 1.10;
pub const CKN_SLACK: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("window [{t_min}, {t_max}] holds {found} samples, need at least {need}")]
    WindowTooSmall { t_min: f64, t_max: f64, found: usize, need: usize },
    #[error("channel `{0}` has nonpositive values in the fit window")]
    NonpositiveValues(String),
    #[error("missing channel `{0}`")]
    MissingChannel(String),
    #[error("mu must exceed 1/2, got {0}")]
    MuOutOfRange(f64),
    #[error("parameters violate 0 < eta0 < min(a2/mu, a2): eta0 = {eta0}, a2 = {a2}, mu = {mu}")]
    BadParameters { eta0: f64, a2: f64, mu: f64 },
    #[error("series shape error: {0}")]
    Shape(String),
}

/// Sampled channels on a common, strictly increasing time grid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    pub names: Vec<String>,
    pub data: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn new(names: &[&str]) -> Self {
        Self {
            t: Vec::new(),
            names: names.iter().map(|s| s.to_string()).collect(),
            data: vec![Vec::new(); names.len()],
        }
    }

    pub fn from_channels(t: Vec<f64>, channels: Vec<(&str, Vec<f64>)>) -> Self {
        let mut s = Self { t, names: Vec::new(), data: Vec::new() };
        for (n, v) in channels {
            s.names.push(n.to_string());
            s.data.push(v);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Appends a row; `values` follow `names` order.
    pub fn push(&mut self, t: f64, values: &[f64]) {
        assert_eq!(values.len(), self.names.len(), "row width mismatch");
        self.t.push(t);
        for (col, v) in self.data.iter_mut().zip(values) {
            col.push(*v);
        }
    }

    pub fn channel(&self, name: &str) -> Result<&[f64], AnalysisError> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.data[i].as_slice())
            .ok_or_else(|| AnalysisError::MissingChannel(name.to_string()))
    }

    /// Strictly increasing t, equal lengths, finite values.
    pub fn validate(&self) -> Result<(), AnalysisError> {
        if self.t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(AnalysisError::Shape("time samples not strictly increasing".into()));
        }
        for (n, c) in self.names.iter().zip(&self.data) {
            if c.len() != self.t.len() {
                return Err(AnalysisError::Shape(format!("channel `{n}` has wrong length")));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(AnalysisError::Shape(format!("channel `{n}` has non-finite values")));
            }
        }
        Ok(())
    }

    /// CSV with header `t,<channels>`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t");
        for n in &self.names {
            s.push(',');
            s.push_str(n);
        }
        s.push('\n');
        for i in 0..self.t.len() {
            s.push_str(&fmt_num(self.t[i]));
            for c in &self.data {
                s.push(',');
                s.push_str(&fmt_num(c[i]));
            }
            s.push('\n');
        }
        s
    }
}

/// Least-squares fit of `log v = logC + alpha log(1+t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub alpha: f64,
    pub log_c: f64,
    pub r2: f64,
    pub window: [f64; 2],
    pub samples: usize,
}

pub fn fit_power(
    series: &TimeSeries,
    channel: &str,
    t_min: f64,
    t_max: f64,
) -> Result<DecayFit, AnalysisError> {
    let v = series.channel(channel)?;
    let idx: Vec<usize> =
        (0..series.len()).filter(|&i| series.t[i] >= t_min && series.t[i] <= t_max).collect();
    if idx.len() < MIN_FIT_SAMPLES {
        return Err(AnalysisError::WindowTooSmall {
            t_min,
            t_max,
            found: idx.len(),
            need: MIN_FIT_SAMPLES,
        });
    }
    if idx.iter().any(|&i| v[i] <= 0.0) {
        return Err(AnalysisError::NonpositiveValues(channel.to_string()));
    }
    let xs: Vec<f64> = idx.iter().map(|&i| series.t[i].ln_1p()).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| v[i].ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let alpha = sxy / sxx;
    let log_c = my - alpha * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(DecayFit { alpha, log_c, r2, window: [t_min, t_max], samples: idx.len() })
}

/// Boundedness certificate for `log^q(1+t) · v(t)` past `t0 = 10`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundedProduct {
    pub sup: f64,
    pub sup_time: f64,
    pub ratio_late_early: f64,
    pub passes: bool,
}

pub const BOUNDED_T0: f64 = 10.0;

pub fn bounded_product(
    series: &TimeSeries,
    channel: &str,
    q: f64,
) -> Result<BoundedProduct, AnalysisError> {
    let v = series.channel(channel)?;
    let idx: Vec<usize> = (0..series.len()).filter(|&i| series.t[i] >= BOUNDED_T0).collect();
    if idx.len() < 8 {
        return Err(AnalysisError::WindowTooSmall {
            t_min: BOUNDED_T0,
            t_max: series.t.last().copied().unwrap_or(0.0),
            found: idx.len(),
            need: 8,
        });
    }
    let g = |i: usize| series.t[i].ln_1p().powf(q) * v[i];
    let t0 = series.t[idx[0]];
    let t1 = series.t[*idx.last().unwrap()];
    let quarter = 0.25 * (t1 - t0);
    let (mut sup, mut sup_time) = (f64::MIN, t0);
    let (mut early, mut late) = (f64::MIN, f64::MIN);
    for &i in &idx {
        let gi = g(i);
        if gi > sup {
            sup = gi;
            sup_time = series.t[i];
        }
        if series.t[i] <= t0 + quarter {
            early = early.max(gi);
        }
        if series.t[i] >= t1 - quarter {
            late = late.max(gi);
        }
    }
    let ratio = if early == 0.0 && late == 0.0 { 0.0 } else { late / early };
    Ok(BoundedProduct { sup, sup_time, ratio_late_early: ratio, passes: ratio <= RATIO_CAP })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyResidual {
    pub max: f64,
    pub l1: f64,
    pub scale: f64,
}

/// Residual of `d/dt E + Q = 0` with `E` the squared-norm channel and `Q` the recorded
/// dissipation, via central differences on the sample grid.
pub fn check_energy_law(
    series: &TimeSeries,
    energy: &str,
    dissipation: &str,
) -> Result<EnergyResidual, AnalysisError> {
    let e = series.channel(energy)?;
    let q = series.channel(dissipation)?;
    let t = &series.t;
    let scale = e.first().copied().unwrap_or(0.0).abs();
    let (mut max, mut l1) = (0.0f64, 0.0);
    for i in 1..t.len().saturating_sub(1) {
        let de = (e[i + 1] - e[i - 1]) / (t[i + 1] - t[i - 1]);
        let r = (de + q[i]).abs();
        max = max.max(r);
        l1 += r * 0.5 * (t[i + 1] - t[i - 1]);
    }
    Ok(EnergyResidual { max, l1, scale })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CknCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// Ratio against the constant `(2μ-1)/2` instead of the sharp `2/(2μ-1)`.
    pub ratio_reciprocal_constant: f64,
}

/// Sharp Hardy constant in `‖|x|^{μ-1} h‖ ≤ C ‖|x|^μ h'‖`.
pub fn ckn_constant(mu: f64) -> f64 {
    2.0 / (2.0 * mu - 1.0)
}

pub fn check_ckn(grid: &Grid1D, h: &[f64], mu: f64) -> Result<CknCheck, AnalysisError> {
    if mu <= 0.5 {
        return Err(AnalysisError::MuOutOfRange(mu));
    }
    let dh = grid.d_dx(h);
    let lhs = grid.l2(h, WeightSpec::Power { mu: mu - 1.0 });
    let grad = grid.l2(&dh, WeightSpec::Power { mu });
    let rhs = ckn_constant(mu) * grad;
    let alt = (2.0 * mu - 1.0) / 2.0 * grad;
    let div = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
    Ok(CknCheck { lhs, rhs, ratio: div(lhs, rhs), ratio_reciprocal_constant: div(lhs, alt) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCertificate {
    pub hypothesis_holds: bool,
    /// Largest positive excess of the integrated hypothesis, over all sample intervals.
    pub max_violation: f64,
    pub first_violation_time: Option<f64>,
    pub p: f64,
    pub constant: f64,
    pub conclusion_holds: bool,
    /// max over t > 0 of `(E1 + η₀tE2) t^μ a1^μ`; must stay below `constant`.
    pub measured_constant: f64,
}

/// Proof constant `(p/(μ+1))^{μ+1} μ^μ / (p-μ)`.
pub fn decay_lemma_constant(p: f64, mu: f64) -> f64 {
    (p / (mu + 1.0)).powf(mu + 1.0) * mu.powf(mu) / (p - mu)
}

/// `p = μ+1` when admissible (`max(1,μ) < p < a2/η₀`), otherwise the midpoint of the range.
pub fn decay_lemma_exponent(mu: f64, a2: f64, eta0: f64) -> f64 {
    let lo = mu.max(1.0);
    let hi = a2 / eta0;
    if mu + 1.0 < hi {
        mu + 1.0
    } else {
        0.5 * (lo + hi)
    }
}

/// Checks `d/dt(E1 + η₀tE2) + a1 E1^{1+1/μ} + a2 E2 ≤ 0` in integrated form on every sample
/// interval (end-corrected trapezoid for the dissipation integral), then the conclusion bound.
#[allow(clippy::too_many_arguments)]
pub fn check_decay_inequality(
    t: &[f64],
    e1: &[f64],
    e2: &[f64],
    a1: f64,
    a2: f64,
    mu: f64,
    eta0: f64,
    slack: f64,
) -> Result<DecayCertificate, AnalysisError> {
    if !(eta0 > 0.0 && eta0 < (a2 / mu).min(a2) && a1 > 0.0 && mu > 0.0) {
        return Err(AnalysisError::BadParameters { eta0, a2, mu });
    }
    if e1.len() != t.len() || e2.len() != t.len() {
        return Err(AnalysisError::Shape("E1/E2 length mismatch".into()));
    }
    let f = |i: usize| e1[i] + eta0 * t[i] * e2[i];
    let d = |i: usize| a1 * e1[i].max(0.0).powf(1.0 + 1.0 / mu) + a2 * e2[i];
    let m = t.len();
    // end-corrected trapezoid: ∫d ≈ h/2 (d_i + d_{i+1}) - h²/12 (d'_{i+1} - d'_i)
    // three-point Lagrange derivative (one-sided at the ends)
    let dd = |i: usize| -> f64 {
        if m < 3 {
            return if m == 2 { (d(1) - d(0)) / (t[1] - t[0]) } else { 0.0 };
        }
        let c = i.clamp(1, m - 2);
        let (t0, t1, t2) = (t[c - 1], t[c], t[c + 1]);
        let x = t[i];
        d(c - 1) * (2.0 * x - t1 - t2) / ((t0 - t1) * (t0 - t2))
            + d(c) * (2.0 * x - t0 - t2) / ((t1 - t0) * (t1 - t2))
            + d(c + 1) * (2.0 * x - t0 - t1) / ((t2 - t0) * (t2 - t1))
    };
    let mut max_violation = 0.0f64;
    let mut first = None;
    for i in 0..m.saturating_sub(1) {
        let h = t[i + 1] - t[i];
        let integral = 0.5 * h * (d(i) + d(i + 1)) - h * h / 12.0 * (dd(i + 1) - dd(i));
        let excess = f(i + 1) - f(i) + integral;
        if excess > slack {
            first.get_or_insert(t[i + 1]);
        }
        max_violation = max_violation.max(excess);
    }
    let p = decay_lemma_exponent(mu, a2, eta0);
    let constant = decay_lemma_constant(p, mu);
    let mut measured = 0.0f64;
    for i in 0..t.len() {
        if t[i] > 0.0 {
            measured = measured.max(f(i) * t[i].powf(mu) * a1.powf(mu));
        }
    }
    Ok(DecayCertificate {
        hypothesis_holds: first.is_none(),
        max_violation,
        first_violation_time: first,
        p,
        constant,
        conclusion_holds: measured <= constant * (1.0 + 1e-9),
        measured_constant: measured,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedBound {
    pub passes: bool,
    pub sup: f64,
    pub sup_time: f64,
    pub bound: f64,
}

pub fn certify_weighted_bound(
    series: &TimeSeries,
    channel: &str,
    bound: f64,
) -> Result<WeightedBound, AnalysisError> {
    let v = series.channel(channel)?;
    let (mut sup, mut sup_time) = (f64::MIN, 0.0);
    for (i, &x) in v.iter().enumerate() {
        if x > sup {
            sup = x;
            sup_time = series.t[i];
        }
    }
    Ok(WeightedBound { passes: sup <= bound, sup, sup_time, bound })
}

/// Largest relative one-sample increase `max_j (v_{j+1} - v_j) / v_0`; ≤ tol means the
/// channel is nonincreasing up to that drift.
pub fn max_relative_increase(v: &[f64]) -> f64 {
    let scale = v.first().copied().unwrap_or(0.0).abs();
    if scale == 0.0 {
        return 0.0;
    }
    v.windows(2).map(|w| (w[1] - w[0]) / scale).fold(f64::MIN, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;

    fn series(f: impl Fn(f64) -> f64, t0: f64, t1: f64, n: usize) -> TimeSeries {
        let t: Vec<f64> = (0..n).map(|i| t0 + (t1 - t0) * i as f64 / (n - 1) as f64).collect();
        let v = t.iter().map(|&x| f(x)).collect();
        TimeSeries::from_channels(t, vec![("v", v)])
    }

    #[test]
    fn exact_power_law() {
        let s = series(|t| (1.0 + t).powf(-0.5), 0.0, 100.0, 400);
        let f = fit_power(&s, "v", 25.0, 100.0).unwrap();
        assert!((f.alpha + 0.5).abs() < 1e-6);
        assert!(f.r2 > 0.999999);
    }

    #[test]
    fn constant_series() {
        let s = series(|_| 3.0, 0.0, 100.0, 400);
        let f = fit_power(&s, "v", 25.0, 100.0).unwrap();
        assert!(f.alpha.abs() < 1e-9);
    }

    #[test]
    fn log_factor_biases_fit() {
        let s = series(|t| (1.0 + t).powi(-1) * t.ln_1p().sqrt(), 10.0, 1000.0, 2000);
        let f = fit_power(&s, "v", 10.0, 1000.0).unwrap();
        assert!(f.alpha > -1.0 && f.alpha < -0.85, "{}", f.alpha);
    }

    #[test]
    fn fit_errors() {
        let s = series(|t| t - 50.0, 0.0, 100.0, 400);
        assert!(matches!(fit_power(&s, "v", 0.0, 100.0), Err(AnalysisError::NonpositiveValues(_))));
        assert!(matches!(fit_power(&s, "v", 0.0, 1.0), Err(AnalysisError::WindowTooSmall { .. })));
        assert!(matches!(fit_power(&s, "w", 0.0, 100.0), Err(AnalysisError::MissingChannel(_))));
    }

    #[test]
    fn bounded_product_examples() {
        let s = series(|t| 2.0 / t.ln_1p(), 0.0, 2000.0, 4000);
        let b = bounded_product(&s, "v", 1.0).unwrap();
        assert!((b.ratio_late_early - 1.0).abs() < 1e-6);
        let s = series(|_| 1.0, 0.0, 2000.0, 4000);
        let b = bounded_product(&s, "v", 1.0).unwrap();
        assert!(b.ratio_late_early > 1.0 && !b.passes);
        let b = bounded_product(&s, "v", 0.0).unwrap();
        assert_eq!(b.ratio_late_early, 1.0);
    }

    #[test]
    fn energy_law_on_pure_damping() {
        // E = e^{-2t}, Q = 2 e^{-2t}; central differences leave h²|E'''|/6
        let h = 5e-6;
        let t: Vec<f64> = (0..2001).map(|i| i as f64 * h).collect();
        let e: Vec<f64> = t.iter().map(|x| (-2.0 * x).exp()).collect();
        let q: Vec<f64> = e.iter().map(|v| 2.0 * v).collect();
        let s = TimeSeries::from_channels(t, vec![("e", e), ("q", q)]);
        let r = check_energy_law(&s, "e", "q").unwrap();
        assert!(r.max <= 1e-10 * r.scale, "{r:?}");
        let z = TimeSeries::from_channels(
            vec![0.0, 1.0, 2.0],
            vec![("e", vec![0.0; 3]), ("q", vec![0.0; 3])],
        );
        assert_eq!(check_energy_law(&z, "e", "q").unwrap().max, 0.0);
    }

    #[test]
    fn ckn_gaussian_closed_form() {
        let g = Grid1D::new(20.0, 4001, Boundary::CompactSupport).unwrap();
        let h = g.sample(|x| (-x * x).exp());
        let c = check_ckn(&g, &h, 1.0).unwrap();
        let lhs = (std::f64::consts::PI / 2.0).powf(0.25);
        // ‖x h'‖² = 4∫x⁴e^{-2x²} = 3√(π/2)/4
        let grad = (3.0 * (std::f64::consts::PI / 2.0).sqrt() / 4.0).sqrt();
        assert!((c.lhs - lhs).abs() < 1e-6);
        assert!((c.rhs - 2.0 * grad).abs() < 1e-4);
        assert!(c.ratio <= 1.0);
        assert!(c.ratio_reciprocal_constant > 2.0);
        let z = check_ckn(&g, &vec![0.0; 4001], 1.0).unwrap();
        assert_eq!((z.lhs, z.rhs, z.ratio), (0.0, 0.0, 0.0));
        assert!(matches!(check_ckn(&g, &h, 0.5), Err(AnalysisError::MuOutOfRange(_))));
    }

    #[test]
    fn decay_lemma_equality_case() {
        let mu = 1.0;
        let t: Vec<f64> = (0..10001).map(|i| i as f64 * 0.01).collect();
        let e1: Vec<f64> = t.iter().map(|x| (1.0 + x).powf(-mu)).collect();
        let e2 = vec![0.0; t.len()];
        let c = check_decay_inequality(&t, &e1, &e2, mu, 1.0, mu, 0.1, 1e-6).unwrap();
        assert!(c.hypothesis_holds, "{c:?}");
        assert!(c.conclusion_holds, "{c:?}");
        assert_eq!(c.p, 2.0);
        let e1 = vec![1.0; t.len()];
        let c = check_decay_inequality(&t, &e1, &e2, 1.0, 1.0, 1.0, 0.1, 1e-9).unwrap();
        assert!(!c.hypothesis_holds);
        assert_eq!(c.first_violation_time, Some(t[1]));
    }

    #[test]
    fn lemma_exponent_fallback() {
        assert_eq!(decay_lemma_exponent(1.0, 1.0, 0.1), 2.0);
        let p = decay_lemma_exponent(1.0, 1.5, 1.0);
        assert!((p - 1.25).abs() < 1e-15);
    }

    #[test]
    fn weighted_bound() {
        let s = series(|t| (1.0 + t).recip(), 0.0, 10.0, 50);
        assert!(certify_weighted_bound(&s, "v", 1.5).unwrap().passes);
        let s = series(|t| 1.0 + 0.0101 * (-((t - 3.0).powi(2))).exp(), 0.0, 10.0, 51);
        let b = certify_weighted_bound(&s, "v", 1.0).unwrap();
        assert!(!b.passes);
        assert!((b.sup_time - 3.0).abs() < 0.2);
    }

    #[test]
    fn csv_header() {
        let s = TimeSeries::from_channels(vec![0.0, 0.5], vec![("a", vec![1.0, 2.0])]);
        assert!(s.to_csv().starts_with("t,a\n0e0,1e0\n5e-1,2e0\n"));
    }
}
