//! Run configuration: JSON documents, validation, and `key=value` overrides.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::RunError;
use crate::grid::{Boundary, Grid1D, WeightSpec};
use crate::solvers::EulerForm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Linear,
    Euler,
    Psystem,
    Heat,
    Ckn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Symmetric n×n flux matrix, row-major.
    pub a: Vec<Vec<f64>>,
    /// Symmetric positive-definite damping block.
    pub d: Vec<Vec<f64>>,
    pub n1: usize,
    /// Rescale `D` so that κ equals the weighted threshold κ₀ (weighted scenarios).
    #[serde(default)]
    pub scale_to_kappa0: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "L")]
    pub half_width: f64,
    #[serde(rename = "N")]
    pub n: i64,
    pub bc: Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(rename = "T")]
    pub t_final: f64,
    pub cfl: f64,
    pub sample_stride: i64,
}

/// Initial-data profiles; profiles on the same component are summed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    /// `amp·exp(-((x-c)/w)²)`
    Gaussian { amp: f64, center: f64, width: f64, component: usize },
    /// x-derivative of the unit Gaussian shape scaled by `amp·w`: `-2amp (x-c)/w·exp(-((x-c)/w)²)`; zero mean.
    Dgaussian { amp: f64, center: f64, width: f64, component: usize },
    /// `amp·(1 + ((x-c)/w)²)^{-a/2}`: slowly decaying, infinite weighted norms for large μ.
    PowerLaw { amp: f64, center: f64, width: f64, exponent: f64, component: usize },
    /// x-derivative of `power_law`; zero mean.
    DpowerLaw { amp: f64, center: f64, width: f64, exponent: f64, component: usize },
    /// `count` random smooth compactly supported bumps, reproducible from `seed`.
    Bumps { count: usize, amp: f64, max_radius: f64, spread: f64, component: usize, seed: u64 },
}

impl Profile {
    pub fn component(&self) -> usize {
        match *self {
            Profile::Gaussian { component, .. }
            | Profile::Dgaussian { component, .. }
            | Profile::PowerLaw { component, .. }
            | Profile::DpowerLaw { component, .. }
            | Profile::Bumps { component, .. } => component,
        }
    }

    fn validate(&self) -> Result<(), String> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match *self {
            Profile::Gaussian { amp, center, width, .. } | Profile::Dgaussian { amp, center, width, .. } => {
                if !(finite(&[amp, center, width]) && width > 0.0) {
                    return Err(format!("profile needs finite amp/center and width > 0: {self:?}"));
                }
            }
            Profile::PowerLaw { amp, center, width, exponent, .. }
            | Profile::DpowerLaw { amp, center, width, exponent, .. } => {
                if !(finite(&[amp, center, width, exponent]) && width > 0.0 && exponent > 0.0) {
                    return Err(format!("power-law profile needs width, exponent > 0: {self:?}"));
                }
            }
            Profile::Bumps { count, amp, max_radius, spread, .. } => {
                if !(count > 0 && finite(&[amp, max_radius, spread]) && max_radius > 0.0 && spread >= 0.0) {
                    return Err(format!("bumps need count > 0, max_radius > 0, spread >= 0: {self:?}"));
                }
            }
        }
        Ok(())
    }

    /// Adds this profile's samples into `out`.
    pub fn add_to(&self, grid: &Grid1D, out: &mut [f64]) {
        match *self {
            Profile::Gaussian { amp, center, width, .. } => {
                for (o, &x) in out.iter_mut().zip(&grid.x) {
                    let z = (x - center) / width;
                    *o += amp * (-z * z).exp();
                }
            }
            Profile::Dgaussian { amp, center, width, .. } => {
                for (o, &x) in out.iter_mut().zip(&grid.x) {
                    let z = (x - center) / width;
                    *o += -2.0 * amp * z * (-z * z).exp();
                }
            }
            Profile::PowerLaw { amp, center, width, exponent, .. } => {
                for (o, &x) in out.iter_mut().zip(&grid.x) {
                    let z = (x - center) / width;
                    *o += amp * (1.0 + z * z).powf(-0.5 * exponent);
                }
            }
            Profile::DpowerLaw { amp, center, width, exponent, .. } => {
                for (o, &x) in out.iter_mut().zip(&grid.x) {
                    let z = (x - center) / width;
                    *o += -exponent * amp * (z / width) * (1.0 + z * z).powf(-0.5 * exponent - 1.0);
                }
            }
            Profile::Bumps { count, amp, max_radius, spread, seed, .. } => {
                for b in random_bumps(seed, 0, count, amp, max_radius, spread) {
                    b.add_to(grid, out);
                }
            }
        }
    }
}

/// `amp·exp(1 - 1/(1 - ((x-c)/r)²))` on `|x-c| < r`, zero outside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub amp: f64,
    pub center: f64,
    pub radius: f64,
}

impl Bump {
    pub fn eval(&self, x: f64) -> f64 {
        let z = (x - self.center) / self.radius;
        if z.abs() >= 1.0 {
            0.0
        } else {
            self.amp * (1.0 - 1.0 / (1.0 - z * z)).exp()
        }
    }

    pub fn add_to(&self, grid: &Grid1D, out: &mut [f64]) {
        for (o, &x) in out.iter_mut().zip(&grid.x) {
            *o += self.eval(x);
        }
    }
}

/// Bumps from the counter-based stream `(seed, stream)`: centers in `[-spread, spread]`,
/// radii in `[max_radius/4, max_radius]`, amplitudes `±[amp/4, amp]`.
pub fn random_bumps(seed: u64, stream: u64, count: usize, amp: f64, max_radius: f64, spread: f64) -> Vec<Bump> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..count)
        .map(|_| {
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            Bump {
                amp: sign * rng.gen_range(0.25 * amp..=amp),
                center: if spread > 0.0 { rng.gen_range(-spread..=spread) } else { 0.0 },
                radius: rng.gen_range(0.25 * max_radius..=max_radius),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrectorConfig {
    pub delta: f64,
    pub safety: f64,
}

impl Default for CorrectorConfig {
    fn default() -> Self {
        Self { delta: crate::corrector::DEFAULT_DELTA, safety: crate::corrector::DEFAULT_SAFETY }
    }
}

/// Wave-energy monitor. `a = None` selects the smallest admissible power of two.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum WaveConfig {
    Power {
        mu: f64,
        #[serde(default)]
        a: Option<f64>,
        mass_tol: f64,
    },
    Log {
        q: f64,
        #[serde(default)]
        a: Option<f64>,
        eta3: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EulerConfig {
    pub gamma: f64,
    /// Pressure constant in `P = Kρ^γ`.
    #[serde(rename = "K")]
    pub k: f64,
    pub rho_bar: f64,
    pub lambda: f64,
    pub form: EulerForm,
    pub smallness_cap: f64,
    pub nu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsystemConfig {
    pub r: f64,
    pub eta2: f64,
    pub nu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CknConfig {
    pub trials: usize,
    pub mus: Vec<f64>,
    /// Bumps per random trial.
    pub bumps_per_trial: usize,
    pub max_radius: f64,
    pub spread: f64,
    /// Near-optimizer witness grid size (the witness is scale invariant, so L is irrelevant).
    pub witness_n: i64,
    /// Regularization width in grid cells.
    pub witness_core_cells: f64,
    /// Width of the outer cutoff in `log|x|`.
    pub witness_taper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Fit window; `None` means `[T/4, T]`.
    #[serde(default)]
    pub fit_window: Option<[f64; 2]>,
    /// Exponent q of the log-weighted boundedness check.
    #[serde(default)]
    pub log_q: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
    #[serde(default)]
    pub snapshots: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: String,
    pub model: Model,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemConfig>,
    pub grid: GridConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub data: Vec<Profile>,
    /// Secondary data set run alongside the main one (scenario-specific use).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub companion_data: Option<Vec<Profile>>,
    #[serde(default)]
    pub weights: Vec<WeightSpec>,
    #[serde(default)]
    pub corrector: CorrectorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wave: Option<WaveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub euler: Option<EulerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psystem: Option<PsystemConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ckn: Option<CknConfig>,
    #[serde(default = "default_analysis")]
    pub analysis: AnalysisConfig,
    pub outputs: OutputConfig,
    #[serde(default)]
    pub seed: u64,
}

fn default_analysis() -> AnalysisConfig {
    AnalysisConfig { fit_window: None, log_q: None }
}

fn cfg_err(msg: impl Into<String>) -> RunError {
    RunError::Config(msg.into())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, RunError> {
        let c: RunConfig = serde_json::from_str(text).map_err(|e| cfg_err(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Applies dotted-path overrides (`grid.N=2048`, `time.T=50`); values parse as JSON,
    /// falling back to a plain string. The result is re-validated.
    pub fn with_overrides(&self, sets: &[String]) -> Result<Self, RunError> {
        let mut v = serde_json::to_value(self).expect("config serializes");
        for s in sets {
            let (key, raw) = s.split_once('=').ok_or_else(|| cfg_err(format!("override `{s}` is not key=value")))?;
            let val: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            set_path(&mut v, key, val)?;
        }
        let c: RunConfig = serde_json::from_value(v).map_err(|e| cfg_err(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn fit_window(&self) -> (f64, f64) {
        match self.analysis.fit_window {
            Some([a, b]) => (a, b),
            None => (0.25 * self.time.t_final, self.time.t_final),
        }
    }

    pub fn build_grid(&self) -> Result<Grid1D, RunError> {
        Grid1D::new(self.grid.half_width, self.grid.n as usize, self.grid.bc).map_err(|e| cfg_err(e.to_string()))
    }

    /// Number of unknowns carried by the model.
    pub fn n_components(&self) -> usize {
        match self.model {
            Model::Linear => self.system.as_ref().map_or(0, |s| s.a.len()),
            Model::Euler | Model::Psystem => 2,
            Model::Heat => 1,
            Model::Ckn => 0,
        }
    }

    /// Structural checks only; nothing is allocated beyond the config itself.
    pub fn validate(&self) -> Result<(), RunError> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(cfg_err(format!("{name} must be positive and finite, got {v}")))
            }
        };
        if self.scenario.is_empty() {
            return Err(cfg_err("scenario must be non-empty"));
        }
        pos("grid.L", self.grid.half_width)?;
        if self.grid.n < 16 {
            return Err(cfg_err(format!("grid.N must be at least 16, got {}", self.grid.n)));
        }
        pos("time.T", self.time.t_final)?;
        if !(self.time.cfl > 0.0 && self.time.cfl < 1.0) {
            return Err(cfg_err(format!("time.cfl must lie in (0, 1), got {}", self.time.cfl)));
        }
        if !(1..=10).contains(&self.time.sample_stride) {
            return Err(cfg_err(format!(
                "time.sample_stride must lie in 1..=10 steps, got {}",
                self.time.sample_stride
            )));
        }
        pos("corrector.delta", self.corrector.delta)?;
        if !(self.corrector.safety > 0.0 && self.corrector.safety < 1.0) {
            return Err(cfg_err("corrector.safety must lie in (0, 1)"));
        }
        for w in &self.weights {
            match *w {
                WeightSpec::Power { mu } if mu >= 0.0 && mu.is_finite() => {}
                WeightSpec::Logarithmic { q } if q >= 0.0 && q.is_finite() => {}
                _ => return Err(cfg_err(format!("invalid weight {w:?}"))),
            }
        }
        if let Some([a, b]) = self.analysis.fit_window {
            if !(a >= 0.0 && b > a) {
                return Err(cfg_err(format!("analysis.fit_window must satisfy 0 <= t_min < t_max, got [{a}, {b}]")));
            }
        }
        if self.outputs.dir.is_empty() {
            return Err(cfg_err("outputs.dir must be non-empty"));
        }
        for &t in &self.outputs.snapshots {
            // times beyond T are simply never reached
            if !(t >= 0.0 && t.is_finite()) {
                return Err(cfg_err(format!("snapshot time must be finite and >= 0, got {t}")));
            }
        }
        let nc = self.n_components();
        for p in self.data.iter().chain(self.companion_data.iter().flatten()) {
            p.validate().map_err(cfg_err)?;
            if self.model != Model::Ckn && p.component() >= nc {
                return Err(cfg_err(format!("profile component {} out of range (n = {nc})", p.component())));
            }
        }
        match self.model {
            Model::Linear => {
                let s = self.system.as_ref().ok_or_else(|| cfg_err("linear model needs `system`"))?;
                let n = s.a.len();
                let n2 = s.d.len();
                if n < 2 || s.a.iter().any(|r| r.len() != n) || s.d.iter().any(|r| r.len() != n2) {
                    return Err(cfg_err("system.a must be n×n and system.d n2×n2"));
                }
                if s.n1 + n2 != n || s.n1 == 0 {
                    return Err(cfg_err(format!("need n1 + n2 = n with n1 >= 1; n = {n}, n1 = {}, n2 = {n2}", s.n1)));
                }
                if s.a.iter().chain(&s.d).flatten().any(|v| !v.is_finite()) {
                    return Err(cfg_err("system matrices must be finite"));
                }
                if let Some(WaveConfig::Log { .. }) = self.wave {
                    return Err(cfg_err("linear runs take a power-mode wave monitor"));
                }
            }
            Model::Euler => {
                let e = self.euler.as_ref().ok_or_else(|| cfg_err("euler model needs `euler`"))?;
                if !(e.gamma > 1.0) {
                    return Err(cfg_err(format!("euler.gamma must exceed 1, got {}", e.gamma)));
                }
                pos("euler.K", e.k)?;
                pos("euler.rho_bar", e.rho_bar)?;
                pos("euler.lambda", e.lambda)?;
                pos("euler.smallness_cap", e.smallness_cap)?;
                if !(e.nu >= 0.0) {
                    return Err(cfg_err("euler.nu must be nonnegative"));
                }
            }
            Model::Psystem => {
                let p = self.psystem.as_ref().ok_or_else(|| cfg_err("psystem model needs `psystem`"))?;
                if !(p.r > 1.0 && p.r < 3.0) {
                    return Err(cfg_err(format!("psystem.r must lie in (1, 3), got {}", p.r)));
                }
                if !(p.eta2 >= 0.0 && p.nu >= 0.0) {
                    return Err(cfg_err("psystem.eta2 and psystem.nu must be nonnegative"));
                }
                if let Some(WaveConfig::Power { .. }) = self.wave {
                    return Err(cfg_err("p-system runs take a log-mode wave monitor"));
                }
            }
            Model::Heat => {}
            Model::Ckn => {
                let c = self.ckn.as_ref().ok_or_else(|| cfg_err("ckn model needs `ckn`"))?;
                if c.trials == 0 || c.bumps_per_trial == 0 || c.mus.is_empty() {
                    return Err(cfg_err("ckn needs trials, bumps_per_trial and mus"));
                }
                if c.mus.iter().any(|&m| !(m > 0.5 && m.is_finite())) {
                    return Err(cfg_err("ckn.mus must exceed 1/2"));
                }
                pos("ckn.max_radius", c.max_radius)?;
                pos("ckn.witness_core_cells", c.witness_core_cells)?;
                pos("ckn.witness_taper", c.witness_taper)?;
                if c.witness_n < 16 {
                    return Err(cfg_err("ckn.witness_n must be at least 16"));
                }
            }
        }
        match &self.wave {
            Some(WaveConfig::Power { mu, a, mass_tol }) => {
                if !(0.5..=1.0).contains(mu) {
                    return Err(cfg_err(format!("wave.mu must lie in [1/2, 1], got {mu}")));
                }
                pos("wave.mass_tol", *mass_tol)?;
                if let Some(a) = a {
                    pos("wave.a", *a)?;
                }
            }
            Some(WaveConfig::Log { q, a, eta3 }) => {
                pos("wave.q", *q)?;
                pos("wave.eta3", *eta3)?;
                if let Some(a) = a {
                    if !(*a > 1.0) {
                        return Err(cfg_err("wave.a must exceed 1 in log mode"));
                    }
                }
            }
            None => {}
        }
        Ok(())
    }
}

fn set_path(root: &mut Value, path: &str, val: Value) -> Result<(), RunError> {
    let mut cur = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, p) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(p.to_string(), val);
                    return Ok(());
                }
                map.entry(p.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(arr) => {
                let idx: usize = p.parse().map_err(|_| cfg_err(format!("`{p}` in `{path}` is not an index")))?;
                let len = arr.len();
                let slot = arr.get_mut(idx).ok_or_else(|| cfg_err(format!("index {idx} out of range ({len}) in `{path}`")))?;
                if last {
                    *slot = val;
                    return Ok(());
                }
                slot
            }
            _ => return Err(cfg_err(format!("`{path}` does not address an object field"))),
        };
    }
    Err(cfg_err(format!("empty override path `{path}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> RunConfig {
        super::super::registry::default_config("thm1_linear").unwrap()
    }

    #[test]
    fn round_trip_is_idempotent() {
        let c = base();
        let j = c.to_json();
        let back = RunConfig::from_json(&j).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_json(), j);
    }

    #[test]
    fn overrides_apply_and_revalidate() {
        let c = base().with_overrides(&["grid.N=2048".into(), "time.T=50".into()]).unwrap();
        assert_eq!(c.grid.n, 2048);
        assert_eq!(c.time.t_final, 50.0);
        assert!(base().with_overrides(&["grid.N=-4".into()]).is_err());
        assert!(base().with_overrides(&["nonsense".into()]).is_err());
        assert!(base().with_overrides(&["grid.bogus=1".into()]).is_err());
        let c = base().with_overrides(&["data.0.amp=2".into()]).unwrap();
        assert!(matches!(c.data[0], Profile::Gaussian { amp, .. } if amp == 2.0));
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = base();
        c.time.sample_stride = 11;
        assert!(c.validate().is_err());
        let mut c = base();
        c.time.cfl = 1.5;
        assert!(c.validate().is_err());
        let mut c = base();
        c.system.as_mut().unwrap().n1 = 2;
        assert!(c.validate().is_err());
        assert!(RunConfig::from_json("{\"scenario\": 1}").is_err());
    }

    #[test]
    fn bumps_are_reproducible_and_compact() {
        let a = random_bumps(7, 3, 5, 1.0, 2.0, 4.0);
        assert_eq!(a, random_bumps(7, 3, 5, 1.0, 2.0, 4.0));
        assert_ne!(a, random_bumps(7, 4, 5, 1.0, 2.0, 4.0));
        for b in &a {
            assert_eq!(b.eval(b.center + b.radius), 0.0);
            assert!(b.eval(b.center).abs() > 0.0);
        }
    }
}
