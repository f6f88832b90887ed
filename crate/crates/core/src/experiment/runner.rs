//! One run: prepare (validation only, nothing written) → simulate → certify → write.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use super::config::{random_bumps, Bump, CknConfig, Model, Profile, RunConfig, WaveConfig};
use super::RunError;
use crate::analysis::{
    bounded_product, certify_weighted_bound, check_ckn, check_decay_inequality, check_energy_law,
    fit_power, max_relative_increase, TimeSeries, CKN_SLACK,
};
use crate::corrector::{select_coefficients, select_weighted_coefficients, CorrectorCoeffs, WeightedCoeffs};
use crate::grid::{Boundary, Grid1D, StateField, WeightSpec};
use crate::linalg::{build_kalman, validate_spec, StructuralFlags, SymMatrix, SystemSpec};
use crate::solvers::{
    plan_steps, EulerMonitor, EulerSim, EulerSpec, HeatMonitor, HeatSim, LinearMonitor, LinearSim,
    PSystemFrame, PSystemMonitor, PSystemSim, PSystemSpec, PowerWave, SolverError, WaveWeightSpec,
};

pub const SERIES_FILE: &str = "series.csv";
pub const REPORT_FILE: &str = "report.json";
pub const TIMING_FILE: &str = "timing.json";

/// Monotonicity tolerance for the Lyapunov functional, relative to its initial value.
pub const LYAPUNOV_TOL: f64 = 1e-8;
/// Relative drift tolerated by "nonincreasing" claims.
pub const DRIFT_TOL: f64 = 1e-6;
/// Relative tolerance of the heat closed-form comparison.
pub const HEAT_TOL: f64 = 1e-3;
/// Margin on the weighted bound: the channel must stay below `2·X₀`.
pub const WEIGHTED_MARGIN: f64 = 2.0;
/// Admissible refinement ratio of an order-2 residual.
pub const ORDER2_BAND: [f64; 2] = [3.2, 4.8];
pub const WITNESS_TARGET: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub claim: String,
    /// The bound being certified, as a formula.
    pub anchor: String,
    pub passed: bool,
    pub measured: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemManifest {
    /// Effective matrices (after any κ₀ scaling).
    pub a: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
    pub n1: usize,
    pub kappa: f64,
    pub d_scale: f64,
    pub spectral_radius: f64,
    pub flags: StructuralFlags,
    pub kalman_singular_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EulerManifest {
    pub sound_speed: f64,
    pub lambda: f64,
    /// The damping threshold of the weighted Euler estimate is not quantified; always null.
    pub lambda0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub config: RunConfig,
    pub system: Option<SystemManifest>,
    pub corrector: Option<CorrectorCoeffs>,
    pub weighted: Option<WeightedCoeffs>,
    pub kappa0: Option<f64>,
    pub wave_weight: Option<WaveWeightSpec>,
    pub wave_conditions_hold: Option<bool>,
    pub euler: Option<EulerManifest>,
    pub dx: f64,
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapshotEntry {
    pub requested: f64,
    pub time: f64,
    pub file: String,
}

/// Deterministic run report; wall-clock timing lives in `timing.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub manifest: Manifest,
    pub series: Option<String>,
    pub companions: Vec<String>,
    pub snapshots: Vec<SnapshotEntry>,
    pub certificates: Vec<Certificate>,
    pub info: BTreeMap<String, Value>,
    pub error: Option<String>,
    pub timing: String,
    pub exit_code: i32,
}

impl RunReport {
    pub fn all_passed(&self) -> bool {
        self.certificates.iter().all(|c| c.passed)
    }

    pub fn certificate(&self, claim: &str) -> Option<&Certificate> {
        self.certificates.iter().find(|c| c.claim == claim)
    }
}

enum Prep {
    Linear { spec: SystemSpec, coeffs: Option<CorrectorCoeffs>, wave: Option<(WaveWeightSpec, f64)> },
    Euler(EulerSpec),
    Psystem { spec: PSystemSpec, wave: Option<(WaveWeightSpec, f64)> },
    Heat,
    Ckn(CknConfig),
}

struct Prepared {
    cfg: RunConfig,
    grid: Grid1D,
    prep: Prep,
    manifest: Manifest,
}

fn cfg_err(e: impl std::fmt::Display) -> RunError {
    RunError::Config(e.to_string())
}

fn state_from(profiles: &[Profile], grid: &Grid1D, n_comp: usize) -> StateField {
    let mut s = StateField::zeros(n_comp, grid.n);
    for p in profiles {
        p.add_to(grid, &mut s.comps[p.component()]);
    }
    s
}

fn first_power_mu(weights: &[WeightSpec]) -> Option<f64> {
    weights.iter().find_map(|w| match *w {
        WeightSpec::Power { mu } if mu > 0.5 => Some(mu),
        _ => None,
    })
}

/// Everything that can reject a configuration happens here, before any file is written.
fn prepare(cfg: &RunConfig) -> Result<Prepared, RunError> {
    cfg.validate()?;
    let grid = cfg.build_grid()?;
    let s_max = cfg.time.t_final + cfg.grid.half_width;
    let mut manifest = Manifest {
        config: cfg.clone(),
        system: None,
        corrector: None,
        weighted: None,
        kappa0: None,
        wave_weight: None,
        wave_conditions_hold: None,
        euler: None,
        dx: grid.dx,
        dt: None,
        steps: None,
        samples: 0,
    };
    let prep = match cfg.model {
        Model::Linear => {
            let sys = cfg.system.as_ref().expect("validated");
            let a = SymMatrix::from_rows(&sys.a).map_err(cfg_err)?;
            let d = SymMatrix::from_rows(&sys.d).map_err(cfg_err)?;
            let mut spec = validate_spec(a.clone(), d.clone(), sys.n1).map_err(cfg_err)?;
            let mut d_scale = 1.0;
            if let Some(mu) = first_power_mu(&cfg.weights) {
                if spec.flags.a11_zero {
                    let wc = select_weighted_coefficients(&spec, mu, cfg.corrector.delta).map_err(cfg_err)?;
                    if sys.scale_to_kappa0 && spec.kappa < wc.kappa0 {
                        d_scale = wc.kappa0 / spec.kappa;
                        let ds = SymMatrix::new(d.mat().scale(d_scale)).map_err(cfg_err)?;
                        spec = validate_spec(a, ds, sys.n1).map_err(cfg_err)?;
                    }
                    let wc = select_weighted_coefficients(&spec, mu, cfg.corrector.delta).map_err(cfg_err)?;
                    manifest.kappa0 = Some(wc.kappa0);
                    manifest.weighted = Some(wc);
                } else if sys.scale_to_kappa0 {
                    return Err(cfg_err("scale_to_kappa0 needs A11 = 0"));
                }
            } else if sys.scale_to_kappa0 {
                return Err(cfg_err("scale_to_kappa0 needs a power weight with mu > 1/2"));
            }
            let k = build_kalman(&spec);
            manifest.system = Some(SystemManifest {
                a: spec.a.mat().to_rows(),
                d: spec.d.mat().to_rows(),
                n1: spec.n1,
                kappa: spec.kappa,
                d_scale,
                spectral_radius: spec.spectral_radius(),
                flags: spec.flags,
                kalman_singular_values: k.singular_values,
            });
            let coeffs = if spec.flags.sk_holds {
                Some(select_coefficients(&spec, cfg.corrector.delta, cfg.corrector.safety).map_err(cfg_err)?)
            } else {
                None
            };
            manifest.corrector = coeffs.clone();
            let wave = match cfg.wave {
                Some(WaveConfig::Power { mu, a, mass_tol }) => {
                    let ws = match a {
                        Some(a) => WaveWeightSpec::Power { mu, a },
                        None => WaveWeightSpec::select_power(mu, spec.kappa, s_max).map_err(cfg_err)?,
                    };
                    PowerWave::new(&spec, ws, mass_tol).map_err(cfg_err)?;
                    manifest.wave_weight = Some(ws);
                    manifest.wave_conditions_hold = Some(ws.conditions_hold(spec.kappa, s_max));
                    Some((ws, mass_tol))
                }
                _ => None,
            };
            let sim = LinearSim::new(spec.clone(), grid.clone(), cfg.time.cfl).map_err(cfg_err)?;
            let (steps, dt) = plan_steps(cfg.time.t_final, sim.dt).map_err(cfg_err)?;
            manifest.dt = Some(dt);
            manifest.steps = Some(steps);
            Prep::Linear { spec, coeffs, wave }
        }
        Model::Euler => {
            let e = cfg.euler.as_ref().expect("validated");
            let spec = EulerSpec {
                gamma: e.gamma,
                k: e.k,
                rho_bar: e.rho_bar,
                lambda: e.lambda,
                form: e.form,
                smallness_cap: e.smallness_cap,
                nu: e.nu,
            };
            EulerSim::new(spec, grid.clone(), cfg.time.cfl).map_err(cfg_err)?;
            manifest.euler = Some(EulerManifest {
                sound_speed: spec.dpressure(spec.rho_bar).sqrt(),
                lambda: spec.lambda,
                lambda0: None,
            });
            Prep::Euler(spec)
        }
        Model::Psystem => {
            let p = cfg.psystem.as_ref().expect("validated");
            let spec = PSystemSpec::new(p.r, p.eta2, p.nu).map_err(cfg_err)?;
            let sim = PSystemSim::new(spec, grid.clone(), cfg.time.cfl).map_err(cfg_err)?;
            let (steps, dt) = plan_steps(cfg.time.t_final, sim.dt).map_err(cfg_err)?;
            manifest.dt = Some(dt);
            manifest.steps = Some(steps);
            let wave = match cfg.wave {
                Some(WaveConfig::Log { q, a, eta3 }) => {
                    let ws = match a {
                        Some(a) => WaveWeightSpec::Log { q, r: p.r, a },
                        None => WaveWeightSpec::select_log(q, p.r, s_max).map_err(cfg_err)?,
                    };
                    manifest.wave_weight = Some(ws);
                    manifest.wave_conditions_hold = Some(ws.conditions_hold(1.0, s_max));
                    Some((ws, eta3))
                }
                _ => None,
            };
            Prep::Psystem { spec, wave }
        }
        Model::Heat => {
            let sim = HeatSim::new(grid.clone());
            let (steps, dt) = plan_steps(cfg.time.t_final, sim.dt).map_err(cfg_err)?;
            manifest.dt = Some(dt);
            manifest.steps = Some(steps);
            Prep::Heat
        }
        Model::Ckn => {
            let c = cfg.ckn.clone().expect("validated");
            Grid1D::new(1.0, c.witness_n as usize, Boundary::CompactSupport).map_err(cfg_err)?;
            Prep::Ckn(c)
        }
    };
    Ok(Prepared { cfg: cfg.clone(), grid, prep, manifest })
}

/// Snapshot capture at the first sample at or after each requested time.
struct Snapshots {
    pending: Vec<f64>,
    taken: Vec<(f64, f64, String)>,
}

impl Snapshots {
    fn new(mut times: Vec<f64>) -> Self {
        times.sort_by(f64::total_cmp);
        times.dedup();
        times.reverse();
        Self { pending: times, taken: vec![] }
    }

    fn wants(&self, t: f64) -> bool {
        self.pending.last().is_some_and(|&r| t >= r - 1e-9 * r.abs().max(1.0))
    }

    fn take(&mut self, t: f64, csv: impl Fn() -> String) {
        while self.wants(t) {
            let r = self.pending.pop().expect("checked");
            self.taken.push((r, t, csv()));
        }
    }
}

/// Raw simulation products before certification.
struct Products {
    series: Option<TimeSeries>,
    companions: Vec<(String, TimeSeries)>,
    snapshots: Vec<(f64, f64, String)>,
    /// Values used by the certificates that are not time series.
    scalars: BTreeMap<String, f64>,
    ckn: Option<CknOutcome>,
}

fn simulate_linear(
    p: &Prepared,
    spec: &SystemSpec,
    coeffs: &Option<CorrectorCoeffs>,
    wave: &Option<(WaveWeightSpec, f64)>,
    grid: &Grid1D,
    data: &[Profile],
    snaps: Option<&mut Snapshots>,
) -> Result<TimeSeries, SolverError> {
    let sim = LinearSim::new(spec.clone(), grid.clone(), p.cfg.time.cfl)?;
    let wave = wave.map(|(w, tol)| PowerWave::new(spec, w, tol)).transpose()?;
    let mut mon = LinearMonitor::new(spec.clone(), grid.clone(), coeffs.clone(), p.cfg.weights.clone(), wave);
    let u0 = state_from(data, grid, spec.n);
    let mut snaps = snaps;
    sim.simulate(u0, p.cfg.time.t_final, p.cfg.time.sample_stride as usize, &mut |t, u| {
        if let Some(s) = snaps.as_deref_mut() {
            s.take(t, || u.to_csv(grid));
        }
        mon.observe(t, u)
    })?;
    Ok(mon.series)
}

fn simulate_psystem(
    p: &Prepared,
    spec: PSystemSpec,
    wave: Option<(WaveWeightSpec, f64)>,
    grid: &Grid1D,
    snaps: Option<&mut Snapshots>,
) -> Result<TimeSeries, SolverError> {
    let sim = PSystemSim::new(spec, grid.clone(), p.cfg.time.cfl)?;
    let mut mon = PSystemMonitor::new(spec, grid.clone(), p.cfg.weights.clone(), wave)?;
    let s0 = state_from(&p.cfg.data, grid, 2);
    let f0 = PSystemFrame { rho: s0.comps[0].clone(), u: s0.comps[1].clone() };
    let mut snaps = snaps;
    sim.simulate(f0, p.cfg.time.t_final, p.cfg.time.sample_stride as usize, &mut |t, f| {
        if let Some(s) = snaps.as_deref_mut() {
            s.take(t, || f.to_state().to_csv(grid));
        }
        mon.observe(t, f)
    })?;
    Ok(mon.series)
}

fn simulate_heat(
    p: &Prepared,
    data: &[Profile],
    snaps: Option<&mut Snapshots>,
) -> Result<TimeSeries, SolverError> {
    let g = &p.grid;
    let sim = HeatSim::new(g.clone());
    let mut mon = HeatMonitor::new(g.clone(), p.cfg.weights.clone());
    let u0 = state_from(data, g, 1).comps.remove(0);
    let mut snaps = snaps;
    sim.simulate(u0, p.cfg.time.t_final, p.cfg.time.sample_stride as usize, &mut |t, u| {
        if let Some(s) = snaps.as_deref_mut() {
            s.take(t, || StateField { comps: vec![u.to_vec()] }.to_csv(g));
        }
        mon.observe(t, u)
    })?;
    Ok(mon.series)
}

fn simulate(p: &Prepared) -> Result<Products, SolverError> {
    let mut snaps = Snapshots::new(p.cfg.outputs.snapshots.clone());
    let mut out = Products { series: None, companions: vec![], snapshots: vec![], scalars: BTreeMap::new(), ckn: None };
    let g = &p.grid;
    let stride = p.cfg.time.sample_stride as usize;
    match &p.prep {
        Prep::Linear { spec, coeffs, wave } => {
            let u0 = state_from(&p.cfg.data, g, spec.n);
            let w = WeightSpec::UNWEIGHTED;
            let dx0 = u0.d_dx(g).l2_norm(g, w);
            out.scalars.insert("u0_l2".into(), u0.l2_norm(g, w));
            out.scalars.insert("u0_dx_l2".into(), dx0);
            out.scalars.insert("u0_h1".into(), u0.h1_norm(g));
            if let Some(mu) = first_power_mu(&p.cfg.weights) {
                out.scalars.insert("u0_weighted".into(), u0.l2_norm(g, WeightSpec::Power { mu }));
            }
            let series = simulate_linear(p, spec, coeffs, wave, g, &p.cfg.data, Some(&mut snaps))?;
            if p.cfg.scenario == "convergence_order" {
                let fine = Grid1D::new(p.cfg.grid.half_width, 2 * g.n, g.bc)
                    .map_err(|e| SolverError::InvalidParameter(e.to_string()))?;
                let s = simulate_linear(p, spec, &None, &None, &fine, &p.cfg.data, None)?;
                out.companions.push((format!("refined_N{}", fine.n), s));
            }
            if let Some(data) = &p.cfg.companion_data {
                let s = simulate_linear(p, spec, coeffs, wave, g, data, None)?;
                out.companions.push(("companion".into(), s));
            }
            out.series = Some(series);
        }
        Prep::Euler(spec) => {
            let sim = EulerSim::new(*spec, g.clone(), p.cfg.time.cfl)?;
            let s0 = state_from(&p.cfg.data, g, 2);
            let rho0: Vec<f64> = s0.comps[0].iter().map(|n| spec.rho_bar + n).collect();
            let u0 = s0.comps[1].clone();
            let mut mon = EulerMonitor::new(*spec, g.clone(), p.cfg.weights.clone(), None, 1e-6);
            sim.simulate(rho0, u0, p.cfg.time.t_final, stride, &mut |t, f| {
                snaps.take(t, || f.perturbation(spec.rho_bar).to_csv(g));
                mon.observe(t, f)
            })?;
            let h2 = mon.series.channel("h2").map(|v| v.iter().copied().fold(0.0, f64::max)).unwrap_or(0.0);
            out.scalars.insert("max_h2".into(), h2);
            out.scalars.insert("smallness_cap".into(), spec.smallness_cap);
            out.series = Some(mon.series);
        }
        Prep::Psystem { spec, wave } => {
            let series = simulate_psystem(p, *spec, *wave, g, Some(&mut snaps))?;
            if p.cfg.scenario == "thm6_psystem_log" {
                let coarse = Grid1D::new(p.cfg.grid.half_width, g.n / 2, g.bc)
                    .map_err(|e| SolverError::InvalidParameter(e.to_string()))?;
                let s = simulate_psystem(p, *spec, None, &coarse, None)?;
                out.companions.push((format!("coarse_N{}", coarse.n), s));
            }
            out.series = Some(series);
        }
        Prep::Heat => {
            out.series = Some(simulate_heat(p, &p.cfg.data, Some(&mut snaps))?);
            if let Some(data) = &p.cfg.companion_data {
                out.companions.push(("companion".into(), simulate_heat(p, data, None)?));
            }
        }
        Prep::Ckn(c) => {
            out.ckn = Some(ckn_sweep(c, g, p.cfg.seed).map_err(|e| SolverError::InvalidParameter(e.to_string()))?);
        }
    }
    out.snapshots = snaps.taken;
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct CknOutcome {
    /// Per μ: (μ, min ratio, max ratio) over the random trials.
    pub per_mu: Vec<(f64, f64, f64)>,
    pub max_ratio: f64,
    pub trials: usize,
    pub witness_ratio: f64,
    pub witness_core: f64,
    pub witness_radius: f64,
}

/// `h = (x² + s²)^{-1/4} g(x)` with a smooth cutoff `g` in `log|x|`: an admissible
/// near-optimizer for μ = 1 whose ratio approaches 1 as `R/s → ∞`.
pub fn ckn_witness(grid: &Grid1D, core: f64, radius: f64, taper: f64) -> Vec<f64> {
    grid.sample(|x| {
        let ax = x.abs();
        if ax >= radius {
            return 0.0;
        }
        let z = (-(ax / radius).ln() / taper).clamp(0.0, 1.0);
        let g = (0.5 * std::f64::consts::PI * z).sin().powi(2);
        (x * x + core * core).powf(-0.25) * g
    })
}

fn ckn_sweep(c: &CknConfig, grid: &Grid1D, seed: u64) -> Result<CknOutcome, crate::analysis::AnalysisError> {
    let mut per_mu = vec![];
    let mut max_ratio = 0.0f64;
    let funcs: Vec<Vec<f64>> = (0..c.trials)
        .map(|k| {
            let mut h = vec![0.0; grid.n];
            let bumps: Vec<Bump> = random_bumps(seed, k as u64, c.bumps_per_trial, 2.0, c.max_radius, c.spread);
            for b in &bumps {
                b.add_to(grid, &mut h);
            }
            h
        })
        .collect();
    for &mu in &c.mus {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for h in &funcs {
            let r = check_ckn(grid, h, mu)?.ratio;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        max_ratio = max_ratio.max(hi);
        per_mu.push((mu, lo, hi));
    }
    let wg = Grid1D::new(1.0, c.witness_n as usize, Boundary::CompactSupport).expect("checked in prepare");
    let core = c.witness_core_cells * wg.dx;
    let radius = 0.95 * wg.half_width;
    let h = ckn_witness(&wg, core, radius, c.witness_taper);
    let witness_ratio = check_ckn(&wg, &h, 1.0)?.ratio;
    Ok(CknOutcome { per_mu, max_ratio, trials: c.trials, witness_ratio, witness_core: core, witness_radius: radius })
}

struct Certs(Vec<Certificate>);

impl Certs {
    fn push(&mut self, claim: &str, anchor: &str, passed: bool, measured: Value) {
        self.0.push(Certificate { claim: claim.into(), anchor: anchor.into(), passed, measured });
    }

    /// Power-law exponent of `channel` on the window must fall in `band`.
    fn exponent(&mut self, claim: &str, anchor: &str, s: &TimeSeries, channel: &str, win: (f64, f64), band: [f64; 2]) {
        match fit_power(s, channel, win.0, win.1) {
            Ok(f) => {
                let ok = f.alpha >= band[0] && f.alpha <= band[1];
                self.push(claim, anchor, ok, json!({"channel": channel, "alpha": f.alpha, "band": band, "r2": f.r2, "window": f.window, "samples": f.samples}))
            }
            Err(e) => self.push(claim, anchor, false, json!({"channel": channel, "error": e.to_string()})),
        }
    }

    fn nonincreasing(&mut self, claim: &str, anchor: &str, s: &TimeSeries, channel: &str, tol: f64) {
        match s.channel(channel) {
            Ok(v) => {
                let d = max_relative_increase(v);
                self.push(claim, anchor, d <= tol, json!({"channel": channel, "max_relative_increase": d, "tol": tol}))
            }
            Err(e) => self.push(claim, anchor, false, json!({"channel": channel, "error": e.to_string()})),
        }
    }

    fn energy_order(&mut self, claim: &str, anchor: &str, coarse: &TimeSeries, fine: &TimeSeries, e: &str, q: &str) {
        match (check_energy_law(coarse, e, q), check_energy_law(fine, e, q)) {
            (Ok(a), Ok(b)) => {
                let ratio = if b.l1 > 0.0 { a.l1 / b.l1 } else { f64::INFINITY };
                let ok = ratio >= ORDER2_BAND[0] && ratio <= ORDER2_BAND[1];
                self.push(claim, anchor, ok, json!({"l1_coarse": a.l1, "l1_fine": b.l1, "ratio": ratio, "band": ORDER2_BAND, "scale": a.scale}))
            }
            (Err(e), _) | (_, Err(e)) => self.push(claim, anchor, false, json!({"error": e.to_string()})),
        }
    }
}

const A_RATE_HALF: &str = "‖U₂(t)‖ + ‖∂ₓU(t)‖ ≤ C(1+t)^{-1/2}‖U₀‖_{H¹}";
const A_LYAP: &str = "d/dt ℒ(t) + dissipation ≤ 0, ℒ = ‖U‖²_{H¹} + η₀t‖∂ₓU‖² + corrector";
const A_WEIGHTED: &str = "‖U(t)‖ ≤ C(1+t)^{-μ/2}X₀, ‖(U₂, ∂ₓU)(t)‖ ≤ C(1+t)^{-(μ+1)/2}X₀";
const A_WAVE: &str = "‖U(t)‖ ≤ C(1+t)^{-μ+1/2}Y₀, ‖∂ₓU(t)‖ ≤ C(1+t)^{-1}Y₀";
const A_KALMAN: &str = "rank (B, BA, …, BA^{n-1}) = n";
const A_EULER: &str = "‖u(t)‖ + ‖∂ₓ(ρ-ρ̄, u)(t)‖ ≤ C(1+t)^{-1/2}";
const A_EULER_W: &str = "‖(ρ-ρ̄)(t)‖ ≤ C(1+t)^{-1/2}, ‖u(t)‖ + ‖∂ₓ(ρ-ρ̄, u)(t)‖ ≤ C(1+t)^{-1}";
const A_LOG: &str = "‖(ρ, u)(t)‖ ≤ C_q / log^q(1+t)";
const A_ENERGY: &str = "d/dt ‖U‖² + 2⟨DU₂, U₂⟩ = 0";
const A_HEAT: &str = "‖e^{tΔ}u₀‖ = (π/2)^{1/4}(1+4t)^{-1/4} for u₀ = e^{-x²}; ‖e^{tΔ}u₀‖ ≲ t^{-μ/2-1/4}";
const A_CKN: &str = "‖|x|^{μ-1}h‖ ≤ 2/(2μ-1) ‖|x|^μ h'‖, constant sharp";
const A_DECAY_LEMMA: &str = "d/dt(E₁ + η₀tE₂) + a₁E₁^{1+1/μ} + a₂E₂ ≤ 0 ⇒ E₁ + η₀tE₂ ≤ C(a₁t)^{-μ}";

fn certify(p: &Prepared, prod: &Products, info: &mut BTreeMap<String, Value>) -> Vec<Certificate> {
    let mut c = Certs(vec![]);
    let win = p.cfg.fit_window();
    let id = p.cfg.scenario.as_str();
    let Some(s) = prod.series.as_ref() else {
        if let Some(k) = &prod.ckn {
            info.insert("ckn".into(), serde_json::to_value(k).unwrap_or(Value::Null));
            if id == "ckn_sweep" {
                c.push("ckn random bumps", A_CKN, k.max_ratio <= 1.0 + CKN_SLACK, json!({"max_ratio": k.max_ratio, "limit": 1.0 + CKN_SLACK, "trials": k.trials, "per_mu": k.per_mu}));
                c.push("ckn near-optimizer", A_CKN, k.witness_ratio >= WITNESS_TARGET, json!({"mu": 1.0, "ratio": k.witness_ratio, "target": WITNESS_TARGET, "core": k.witness_core, "radius": k.witness_radius}));
            }
        }
        return c.0;
    };
    // informational fits on every run
    let mut fits = BTreeMap::new();
    for name in &s.names {
        if name.ends_with("_l2") || name == "l2" {
            if let Ok(f) = fit_power(s, name, win.0, win.1) {
                fits.insert(name.clone(), json!(f.alpha));
            }
        }
    }
    info.insert("fitted_exponents".into(), json!(fits));
    match id {
        "thm1_linear" => {
            c.exponent("U2 exponent", A_RATE_HALF, s, "u2_l2", win, [-0.65, -0.38]);
            c.exponent("dxU exponent", A_RATE_HALF, s, "dx_l2", win, [-0.65, -0.38]);
            match s.channel("lyapunov") {
                Ok(l) => {
                    let l0 = l[0];
                    let worst = l.windows(2).map(|w| (w[1] - w[0]) / l0).fold(f64::MIN, f64::max);
                    c.push("lyapunov monotone", A_LYAP, worst <= LYAPUNOV_TOL, json!({"max_relative_increase": worst, "tol": LYAPUNOV_TOL}));
                }
                Err(e) => c.push("lyapunov monotone", A_LYAP, false, json!({"error": e.to_string()})),
            }
            let rep = p.manifest.corrector.as_ref().map(|k| &k.report);
            c.push("corrector constraint families", A_LYAP, rep.is_some_and(|r| r.families_ok()), json!(rep));
        }
        "convergence_order" => {
            let fine = prod.companions.first().map(|(_, s)| s);
            match fine {
                Some(f) => c.energy_order("energy law order 2", A_ENERGY, s, f, "energy", "damping"),
                None => c.push("energy law order 2", A_ENERGY, false, json!({"error": "no refined run"})),
            }
        }
        "thm2_weighted" => {
            c.exponent("U exponent", A_WEIGHTED, s, "l2", win, [-0.65, -0.38]);
            c.exponent("U2 exponent", A_WEIGHTED, s, "u2_l2", win, [-1.2, -0.8]);
            c.exponent("dxU exponent", A_WEIGHTED, s, "dx_l2", win, [-1.2, -0.8]);
            let mu = first_power_mu(&p.cfg.weights).unwrap_or(1.0);
            let ch = format!("w_{}", WeightSpec::Power { mu }.label());
            let x0 = prod.scalars.get("u0_h1").copied().unwrap_or(0.0) + prod.scalars.get("u0_weighted").copied().unwrap_or(0.0);
            match certify_weighted_bound(s, &ch, WEIGHTED_MARGIN * x0) {
                Ok(b) => c.push("weighted bound", A_WEIGHTED, b.passes, json!({"channel": ch, "sup": b.sup, "sup_time": b.sup_time, "bound": b.bound, "x0": x0})),
                Err(e) => c.push("weighted bound", A_WEIGHTED, false, json!({"error": e.to_string()})),
            }
            decay_lemma_certificate(&mut c, p, s, prod, &ch, info);
        }
        "thm3_wave" => {
            c.exponent("U exponent", A_WAVE, s, "l2", win, [-0.65, -0.38]);
            c.exponent("dxU exponent", A_WAVE, s, "dx_l2", win, [-1.2, -0.8]);
            c.nonincreasing("wave energy nonincreasing", A_WAVE, s, "wave_energy", DRIFT_TOL);
        }
        "kalman_fail" => {
            let sys = p.manifest.system.as_ref();
            let rank = sys.map(|m| m.flags.kalman_rank);
            let sk = sys.map(|m| m.flags.sk_holds);
            c.push("kalman rank deficient", A_KALMAN, rank == Some(1) && sk == Some(false), json!({"kalman_rank": rank, "sk_holds": sk}));
            c.exponent("no-decay plateau", A_KALMAN, s, "u1_l2", win, [-0.05, 0.05]);
        }
        "thm4_euler" => {
            c.exponent("u exponent", A_EULER, s, "u_l2", win, [-0.7, -0.35]);
            c.exponent("dx(n,u) exponent", A_EULER, s, "dx_l2", win, [-0.7, -0.35]);
            let max_h2 = prod.scalars.get("max_h2").copied().unwrap_or(f64::NAN);
            let cap = prod.scalars.get("smallness_cap").copied().unwrap_or(f64::NAN);
            c.push("smallness cap respected", A_EULER, max_h2 <= cap, json!({"max_h2": max_h2, "cap": cap}));
            c.nonincreasing("H2 surrogate nonincreasing", A_EULER, s, "h2_sym", DRIFT_TOL);
        }
        "thm5_euler_weighted" => {
            c.exponent("n exponent", A_EULER_W, s, "n_l2", win, [-0.65, -0.38]);
            c.exponent("u exponent", A_EULER_W, s, "u_l2", win, [-1.25, -0.75]);
            c.exponent("dx(n,u) exponent", A_EULER_W, s, "dx_l2", win, [-1.25, -0.75]);
        }
        "thm6_psystem_log" => {
            let q = p.cfg.analysis.log_q.unwrap_or(1.0);
            match bounded_product(s, "l2", q) {
                Ok(b) => c.push("log-weighted product bounded", A_LOG, b.passes, json!({"q": q, "sup": b.sup, "sup_time": b.sup_time, "ratio_late_early": b.ratio_late_early, "cap": crate::analysis::RATIO_CAP})),
                Err(e) => c.push("log-weighted product bounded", A_LOG, false, json!({"error": e.to_string()})),
            }
            match prod.companions.first() {
                Some((_, coarse)) => c.energy_order("energy identity order 2", A_LOG, coarse, s, "l2_sq", "damping"),
                None => c.push("energy identity order 2", A_LOG, false, json!({"error": "no coarse run"})),
            }
            c.nonincreasing("H1 nonincreasing", A_LOG, s, "h1", DRIFT_TOL);
        }
        "heat_oracle" => {
            let l2 = s.channel("l2").unwrap_or(&[]);
            let mut worst = 0.0f64;
            for (k, &t) in s.t.iter().enumerate() {
                if (1.0..=p.cfg.time.t_final).contains(&t) {
                    let exact = (std::f64::consts::PI / 2.0).powf(0.25) * (1.0 + 4.0 * t).powf(-0.25);
                    worst = worst.max((l2[k] / exact - 1.0).abs());
                }
            }
            c.push("closed-form match", A_HEAT, !l2.is_empty() && worst <= HEAT_TOL, json!({"max_relative_error": worst, "tol": HEAT_TOL, "window": [1.0, p.cfg.time.t_final]}));
            match prod.companions.first() {
                Some((_, z)) => c.exponent("zero-mean weighted exponent", A_HEAT, z, "l2", win, [-0.62, -0.38]),
                None => c.push("zero-mean weighted exponent", A_HEAT, false, json!({"error": "no companion run"})),
            }
        }
        _ => {}
    }
    c.0
}

/// Hypothesis and conclusion of the differential-inequality lemma on the run's own
/// `ℒ*` (E₁) and `‖∂ₓU‖²` (E₂), with μ = 1.
fn decay_lemma_certificate(
    c: &mut Certs,
    p: &Prepared,
    s: &TimeSeries,
    prod: &Products,
    weighted_channel: &str,
    info: &mut BTreeMap<String, Value>,
) {
    let Some(k) = p.manifest.corrector.as_ref() else {
        c.push("decay lemma hypothesis", A_DECAY_LEMMA, false, json!({"error": "no corrector"}));
        return;
    };
    let (Ok(e1), Ok(dx), Ok(w)) = (s.channel("lyapunov_star"), s.channel("dx_l2"), s.channel(weighted_channel)) else {
        c.push("decay lemma hypothesis", A_DECAY_LEMMA, false, json!({"error": "missing channels"}));
        return;
    };
    let e2: Vec<f64> = dx.iter().map(|v| v * v).collect();
    let g = k.eps_star / (4.0 * k.c_k);
    // ‖U‖⁴ ≤ 4‖xU‖²‖∂U‖² and ℒ* ≤ (3/2)‖U‖²_{H¹} give ℒ*² ≤ (9/4)(8S² + 2‖∂U₀‖²)‖∂U‖²
    let sup_w = w.iter().copied().fold(0.0, f64::max);
    let dx0 = prod.scalars.get("u0_dx_l2").copied().unwrap_or(0.0);
    let a1 = 0.25 * g / (2.25 * (8.0 * sup_w * sup_w + 2.0 * dx0 * dx0));
    let a2 = 0.75 * g;
    let slack = 1e-6 * e1[0].abs();
    let mu = 1.0;
    match check_decay_inequality(&s.t, e1, &e2, a1, a2, mu, k.eta0, slack) {
        Ok(d) => {
            info.insert("decay_lemma".into(), json!({"a1": a1, "a2": a2, "eta0": k.eta0, "p": d.p, "constant": d.constant, "measured_constant": d.measured_constant, "conclusion_holds": d.conclusion_holds}));
            c.push("decay lemma hypothesis", A_DECAY_LEMMA, d.hypothesis_holds, json!({"max_violation": d.max_violation, "slack": slack, "first_violation_time": d.first_violation_time}));
        }
        Err(e) => c.push("decay lemma hypothesis", A_DECAY_LEMMA, false, json!({"error": e.to_string(), "a1": a1, "a2": a2, "eta0": k.eta0})),
    }
}

fn write(dir: &Path, name: &str, body: &str) -> Result<(), RunError> {
    fs::write(dir.join(name), body).map_err(|e| RunError::Io(format!("{}: {e}", dir.join(name).display())))
}

fn to_pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

/// Executes `cfg`, writing all outputs under `out_dir`. Configuration problems return
/// `RunError::Config` without touching the filesystem; numerical failures still write a
/// report (with `error` set) before returning `RunError::Numerical`.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<RunReport, RunError> {
    let start = Instant::now();
    let prepared = prepare(cfg)?;
    let mut report = RunReport {
        scenario: cfg.scenario.clone(),
        manifest: prepared.manifest.clone(),
        series: None,
        companions: vec![],
        snapshots: vec![],
        certificates: vec![],
        info: BTreeMap::new(),
        error: None,
        timing: TIMING_FILE.into(),
        exit_code: 0,
    };
    let result = simulate(&prepared);
    fs::create_dir_all(out_dir).map_err(|e| RunError::Io(format!("{}: {e}", out_dir.display())))?;
    let outcome = match result {
        Ok(prod) => {
            if let Some(s) = &prod.series {
                report.manifest.samples = s.len();
                write(out_dir, SERIES_FILE, &s.to_csv())?;
                report.series = Some(SERIES_FILE.into());
            }
            for (name, s) in &prod.companions {
                let file = format!("series_{name}.csv");
                write(out_dir, &file, &s.to_csv())?;
                report.companions.push(file);
            }
            for (k, (req, t, csv)) in prod.snapshots.iter().enumerate() {
                let file = format!("snapshot_{k:02}.csv");
                write(out_dir, &file, csv)?;
                report.snapshots.push(SnapshotEntry { requested: *req, time: *t, file });
            }
            let mut info = BTreeMap::new();
            report.certificates = certify(&prepared, &prod, &mut info);
            report.info = info;
            report.exit_code = if report.all_passed() { 0 } else { 4 };
            Ok(())
        }
        Err(e) => {
            report.error = Some(e.to_string());
            report.exit_code = 3;
            Err(RunError::Numerical(e.to_string()))
        }
    };
    write(out_dir, REPORT_FILE, &to_pretty(&report))?;
    write(out_dir, TIMING_FILE, &to_pretty(&json!({"wall_seconds": start.elapsed().as_secs_f64()})))?;
    outcome.map(|_| report)
}
