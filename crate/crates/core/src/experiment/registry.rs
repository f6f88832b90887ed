//! Built-in scenarios at desk scale.

use super::config::*;
use crate::grid::{Boundary, WeightSpec};
use crate::solvers::EulerForm;

/// `(id, one-line description)` for every registered scenario.
pub const SCENARIOS: &[(&str, &str)] = &[
    ("thm1_linear", "linear SK system, H1 data: ‖U₂‖, ‖∂ₓU‖ ≲ (1+t)^{-1/2}; Lyapunov functional nonincreasing"),
    ("thm2_weighted", "weighted data, κ ≥ κ₀: ‖U‖ ≲ (1+t)^{-μ/2}, ‖U₂‖, ‖∂ₓU‖ ≲ (1+t)^{-(μ+1)/2}"),
    ("thm3_wave", "wave reformulation, μ = 1: ‖U‖ ≲ (1+t)^{-μ+1/2}; weighted wave energy nonincreasing"),
    ("kalman_fail", "rank-deficient Kalman matrix: the undamped component does not decay"),
    ("thm4_euler", "damped isentropic Euler, small H2 data: ‖u‖, ‖∂ₓ(ρ-ρ̄,u)‖ ≲ (1+t)^{-1/2}"),
    ("thm5_euler_weighted", "damped Euler, weighted zero-mean data: ‖ρ-ρ̄‖ ≲ (1+t)^{-1/2}, ‖u‖ ≲ (1+t)^{-1}"),
    ("thm6_psystem_log", "p-system with damping |u|^{r-1}u: ‖(ρ,u)‖ ≲ C_q / log^q(1+t)"),
    ("heat_oracle", "heat equation oracle: closed-form Gaussian decay and weighted-data rates"),
    ("convergence_order", "energy-law residual of the linear scheme converges at second order"),
    ("ckn_sweep", "1D weighted Hardy (CKN) inequality: random bumps and a near-optimizer"),
];

pub fn ids() -> Vec<&'static str> {
    SCENARIOS.iter().map(|(id, _)| *id).collect()
}

pub fn describe(id: &str) -> Option<&'static str> {
    SCENARIOS.iter().find(|(i, _)| *i == id).map(|(_, d)| *d)
}

fn swap_system(kappa: f64, scale_to_kappa0: bool) -> SystemConfig {
    SystemConfig {
        a: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        d: vec![vec![kappa]],
        n1: 1,
        scale_to_kappa0,
    }
}

fn gaussian(component: usize) -> Profile {
    Profile::Gaussian { amp: 1.0, center: 0.0, width: 1.0, component }
}

/// Zero-mean profile whose antiderivative decays like |x|^{-0.6}: slow enough that the
/// weighted rates are attained rather than beaten.
fn slow_zero_mean(amp: f64, component: usize) -> Profile {
    Profile::DpowerLaw { amp, center: 0.0, width: 1.0, exponent: 0.6, component }
}

fn base(id: &str, model: Model, grid: GridConfig, time: TimeConfig) -> RunConfig {
    RunConfig {
        scenario: id.to_string(),
        model,
        system: None,
        grid,
        time,
        data: vec![],
        companion_data: None,
        weights: vec![],
        corrector: CorrectorConfig::default(),
        wave: None,
        euler: None,
        psystem: None,
        ckn: None,
        analysis: AnalysisConfig { fit_window: None, log_q: None },
        outputs: OutputConfig { dir: format!("out/{id}"), snapshots: vec![] },
        seed: 0,
    }
}

fn linear_grid(bc: Boundary) -> GridConfig {
    GridConfig { half_width: 200.0, n: 4096, bc }
}

/// Linear runs sample every step: coarser sampling leaves the energy-law residual
/// pre-asymptotic at desk resolution.
fn linear_time() -> TimeConfig {
    TimeConfig { t_final: 100.0, cfl: 0.4, sample_stride: 1 }
}

fn euler_time() -> TimeConfig {
    TimeConfig { t_final: 100.0, cfl: 0.4, sample_stride: 10 }
}

/// Complete default configuration for a registered scenario.
pub fn default_config(id: &str) -> Option<RunConfig> {
    let window = Some([25.0, 100.0]);
    let c = match id {
        "thm1_linear" | "convergence_order" => {
            let mut c = base(id, Model::Linear, linear_grid(Boundary::CompactSupport), linear_time());
            c.system = Some(swap_system(1.0, false));
            c.data = vec![gaussian(0), gaussian(1)];
            c.analysis.fit_window = window;
            c.outputs.snapshots = vec![0.0, 50.0, 100.0];
            c
        }
        "thm2_weighted" => {
            let mut c = base(id, Model::Linear, linear_grid(Boundary::Periodic), linear_time());
            c.system = Some(swap_system(1.0, true));
            c.data = vec![slow_zero_mean(1.0, 0)];
            c.weights = vec![WeightSpec::Power { mu: 1.0 }];
            c.analysis.fit_window = window;
            c
        }
        "thm3_wave" => {
            let mut c = base(id, Model::Linear, linear_grid(Boundary::Periodic), linear_time());
            c.system = Some(swap_system(1.0, false));
            c.data = vec![slow_zero_mean(1.0, 0)];
            // the periodic tail of the power law leaves a truncation mass of order 1e-5
            c.wave = Some(WaveConfig::Power { mu: 1.0, a: None, mass_tol: 1e-4 });
            c.analysis.fit_window = window;
            c
        }
        "kalman_fail" => {
            let mut c = base(id, Model::Linear, linear_grid(Boundary::CompactSupport), linear_time());
            c.system = Some(SystemConfig {
                a: vec![vec![1.0, 0.0], vec![0.0, -1.0]],
                d: vec![vec![1.0]],
                n1: 1,
                scale_to_kappa0: false,
            });
            c.data = vec![gaussian(0), gaussian(1)];
            c.analysis.fit_window = window;
            c
        }
        "thm4_euler" | "thm5_euler_weighted" => {
            let mut c = base(id, Model::Euler, linear_grid(Boundary::Periodic), euler_time());
            let weighted = id == "thm5_euler_weighted";
            c.euler = Some(EulerConfig {
                gamma: 2.0,
                k: if weighted { 0.5 } else { 1.0 },
                rho_bar: 1.0,
                lambda: 1.0,
                form: EulerForm::SymmetrizedCu,
                smallness_cap: 0.5,
                nu: 0.01,
            });
            c.data = if weighted {
                c.weights = vec![WeightSpec::Power { mu: 1.0 }];
                vec![slow_zero_mean(0.01, 0)]
            } else {
                let pl = |component| Profile::PowerLaw {
                    amp: 0.01,
                    center: 0.0,
                    width: 1.0,
                    exponent: 0.6,
                    component,
                };
                vec![pl(0), pl(1)]
            };
            c.analysis.fit_window = window;
            c
        }
        "thm6_psystem_log" => {
            let mut c = base(
                id,
                Model::Psystem,
                GridConfig { half_width: 400.0, n: 8192, bc: Boundary::Periodic },
                TimeConfig { t_final: 2000.0, cfl: 0.4, sample_stride: 10 },
            );
            c.psystem = Some(PsystemConfig { r: 2.0, eta2: 0.1, nu: 0.0 });
            c.wave = Some(WaveConfig::Log { q: 1.0, a: None, eta3: 0.1 });
            c.data = vec![Profile::Dgaussian { amp: 1.0, center: 0.0, width: 1.0, component: 0 }];
            c.analysis.log_q = Some(1.0);
            c
        }
        "heat_oracle" => {
            let mut c = base(
                id,
                Model::Heat,
                GridConfig { half_width: 100.0, n: 2048, bc: Boundary::Periodic },
                TimeConfig { t_final: 200.0, cfl: 0.5, sample_stride: 1 },
            );
            c.data = vec![gaussian(0)];
            c.companion_data = Some(vec![slow_zero_mean(1.0, 0)]);
            c.weights = vec![WeightSpec::Power { mu: 1.0 }];
            c.analysis.fit_window = Some([50.0, 200.0]);
            c
        }
        "ckn_sweep" => {
            let mut c = base(
                id,
                Model::Ckn,
                GridConfig { half_width: 10.0, n: 8192, bc: Boundary::CompactSupport },
                TimeConfig { t_final: 1.0, cfl: 0.5, sample_stride: 1 },
            );
            c.ckn = Some(CknConfig {
                trials: 50,
                mus: vec![0.6, 1.0, 1.5],
                bumps_per_trial: 3,
                max_radius: 3.0,
                spread: 5.0,
                witness_n: 524_288,
                witness_core_cells: 8.0,
                witness_taper: 6.0,
            });
            c.seed = 20_240_601;
            c
        }
        _ => return None,
    };
    Some(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_id_has_a_valid_config() {
        assert!(SCENARIOS.len() >= 10);
        for id in ids() {
            let c = default_config(id).unwrap();
            c.validate().unwrap();
            assert_eq!(c.scenario, id);
            let back = RunConfig::from_json(&c.to_json()).unwrap();
            assert_eq!(back, c);
        }
        assert!(default_config("nope").is_none());
    }

    #[test]
    fn psystem_defaults() {
        let c = default_config("thm6_psystem_log").unwrap();
        assert_eq!(c.psystem.unwrap().r, 2.0);
        assert!(matches!(c.wave, Some(WaveConfig::Log { q, .. }) if q == 1.0));
        assert_eq!(c.analysis.log_q, Some(1.0));
    }
}
