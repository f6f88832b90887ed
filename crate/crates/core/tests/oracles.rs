//! Closed-form oracles through the public API.

use hypodecay::analysis::{check_ckn, check_decay_inequality, ckn_constant};
use hypodecay::corrector::select_weighted_coefficients;
use hypodecay::grid::{Boundary, Grid1D};
use hypodecay::linalg::{build_kalman, validate_spec, SymMatrix};
use hypodecay::solvers::{HeatMonitor, HeatSim, WaveWeightSpec};

fn spec(a: &[Vec<f64>], d: f64) -> hypodecay::linalg::SystemSpec {
    validate_spec(SymMatrix::from_rows(a).unwrap(), SymMatrix::from_rows(&[vec![d]]).unwrap(), 1).unwrap()
}

#[test]
fn kalman_rank_of_reference_systems() {
    let swap = spec(&[vec![0.0, 1.0], vec![1.0, 0.0]], 1.0);
    assert_eq!(build_kalman(&swap).rank, 2);
    assert!(swap.flags.sk_holds && swap.flags.a11_zero && swap.flags.a12_invertible);
    let diag = spec(&[vec![1.0, 0.0], vec![0.0, -1.0]], 1.0);
    assert_eq!(build_kalman(&diag).rank, 1);
    assert!(!diag.flags.sk_holds);
}

#[test]
fn weighted_threshold_for_swap_system() {
    let s = spec(&[vec![0.0, 1.0], vec![1.0, 0.0]], 1.0);
    let w = select_weighted_coefficients(&s, 1.0, 0.1).unwrap();
    assert!((w.kappa0 - 4.0).abs() < 1e-12, "{}", w.kappa0);
    assert!(!w.kappa_ok);
}

#[test]
fn heat_gaussian_closed_form() {
    let g = Grid1D::new(100.0, 2048, Boundary::Periodic).unwrap();
    let u0 = g.sample(|x| (-x * x).exp());
    let mut mon = HeatMonitor::new(g.clone(), vec![]);
    HeatSim::new(g).simulate(u0, 50.0, 1, &mut |t, u| mon.observe(t, u)).unwrap();
    let l2 = mon.series.channel("l2").unwrap();
    for (k, &t) in mon.series.t.iter().enumerate().filter(|(_, &t)| t >= 1.0) {
        let exact = (std::f64::consts::PI / 2.0).powf(0.25) * (1.0 + 4.0 * t).powf(-0.25);
        assert!((l2[k] / exact - 1.0).abs() < 1e-3);
    }
}

#[test]
fn ckn_constant_and_gaussian() {
    assert!((ckn_constant(1.0) - 2.0).abs() < 1e-15);
    let g = Grid1D::new(20.0, 8192, Boundary::CompactSupport).unwrap();
    let h = g.sample(|x| (-x * x).exp());
    // μ = 1: ‖h‖ / (2‖x h'‖) = 1/2 for a Gaussian (‖x h'‖² = 2∫x⁴e^{-2x²} relates by parts)
    let r = check_ckn(&g, &h, 1.0).unwrap();
    let lhs = (std::f64::consts::PI / 2.0).sqrt().sqrt();
    assert!((r.lhs / lhs - 1.0).abs() < 1e-6);
    assert!(r.ratio < 1.0);
}

#[test]
fn decay_lemma_equality_case() {
    // E1 = (1+t)^{-1}, E2 = 0: d/dt E1 = -E1², so a1 = 1, μ = 1 is the equality case.
    let t: Vec<f64> = (0..=10_000).map(|i| i as f64 * 0.01).collect();
    let e1: Vec<f64> = t.iter().map(|s| 1.0 / (1.0 + s)).collect();
    let e2 = vec![0.0; t.len()];
    let c = check_decay_inequality(&t, &e1, &e2, 1.0, 1.0, 1.0, 0.1, 1e-6).unwrap();
    assert!(c.hypothesis_holds && c.conclusion_holds, "{c:?}");
}

#[test]
fn power_weight_default_a() {
    let w = WaveWeightSpec::select_power(1.0, 1.0, 300.0).unwrap();
    assert_eq!(w.a(), 4.0);
    let l = WaveWeightSpec::select_log(1.0, 2.0, 2400.0).unwrap();
    assert!(l.conditions_hold(1.0, 2400.0));
}
