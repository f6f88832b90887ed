//! Property tests on public invariants.

use hypodecay::analysis::{check_ckn, fit_power, TimeSeries};
use hypodecay::corrector::select_coefficients;
use hypodecay::experiment::config::random_bumps;
use hypodecay::experiment::registry;
use hypodecay::experiment::RunConfig;
use hypodecay::grid::{Boundary, Grid1D, StateField, WeightSpec};
use hypodecay::linalg::{build_kalman, validate_spec, SymMatrix};
use hypodecay::solvers::{HeatSim, LinearSim};
use proptest::prelude::*;

fn sym2(a: f64, b: f64, c: f64) -> SymMatrix {
    SymMatrix::from_rows(&[vec![a, b], vec![b, c]]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// 2×2 systems with A₁₁ = 0: full Kalman rank iff the coupling A₁₂ is nonzero.
    #[test]
    fn kalman_rank_tracks_coupling(b in -3.0f64..3.0, c in -3.0f64..3.0, k in 0.1f64..5.0) {
        let spec = validate_spec(sym2(0.0, b, c), SymMatrix::from_rows(&[vec![k]]).unwrap(), 1).unwrap();
        let rank = build_kalman(&spec).rank;
        prop_assert_eq!(rank, if b.abs() > 1e-6 { 2 } else { 1 });
        prop_assert_eq!(spec.flags.sk_holds, rank == 2);
    }

    /// Coefficient selection succeeds with every constraint family for SK systems.
    #[test]
    fn coefficients_satisfy_constraints(b in 0.2f64..3.0, c in -2.0f64..2.0, k in 0.2f64..4.0) {
        let spec = validate_spec(sym2(0.0, b, c), SymMatrix::from_rows(&[vec![k]]).unwrap(), 1).unwrap();
        let co = select_coefficients(&spec, 0.1, 0.5).unwrap();
        prop_assert!(co.report.ok(), "{:?}", co.report);
        prop_assert!(co.eta0 > 0.0 && co.eps.iter().all(|&e| e > 0.0));
    }

    /// The linear scheme is an l² contraction on periodic grids for any symmetric A, D > 0.
    #[test]
    fn linear_energy_nonincreasing(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0,
                                   k in 0.05f64..10.0, w in 0.5f64..3.0) {
        let spec = validate_spec(sym2(a, b, c), SymMatrix::from_rows(&[vec![k]]).unwrap(), 1).unwrap();
        let g = Grid1D::new(20.0, 256, Boundary::Periodic).unwrap();
        let sim = LinearSim::new(spec, g.clone(), 0.4).unwrap();
        let mut u = StateField::zeros(2, g.n);
        u.comps[0] = g.sample(|x| (-(x / w).powi(2)).exp());
        u.comps[1] = g.sample(|x| x / w * (-(x / w).powi(2)).exp());
        let mut prev = f64::INFINITY;
        let mut ok = true;
        sim.simulate(u, 3.0, 1, &mut |_, u| {
            let e = u.l2_norm(&g, WeightSpec::UNWEIGHTED);
            ok &= e <= prev * (1.0 + 1e-12);
            prev = e;
            Ok(())
        }).unwrap();
        prop_assert!(ok);
    }

    /// Weighted Hardy inequality with the sharp constant on random smooth bumps.
    #[test]
    fn ckn_holds_on_bumps(seed in any::<u64>(), mu in 0.55f64..2.0) {
        let g = Grid1D::new(10.0, 4096, Boundary::CompactSupport).unwrap();
        let mut h = vec![0.0; g.n];
        for bump in random_bumps(seed, 0, 3, 2.0, 3.0, 5.0) {
            bump.add_to(&g, &mut h);
        }
        let r = check_ckn(&g, &h, mu).unwrap();
        prop_assert!(r.ratio <= 1.0 + 1e-3, "ratio {}", r.ratio);
    }

    /// fit_power recovers the exponent of exact power laws.
    #[test]
    fn fit_recovers_exponent(alpha in -2.0f64..0.0, c in 0.1f64..10.0) {
        let t: Vec<f64> = (0..200).map(|i| i as f64).collect();
        let v = t.iter().map(|&s| c * (1.0 + s).powf(alpha)).collect();
        let s = TimeSeries::from_channels(t, vec![("v", v)]);
        let f = fit_power(&s, "v", 10.0, 199.0).unwrap();
        prop_assert!((f.alpha - alpha).abs() < 1e-9);
    }

    /// Crank–Nicolson conserves mass on periodic grids.
    #[test]
    fn heat_conserves_mass(center in -5.0f64..5.0, width in 0.5f64..3.0) {
        let g = Grid1D::new(30.0, 256, Boundary::Periodic).unwrap();
        let u0 = g.sample(|x| (-((x - center) / width).powi(2)).exp());
        let m0 = g.integrate(&u0);
        let u = HeatSim::new(g.clone()).simulate(u0, 5.0, 10, &mut |_, _| Ok(())).unwrap();
        prop_assert!((g.integrate(&u) - m0).abs() <= 1e-10 * m0);
    }

    /// Overrides keep the serialize∘parse round trip idempotent.
    #[test]
    fn config_round_trip(idx in 0usize..10, n in 16i64..9000, t in 1.0f64..500.0) {
        let id = registry::ids()[idx];
        let sets = vec![format!("grid.N={n}"), format!("time.T={t}")];
        let c = registry::default_config(id).unwrap().with_overrides(&sets).unwrap();
        let j = c.to_json();
        let back = RunConfig::from_json(&j).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.to_json(), j);
    }

    /// Same seed and stream give the same bumps.
    #[test]
    fn bumps_reproducible(seed in any::<u64>(), stream in 0u64..1000) {
        prop_assert_eq!(random_bumps(seed, stream, 4, 1.0, 2.0, 3.0), random_bumps(seed, stream, 4, 1.0, 2.0, 3.0));
    }
}
