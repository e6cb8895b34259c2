use ionsim_core::hilbert::Spin;
use ionsim_core::interferometer::{fit_fringe, sweep, FringeDataset, FringeMode, Interferometer, InterferometerConfig};
use ionsim_core::scalar::Cplx;
use proptest::prelude::*;
use std::f64::consts::PI;

type C = Cplx<f64>;

/// Two-level model on `{|down,0>, |up,n>}`: the n-th blue sideband couples
/// only these two states, with element `Omega (i eta)^n / sqrt(n!)`.
fn two_level_oracle(cfg: &InterferometerConfig<f64>, t: f64) -> f64 {
    let n = cfg.order as i32;
    let eta = cfg.trap.eta();
    let fact: f64 = (1..=n).map(f64::from).product();
    let g0 = C::new(0.0, eta).powi(n) * (cfg.omega_pulse / fact.sqrt());
    let tau = PI / 4.0 / g0.norm();
    // exp(-i tau [[0, g*], [g, 0]]) with g = g0 e^{i phi}
    let bs = |phi: f64| {
        let g = g0 * C::from_polar(1.0, phi);
        let (c, s) = ((g.norm() * tau).cos(), (g.norm() * tau).sin());
        let u = g / g.norm();
        [
            [C::new(c, 0.0), C::new(0.0, -s) * u.conj()],
            [C::new(0.0, -s) * u, C::new(c, 0.0)],
        ]
    };
    let apply = |m: [[C; 2]; 2], v: [C; 2]| [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]];
    let v = apply(bs(cfg.pulse_phases.0), [C::new(1.0, 0.0), C::new(0.0, 0.0)]);
    let v = [v[0], v[1] * C::from_polar(1.0, -cfg.delta_omega_z * t * n as f64)];
    let v = apply(bs(cfg.pulse_phases.1), v);
    v[0].norm_sqr()
}

fn config(order: u32) -> InterferometerConfig<f64> {
    InterferometerConfig::new(order).unwrap()
}

#[test]
fn equal_phases_give_one_minus_cos_fringe() {
    for order in 1..=4u32 {
        let cfg = config(order);
        let engine = Interferometer::new(&cfg).unwrap();
        for i in 0..64 {
            let t = i as f64 * 2.0e-5;
            let phi = cfg.delta_omega_z * t;
            let expected = 0.5 * (1.0 - (order as f64 * phi).cos());
            let p = engine.run_point(t).unwrap();
            assert!((p - expected).abs() < 1e-9, "n={order} t={t}: {p} vs {expected}");
        }
    }
}

#[test]
fn fringe_is_periodic_in_phase() {
    for order in 1..=4u32 {
        let cfg = config(order);
        let engine = Interferometer::new(&cfg).unwrap();
        let period = 2.0 * PI / (order as f64 * cfg.delta_omega_z);
        for t in [0.0, 1.3e-4, 3.7e-4] {
            let a = engine.run_point(t).unwrap();
            let b = engine.run_point(t + period).unwrap();
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn output_stays_in_two_state_subspace() {
    for order in 1..=4u32 {
        let cfg = config(order);
        let engine = Interferometer::new(&cfg).unwrap();
        let psi = engine.output_state(2.1e-4).unwrap();
        let inside = psi.probability(Spin::Down, 0) + psi.probability(Spin::Up, order as usize);
        assert!((1.0 - inside).abs() < 1e-8, "n={order}: leaked {}", 1.0 - inside);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn statevector_matches_two_level_model(
        order in 1u32..=4,
        phi1 in -PI..PI,
        phi2 in -PI..PI,
        t in 0.0f64..2e-3,
        eta in 0.05f64..0.3,
    ) {
        let mut cfg = config(order);
        cfg.pulse_phases = (phi1, phi2);
        cfg.trap = ionsim_core::pulse::TrapConfig::with_eta(cfg.trap.omega_z, eta).unwrap();
        let p = Interferometer::new(&cfg).unwrap().run_point(t).unwrap();
        prop_assert!((p - two_level_oracle(&cfg, t)).abs() < 1e-9);
    }

    #[test]
    fn overall_phase_shift_leaves_fringe_unchanged(order in 1u32..=3, shift in -PI..PI, t in 0.0f64..1e-3) {
        let base = config(order);
        let mut shifted = base;
        shifted.pulse_phases = (shift, shift);
        let a = Interferometer::new(&base).unwrap().run_point(t).unwrap();
        let b = Interferometer::new(&shifted).unwrap().run_point(t).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn contrast_scales_sweep() {
    let mut cfg = config(2);
    cfg.contrast = 0.6;
    let grid: Vec<f64> = (0..20).map(|i| i as f64 * 3e-5).collect();
    let data = sweep(&cfg, &grid, 0, 0).unwrap();
    assert_eq!(data.mode, FringeMode::Statevector);
    for pt in &data.points {
        let expected = 0.3 * (1.0 - (2.0 * pt.phi).cos());
        assert!((pt.p_est - expected).abs() < 1e-9);
    }
}

#[test]
fn fit_recovers_parameters_from_shot_noise() {
    let mut cfg = config(2);
    cfg.contrast = 0.8;
    let grid: Vec<f64> = (0..80).map(|i| i as f64 * 2.5e-5).collect();
    let data = sweep(&cfg, &grid, 10_000, 11).unwrap();
    assert_eq!(data.mode, FringeMode::MonteCarlo);
    let fit = fit_fringe(&data).unwrap();
    let se = fit.std_errors.unwrap();
    let freq = fit.frequency.unwrap();
    // errors are ordered (contrast, frequency, phase)
    assert!(
        (fit.contrast - 0.8).abs() < 3.0 * se[0],
        "{} +- {}",
        fit.contrast,
        se[0]
    );
    assert!(
        (freq - 2.0 * cfg.delta_omega_z).abs() < 3.0 * se[1],
        "{freq} +- {}",
        se[1]
    );
    // ideal-fringe fit is essentially exact
    let exact = fit_fringe(&FringeDataset::analytic(2, cfg.delta_omega_z, 0.8, &grid)).unwrap();
    assert!((exact.frequency.unwrap() / (2.0 * cfg.delta_omega_z) - 1.0).abs() < 1e-6);
}

#[test]
fn many_shot_estimate_tracks_noiseless_value() {
    let cfg = config(1);
    let grid = [1.0e-4, 2.0e-4, 3.3e-4];
    let shots = 1_000_000;
    let noisy = sweep(&cfg, &grid, shots, 5).unwrap();
    let ideal = sweep(&cfg, &grid, 0, 5).unwrap();
    for (a, b) in noisy.points.iter().zip(&ideal.points) {
        let sd = (b.p_est * (1.0 - b.p_est) / shots as f64).sqrt();
        assert!((a.p_est - b.p_est).abs() < 4.0 * sd.max(1e-6));
    }
}

#[test]
fn single_precision_agrees_with_double() {
    let cfg64 = config(2);
    let cfg32 = InterferometerConfig::<f32>::new(2).unwrap();
    let e64 = Interferometer::new(&cfg64).unwrap();
    let e32 = Interferometer::new(&cfg32).unwrap();
    for t in [0.0, 5e-5, 1.7e-4] {
        let a = e64.run_point(t).unwrap();
        let b = e32.run_point(t as f32).unwrap() as f64;
        assert!((a - b).abs() < 1e-3, "{a} vs {b}");
    }
}
