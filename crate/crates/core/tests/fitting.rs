use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rbdecay::fit::{fit_decaying_sinusoid_xy, fit_double_exponential_xy, fit_exponential_xy, linear_fit, ModelKind};
use std::f64::consts::TAU;

fn grid(n: usize, dt: f64) -> Vec<f64> {
    (0..n).map(|k| k as f64 * dt).collect()
}

fn sample(kind: ModelKind, t: &[f64], p: &[f64]) -> Vec<f64> {
    t.iter().map(|&t| kind.eval(t, p)).collect()
}

fn add_noise(y: &[f64], sigma: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = Normal::new(0.0, sigma).unwrap();
    y.iter().map(|v| v + n.sample(rng)).collect()
}

#[test]
fn exponential_rate_under_two_percent_noise() {
    let t = grid(150, 6.0 / 300.0 / 150.0);
    let clean = sample(ModelKind::Exponential, &t, &[1.0, 300.0, 0.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut rates, mut errs) = (Vec::new(), Vec::new());
    for _ in 0..1000 {
        let f = fit_exponential_xy(&t, &add_noise(&clean, 0.02, &mut rng)).unwrap();
        assert!(f.converged, "{}", f.message);
        rates.push(f.rate());
        errs.push(f.rate_uncertainty());
    }
    let n = rates.len() as f64;
    let mean = rates.iter().sum::<f64>() / n;
    let sd = (rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let within = rates.iter().filter(|r| (*r / 300.0 - 1.0).abs() < 0.05).count();
    assert!((mean / 300.0 - 1.0).abs() < 0.005, "mean {mean}");
    assert!(within as f64 >= 0.99 * n, "{within} of 1000 within 5%");
    // reported 1-σ agrees with the Monte-Carlo spread
    let mean_err = errs.iter().sum::<f64>() / n;
    assert!((mean_err / sd - 1.0).abs() < 0.15, "reported {mean_err}, spread {sd}");
}

#[test]
fn sinusoid_rate_is_invariant_under_time_shift_and_omega_under_scaling() {
    let t = grid(400, 2.5e-5);
    let p = [1.0, 300.0, TAU * 1.4e3, 0.4, 0.0];
    let y = sample(ModelKind::DecayingSinusoid, &t, &p);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noisy = add_noise(&y, 0.01, &mut rng);
    let base = fit_decaying_sinusoid_xy(&t, &noisy).unwrap();
    let shifted: Vec<f64> = t.iter().map(|x| x + 3.7e-3).collect();
    let moved = fit_decaying_sinusoid_xy(&shifted, &noisy).unwrap();
    assert!((moved.rate() - base.rate()).abs() < 1e-6 * base.rate(), "{} vs {}", moved.rate(), base.rate());
    let scaled: Vec<f64> = noisy.iter().map(|v| 25.0 * v).collect();
    let big = fit_decaying_sinusoid_xy(&t, &scaled).unwrap();
    let (w0, w1) = (base.param("omega").unwrap(), big.param("omega").unwrap());
    assert!((w1 - w0).abs() < 1e-6 * w0, "{w0} vs {w1}");
    assert!((base.rate() - 300.0).abs() < 3.0 * base.rate_uncertainty() + 1.0);
}

#[test]
fn double_exponential_reduces_to_single_when_second_amplitude_vanishes() {
    let t = grid(300, 2e-5);
    let y = sample(ModelKind::Exponential, &t, &[1.0, 300.0, 0.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let noisy = add_noise(&y, 0.005, &mut rng);
    let single = fit_exponential_xy(&t, &noisy).unwrap();
    let double = fit_double_exponential_xy(&t, &noisy).unwrap();
    let comps = [
        (double.param("A1").unwrap(), double.param("gamma1").unwrap()),
        (double.param("A2").unwrap(), double.param("gamma2").unwrap()),
    ];
    // the dominant component reproduces the single fit, the other is at the noise level
    let (main, extra) = if comps[0].0.abs() >= comps[1].0.abs() { (comps[0], comps[1]) } else { (comps[1], comps[0]) };
    let (g_single, a_single) = (single.rate(), single.param("A").unwrap());
    assert!((main.1 - g_single).abs() < 4.0 * single.rate_uncertainty(), "double {:?}, single {:?}", double.params, single.params);
    assert!((main.0 - a_single).abs() < 0.01);
    assert!(extra.0.abs() < 0.01, "{:?}", double.params);
    assert!(double.rms_residual <= single.rms_residual * 1.0001);
}

#[test]
fn straight_line_weighted_and_unweighted() {
    let x = [1.0, 2.0, 3.0, 4.0, 5.0];
    let y: Vec<f64> = x.iter().map(|x| 2.0 * x + 1.0).collect();
    let f = linear_fit(&x, &y, None).unwrap();
    assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept - 1.0).abs() < 1e-14);
    let w = [1.0, 4.0, 1.0, 4.0, 1.0];
    let g = linear_fit(&x, &y, Some(&w)).unwrap();
    assert!((g.slope - 2.0).abs() < 1e-14 && (g.intercept - 1.0).abs() < 1e-13);
    assert!(linear_fit(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0], None).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exponential_round_trip(a in 0.2f64..2.0, g in 50.0f64..2000.0, c in -0.5f64..0.5) {
        let t = grid(150, 6.0 / g / 150.0);
        let y = sample(ModelKind::Exponential, &t, &[a, g, c]);
        let f = fit_exponential_xy(&t, &y).unwrap();
        prop_assert!(f.converged);
        prop_assert!((f.rate() / g - 1.0).abs() < 1e-6, "{:?}", f.params);
        prop_assert!((f.param("A").unwrap() / a - 1.0).abs() < 1e-6);
    }

    #[test]
    fn double_exponential_round_trip(a1 in -1.5f64..-0.3, g1 in 250.0f64..600.0, a2 in 0.1f64..0.6, g2 in 20.0f64..70.0) {
        let t = grid(500, 6.0 / g2 / 500.0);
        let p = [a1, g1, a2, g2, 1.0];
        let y = sample(ModelKind::DoubleExponential, &t, &p);
        let f = fit_double_exponential_xy(&t, &y).unwrap();
        for (got, want) in f.params.iter().zip(&p) {
            prop_assert!((got - want).abs() < 1e-6 * want.abs(), "{:?} vs {:?}", f.params, p);
        }
    }

    #[test]
    fn sinusoid_round_trip(g in 100.0f64..800.0, f_hz in 800.0f64..3000.0, phi in 0.0f64..6.2) {
        let t = grid(500, 1.0 / f_hz / 20.0);
        let p = [1.0, g, TAU * f_hz, phi, 0.0];
        let y = sample(ModelKind::DecayingSinusoid, &t, &p);
        let f = fit_decaying_sinusoid_xy(&t, &y).unwrap();
        prop_assert!(f.converged, "{}", f.message);
        prop_assert!((f.rate() / g - 1.0).abs() < 1e-6, "{:?}", f.params);
        prop_assert!((f.param("omega").unwrap() / p[2] - 1.0).abs() < 1e-6);
    }
}
