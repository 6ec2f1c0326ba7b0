//! The invariant suite behind `rbdecay validate`: angular factors, generator
//! structure, spin-exchange conservation laws, physical trajectories, fit
//! round trips and trace-file fidelity.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::atom::{thermal_state, AtomConstants, LevelScheme, SphericalComponent, Term, N_GROUND, N_LEVELS};
use crate::csvio::{trace_from_csv, trace_to_csv};
use crate::density::{DensityMatrix, Matrix8};
use crate::fit::{fit_decaying_sinusoid_xy, fit_double_exponential_xy, fit_exponential_xy, numerical_gradient, ModelKind};
use crate::protocol::{ExperimentSpec, ProtocolKind, Simulator, StateDiagnostics};
use crate::spin_exchange::{fz_ground, se_superoperator_apply, MeanFieldAtom, SpinExchange, SpinExchangeConfig};
use crate::trace::DecayTrace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SuiteOptions {
    /// Skip the full protocol simulations.
    pub quick: bool,
    pub seed: u64,
}

pub fn run_suite(constants: &AtomConstants, opts: SuiteOptions) -> Vec<Check> {
    let scheme = match LevelScheme::new(constants) {
        Ok(s) => s,
        Err(e) => return vec![Check::new("level_scheme", false, e.to_string())],
    };
    let mut out = vec![
        clebsch_gordan(&scheme),
        branching_sum_rule(&scheme),
        liouvillian_trace(constants),
        se_conservation(&scheme, opts.seed),
        se_fixed_points(&scheme),
    ];
    out.extend(fit_round_trips());
    out.push(fit_jacobians(opts.seed));
    out.push(csv_round_trip());
    if !opts.quick {
        for (p, delay) in [(ProtocolKind::A, None), (ProtocolKind::B, None), (ProtocolKind::C, Some(1e-4))] {
            out.push(trajectory(constants, p, delay));
        }
    }
    out
}

pub fn sigma_plus_weights(scheme: &LevelScheme) -> [f64; 3] {
    std::array::from_fn(|k| {
        let m = k as i32 - 1;
        let g = scheme.index_of(Term::Ground, 1, m).expect("F=1 level");
        let e = scheme.index_of(Term::Excited, 2, m + 1).expect("F'=2 level") - N_GROUND;
        scheme.transitions().get(g, e, SphericalComponent::Plus).powi(2)
    })
}

fn clebsch_gordan(scheme: &LevelScheme) -> Check {
    let w = sigma_plus_weights(scheme);
    let expect = [1.0 / 12.0, 0.25, 0.5];
    let err = w.iter().zip(&expect).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Check::new("clebsch_gordan_sigma_plus", err < 1e-15, format!("weights {w:?}, max error {err:e}"))
}

fn branching_sum_rule(scheme: &LevelScheme) -> Check {
    let t = scheme.transitions();
    let n_exc = N_LEVELS - N_GROUND;
    let mut err: f64 = 0.0;
    for g in 0..N_GROUND {
        err = err.max(((0..n_exc).map(|e| t.branching(g, e)).sum::<f64>() - 1.0).abs());
    }
    for e in 0..n_exc {
        err = err.max(((0..N_GROUND).map(|g| t.branching(g, e)).sum::<f64>() - 1.0).abs());
    }
    Check::new("dipole_sum_rules", err < 1e-14, format!("max deviation {err:e}"))
}

fn liouvillian_trace(constants: &AtomConstants) -> Check {
    let mut worst: f64 = 0.0;
    for p in [ProtocolKind::A, ProtocolKind::B, ProtocolKind::C] {
        let sim = match Simulator::new(&ExperimentSpec::for_protocol(p), constants, 3.8e11) {
            Ok(s) => s,
            Err(e) => return Check::new("liouvillian_trace_preserving", false, e.to_string()),
        };
        for fields in [sim.pump_fields(0.0), sim.probe_fields(1e-3, 0.0)] {
            match sim.dynamics().liouvillian(&fields) {
                Ok(l) => worst = worst.max(l.trace_defect() / sim.scheme().gamma()),
                Err(e) => return Check::new("liouvillian_trace_preserving", false, e.to_string()),
            }
        }
    }
    Check::new("liouvillian_trace_preserving", worst < 1e-12, format!("max trace defect / Γ {worst:e}"))
}

fn random_ground_state(rng: &mut ChaCha8Rng) -> Matrix8 {
    let a = Matrix8::from_fn(|_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let r = a * a.adjoint();
    r / r.trace()
}

fn max_abs(m: &Matrix8) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn se_generator(se: &SpinExchange, rho_g: &Matrix8) -> Matrix8 {
    let mut full = DensityMatrix::zeros();
    full.set_ground_block(rho_g);
    let d = se.superoperator(se.mean_spin(&full)).apply(full.matrix());
    d.fixed_view::<N_GROUND, N_GROUND>(0, 0).into_owned()
}

fn se_conservation(scheme: &LevelScheme, seed: u64) -> Check {
    let se = SpinExchange::new(SpinExchangeConfig::default()).expect("default SE config");
    let rate = 2.0 * se.gamma_se();
    let fz = fz_ground(scheme);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut tr, mut herm, mut dfz, mut agree): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..20 {
        let rho = random_ground_state(&mut rng);
        let mf = MeanFieldAtom::new(rho).expect("valid partner");
        let d = se_superoperator_apply(&rho, &mf, rate);
        tr = tr.max(d.trace().norm() / rate);
        herm = herm.max(max_abs(&(d - d.adjoint())) / rate);
        dfz = dfz.max((fz * d).trace().norm() / rate);
        // closed form (mean spin rounded to its grid) against the pair-space evaluation
        agree = agree.max(max_abs(&(se_generator(&se, &rho) - d)) / rate);
    }
    let ok = tr < 1e-12 && herm < 1e-12 && dfz < 1e-10 && agree < 1e-11;
    Check::new(
        "spin_exchange_conservation",
        ok,
        format!("trace {tr:e}, hermiticity {herm:e}, d<Fz>/dt {dfz:e}, closed form vs pair space {agree:e} (per unit rate)"),
    )
}

fn se_fixed_points(scheme: &LevelScheme) -> Check {
    let se = SpinExchange::new(SpinExchangeConfig::default()).expect("default SE config");
    let rate = 2.0 * se.gamma_se();
    let thermal = thermal_state(scheme).ground_block();
    let mut stretched = Matrix8::zeros();
    let k = scheme.index_of(Term::Ground, 2, 2).expect("F=2 m=2");
    stretched[(k, k)] = Complex64::new(1.0, 0.0);
    let mut worst: f64 = 0.0;
    for rho in [thermal, stretched] {
        let mf = MeanFieldAtom::new(rho).expect("valid partner");
        worst = worst.max(max_abs(&se_superoperator_apply(&rho, &mf, rate)) / rate);
        worst = worst.max(max_abs(&se_generator(&se, &rho)) / rate);
    }
    Check::new("spin_exchange_fixed_points", worst < 1e-12, format!("max |dρ/dt| / rate on thermal and stretched {worst:e}"))
}

fn model_grid(kind: ModelKind) -> (Vec<f64>, Vec<f64>) {
    match kind {
        ModelKind::Exponential => ((0..150).map(|k| k as f64 * 1.5e-4).collect(), vec![1.0, 300.0, 0.0]),
        ModelKind::DoubleExponential => ((0..400).map(|k| k as f64 * 2.5e-4).collect(), vec![-0.8, 300.0, 0.3, 50.0, 1.0]),
        ModelKind::DecayingSinusoid => (
            (0..400).map(|k| k as f64 * 2.5e-5).collect(),
            vec![1.0, 300.0, std::f64::consts::TAU * 1.4e3, std::f64::consts::FRAC_PI_2, 0.0],
        ),
    }
}

/// Worst parameter error, relative to max(|p|, 1) so zero offsets compare
/// absolutely.
pub fn round_trip_error(kind: ModelKind) -> (f64, bool) {
    let (t, p) = model_grid(kind);
    let y: Vec<f64> = t.iter().map(|&t| kind.eval(t, &p)).collect();
    let fit = match kind {
        ModelKind::Exponential => fit_exponential_xy(&t, &y),
        ModelKind::DoubleExponential => fit_double_exponential_xy(&t, &y),
        ModelKind::DecayingSinusoid => fit_decaying_sinusoid_xy(&t, &y),
    };
    match fit {
        Ok(f) => {
            let err = f.params.iter().zip(&p).map(|(a, b)| (a - b).abs() / b.abs().max(1.0)).fold(0.0, f64::max);
            (err, f.converged)
        }
        Err(_) => (f64::INFINITY, false),
    }
}

fn fit_round_trips() -> Vec<Check> {
    [ModelKind::Exponential, ModelKind::DoubleExponential, ModelKind::DecayingSinusoid]
        .into_iter()
        .map(|kind| {
            let (err, converged) = round_trip_error(kind);
            Check::new(
                &format!("fit_round_trip_{}", serde_json::to_value(kind).unwrap().as_str().unwrap_or("model")),
                err < 1e-6 && converged,
                format!("max relative parameter error {err:e}, converged {converged}"),
            )
        })
        .collect()
}

/// Worst |analytic − central difference| relative to the gradient's scale,
/// over seeded random parameter points.
pub fn jacobian_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for kind in [ModelKind::Exponential, ModelKind::DoubleExponential, ModelKind::DecayingSinusoid] {
        for _ in 0..50 {
            let p: Vec<f64> = match kind {
                ModelKind::Exponential => vec![rng.gen_range(-2.0..2.0), rng.gen_range(10.0..1000.0), rng.gen_range(-1.0..1.0)],
                ModelKind::DoubleExponential => vec![
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(200.0..1000.0),
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(10.0..150.0),
                    rng.gen_range(-1.0..1.0),
                ],
                ModelKind::DecayingSinusoid => vec![
                    rng.gen_range(0.1..2.0),
                    rng.gen_range(10.0..1000.0),
                    rng.gen_range(1e3..2e4),
                    rng.gen_range(0.0..6.28),
                    rng.gen_range(-1.0..1.0),
                ],
            };
            let t = rng.gen_range(0.0..5e-3);
            let mut g = vec![0.0; p.len()];
            kind.gradient(t, &p, &mut g);
            let fd = numerical_gradient(kind, t, &p);
            let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
            for (a, b) in g.iter().zip(&fd) {
                worst = worst.max((a - b).abs() / scale);
            }
        }
    }
    worst
}

fn fit_jacobians(seed: u64) -> Check {
    let err = jacobian_error(seed);
    Check::new("fit_jacobians", err < 1e-6, format!("max relative deviation from central differences {err:e}"))
}

fn csv_round_trip() -> Check {
    let time: Vec<f64> = (0..100).map(|k| k as f64 * 1.234_567e-5).collect();
    let raw: Vec<f64> = time.iter().map(|t| 0.1 + (-333.3 * t).exp() / 3.0).collect();
    let norm: Vec<f64> = time.iter().map(|t| (-333.3 * t).exp()).collect();
    let trace = DecayTrace::new(time, raw, norm).expect("valid").with_meta("protocol", "A");
    let ok = trace_to_csv(&trace)
        .and_then(|s| trace_from_csv(&s))
        .map(|back| {
            back.metadata == trace.metadata
                && [(&back.time, &trace.time), (&back.alpha_raw, &trace.alpha_raw), (&back.alpha_norm, &trace.alpha_norm)]
                    .iter()
                    .all(|(a, b)| a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()) && a.len() == b.len())
        })
        .unwrap_or(false);
    Check::new("trace_file_round_trip", ok, if ok { "bit-identical" } else { "mismatch" })
}

fn trajectory(constants: &AtomConstants, protocol: ProtocolKind, delay: Option<f64>) -> Check {
    let name = format!("trajectory_bounds_protocol_{protocol}");
    let run = Simulator::new(&ExperimentSpec::for_protocol(protocol), constants, 3.8e11).and_then(|s| s.simulate(delay));
    match run {
        Ok(t) => match StateDiagnostics::from_trace(&t) {
            Some(d) => Check::new(
                &name,
                d.is_physical(),
                format!(
                    "{} samples: trace error {:e}, hermiticity {:e}, min eigenvalue {:e}",
                    d.samples, d.max_trace_error, d.max_hermiticity_error, d.min_eigenvalue
                ),
            ),
            None => Check::new(&name, false, "trace carries no diagnostics"),
        },
        Err(e) => Check::new(&name, false, e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suite_passes() {
        let checks = run_suite(&AtomConstants::default(), SuiteOptions { quick: true, seed: 3 });
        for c in &checks {
            assert!(c.passed, "{c}");
        }
        assert!(checks.len() >= 9);
    }
}
