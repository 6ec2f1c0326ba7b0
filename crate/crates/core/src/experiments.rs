//! End-to-end pipelines: simulate a protocol, fit its trace, and collect the
//! derived rates over a density sweep.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atom::AtomConstants;
use crate::error::{Error, Result};
use crate::fit::{fit_decaying_sinusoid, fit_double_exponential, fit_exponential, FitResult};
use crate::protocol::{m_only_state, oscillation_frequency_prediction, subtract_traces, ExperimentSpec, ProtocolKind, Simulator, StateDiagnostics};
use crate::spin_exchange::{extract_cross_section, CrossSection};
use crate::trace::DecayTrace;

/// Density of the single-density comparisons (protocol B shape, dark-state
/// content, oscillation figures), cm⁻³.
pub const REFERENCE_DENSITY_CM3: f64 = 3.8e11;

/// A simulated trace and the fit of the protocol's model to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedTrace {
    pub trace: DecayTrace,
    pub fit: FitResult,
}

/// Protocol C at one field: the two switch delays, their difference over the
/// window after the later switch, and the decaying-sinusoid fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceRun {
    pub early: DecayTrace,
    pub late: DecayTrace,
    pub difference: DecayTrace,
    pub fit: FitResult,
    /// Predicted fundamental, rad/s.
    pub predicted_omega: f64,
}

fn spec_for(spec: &ExperimentSpec, protocol: ProtocolKind) -> Result<()> {
    if spec.protocol != protocol {
        return Err(Error::InvalidExperiment(format!(
            "pipeline for protocol {protocol} given a protocol {} spec",
            spec.protocol
        )));
    }
    Ok(())
}

/// Protocol A: single-exponential fit of the normalized trace.
pub fn hyperfine_population(spec: &ExperimentSpec, constants: &AtomConstants, density: f64) -> Result<FittedTrace> {
    spec_for(spec, ProtocolKind::A)?;
    let trace = Simulator::new(spec, constants, density)?.simulate(None)?;
    let fit = fit_exponential(&trace)?;
    Ok(FittedTrace { trace, fit })
}

/// Protocol B: double-exponential fit of the normalized trace.
pub fn zeeman_population(spec: &ExperimentSpec, constants: &AtomConstants, density: f64) -> Result<FittedTrace> {
    spec_for(spec, ProtocolKind::B)?;
    let trace = Simulator::new(spec, constants, density)?.simulate(None)?;
    let fit = fit_double_exponential(&trace)?;
    Ok(FittedTrace { trace, fit })
}

/// Protocol C: traces at the first two switch delays, subtracted and fit from
/// the later switch on.
pub fn zeeman_decoherence(spec: &ExperimentSpec, constants: &AtomConstants, density: f64) -> Result<DecoherenceRun> {
    spec_for(spec, ProtocolKind::C)?;
    let sim = Simulator::new(spec, constants, density)?;
    let delays = sim.delays();
    if delays.len() < 2 {
        return Err(Error::InvalidExperiment("protocol C needs two delays (or a non-zero field)".into()));
    }
    let (d1, d2) = (delays[0], delays[1]);
    let (early, late) = rayon::join(|| sim.simulate(Some(d1)), || sim.simulate(Some(d2)));
    let (early, late) = (early?, late?);
    let difference = subtract_traces(&early, &late)?.window_from(d1.max(d2));
    let fit = fit_decaying_sinusoid(&difference)?;
    let (predicted_omega, _) = oscillation_frequency_prediction(spec.field.b_z_gauss, sim.scheme());
    Ok(DecoherenceRun {
        early,
        late,
        difference,
        fit,
        predicted_omega,
    })
}

/// Protocol C result at one applied field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldPoint {
    pub b_z_gauss: f64,
    pub gamma: f64,
    pub gamma_err: Option<f64>,
    pub omega: f64,
    pub predicted_omega: f64,
    pub relative_rms: f64,
    pub converged: bool,
}

/// Protocol C at each field in `fields`, everything else from `spec`.
pub fn field_sweep(spec: &ExperimentSpec, constants: &AtomConstants, density: f64, fields: &[f64]) -> Result<Vec<FieldPoint>> {
    fields
        .par_iter()
        .map(|&b| {
            let mut s = spec.clone();
            s.field.b_z_gauss = b;
            let run = zeeman_decoherence(&s, constants, density)?;
            Ok(FieldPoint {
                b_z_gauss: b,
                gamma: run.fit.rate(),
                gamma_err: finite(run.fit.rate_uncertainty()),
                omega: run.fit.param("omega").unwrap_or(f64::NAN),
                predicted_omega: run.predicted_omega,
                relative_rms: run.fit.relative_rms,
                converged: run.fit.converged,
            })
        })
        .collect()
}

/// Amplitudes of e^{−γt}·{sin, cos}(kωt) for each k in `harmonics`, by linear
/// least squares together with e^{−γt} and a constant.
pub fn harmonic_amplitudes(t: &[f64], y: &[f64], omega: f64, gamma: f64, harmonics: &[f64]) -> Result<Vec<f64>> {
    let ncol = 2 * harmonics.len() + 2;
    if t.len() <= ncol {
        return Err(Error::Degenerate("too few samples for the harmonic projection".into()));
    }
    let x = DMatrix::from_fn(t.len(), ncol, |i, c| {
        let e = (-gamma * t[i]).exp();
        if c < 2 * harmonics.len() {
            let ph = harmonics[c / 2] * omega * t[i];
            e * if c % 2 == 0 { ph.sin() } else { ph.cos() }
        } else if c == 2 * harmonics.len() {
            e
        } else {
            1.0
        }
    });
    let yv = DVector::from_column_slice(y);
    let svd = x.svd(true, true);
    let sol = svd
        .solve(&yv, 1e-12)
        .map_err(|e| Error::Fit(format!("harmonic projection failed: {e}")))?;
    Ok((0..harmonics.len()).map(|k| sol[2 * k].hypot(sol[2 * k + 1])).collect())
}

/// |M⟩ share of the fundamental and the second-harmonic content.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MStateReport {
    /// Fundamental amplitude of the subtracted signal with the F=2 block
    /// reduced to |M⟩ (Λ dephased), relative to the full signal.
    pub m_fraction: f64,
    /// 2ω amplitude relative to the fundamental in (field on − field off).
    pub second_harmonic_ratio: f64,
    pub fundamental_amplitude: f64,
    /// Worst state bounds over the extra runs.
    pub diagnostics: StateDiagnostics,
}

pub fn m_state_analysis(spec: &ExperimentSpec, constants: &AtomConstants, density: f64, full: &DecoherenceRun) -> Result<MStateReport> {
    spec_for(spec, ProtocolKind::C)?;
    let sim = Simulator::new(spec, constants, density)?;
    let delays = sim.delays();
    let (d1, d2) = (delays[0], delays[1]);
    let scheme = sim.scheme().clone();
    let to_m = |rho| m_only_state(&rho, &scheme).ok_or_else(|| Error::Degenerate("empty F=2 block".into()));
    let (m1, m2) = rayon::join(|| sim.simulate_with(Some(d1), None, to_m), || sim.simulate_with(Some(d2), None, to_m));
    let (m1, m2) = (m1?, m2?);
    let m_diff = subtract_traces(&m1, &m2)?.window_from(d1.max(d2));
    let omega = full.fit.param("omega").unwrap_or(full.predicted_omega);
    let gamma = full.fit.param("gamma").unwrap_or(0.0).max(0.0);
    let a_full = harmonic_amplitudes(&full.difference.time, &full.difference.alpha_raw, omega, gamma, &[1.0])?[0];
    let a_m = harmonic_amplitudes(&m_diff.time, &m_diff.alpha_raw, omega, gamma, &[1.0])?[0];
    let off = sim.simulate_with(Some(d1), Some(0.0), Ok)?;
    let beat = subtract_traces(&full.early, &off)?.window_from(d1);
    let h = harmonic_amplitudes(&beat.time, &beat.alpha_raw, omega, gamma, &[1.0, 2.0])?;
    let mut diagnostics = StateDiagnostics::default();
    for t in [&m1, &m2, &off] {
        if let Some(d) = StateDiagnostics::from_trace(t) {
            diagnostics.merge(&d);
        }
    }
    Ok(MStateReport {
        m_fraction: a_m / a_full,
        second_harmonic_ratio: h[1] / h[0],
        fundamental_amplitude: a_full,
        diagnostics,
    })
}

/// Fitted rates at one density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityRates {
    pub density_cm3: f64,
    pub hyperfine_rate: Option<f64>,
    pub hyperfine_err: Option<f64>,
    pub zeeman_population_rate: Option<f64>,
    pub zeeman_population_err: Option<f64>,
    pub decoherence_rate: Option<f64>,
    pub decoherence_err: Option<f64>,
    pub converged: bool,
}

/// Rates per density plus the spin-exchange cross-section from the
/// hyperfine rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedRates {
    pub temperature_k: f64,
    pub rows: Vec<DensityRates>,
    pub cross_section: Option<CrossSection>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// The three protocol runs at one density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub density_cm3: f64,
    pub hyperfine: FittedTrace,
    pub zeeman: FittedTrace,
    pub decoherence: DecoherenceRun,
}

/// Protocol A, B and C specs sharing the vapor, relaxation, numerics, pump
/// duration and duty cycle of `base` (and its field settings for C).
pub fn protocol_specs(base: &ExperimentSpec) -> [ExperimentSpec; 3] {
    [ProtocolKind::A, ProtocolKind::B, ProtocolKind::C].map(|p| {
        let mut s = if p == base.protocol { base.clone() } else { ExperimentSpec::for_protocol(p) };
        s.vapor = base.vapor.clone();
        s.relaxation = base.relaxation;
        s.numerics = base.numerics;
        s.timing.pump_duration_s = base.timing.pump_duration_s;
        s.timing.duty_cycle = base.timing.duty_cycle;
        if p == ProtocolKind::C {
            s.field = base.field.clone();
        }
        s
    })
}

/// Runs all three protocols at every density of `base`, in density order.
pub fn run_sweep(base: &ExperimentSpec, constants: &AtomConstants) -> Result<Vec<SweepPoint>> {
    let densities = base.densities()?;
    let [sa, sb, sc] = protocol_specs(base);
    densities
        .par_iter()
        .map(|&n| {
            Ok(SweepPoint {
                density_cm3: n,
                hyperfine: hyperfine_population(&sa, constants, n)?,
                zeeman: zeeman_population(&sb, constants, n)?,
                decoherence: zeeman_decoherence(&sc, constants, n)?,
            })
        })
        .collect()
}

impl DerivedRates {
    pub fn from_points(points: &[SweepPoint], temperature_k: f64) -> Self {
        let rows: Vec<DensityRates> = points
            .iter()
            .map(|p| {
                let (a, b, c) = (&p.hyperfine.fit, &p.zeeman.fit, &p.decoherence.fit);
                DensityRates {
                    density_cm3: p.density_cm3,
                    hyperfine_rate: finite(a.rate()),
                    hyperfine_err: finite(a.rate_uncertainty()),
                    zeeman_population_rate: b.param("gamma2").and_then(finite),
                    zeeman_population_err: b.uncertainty("gamma2").and_then(finite),
                    decoherence_rate: finite(c.rate()),
                    decoherence_err: finite(c.rate_uncertainty()),
                    converged: a.converged && b.converged && c.converged,
                }
            })
            .collect();
        let pts: Vec<(f64, f64, f64)> = rows
            .iter()
            .filter_map(|r| Some((r.density_cm3, r.hyperfine_rate?, r.hyperfine_err.unwrap_or(0.0))))
            .collect();
        let cross_section = if pts.len() >= 3 {
            extract_cross_section(&pts, temperature_k).ok()
        } else {
            None
        };
        Self {
            temperature_k,
            rows,
            cross_section,
        }
    }

    /// Rates-vs-density table: density and the three rates with errors.
    pub fn to_csv(&self) -> String {
        let f = |x: Option<f64>| x.map_or_else(|| "nan".to_string(), |v| format!("{v:.16e}"));
        let mut out = String::from(
            "density_cm3,hyperfine_rate_hz,hyperfine_err_hz,zeeman_population_rate_hz,zeeman_population_err_hz,decoherence_rate_hz,decoherence_err_hz\n",
        );
        for r in &self.rows {
            out += &format!(
                "{:.16e},{},{},{},{},{},{}\n",
                r.density_cm3,
                f(r.hyperfine_rate),
                f(r.hyperfine_err),
                f(r.zeeman_population_rate),
                f(r.zeeman_population_err),
                f(r.decoherence_rate),
                f(r.decoherence_err)
            );
        }
        out
    }
}

/// Runs all three protocols at every density and derives the rates.
pub fn derive_rates(base: &ExperimentSpec, constants: &AtomConstants) -> Result<DerivedRates> {
    Ok(DerivedRates::from_points(&run_sweep(base, constants)?, base.vapor.temperature_k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn harmonic_projection_recovers_amplitudes() {
        let t: Vec<f64> = (0..400).map(|k| k as f64 * 2e-5).collect();
        let (w, g) = (2.0 * PI * 1.4e3, 200.0);
        let y: Vec<f64> = t
            .iter()
            .map(|&t| (-g * t).exp() * (0.7 * (w * t + 0.3).sin() + 0.05 * (2.0 * w * t).cos() + 0.2) + 0.01)
            .collect();
        let a = harmonic_amplitudes(&t, &y, w, g, &[1.0, 2.0]).unwrap();
        assert!((a[0] - 0.7).abs() < 1e-10 && (a[1] - 0.05).abs() < 1e-10, "{a:?}");
    }

    #[test]
    fn pipeline_rejects_mismatched_protocol() {
        let spec = ExperimentSpec::for_protocol(ProtocolKind::B);
        assert!(hyperfine_population(&spec, &AtomConstants::default(), 3.8e11).is_err());
    }
}
