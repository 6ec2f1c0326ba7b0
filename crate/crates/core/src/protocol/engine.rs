use log::debug;
use serde::{Deserialize, Serialize};

use super::spec::{ExperimentSpec, ProtocolKind, PulseSequence};
use super::states::{dark_state_weights, DarkStateWeights};
use crate::atom::{thermal_state, AtomConstants, LevelScheme, Term, N_GROUND};
use crate::consts::{MU_B_OVER_H_HZ_PER_GAUSS, TWO_PI};
use crate::density::DensityMatrix;
use crate::dynamics::absorption::{back_action, instantaneous_absorption, AbsorptionScope, ProbeSettings};
use crate::dynamics::superop::RelaxationConfig;
use crate::dynamics::{propagate, velocity_nodes, Dynamics, FieldConfig};
use crate::error::{Error, Result};
use crate::spin_exchange::{self_consistent_evolve, SpinExchange, SpinExchangeConfig};
use crate::trace::{normalize_trace, DecayTrace, MIN_FIT_SAMPLES};

/// Fundamental (Δm_F = 2 beat) and second harmonic of the absorption
/// oscillation under B_z, rad/s: 2·g_F·µ_B·B/ħ and twice that.
pub fn oscillation_frequency_prediction(b_z_gauss: f64, scheme: &LevelScheme) -> (f64, f64) {
    let larmor = TWO_PI * scheme.g_factor(Term::Ground, 2) * MU_B_OVER_H_HZ_PER_GAUSS * b_z_gauss;
    let fundamental = (2.0 * larmor).abs();
    (fundamental, 2.0 * fundamental)
}

/// Worst state diagnostics over the sampled points of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateDiagnostics {
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    /// Smallest eigenvalue seen, relative to the trace.
    pub min_eigenvalue: f64,
    pub max_back_action: f64,
    pub samples: usize,
}

impl Default for StateDiagnostics {
    fn default() -> Self {
        Self {
            max_trace_error: 0.0,
            max_hermiticity_error: 0.0,
            min_eigenvalue: f64::INFINITY,
            max_back_action: 0.0,
            samples: 0,
        }
    }
}

impl StateDiagnostics {
    fn record(&mut self, rho: &DensityMatrix, trace0: f64) {
        self.max_trace_error = self.max_trace_error.max((rho.trace() - trace0).abs());
        self.max_hermiticity_error = self.max_hermiticity_error.max(rho.hermiticity_error());
        self.min_eigenvalue = self.min_eigenvalue.min(rho.min_eigenvalue() / trace0);
        self.samples += 1;
    }

    pub fn merge(&mut self, other: &StateDiagnostics) {
        self.max_trace_error = self.max_trace_error.max(other.max_trace_error);
        self.max_hermiticity_error = self.max_hermiticity_error.max(other.max_hermiticity_error);
        self.min_eigenvalue = self.min_eigenvalue.min(other.min_eigenvalue);
        self.max_back_action = self.max_back_action.max(other.max_back_action);
        self.samples += other.samples;
    }

    /// Trace, Hermiticity and positivity within the propagation tolerances.
    pub fn is_physical(&self) -> bool {
        self.max_trace_error < 1e-10 && self.max_hermiticity_error < 1e-10 && self.min_eigenvalue > -1e-9
    }

    fn write_meta(&self, t: &mut DecayTrace) {
        t.set_meta("max_trace_error", self.max_trace_error);
        t.set_meta("max_hermiticity_error", self.max_hermiticity_error);
        t.set_meta("min_eigenvalue", self.min_eigenvalue);
        t.set_meta("max_back_action", self.max_back_action);
    }

    pub fn from_trace(t: &DecayTrace) -> Option<Self> {
        Some(Self {
            max_trace_error: t.meta_f64("max_trace_error")?,
            max_hermiticity_error: t.meta_f64("max_hermiticity_error")?,
            min_eigenvalue: t.meta_f64("min_eigenvalue")?,
            max_back_action: t.meta_f64("max_back_action")?,
            samples: t.len(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct PumpOutcome {
    pub rho: DensityMatrix,
    pub elapsed_s: f64,
    /// ‖dρ/dt‖ (Frobenius) at the returned state, s⁻¹.
    pub residual: f64,
    pub steps: usize,
}

/// Absorption samples of one velocity class, before normalization.
#[derive(Debug, Clone)]
pub struct RawTrace {
    pub time: Vec<f64>,
    pub alpha: Vec<f64>,
    /// α of the thermal state under the same probe.
    pub alpha_ss: f64,
    pub diagnostics: StateDiagnostics,
    pub final_state: DensityMatrix,
}

/// Time grid of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampling {
    pub duration_s: f64,
    pub period_s: f64,
}

/// One experiment at one density: dynamics, spin exchange and beams.
#[derive(Debug, Clone)]
pub struct Simulator {
    spec: ExperimentSpec,
    density: f64,
    dynamics: Dynamics,
    se: Option<SpinExchange>,
    probe: ProbeSettings,
}

impl Simulator {
    pub fn new(spec: &ExperimentSpec, constants: &AtomConstants, density_cm3: f64) -> Result<Self> {
        spec.validate()?;
        if !(density_cm3.is_finite() && density_cm3 > 0.0) {
            return Err(Error::Constraint {
                name: "density".into(),
                message: format!("must be > 0, got {density_cm3}"),
            });
        }
        let scheme = LevelScheme::new(constants)?;
        let r = &spec.relaxation;
        let gp = TWO_PI * r.broadening_hz_per_torr * spec.vapor.buffer_pressure_torr;
        let dynamics = Dynamics::new(scheme, RelaxationConfig::new(r.gamma0_hz, gp)?);
        let se = if r.spin_exchange {
            let nm = &spec.numerics;
            Some(SpinExchange::new(SpinExchangeConfig {
                sigma_cm2: r.sigma_se_cm2,
                density_cm3,
                temperature_k: spec.vapor.temperature_k,
                refresh_interval_s: (nm.se_refresh_s > 0.0).then_some(nm.se_refresh_s),
                tolerance: nm.se_tolerance,
                max_iterations: nm.se_max_iterations,
            })?)
        } else {
            None
        };
        Ok(Self {
            spec: spec.clone(),
            density: density_cm3,
            dynamics,
            se,
            probe: ProbeSettings {
                scope: AbsorptionScope::Total,
                ..ProbeSettings::default()
            },
        })
    }

    pub fn spec(&self) -> &ExperimentSpec {
        &self.spec
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    pub fn scheme(&self) -> &LevelScheme {
        self.dynamics.scheme()
    }

    pub fn spin_exchange(&self) -> Option<&SpinExchange> {
        self.se.as_ref()
    }

    pub fn gamma_se(&self) -> f64 {
        self.se.as_ref().map_or(0.0, |s| s.gamma_se())
    }

    /// γ_SE + γ₀, used to size the time grid.
    pub fn estimated_rate(&self) -> f64 {
        (self.gamma_se() + self.spec.relaxation.gamma0_hz).max(1.0)
    }

    pub fn pump_fields(&self, velocity: f64) -> FieldConfig {
        self.spec.pump.fields(self.spec.field.residual_b_gauss, velocity)
    }

    pub fn probe_fields(&self, b_z_gauss: f64, velocity: f64) -> FieldConfig {
        self.spec.probe.fields(b_z_gauss, velocity)
    }

    /// Switch-on delays for protocol C; a single delay gets the antiphase
    /// delay d + π/ω appended.
    pub fn delays(&self) -> Vec<f64> {
        let mut d = self.spec.field.delays_s.clone();
        if d.len() == 1 {
            let (w, _) = oscillation_frequency_prediction(self.spec.field.b_z_gauss, self.scheme());
            if w > 0.0 {
                d.push(d[0] + std::f64::consts::PI / w);
            }
        }
        d
    }

    pub fn sampling(&self) -> Sampling {
        let t = &self.spec.timing;
        let g = self.estimated_rate();
        let g0 = self.spec.relaxation.gamma0_hz;
        let (duration, period) = match self.spec.protocol {
            ProtocolKind::A => {
                let d = 6.0 / g;
                (d, d / 150.0)
            }
            ProtocolKind::B => {
                let d = if g0 > 0.0 { (5.0 / g0).max(6.0 / g) } else { 6.0 / g };
                (d, (d / 400.0).min(0.1 / g))
            }
            ProtocolKind::C => {
                let (w, _) = oscillation_frequency_prediction(self.spec.field.b_z_gauss, self.scheme());
                let last_delay = self.delays().into_iter().fold(0.0, f64::max);
                if w > 0.0 {
                    let osc = TWO_PI / w;
                    ((5.0 / g).max(last_delay + 4.0 * osc), (50e-6f64).min(osc / 14.0))
                } else {
                    (5.0 / g, (50e-6f64).min(0.1 / g))
                }
            }
        };
        let period = if t.probe_period_s > 0.0 { t.probe_period_s } else { period };
        let duration = if t.trace_duration_s > 0.0 { t.trace_duration_s } else { duration };
        Sampling {
            duration_s: duration.max(MIN_FIT_SAMPLES as f64 * period),
            period_s: period,
        }
    }

    fn evolve(&self, rho: &DensityMatrix, fields: &FieldConfig, dt: f64) -> Result<DensityMatrix> {
        self_consistent_evolve(rho, fields, dt, &self.dynamics, self.se.as_ref())
    }

    /// dρ/dt with the spin-exchange partner taken from ρ itself.
    fn derivative_norm(&self, rho: &DensityMatrix, fields: &FieldConfig) -> Result<f64> {
        let l = match &self.se {
            Some(se) if se.gamma_se() > 0.0 => {
                self.dynamics.liouvillian_with(fields, &se.superoperator(se.mean_spin(rho)))?
            }
            _ => self.dynamics.liouvillian(fields)?,
        };
        Ok(l.apply(rho.matrix()).norm())
    }

    /// Pumps from the thermal state with time steps doubling from 1 µs until
    /// ‖dρ/dt‖ < tolerance·Γ and successive states agree, or the pump
    /// duration runs out.
    pub fn run_pump_to_steady_state(&self, velocity: f64) -> Result<PumpOutcome> {
        let fields = self.pump_fields(velocity);
        let rho0 = thermal_state(self.scheme());
        let nm = &self.spec.numerics;
        let limit = nm.steady_state_tolerance * self.scheme().gamma();
        let total = self.spec.timing.pump_duration_s;
        let mut rho = rho0;
        let mut residual = self.derivative_norm(&rho, &fields)?;
        if residual < limit && !fields.has_light() {
            return Ok(PumpOutcome {
                rho,
                elapsed_s: 0.0,
                residual,
                steps: 0,
            });
        }
        let mut dt: f64 = 1e-6;
        let mut elapsed = 0.0;
        let mut steps = 0;
        loop {
            let step = dt.min(total - elapsed);
            let next = self.pump_step(&rho, &fields, step)?;
            elapsed += step;
            steps += 1;
            let change = next.max_abs_diff(&rho);
            rho = next;
            residual = self.derivative_norm(&rho, &fields)?;
            if residual < limit && change < nm.steady_state_change {
                debug!("pump steady after {elapsed:.3e} s ({steps} steps), residual {residual:.2e}");
                return Ok(PumpOutcome {
                    rho,
                    elapsed_s: elapsed,
                    residual,
                    steps,
                });
            }
            if elapsed >= total * (1.0 - 1e-12) {
                return Err(Error::SteadyStateNotReached {
                    elapsed_s: elapsed,
                    residual,
                });
            }
            dt *= 2.0;
        }
    }

    /// One pump step with the spin-exchange partner taken from the end of the
    /// step (implicit in the mean field), found by fixed-point iteration.
    /// Long steps are stiff; the implicit partner keeps them stable.
    fn pump_step(&self, rho: &DensityMatrix, fields: &FieldConfig, dt: f64) -> Result<DensityMatrix> {
        let Some(se) = self.se.as_ref().filter(|s| s.gamma_se() > 0.0) else {
            return propagate(rho, &self.dynamics.liouvillian(fields)?, dt);
        };
        let run = |s: [f64; 3]| -> Result<DensityMatrix> {
            propagate(rho, &self.dynamics.liouvillian_with(fields, &se.superoperator(s))?, dt)
        };
        let mut s = se.mean_spin(rho);
        let mut out = run(s)?;
        for _ in 0..se.config().max_iterations {
            let s1 = se.mean_spin(&out);
            if s1 == s {
                break;
            }
            let next = run(s1)?;
            let change = next.max_abs_diff(&out);
            out = next;
            s = s1;
            if change < se.config().tolerance {
                break;
            }
        }
        Ok(out)
    }

    /// α of the state left after a probe pulse of the given length acting on ρ.
    fn pulse_absorption(&self, rho: &DensityMatrix, probe: &FieldConfig, pulse: f64) -> Result<f64> {
        let after = propagate(rho, &self.dynamics.liouvillian(probe)?, pulse)?;
        Ok(instantaneous_absorption(&after, probe, self.scheme(), self.probe.scope))
    }

    /// Executes a pulse sequence from ρ₀, sampling α at the end of every probe
    /// pulse and checking each pulse's effect on the ground populations.
    pub fn run_sequence(&self, rho0: &DensityMatrix, seq: &PulseSequence) -> Result<(Vec<f64>, Vec<f64>, DensityMatrix, StateDiagnostics)> {
        seq.validate()?;
        let scheme = self.scheme();
        let mut rho = rho0.clone();
        let trace0 = rho0.trace();
        let mut diag = StateDiagnostics::default();
        let (mut times, mut alpha) = (Vec::new(), Vec::new());
        let mut t = 0.0;
        let samples = seq.sample_points();
        let mut pulse_start: Option<DensityMatrix> = None;
        let mut pulse_pieces: Vec<(FieldConfig, FieldConfig, f64)> = Vec::new();
        for (k, seg) in seq.segments.iter().enumerate() {
            if let Some(p) = &seg.probe {
                crate::dynamics::absorption::check_probe_weakness(p, scheme, &self.probe)?;
                if pulse_start.is_none() {
                    pulse_start = Some(rho.clone());
                }
                pulse_pieces.push((seg.total_fields(), seg.fields.clone(), seg.duration_s));
            }
            rho = self.evolve(&rho, &seg.total_fields(), seg.duration_s)?;
            t += seg.duration_s;
            if samples.binary_search(&k).is_ok() {
                let probe = seg.probe.as_ref().expect("sampled segment has a probe");
                // probe effect: lit vs dark evolution of the pulse-start state
                let start = pulse_start.take().expect("pulse start");
                let (mut lit, mut dark) = (start.clone(), start);
                for (on, off, dt) in pulse_pieces.drain(..) {
                    lit = propagate(&lit, &self.dynamics.liouvillian(&on)?, dt)?;
                    dark = propagate(&dark, &self.dynamics.liouvillian(&off)?, dt)?;
                }
                let ba = back_action(&dark, &lit);
                diag.max_back_action = diag.max_back_action.max(ba);
                if ba > self.probe.back_action_limit {
                    return Err(Error::ProbeBackAction {
                        fraction: ba,
                        limit: self.probe.back_action_limit,
                    });
                }
                diag.record(&rho, trace0);
                times.push(t);
                alpha.push(instantaneous_absorption(&rho, probe, scheme, self.probe.scope));
            }
        }
        Ok((times, alpha, rho, diag))
    }

    fn raw_run(&self, rho0: &DensityMatrix, velocity: f64, b_before: f64, b_after: f64, switch_at: f64) -> Result<RawTrace> {
        let s = self.sampling();
        let probe = self.probe_fields(b_after, velocity);
        let seq = PulseSequence::probe_train(
            s.duration_s,
            s.period_s,
            self.spec.timing.duty_cycle,
            &probe,
            velocity,
            b_before,
            b_after,
            switch_at,
        )?;
        let (time, alpha, final_state, diagnostics) = self.run_sequence(rho0, &seq)?;
        let pulse = self.spec.timing.duty_cycle * s.period_s;
        let alpha_ss = self.pulse_absorption(&thermal_state(self.scheme()), &self.probe_fields(0.0, velocity), pulse)?;
        Ok(RawTrace {
            time,
            alpha,
            alpha_ss,
            diagnostics,
            final_state,
        })
    }

    fn finish(&self, raw: RawTrace) -> Result<DecayTrace> {
        let ini = raw.alpha[0];
        let norm = normalize_trace(&raw.alpha, raw.alpha_ss, ini)?;
        let mut t = DecayTrace::new(raw.time, raw.alpha, norm)?;
        raw.diagnostics.write_meta(&mut t);
        self.tag(&mut t);
        t.set_meta("alpha_ss", raw.alpha_ss);
        t.set_meta("alpha_ini", ini);
        Ok(t)
    }

    fn tag(&self, t: &mut DecayTrace) {
        t.set_meta("protocol", self.spec.protocol);
        t.set_meta("density_cm3", self.density);
        t.set_meta("gamma_se", self.gamma_se());
        t.set_meta("gamma0", self.spec.relaxation.gamma0_hz);
    }

    /// Stroboscopic probing of the dark relaxation from ρ₀ (one velocity class).
    pub fn run_relaxation_in_dark(&self, rho0: &DensityMatrix, velocity: f64) -> Result<DecayTrace> {
        let b = self.spec.field.residual_b_gauss;
        let raw = self.raw_run(rho0, velocity, b, b, f64::INFINITY)?;
        self.finish(raw)
    }

    /// Dark evolution at the residual field for `delay`, then B_z switched to
    /// the configured value, probed throughout (one velocity class).
    pub fn run_ramsey_zeeman(&self, rho0: &DensityMatrix, delay: f64, velocity: f64) -> Result<DecayTrace> {
        if !(delay.is_finite() && delay >= 0.0) {
            return Err(Error::OutOfRange(format!("delay must be >= 0, got {delay}")));
        }
        let f = &self.spec.field;
        crate::atom::check_field(f.b_z_gauss)?;
        let raw = self.raw_run(rho0, velocity, f.residual_b_gauss, f.b_z_gauss, delay)?;
        let mut t = self.finish(raw)?;
        t.set_meta("delay_s", delay);
        t.set_meta("b_z_gauss", f.b_z_gauss);
        Ok(t)
    }

    /// Full run averaged over the Doppler classes: pump each class to steady
    /// state, optionally transform the state, then probe the dark evolution.
    /// `delay` selects the field switch of protocol C; `b_after` overrides the
    /// applied field.
    pub fn simulate_with<F>(&self, delay: Option<f64>, b_after: Option<f64>, transform: F) -> Result<DecayTrace>
    where
        F: Fn(DensityMatrix) -> Result<DensityMatrix> + Sync,
    {
        use rayon::prelude::*;
        let f = &self.spec.field;
        let b_on = b_after.unwrap_or(f.b_z_gauss);
        crate::atom::check_field(b_on)?;
        let switch = delay.unwrap_or(f64::INFINITY);
        let nodes = velocity_nodes(self.spec.vapor.temperature_k, self.spec.numerics.n_groups)?;
        let runs: Vec<(RawTrace, DarkStateWeights, f64)> = nodes
            .par_iter()
            .map(|&(v, _)| {
                let pump = self.run_pump_to_steady_state(v)?;
                let w = dark_state_weights(&pump.rho, self.scheme()).unwrap_or(DarkStateWeights {
                    lambda: 0.0,
                    m_state: 0.0,
                    lambda_star: 0.0,
                    leakage: 1.0,
                    distance_to_equal_mixture: f64::NAN,
                    f2_population: 0.0,
                });
                let rho0 = transform(pump.rho)?;
                let b_before = f.residual_b_gauss;
                let b_after = if delay.is_some() { b_on } else { b_before };
                Ok((self.raw_run(&rho0, v, b_before, b_after, switch)?, w, pump.elapsed_s))
            })
            .collect::<Result<_>>()?;
        // average α − α_ss, which normalizes to the averaged trace
        let n = runs[0].0.time.len();
        let mut alpha = vec![0.0; n];
        let mut alpha_ss = 0.0;
        let mut diag = StateDiagnostics::default();
        for ((raw, _, _), &(_, w)) in runs.iter().zip(&nodes) {
            if raw.time.len() != n {
                return Err(Error::InvalidTrace("velocity classes returned different grids".into()));
            }
            for i in 0..n {
                alpha[i] += w * raw.alpha[i];
            }
            alpha_ss += w * raw.alpha_ss;
            diag.merge(&raw.diagnostics);
        }
        let raw = RawTrace {
            time: runs[0].0.time.clone(),
            alpha,
            alpha_ss,
            diagnostics: diag,
            final_state: runs[0].0.final_state.clone(),
        };
        let mut t = self.finish(raw)?;
        let (_, w0, elapsed) = &runs[nodes.len() / 2];
        t.set_meta("pump_elapsed_s", elapsed);
        t.set_meta("lambda_weight", w0.lambda);
        t.set_meta("m_weight", w0.m_state);
        t.set_meta("doppler_groups", nodes.len());
        if let Some(d) = delay {
            t.set_meta("delay_s", d);
            t.set_meta("b_z_gauss", b_on);
        } else {
            t.set_meta("b_z_gauss", f.residual_b_gauss);
        }
        Ok(t)
    }

    /// Ground populations during unprobed dark evolution from ρ₀ at the
    /// residual field, sampled at the given (increasing) times.
    pub fn dark_population_history(&self, rho0: &DensityMatrix, times: &[f64]) -> Result<Vec<[f64; N_GROUND]>> {
        let dark = FieldConfig::dark(self.spec.field.residual_b_gauss);
        let mut rho = rho0.clone();
        let mut t = 0.0;
        let mut out = Vec::with_capacity(times.len());
        for &tk in times {
            if tk < t {
                return Err(Error::OutOfRange("sample times must be increasing and >= 0".into()));
            }
            if tk > t {
                rho = self.evolve(&rho, &dark, tk - t)?;
                t = tk;
            }
            out.push(ground_populations(&rho));
        }
        Ok(out)
    }

    pub fn simulate(&self, delay: Option<f64>) -> Result<DecayTrace> {
        self.simulate_with(delay, None, Ok)
    }
}

/// Pointwise t₁ − t₂. A differing time grid is resampled onto t₁'s by linear
/// interpolation over the overlap (flagged in the metadata).
pub fn subtract_traces(t1: &DecayTrace, t2: &DecayTrace) -> Result<DecayTrace> {
    t1.validate()?;
    t2.validate()?;
    let mut out = if t1.time == t2.time {
        let raw = t1.alpha_raw.iter().zip(&t2.alpha_raw).map(|(a, b)| a - b).collect();
        let norm = t1.alpha_norm.iter().zip(&t2.alpha_norm).map(|(a, b)| a - b).collect();
        DecayTrace::new(t1.time.clone(), raw, norm)?
    } else {
        if t1.is_empty() || t2.is_empty() {
            return Err(Error::InvalidTrace("cannot subtract an empty trace".into()));
        }
        let (lo, hi) = (t2.time[0], t2.time[t2.len() - 1]);
        let keep: Vec<usize> = (0..t1.len()).filter(|&i| t1.time[i] >= lo && t1.time[i] <= hi).collect();
        if keep.is_empty() {
            return Err(Error::InvalidTrace("time ranges do not overlap".into()));
        }
        let interp = |ys: &[f64], x: f64| {
            let k = t2.time.partition_point(|&t| t < x).clamp(1, t2.len() - 1);
            let (x0, x1) = (t2.time[k - 1], t2.time[k]);
            let f = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
            ys[k - 1] + f * (ys[k] - ys[k - 1])
        };
        let time: Vec<f64> = keep.iter().map(|&i| t1.time[i]).collect();
        let raw = keep.iter().map(|&i| t1.alpha_raw[i] - interp(&t2.alpha_raw, t1.time[i])).collect();
        let norm = keep.iter().map(|&i| t1.alpha_norm[i] - interp(&t2.alpha_norm, t1.time[i])).collect();
        let mut t = DecayTrace::new(time, raw, norm)?;
        t.set_meta("resampled", true);
        t
    };
    for (k, src) in [("1", t1), ("2", t2)] {
        if let Some(d) = src.meta("delay_s") {
            out.set_meta(&format!("delay_{k}_s"), d);
        }
    }
    for key in ["protocol", "density_cm3", "b_z_gauss"] {
        if let Some(v) = t1.meta(key) {
            out.set_meta(key, v.to_string());
        }
    }
    Ok(out)
}

/// Ground-level populations, for checks.
pub fn ground_populations(rho: &DensityMatrix) -> [f64; N_GROUND] {
    std::array::from_fn(|g| rho.population(g))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sim(p: ProtocolKind) -> Simulator {
        Simulator::new(&ExperimentSpec::for_protocol(p), &AtomConstants::default(), 3.8e11).unwrap()
    }

    #[test]
    fn frequency_prediction() {
        let s = sim(ProtocolKind::C);
        assert_eq!(oscillation_frequency_prediction(0.0, s.scheme()).0, 0.0);
        let (w, w2) = oscillation_frequency_prediction(1e-3, s.scheme());
        assert!((w / TWO_PI / 1.4e3 - 1.0).abs() < 0.01, "{}", w / TWO_PI);
        assert_eq!(w2, 2.0 * w);
    }

    #[test]
    fn zero_pump_power_leaves_thermal_state() {
        let mut spec = ExperimentSpec::for_protocol(ProtocolKind::A);
        spec.pump.power_mw = 0.0;
        let s = Simulator::new(&spec, &AtomConstants::default(), 3.8e11).unwrap();
        let out = s.run_pump_to_steady_state(0.0).unwrap();
        assert!(out.rho.max_abs_diff(&thermal_state(s.scheme())) < 1e-15);
    }

    #[test]
    fn identical_traces_subtract_to_zero() {
        let t = DecayTrace::from_normalized(vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 0.2]).unwrap();
        let d = subtract_traces(&t, &t).unwrap();
        assert!(d.alpha_norm.iter().all(|&v| v == 0.0));
        let far = DecayTrace::from_normalized(vec![5.0, 6.0], vec![1.0, 1.0]).unwrap();
        assert!(subtract_traces(&t, &far).is_err());
    }

    #[test]
    fn antiphase_delay_from_prediction() {
        let s = sim(ProtocolKind::C);
        let d = s.delays();
        let (w, _) = oscillation_frequency_prediction(1e-3, s.scheme());
        assert_eq!(d.len(), 2);
        assert!((d[1] - d[0] - std::f64::consts::PI / w).abs() < 1e-15);
    }
}
