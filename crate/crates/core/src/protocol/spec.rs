use serde::{Deserialize, Serialize};

use crate::consts::{LINEAR_ZEEMAN_LIMIT_GAUSS, TWO_PI};
use crate::dynamics::{FieldConfig, LaserComponent, Polarization};
use crate::error::{Error, Result};

/// The three pump/probe experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProtocolKind {
    /// Hyperfine population decay: linear pump and probe on F=1 → F'=2.
    #[serde(rename = "A", alias = "hyperfine_population")]
    A,
    /// Zeeman population decay: σ⁺ pump and probe on F=1 → F'=2.
    #[serde(rename = "B", alias = "zeeman_population")]
    B,
    /// Zeeman decoherence: balanced σ⁺+σ⁻ pump and probe on F=2 → F'=1.
    #[serde(rename = "C", alias = "zeeman_decoherence")]
    C,
}

impl ProtocolKind {
    pub fn tag(self) -> &'static str {
        match self {
            Self::A => "A",
            Self::B => "B",
            Self::C => "C",
        }
    }
}

impl std::fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for ProtocolKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" | "hyperfine_population" => Ok(Self::A),
            "B" | "b" | "zeeman_population" => Ok(Self::B),
            "C" | "c" | "zeeman_decoherence" => Ok(Self::C),
            _ => Err(Error::InvalidExperiment(format!("unknown protocol '{s}'"))),
        }
    }
}

/// A beam on one transition. Power maps to Ω = 2π·calibration·√(P/1 mW).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Beam {
    pub f_ground: i32,
    pub f_excited: i32,
    pub polarization: Polarization,
    pub power_mw: f64,
    /// Rabi scale per √mW, Hz.
    pub calibration_hz: f64,
    /// Detuning from the named transition, Hz.
    pub detuning_hz: f64,
}

impl Beam {
    pub fn rabi(&self) -> f64 {
        TWO_PI * self.calibration_hz * self.power_mw.max(0.0).sqrt()
    }

    pub fn laser(&self) -> LaserComponent {
        LaserComponent {
            f_ground: self.f_ground,
            f_excited: self.f_excited,
            detuning: TWO_PI * self.detuning_hz,
            polarization: self.polarization,
            rabi: self.rabi(),
        }
    }

    pub fn fields(&self, b_z_gauss: f64, velocity: f64) -> FieldConfig {
        let f = FieldConfig::dark(b_z_gauss).with_velocity(velocity);
        if self.power_mw > 0.0 {
            f.with_laser(self.laser())
        } else {
            f
        }
    }
}

/// Pump calibration: 1.5 mW gives Ω ≈ 2π·3 MHz ≈ 0.5 Γ.
pub const PUMP_CALIBRATION_HZ: f64 = 2.45e6;
/// Probe calibration: 10 µW gives Ω = 0.01 Γ.
pub const PROBE_CALIBRATION_HZ: f64 = 5.746e5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Timing {
    pub pump_duration_s: f64,
    /// Fraction of each probe period the probe is on.
    pub duty_cycle: f64,
    /// 0 selects a protocol-dependent period.
    pub probe_period_s: f64,
    /// 0 selects a protocol-dependent duration.
    pub trace_duration_s: f64,
}

impl Default for Timing {
    fn default() -> Self {
        Self {
            pump_duration_s: 2.0,
            duty_cycle: 0.05,
            probe_period_s: 0.0,
            trace_duration_s: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VaporSpec {
    pub densities_cm3: Vec<f64>,
    /// When non-empty, replaces `densities_cm3` via the vapor-pressure curve.
    pub temperatures_k: Vec<f64>,
    /// Cell temperature for collision speeds.
    pub temperature_k: f64,
    pub buffer_pressure_torr: f64,
    pub cell_radius_cm: f64,
    pub cell_length_cm: f64,
    pub beam_diameter_mm: f64,
}

impl Default for VaporSpec {
    fn default() -> Self {
        Self {
            densities_cm3: vec![3.8e11],
            temperatures_k: Vec::new(),
            temperature_k: 333.0,
            buffer_pressure_torr: 30.0,
            cell_radius_cm: 1.25,
            cell_length_cm: 5.0,
            beam_diameter_mm: 6.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RelaxationSpec {
    /// Uniform ground-state relaxation rate γ₀, s⁻¹.
    pub gamma0_hz: f64,
    /// Optical pressure broadening, HWHM per torr, Hz.
    pub broadening_hz_per_torr: f64,
    pub sigma_se_cm2: f64,
    pub spin_exchange: bool,
}

impl Default for RelaxationSpec {
    fn default() -> Self {
        Self {
            gamma0_hz: 50.0,
            broadening_hz_per_torr: crate::dynamics::superop::NE_BROADENING_HWHM_HZ_PER_TORR,
            sigma_se_cm2: 2.05e-14,
            spin_exchange: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldSpec {
    /// Field applied during the dark evolution (protocol C), gauss.
    pub b_z_gauss: f64,
    /// Field present before the switch-on and during pumping, gauss.
    pub residual_b_gauss: f64,
    /// Switch-on delays after pump shut-off; a single entry gets its
    /// antiphase partner added automatically.
    pub delays_s: Vec<f64>,
}

impl Default for FieldSpec {
    fn default() -> Self {
        Self {
            b_z_gauss: 1e-3,
            residual_b_gauss: 0.0,
            delays_s: vec![1e-4],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Numerics {
    /// Doppler velocity classes.
    pub n_groups: usize,
    /// Spin-exchange mean-field refresh interval; 0 selects 0.1/γ_SE.
    pub se_refresh_s: f64,
    pub se_tolerance: f64,
    pub se_max_iterations: usize,
    /// Steady state when ‖dρ/dt‖ < tolerance·Γ.
    pub steady_state_tolerance: f64,
    /// Steady state also needs successive pump steps to agree to this.
    pub steady_state_change: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            n_groups: 1,
            se_refresh_s: 0.0,
            se_tolerance: 1e-8,
            se_max_iterations: 50,
            steady_state_tolerance: 1e-6,
            steady_state_change: 1e-8,
        }
    }
}

/// Everything that defines one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub protocol: ProtocolKind,
    pub pump: Beam,
    pub probe: Beam,
    #[serde(default)]
    pub timing: Timing,
    #[serde(default)]
    pub vapor: VaporSpec,
    #[serde(default)]
    pub relaxation: RelaxationSpec,
    #[serde(default)]
    pub field: FieldSpec,
    #[serde(default)]
    pub numerics: Numerics,
}

impl ExperimentSpec {
    /// Defaults for a protocol: 1.5 mW pump, 10 µW probe, 5 % duty.
    pub fn for_protocol(protocol: ProtocolKind) -> Self {
        let (fg, fe, pol) = match protocol {
            ProtocolKind::A => (1, 2, Polarization::Linear),
            ProtocolKind::B => (1, 2, Polarization::SigmaPlus),
            ProtocolKind::C => (2, 1, Polarization::Linear),
        };
        let beam = |power_mw, calibration_hz| Beam {
            f_ground: fg,
            f_excited: fe,
            polarization: pol,
            power_mw,
            calibration_hz,
            detuning_hz: 0.0,
        };
        Self {
            protocol,
            pump: beam(1.5, PUMP_CALIBRATION_HZ),
            probe: beam(0.01, PROBE_CALIBRATION_HZ),
            timing: Timing::default(),
            vapor: VaporSpec::default(),
            relaxation: RelaxationSpec::default(),
            field: FieldSpec::default(),
            numerics: Numerics::default(),
        }
    }

    /// Densities to run, from the temperature list when one is given.
    pub fn densities(&self) -> Result<Vec<f64>> {
        if self.vapor.temperatures_k.is_empty() {
            Ok(self.vapor.densities_cm3.clone())
        } else {
            self.vapor
                .temperatures_k
                .iter()
                .map(|&t| crate::vapor::density_from_temperature(t))
                .collect()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str, msg: String| Err(Error::Constraint {
            name: name.to_string(),
            message: msg,
        });
        let expected = match self.protocol {
            ProtocolKind::A => ((1, 2), &[Polarization::Linear][..]),
            ProtocolKind::B => ((1, 2), &[Polarization::SigmaPlus][..]),
            ProtocolKind::C => ((2, 1), &[Polarization::Linear][..]),
        };
        for (name, beam) in [("pump", &self.pump), ("probe", &self.probe)] {
            let transition = (beam.f_ground, beam.f_excited);
            // protocol B may also run on F=2 → F'=1 with σ⁺
            let alt_b = self.protocol == ProtocolKind::B && transition == (2, 1) && beam.polarization == Polarization::SigmaPlus;
            if !alt_b && (transition != expected.0 || !expected.1.contains(&beam.polarization)) {
                return bad(
                    &format!("{name}.transition"),
                    format!(
                        "protocol {} needs {:?} on F={} -> F'={}, got {:?} on F={} -> F'={}",
                        self.protocol, expected.1[0], expected.0 .0, expected.0 .1, beam.polarization, transition.0, transition.1
                    ),
                );
            }
            if !(beam.power_mw.is_finite() && beam.power_mw >= 0.0) {
                return bad(&format!("{name}.power_mw"), format!("must be >= 0, got {}", beam.power_mw));
            }
            if !(beam.calibration_hz.is_finite() && beam.calibration_hz > 0.0) {
                return bad(&format!("{name}.calibration_hz"), "must be > 0".into());
            }
            if !beam.detuning_hz.is_finite() {
                return bad(&format!("{name}.detuning_hz"), "must be finite".into());
            }
        }
        if !(self.probe.power_mw > 0.0) {
            return bad("probe.power_mw", "probe must have light".into());
        }
        let t = &self.timing;
        if !(t.pump_duration_s > 0.0 && t.pump_duration_s.is_finite()) {
            return bad("timing.pump_duration_s", format!("must be > 0, got {}", t.pump_duration_s));
        }
        if !(t.duty_cycle > 0.0 && t.duty_cycle < 1.0) {
            return bad("timing.duty_cycle", format!("must be in (0, 1), got {}", t.duty_cycle));
        }
        for (name, v) in [("timing.probe_period_s", t.probe_period_s), ("timing.trace_duration_s", t.trace_duration_s)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(name, format!("must be >= 0 (0 = automatic), got {v}"));
            }
        }
        let v = &self.vapor;
        if v.temperatures_k.is_empty() && v.densities_cm3.is_empty() {
            return bad("vapor.densities_cm3", "density list is empty".into());
        }
        for &n in &v.densities_cm3 {
            if !(n.is_finite() && n > 0.0) {
                return bad("vapor.densities_cm3", format!("densities must be > 0, got {n}"));
            }
        }
        for &tk in &v.temperatures_k {
            if let Err(e) = crate::vapor::density_from_temperature(tk) {
                return bad("vapor.temperatures_k", e.to_string());
            }
        }
        for (name, x) in [
            ("vapor.temperature_k", v.temperature_k),
            ("vapor.cell_radius_cm", v.cell_radius_cm),
            ("vapor.cell_length_cm", v.cell_length_cm),
            ("vapor.beam_diameter_mm", v.beam_diameter_mm),
        ] {
            if !(x.is_finite() && x > 0.0) {
                return bad(name, format!("must be > 0, got {x}"));
            }
        }
        if !(v.buffer_pressure_torr.is_finite() && v.buffer_pressure_torr >= 0.0) {
            return bad("vapor.buffer_pressure_torr", format!("must be >= 0, got {}", v.buffer_pressure_torr));
        }
        let r = &self.relaxation;
        if !(r.gamma0_hz.is_finite() && r.gamma0_hz >= 0.0) {
            return bad("relaxation.gamma0_hz", format!("must be >= 0, got {}", r.gamma0_hz));
        }
        if !(r.broadening_hz_per_torr.is_finite() && r.broadening_hz_per_torr >= 0.0) {
            return bad("relaxation.broadening_hz_per_torr", "must be >= 0".into());
        }
        if !(r.sigma_se_cm2.is_finite() && r.sigma_se_cm2 > 0.0) {
            return bad("relaxation.sigma_se_cm2", format!("must be > 0, got {}", r.sigma_se_cm2));
        }
        let f = &self.field;
        for (name, b) in [("field.b_z_gauss", f.b_z_gauss), ("field.residual_b_gauss", f.residual_b_gauss)] {
            if !(b.is_finite() && b.abs() <= LINEAR_ZEEMAN_LIMIT_GAUSS) {
                return bad(name, format!("|B| must be <= {LINEAR_ZEEMAN_LIMIT_GAUSS} G, got {b}"));
            }
        }
        if self.protocol == ProtocolKind::C {
            if f.delays_s.is_empty() {
                return bad("field.delays_s", "protocol C needs at least one delay".into());
            }
            if f.delays_s.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
                return bad("field.delays_s", "delays must be >= 0".into());
            }
        }
        let nm = &self.numerics;
        if nm.n_groups == 0 {
            return bad("numerics.n_groups", "must be >= 1".into());
        }
        if !(nm.se_refresh_s.is_finite() && nm.se_refresh_s >= 0.0) {
            return bad("numerics.se_refresh_s", "must be >= 0 (0 = automatic)".into());
        }
        for (name, x) in [
            ("numerics.se_tolerance", nm.se_tolerance),
            ("numerics.steady_state_tolerance", nm.steady_state_tolerance),
            ("numerics.steady_state_change", nm.steady_state_change),
        ] {
            if !(x.is_finite() && x > 0.0) {
                return bad(name, format!("must be > 0, got {x}"));
            }
        }
        if nm.se_max_iterations == 0 {
            return bad("numerics.se_max_iterations", "must be >= 1".into());
        }
        Ok(())
    }
}

/// One piecewise-constant stretch of a pulse sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration_s: f64,
    /// Lasers, field and velocity acting during the segment.
    pub fields: FieldConfig,
    /// Probe light added to `fields`; α is sampled at the segment's end.
    pub probe: Option<FieldConfig>,
}

impl Segment {
    /// Field configuration including the probe light.
    pub fn total_fields(&self) -> FieldConfig {
        let mut f = self.fields.clone();
        if let Some(p) = &self.probe {
            f.lasers.extend(p.lasers.iter().copied());
        }
        f
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PulseSequence {
    pub segments: Vec<Segment>,
}

impl PulseSequence {
    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration_s).sum()
    }

    pub fn validate(&self) -> Result<()> {
        for (k, s) in self.segments.iter().enumerate() {
            if !(s.duration_s.is_finite() && s.duration_s > 0.0) {
                return Err(Error::InvalidExperiment(format!(
                    "segment {k}: duration must be > 0, got {}",
                    s.duration_s
                )));
            }
            s.total_fields().validate()?;
        }
        Ok(())
    }

    /// Stroboscopic probe train from t = 0 to `duration`: pulses of width
    /// duty·period start at every multiple of the period. The field is
    /// `b_before` until `switch_at` and `b_after` from then on; segments are
    /// split at the switch.
    #[allow(clippy::too_many_arguments)]
    pub fn probe_train(
        duration: f64,
        period: f64,
        duty: f64,
        probe: &FieldConfig,
        velocity: f64,
        b_before: f64,
        b_after: f64,
        switch_at: f64,
    ) -> Result<Self> {
        if !(period > 0.0 && duration >= period && duty > 0.0 && duty < 1.0) {
            return Err(Error::InvalidExperiment(format!(
                "probe train needs 0 < period <= duration and 0 < duty < 1 (period {period}, duration {duration}, duty {duty})"
            )));
        }
        let n = (duration / period + 1e-9).floor() as usize;
        let pulse = duty * period;
        let eps = 1e-12 * period;
        let mut segments = Vec::new();
        let mut push = |t0: f64, t1: f64, lit: bool| {
            let mut cuts = vec![t0];
            if switch_at > t0 + eps && switch_at < t1 - eps {
                cuts.push(switch_at);
            }
            cuts.push(t1);
            for w in cuts.windows(2) {
                let b = if w[0] + eps >= switch_at { b_after } else { b_before };
                let mut p = probe.clone();
                p.b_z_gauss = b;
                p.velocity = velocity;
                segments.push(Segment {
                    duration_s: w[1] - w[0],
                    fields: FieldConfig::dark(b).with_velocity(velocity),
                    probe: lit.then_some(p),
                });
            }
        };
        for k in 0..n {
            let t0 = k as f64 * period;
            push(t0, t0 + pulse, true);
            push(t0 + pulse, t0 + period, false);
        }
        let seq = Self { segments };
        seq.validate()?;
        Ok(seq)
    }

    /// Indices of segments whose end is a sampling point.
    pub fn sample_points(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (k, s) in self.segments.iter().enumerate() {
            let next_lit = self.segments.get(k + 1).map_or(false, |n| n.probe.is_some());
            if s.probe.is_some() && !next_lit {
                out.push(k);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn protocol_defaults_are_valid() {
        for p in [ProtocolKind::A, ProtocolKind::B, ProtocolKind::C] {
            ExperimentSpec::for_protocol(p).validate().unwrap();
        }
    }

    #[test]
    fn probe_calibration_gives_one_percent_of_gamma() {
        let spec = ExperimentSpec::for_protocol(ProtocolKind::A);
        let gamma = TWO_PI * 5.746e6;
        assert!((spec.probe.rabi() / gamma - 0.01).abs() < 1e-12);
    }

    #[test]
    fn wrong_polarization_is_rejected() {
        let mut spec = ExperimentSpec::for_protocol(ProtocolKind::A);
        spec.pump.polarization = Polarization::SigmaPlus;
        assert!(matches!(spec.validate(), Err(Error::Constraint { .. })));
        let mut spec = ExperimentSpec::for_protocol(ProtocolKind::A);
        spec.vapor.densities_cm3 = vec![0.0];
        let e = spec.validate().unwrap_err();
        assert!(e.to_string().contains("densities_cm3"), "{e}");
    }

    #[test]
    fn probe_train_layout() {
        let probe = FieldConfig::dark(0.0).with_laser(LaserComponent::resonant(2, 1, Polarization::Linear, 1.0));
        let seq = PulseSequence::probe_train(1e-3, 1e-4, 0.05, &probe, 0.0, 0.0, 1e-3, 2.5e-4).unwrap();
        assert!((seq.duration() - 1e-3).abs() < 1e-15);
        let samples = seq.sample_points();
        assert_eq!(samples.len(), 10);
        // the switch splits the dark gap after the third pulse
        let fields: Vec<f64> = seq.segments.iter().map(|s| s.fields.b_z_gauss).collect();
        assert_eq!(fields.iter().filter(|&&b| b == 0.0).count(), 6);
        for k in samples {
            assert!(seq.segments[k].probe.is_some());
        }
    }
}
