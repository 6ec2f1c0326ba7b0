use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::atom::{check_field, LevelScheme, SphericalComponent};
use crate::consts::D1_WAVENUMBER;
use crate::error::{Error, Result};

/// Light polarization with ẑ ∥ k̂ as the quantization axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarization {
    SigmaPlus,
    SigmaMinus,
    Pi,
    /// Linear (x̂) polarization: equal-weight σ⁺/σ⁻ with x̂ = (ê₋ − ê₊)/√2.
    /// This relative phase makes (|−1⟩+|+1⟩)/√2 of F=2 dark on F=2→F'=1.
    Linear,
}

impl Polarization {
    /// Spherical components c_q (indexed by q+1), normalized to Σ|c_q|² = 1.
    pub fn components(self) -> [Complex64; 3] {
        let z = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Self::SigmaMinus => [one, z, z],
            Self::Pi => [z, one, z],
            Self::SigmaPlus => [z, z, one],
            Self::Linear => [Complex64::new(r, 0.0), z, Complex64::new(-r, 0.0)],
        }
    }

    pub fn component(self, q: SphericalComponent) -> Complex64 {
        self.components()[q.index()]
    }
}

/// One laser field driving (nominally) the `f_ground → f_excited` transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserComponent {
    pub f_ground: i32,
    pub f_excited: i32,
    /// Detuning from the nominal transition, rad/s (positive = blue).
    pub detuning: f64,
    pub polarization: Polarization,
    /// Rabi scale Ω, rad/s. The coupling of a given pair is Ω·amplitude/2.
    pub rabi: f64,
}

impl LaserComponent {
    pub fn resonant(f_ground: i32, f_excited: i32, polarization: Polarization, rabi: f64) -> Self {
        Self {
            f_ground,
            f_excited,
            detuning: 0.0,
            polarization,
            rabi,
        }
    }
}

/// Fields acting during one piecewise-constant segment.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FieldConfig {
    pub lasers: Vec<LaserComponent>,
    /// Axial magnetic field, gauss.
    pub b_z_gauss: f64,
    /// Velocity of the atom along k̂, m/s.
    pub velocity: f64,
}

impl FieldConfig {
    pub fn dark(b_z_gauss: f64) -> Self {
        Self {
            lasers: Vec::new(),
            b_z_gauss,
            velocity: 0.0,
        }
    }

    pub fn with_laser(mut self, laser: LaserComponent) -> Self {
        self.lasers.push(laser);
        self
    }

    pub fn with_velocity(mut self, v: f64) -> Self {
        self.velocity = v;
        self
    }

    pub fn with_field(mut self, b_z_gauss: f64) -> Self {
        self.b_z_gauss = b_z_gauss;
        self
    }

    pub fn has_light(&self) -> bool {
        self.lasers.iter().any(|l| l.rabi > 0.0)
    }

    /// Largest Rabi scale among the components.
    pub fn max_rabi(&self) -> f64 {
        self.lasers.iter().map(|l| l.rabi).fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        check_field(self.b_z_gauss)?;
        if !self.velocity.is_finite() {
            return Err(Error::InvalidField("velocity must be finite".into()));
        }
        for l in &self.lasers {
            if !(l.rabi.is_finite() && l.rabi >= 0.0) {
                return Err(Error::InvalidField(format!("Rabi scale must be >= 0, got {}", l.rabi)));
            }
            if !(1..=2).contains(&l.f_ground) || !(1..=2).contains(&l.f_excited) {
                return Err(Error::InvalidField(format!(
                    "no D1 transition F={} -> F'={}",
                    l.f_ground, l.f_excited
                )));
            }
            if !l.detuning.is_finite() {
                return Err(Error::InvalidField("detuning must be finite".into()));
            }
        }
        Ok(())
    }

    /// Laser frequency seen by the atom, measured from the F=1 → F'=1 line
    /// (rad/s). All components must agree on it since a segment has a single
    /// rotating frame; `None` when there is no light.
    pub fn frame_offset(&self, scheme: &LevelScheme) -> Result<Option<f64>> {
        let mut frame: Option<(f64, &LaserComponent)> = None;
        for l in &self.lasers {
            let w = scheme.transition_offset(l.f_ground, l.f_excited) + l.detuning;
            match frame {
                None => frame = Some((w, l)),
                Some((w0, l0)) => {
                    let tol = 1e-9 * w0.abs().max(w.abs()) + 1e-3;
                    if (w - w0).abs() > tol {
                        return Err(Error::InconsistentFrame(format!(
                            "F={}->F'={} ({:?}) at {w} rad/s vs F={}->F'={} ({:?}) at {w0} rad/s",
                            l.f_ground,
                            l.f_excited,
                            l.polarization,
                            l0.f_ground,
                            l0.f_excited,
                            l0.polarization
                        )));
                    }
                }
            }
        }
        Ok(frame.map(|(w, _)| w - D1_WAVENUMBER * self.velocity))
    }
}
