//! Absorption of a weak probe.
//!
//! The photon absorption rate is W = 2·Σ Im(H_eg ρ_ge) = Ω·Σ Im(D_eg ρ_ge).
//! It is reported as α = W·Γ/Ω², which for a resonant two-level atom with unit
//! dipole amplitude and population p equals p·Γ/(Γ + 2Γ_p). Ω² is the summed
//! squared Rabi scale of the probe components.

use serde::{Deserialize, Serialize};

use super::fields::FieldConfig;
use super::hamiltonian::coupling_block;
use super::propagate::propagate;
use super::Dynamics;
use crate::atom::{LevelScheme, N_GROUND, N_LEVELS};
use crate::density::DensityMatrix;
use crate::error::{Error, Result};

/// Which ground–excited pairs count towards α.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbsorptionScope {
    /// Every pair the probe drives, including off-resonant hyperfine partners.
    #[default]
    Total,
    /// Only pairs belonging to the transitions the probe components name.
    Target,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSettings {
    /// Upper bound on Ω_probe/Γ.
    pub max_rabi_ratio: f64,
    /// Largest allowed Σ_g|Δρ_gg| relative to the ground population.
    pub back_action_limit: f64,
    /// Evaluation time in units of the optical coherence lifetime 1/(Γ/2+Γ_p).
    pub settle_lifetimes: f64,
    pub scope: AbsorptionScope,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        Self {
            max_rabi_ratio: 0.01,
            back_action_limit: 0.005,
            settle_lifetimes: 20.0,
            scope: AbsorptionScope::Total,
        }
    }
}

fn rabi_norm_sqr(probe: &FieldConfig) -> f64 {
    probe.lasers.iter().map(|l| l.rabi * l.rabi).sum()
}

pub fn check_probe_weakness(probe: &FieldConfig, scheme: &LevelScheme, settings: &ProbeSettings) -> Result<()> {
    if !probe.has_light() {
        return Err(Error::ProbeTooStrong("probe has no light".into()));
    }
    let ratio = probe.max_rabi() / scheme.gamma();
    if ratio > settings.max_rabi_ratio * (1.0 + 1e-12) {
        return Err(Error::ProbeTooStrong(format!(
            "Ω/Γ = {ratio:.3e} exceeds {:.3e}",
            settings.max_rabi_ratio
        )));
    }
    Ok(())
}

/// Per-ground-level contributions to α from the optical coherences present in ρ.
pub fn absorption_by_ground_level(
    rho: &DensityMatrix,
    probe: &FieldConfig,
    scheme: &LevelScheme,
    scope: AbsorptionScope,
) -> [f64; N_GROUND] {
    let norm = rabi_norm_sqr(probe);
    let mut out = [0.0; N_GROUND];
    if norm == 0.0 {
        return out;
    }
    let mut h = coupling_block(scheme, probe);
    if scope == AbsorptionScope::Target {
        h = crate::density::Matrix16::zeros();
        for laser in &probe.lasers {
            let single = FieldConfig {
                lasers: vec![*laser],
                ..probe.clone()
            };
            let hl = coupling_block(scheme, &single);
            for g in 0..N_GROUND {
                for e in N_GROUND..N_LEVELS {
                    if scheme.level(g).f == laser.f_ground && scheme.level(e).f == laser.f_excited {
                        h[(e, g)] += hl[(e, g)];
                    }
                }
            }
        }
    }
    let m = rho.matrix();
    for (g, o) in out.iter_mut().enumerate() {
        let mut w = 0.0;
        for e in N_GROUND..N_LEVELS {
            w += 2.0 * (h[(e, g)] * m[(g, e)]).im;
        }
        *o = w * scheme.gamma() / norm;
    }
    out
}

/// α from the optical coherences already present in ρ (no settling).
pub fn instantaneous_absorption(
    rho: &DensityMatrix,
    probe: &FieldConfig,
    scheme: &LevelScheme,
    scope: AbsorptionScope,
) -> f64 {
    absorption_by_ground_level(rho, probe, scheme, scope).iter().sum()
}

/// Σ_g|Δρ_gg| / Tr_g(before).
pub fn back_action(before: &DensityMatrix, after: &DensityMatrix) -> f64 {
    let tg = before.ground_population();
    let d: f64 = (0..N_GROUND)
        .map(|g| (after.population(g) - before.population(g)).abs())
        .sum();
    if tg > 0.0 {
        d / tg
    } else {
        d
    }
}

/// Absorption of a weak probe applied to ρ: ρ is propagated under the probe
/// until the optical coherences reach quasi-steady state, then α is read out.
pub fn absorption_coefficient(
    rho: &DensityMatrix,
    probe: &FieldConfig,
    dynamics: &Dynamics,
    settings: &ProbeSettings,
) -> Result<f64> {
    let scheme = dynamics.scheme();
    check_probe_weakness(probe, scheme, settings)?;
    let l = dynamics.liouvillian(probe)?;
    let tau = settings.settle_lifetimes / dynamics.optical_halfwidth();
    let after = propagate(rho, &l, tau)?;
    let ba = back_action(rho, &after);
    if ba > settings.back_action_limit {
        return Err(Error::ProbeBackAction {
            fraction: ba,
            limit: settings.back_action_limit,
        });
    }
    Ok(instantaneous_absorption(&after, probe, scheme, settings.scope))
}
