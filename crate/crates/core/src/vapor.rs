//! Rubidium vapor density and diffusion estimates.
//!
//! Vapor pressure (torr), from the standard alkali data compilation:
//! solid, T < 312.46 K: log₁₀P = 2.881 + 4.857 − 4215/T;
//! liquid:              log₁₀P = 2.881 + 4.312 − 4040/T.
//! Number density follows from the ideal-gas law, n = P/(k_B T).

use crate::consts::K_B;
use crate::error::{Error, Result};

pub const MELTING_POINT_K: f64 = 312.46;
pub const TEMPERATURE_RANGE_K: (f64, f64) = (250.0, 450.0);
const PA_PER_TORR: f64 = 101_325.0 / 760.0;

/// Rb–Ne diffusion constant at 760 torr, cm²/s.
pub const D0_RB_NE_CM2_S: f64 = 0.31;
pub const D0_REFERENCE_TORR: f64 = 760.0;

fn check_temperature(t: f64) -> Result<()> {
    let (lo, hi) = TEMPERATURE_RANGE_K;
    if !(t > lo && t < hi) {
        return Err(Error::OutOfRange(format!("temperature {t} K outside ({lo}, {hi}) K")));
    }
    Ok(())
}

pub fn vapor_pressure_torr(t: f64) -> Result<f64> {
    check_temperature(t)?;
    let log_p = if t < MELTING_POINT_K {
        2.881 + 4.857 - 4215.0 / t
    } else {
        2.881 + 4.312 - 4040.0 / t
    };
    Ok(10f64.powf(log_p))
}

/// Saturated number density, cm⁻³.
pub fn density_from_temperature(t: f64) -> Result<f64> {
    let p = vapor_pressure_torr(t)? * PA_PER_TORR;
    Ok(p / (K_B * t) * 1e-6)
}

/// Inverse of [`density_from_temperature`] by bisection, to 1e-6 K.
pub fn temperature_from_density(n_cm3: f64) -> Result<f64> {
    let (lo, hi) = TEMPERATURE_RANGE_K;
    let (mut a, mut b) = (lo + 1e-9, hi - 1e-9);
    let (na, nb) = (density_from_temperature(a)?, density_from_temperature(b)?);
    if !(n_cm3 >= na && n_cm3 <= nb) {
        return Err(Error::OutOfRange(format!(
            "density {n_cm3:e} cm⁻³ not reachable in ({lo}, {hi}) K"
        )));
    }
    while b - a > 1e-6 {
        let m = 0.5 * (a + b);
        if density_from_temperature(m)? < n_cm3 {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Lowest diffusion mode of a cylindrical cell, D₀·(p₀/p)·[(2.405/R)² + (π/L)²]
/// (s⁻¹). A suggested γ₀; nothing applies it automatically.
pub fn estimate_diffusion_rate(radius_cm: f64, length_cm: f64, pressure_torr: f64, d0_cm2_s: f64) -> Result<f64> {
    for (name, v) in [("radius", radius_cm), ("length", length_cm), ("pressure", pressure_torr), ("D0", d0_cm2_s)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::OutOfRange(format!("{name} must be positive, got {v}")));
        }
    }
    let d = d0_cm2_s * D0_REFERENCE_TORR / pressure_torr;
    Ok(d * ((2.405 / radius_cm).powi(2) + (std::f64::consts::PI / length_cm).powi(2)))
}
