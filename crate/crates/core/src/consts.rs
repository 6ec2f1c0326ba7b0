//! Physical constants (SI unless the name says otherwise).

use std::f64::consts::PI;

pub const TWO_PI: f64 = 2.0 * PI;

/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;

/// Bohr magneton over Planck's constant, Hz/G.
pub const MU_B_OVER_H_HZ_PER_GAUSS: f64 = 1.399_624_493_61e6;

/// Atomic mass unit, kg.
pub const AMU: f64 = 1.660_539_066_60e-27;

/// Mass of an 87Rb atom, kg.
pub const M_RB87: f64 = 86.909_180_527 * AMU;

/// Vacuum wavelength of the D1 line, m.
pub const D1_WAVELENGTH_M: f64 = 794.978_851_156e-9;

/// Wavenumber of the D1 line, rad/m.
pub const D1_WAVENUMBER: f64 = TWO_PI / D1_WAVELENGTH_M;

/// Largest |B_z| (gauss) for which the linear Zeeman model is accepted.
pub const LINEAR_ZEEMAN_LIMIT_GAUSS: f64 = 1.0;
