//! 87Rb D1 level structure: sub-levels, dipole couplings, Zeeman shifts and
//! the thermal ground state.

pub mod angular;
pub mod constants;
mod scheme;

pub use constants::AtomConstants;
pub use scheme::{
    dipole_amplitude, Level, LevelScheme, SphericalComponent, Term, TransitionTable, N_EXCITED,
    N_GROUND, N_LEVELS,
};
pub(crate) use scheme::check_field;

use crate::density::DensityMatrix;

/// Thermal equilibrium: population 1/8 on each ground sub-level, nothing else.
pub fn thermal_state(_scheme: &LevelScheme) -> DensityMatrix {
    let mut rho = DensityMatrix::zeros();
    for g in 0..N_GROUND {
        rho.set(g, g, 1.0 / N_GROUND as f64);
    }
    rho
}
