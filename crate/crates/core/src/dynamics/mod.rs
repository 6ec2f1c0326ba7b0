//! Master equation for piecewise-constant fields: coherent coupling, optical
//! decay, uniform ground relaxation, propagation by cached superoperator
//! exponentials, Doppler averaging and the absorption observable.

pub mod absorption;
pub mod doppler;
pub mod expm;
pub mod fields;
pub mod hamiltonian;
pub mod propagate;
pub mod superop;

pub use absorption::{absorption_coefficient, instantaneous_absorption, AbsorptionScope, ProbeSettings};
pub use doppler::{doppler_average, gauss_hermite, velocity_nodes};
pub use expm::{BlockPropagator, ExpCache};
pub use fields::{FieldConfig, LaserComponent, Polarization};
pub use hamiltonian::build_hamiltonian;
pub use propagate::{propagate, propagate_with};
pub use superop::{
    assemble_liouvillian, build_optical_decay, build_uniform_relaxation, commutator, Liouvillian,
    RelaxationConfig, Superoperator,
};

use crate::atom::LevelScheme;
use crate::error::Result;

/// Level scheme plus the field-independent decay terms, so building the
/// generator of a segment only costs its Hamiltonian.
#[derive(Debug, Clone)]
pub struct Dynamics {
    scheme: LevelScheme,
    relax: RelaxationConfig,
    decay: Superoperator,
}

impl Dynamics {
    pub fn new(scheme: LevelScheme, relax: RelaxationConfig) -> Self {
        let mut decay = build_optical_decay(&scheme, &relax);
        decay.add(&build_uniform_relaxation(&scheme, relax.gamma0));
        Self { scheme, relax, decay }
    }

    pub fn scheme(&self) -> &LevelScheme {
        &self.scheme
    }

    pub fn relaxation(&self) -> &RelaxationConfig {
        &self.relax
    }

    /// Optical decay + uniform relaxation.
    pub fn decay(&self) -> &Superoperator {
        &self.decay
    }

    pub fn liouvillian(&self, fields: &FieldConfig) -> Result<Liouvillian> {
        let h = build_hamiltonian(&self.scheme, fields)?;
        assemble_liouvillian(&h, &[&self.decay], fields.clone())
    }

    /// Generator with an extra linear term (a frozen spin-exchange operator).
    pub fn liouvillian_with(&self, fields: &FieldConfig, extra: &Superoperator) -> Result<Liouvillian> {
        Ok(superop::with_spin_exchange(self.liouvillian(fields)?, extra))
    }

    /// Half-width of the optical coherences, Γ/2 + Γ_p (rad/s).
    pub fn optical_halfwidth(&self) -> f64 {
        0.5 * self.scheme.gamma() + self.relax.gamma_pressure
    }
}
