use log::debug;

use super::expm::ExpCache;
use super::superop::Liouvillian;
use crate::density::DensityMatrix;
use crate::error::{Error, Result};

/// Positivity violation that aborts a propagation step.
pub const POSITIVITY_FAILURE: f64 = 1e-6;
/// Trace drift beyond which a renormalization is logged. Any drift is
/// removed so that round-off cannot accumulate over long sequences.
pub const TRACE_DRIFT: f64 = 1e-12;

/// ρ' = exp(L·Δt)ρ, using the shared exponential cache.
pub fn propagate(rho: &DensityMatrix, l: &Liouvillian, dt: f64) -> Result<DensityMatrix> {
    propagate_with(rho, l, dt, ExpCache::global())
}

pub fn propagate_with(
    rho: &DensityMatrix,
    l: &Liouvillian,
    dt: f64,
    cache: &ExpCache,
) -> Result<DensityMatrix> {
    if !(dt.is_finite() && dt >= 0.0) {
        return Err(Error::OutOfRange(format!("time step must be >= 0, got {dt}")));
    }
    if dt == 0.0 {
        return Ok(rho.clone());
    }
    let prop = cache.get_or_compute(l.real(), dt);
    let mut out = DensityMatrix::from_real(&prop.apply(&rho.to_real()));
    let t0 = rho.trace();
    let t1 = out.trace();
    if t1 != t0 && t1 != 0.0 {
        if (t1 - t0).abs() > TRACE_DRIFT * t0.abs().max(1.0) {
            debug!("trace drift {:.3e} over {dt:e} s renormalized", t1 - t0);
        }
        out.scale(t0 / t1);
    }
    if t0 > 0.0 {
        let e = out.min_eigenvalue() / t0;
        if e < -POSITIVITY_FAILURE {
            return Err(Error::PositivityViolation { min_eigenvalue: e });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atom::{thermal_state, AtomConstants, LevelScheme, Term};
    use crate::dynamics::fields::{FieldConfig, LaserComponent, Polarization};
    use crate::dynamics::superop::{RelaxationConfig, Superoperator};
    use crate::dynamics::Dynamics;
    use num_complex::Complex64;

    fn dynamics(gamma0: f64, gp: f64) -> Dynamics {
        let s = LevelScheme::new(&AtomConstants::default()).unwrap();
        Dynamics::new(s, RelaxationConfig::new(gamma0, gp).unwrap())
    }

    #[test]
    fn zero_step_and_zero_generator_leave_state() {
        let d = dynamics(50.0, 1e8);
        let rho = {
            let mut r = thermal_state(d.scheme());
            r.set_coherence(3, 5, Complex64::new(0.01, 0.02));
            r
        };
        let l = d.liouvillian(&FieldConfig::dark(1e-3)).unwrap();
        assert_eq!(propagate(&rho, &l, 0.0).unwrap(), rho);
        let h = crate::density::Matrix16::zeros();
        let zero = crate::dynamics::superop::assemble_liouvillian(&h, &[&Superoperator::zeros()], FieldConfig::dark(0.0)).unwrap();
        let out = propagate(&rho, &zero, 0.37).unwrap();
        assert!(out.max_abs_diff(&rho) < 1e-15);
    }

    #[test]
    fn unitary_limit_conserves_purity() {
        let d = dynamics(0.0, 0.0);
        let s = d.scheme().clone();
        let mut a = [Complex64::new(0.0, 0.0); 16];
        a[0] = Complex64::new(0.6, 0.0);
        a[5] = Complex64::new(0.0, 0.8);
        let rho = DensityMatrix::pure(&a);
        let h = crate::dynamics::hamiltonian::build_hamiltonian(
            &s,
            &FieldConfig::dark(1e-3).with_laser(LaserComponent::resonant(1, 2, Polarization::Linear, 2e7)),
        )
        .unwrap();
        let l = crate::dynamics::superop::assemble_liouvillian(&h, &[], FieldConfig::default()).unwrap();
        let out = propagate(&rho, &l, 1e-6).unwrap();
        assert!((out.purity() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn propagation_is_linear() {
        let d = dynamics(50.0, 9e8);
        let l = d
            .liouvillian(&FieldConfig::dark(1e-3).with_laser(LaserComponent::resonant(2, 1, Polarization::Linear, 1e7)))
            .unwrap();
        let r1 = thermal_state(d.scheme());
        let mut r2 = DensityMatrix::zeros();
        r2.set(7, 7, 1.0);
        let mix = r1.add_scaled(&r2, 0.3, 0.7);
        let p = propagate(&mix, &l, 2e-6).unwrap();
        let q = propagate(&r1, &l, 2e-6).unwrap().add_scaled(&propagate(&r2, &l, 2e-6).unwrap(), 0.3, 0.7);
        assert!(p.max_abs_diff(&q) < 1e-10);
    }

    #[test]
    fn dark_relaxation_reaches_thermal_monotonically() {
        let d = dynamics(50.0, 9e8);
        let l = d.liouvillian(&FieldConfig::dark(0.0)).unwrap();
        let th = thermal_state(d.scheme());
        let mut rho = DensityMatrix::zeros();
        let f2 = d.scheme().manifold(Term::Ground, 2);
        rho.set(f2[4], f2[4], 0.5);
        rho.set(f2[2], f2[2], 0.5);
        rho.set_coherence(f2[2], f2[4], Complex64::new(0.3, 0.2));
        let mut last = rho.max_abs_diff(&th);
        for _ in 0..20 {
            rho = propagate(&rho, &l, 0.01).unwrap();
            let dist = rho.max_abs_diff(&th);
            assert!(dist <= last + 1e-15);
            last = dist;
        }
        // uniform decay: (F=2, m=2) population relaxes toward 1/8 at γ₀
        let expect = 0.125 + (0.5 - 0.125) * (-50.0f64 * 0.2).exp();
        assert!((rho.population(f2[4]) - expect).abs() < 1e-9);
        assert!(last < 1e-3);
    }
}
