use num_complex::Complex64;

use super::fields::FieldConfig;
use crate::atom::{LevelScheme, SphericalComponent, N_GROUND, N_LEVELS};
use crate::density::Matrix16;
use crate::error::Result;

/// Coupling operator D with H_eg = (Ω/2)·D_eg summed over the laser components,
/// already multiplied by each component's Ω/2. Only the excited-ground block is
/// filled; the Hamiltonian adds the Hermitian conjugate.
pub(crate) fn coupling_block(scheme: &LevelScheme, fields: &FieldConfig) -> Matrix16 {
    let mut h = Matrix16::zeros();
    let table = scheme.transitions();
    for laser in &fields.lasers {
        if laser.rabi == 0.0 {
            continue;
        }
        let half = 0.5 * laser.rabi;
        for g in 0..N_GROUND {
            for e in 0..N_GROUND {
                let mut z = Complex64::new(0.0, 0.0);
                for q in SphericalComponent::ALL {
                    z += laser.polarization.component(q) * table.get(g, e, q);
                }
                h[(N_GROUND + e, g)] += z * half;
            }
        }
    }
    h
}

/// Rotating-frame Hamiltonian (rad/s) for a piecewise-constant segment.
///
/// Ground levels carry their hyperfine and Zeeman energies. Excited levels are
/// shifted down by the laser frequency (measured from the F=1 → F'=1 line and
/// Doppler-shifted by −k·v), so every laser couples every allowed transition
/// with its actual detuning, including the far hyperfine partners.
pub fn build_hamiltonian(scheme: &LevelScheme, fields: &FieldConfig) -> Result<Matrix16> {
    fields.validate()?;
    let frame = fields.frame_offset(scheme)?.unwrap_or(0.0);
    let mut h = coupling_block(scheme, fields);
    for e in N_GROUND..N_LEVELS {
        for g in 0..N_GROUND {
            h[(g, e)] = h[(e, g)].conj();
        }
    }
    for (k, level) in scheme.levels().iter().enumerate() {
        let mut w = scheme.hyperfine_energy(level) + scheme.zeeman_shift(level, fields.b_z_gauss)?;
        if !level.is_ground() {
            w -= frame;
        }
        h[(k, k)] = Complex64::new(w, 0.0);
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atom::{AtomConstants, Term};
    use crate::consts::{MU_B_OVER_H_HZ_PER_GAUSS, TWO_PI};
    use crate::dynamics::fields::{LaserComponent, Polarization};

    fn scheme() -> LevelScheme {
        LevelScheme::new(&AtomConstants::default()).unwrap()
    }

    #[test]
    fn dark_field_free_is_hyperfine_diagonal() {
        let s = scheme();
        let h = build_hamiltonian(&s, &FieldConfig::dark(0.0)).unwrap();
        for i in 0..N_LEVELS {
            for j in 0..N_LEVELS {
                let expect = if i == j { s.hyperfine_energy(&s.level(i)) } else { 0.0 };
                assert_eq!(h[(i, j)], Complex64::new(expect, 0.0));
            }
        }
    }

    #[test]
    fn milligauss_shifts_f2_ground() {
        let s = scheme();
        let h0 = build_hamiltonian(&s, &FieldConfig::dark(0.0)).unwrap();
        let h = build_hamiltonian(&s, &FieldConfig::dark(1e-3)).unwrap();
        for k in s.manifold(Term::Ground, 2) {
            let m = s.level(k).m as f64;
            let expect = m * TWO_PI * 0.5 * MU_B_OVER_H_HZ_PER_GAUSS * 1e-3;
            let got = (h[(k, k)] - h0[(k, k)]).re;
            // Landé value differs from 1/2 by the g_J correction only
            assert!((got - expect).abs() <= 2e-3 * expect.abs() + 1e-12, "{got} vs {expect}");
        }
    }

    #[test]
    fn sigma_plus_on_f1_f2_couples_three_pairs_on_resonance_manifold() {
        let s = scheme();
        let f = FieldConfig::dark(0.0).with_laser(LaserComponent::resonant(1, 2, Polarization::SigmaPlus, 1e6));
        let h = build_hamiltonian(&s, &f).unwrap();
        let f1 = s.manifold(Term::Ground, 1);
        let e2 = s.manifold(Term::Excited, 2);
        let mut pairs = 0;
        for &g in &f1 {
            for &e in &e2 {
                if h[(e, g)].norm() > 0.0 {
                    pairs += 1;
                    assert_eq!(h[(g, e)], h[(e, g)].conj());
                }
            }
        }
        assert_eq!(pairs, 3);
        // resonant transition: excited F'=2 sits at the F=1 ground energy (zero)
        for &e in &e2 {
            assert!(h[(e, e)].re.abs() < 1e-3);
        }
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        let s = scheme();
        let f = FieldConfig::dark(5e-4).with_laser(LaserComponent::resonant(2, 1, Polarization::Linear, 3e6));
        let h = build_hamiltonian(&s, &f).unwrap();
        assert!((h - h.adjoint()).iter().all(|z| z.norm() < 1e-9));
    }
}
