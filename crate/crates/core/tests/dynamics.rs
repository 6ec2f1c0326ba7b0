//! Dark-evolution dynamics against closed-form results.

use approx::assert_relative_eq;
use num_complex::Complex64;
use rbdecay::atom::{thermal_state, AtomConstants, LevelScheme, Term};
use rbdecay::density::DensityMatrix;
use rbdecay::dynamics::superop::RelaxationConfig;
use rbdecay::dynamics::{propagate, Dynamics, FieldConfig};

const MU_B_OVER_H: f64 = 1.399_624_493e6; // Hz/G

fn dynamics(gamma0: f64) -> Dynamics {
    let scheme = LevelScheme::new(&AtomConstants::default()).unwrap();
    Dynamics::new(scheme, RelaxationConfig::new(gamma0, 0.0).unwrap())
}

fn idx(d: &Dynamics, term: Term, f: i32, m: i32) -> usize {
    d.scheme().index_of(term, f, m).unwrap()
}

/// ½(|−1⟩+|+1⟩)(⟨−1|+⟨+1|) in F=2 mixed with the thermal state.
fn coherent_state(d: &Dynamics) -> DensityMatrix {
    let (a, b) = (idx(d, Term::Ground, 2, -1), idx(d, Term::Ground, 2, 1));
    let mut amps = [Complex64::new(0.0, 0.0); 16];
    amps[a] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    amps[b] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    DensityMatrix::pure(&amps).add_scaled(&thermal_state(d.scheme()), 0.6, 0.4)
}

#[test]
fn uniform_relaxation_is_a_single_exponential_towards_thermal() {
    let d = dynamics(50.0);
    let rho0 = coherent_state(&d);
    let th = thermal_state(d.scheme());
    let l = d.liouvillian(&FieldConfig::dark(0.0)).unwrap();
    for t in [1e-3, 1e-2, 5e-2] {
        let rho = propagate(&rho0, &l, t).unwrap();
        let expect = th.add_scaled(&rho0.add_scaled(&th, 1.0, -1.0), 1.0, (-50.0 * t).exp());
        assert!(rho.max_abs_diff(&expect) < 1e-10, "t = {t}: {:e}", rho.max_abs_diff(&expect));
    }
}

#[test]
fn delta_m_two_coherence_precesses_at_twice_the_larmor_rate() {
    let d = dynamics(0.0);
    let b = 1e-3;
    let (a, c) = (idx(&d, Term::Ground, 2, -1), idx(&d, Term::Ground, 2, 1));
    let rho0 = coherent_state(&d);
    let l = d.liouvillian(&FieldConfig::dark(b)).unwrap();
    // g_F(F=2) ≈ g_J/4 when the nuclear moment is neglected
    let g_f = AtomConstants::default().g_j_ground / 4.0;
    let omega = 2.0 * std::f64::consts::TAU * g_f * MU_B_OVER_H * b;
    let t = 1e-4;
    let rho = propagate(&rho0, &l, t).unwrap();
    let z = rho.get(a, c) / rho0.get(a, c);
    assert_relative_eq!(z.norm(), 1.0, epsilon = 1e-12);
    assert_relative_eq!(z.arg().abs(), omega * t, max_relative = 2e-3);
    // populations do not move
    for k in 0..8 {
        assert!((rho.population(k) - rho0.population(k)).abs() < 1e-14);
    }
}

#[test]
fn stretched_excited_level_decays_with_the_dipole_branching_ratios() {
    let d = dynamics(0.0);
    let e = idx(&d, Term::Excited, 2, 2);
    let mut rho0 = DensityMatrix::zeros();
    rho0.set(e, e, 1.0);
    let l = d.liouvillian(&FieldConfig::dark(0.0)).unwrap();
    let gamma = std::f64::consts::TAU * 5.746e6;
    let t = 20e-9;
    let rho = propagate(&rho0, &l, t).unwrap();
    assert_relative_eq!(rho.population(e), (-gamma * t).exp(), max_relative = 1e-9);
    assert_relative_eq!(rho.trace(), 1.0, epsilon = 1e-12);
    let done = propagate(&rho0, &l, 5e-6).unwrap();
    // |F'=2, m=2⟩ → |1,1⟩ : |2,1⟩ : |2,2⟩ = 1/2 : 1/6 : 1/3
    for (f, m, w) in [(1, 1, 0.5), (2, 1, 1.0 / 6.0), (2, 2, 1.0 / 3.0)] {
        assert_relative_eq!(done.population(idx(&d, Term::Ground, f, m)), w, epsilon = 1e-12);
    }
}
