use serde::{Deserialize, Serialize};

use super::angular::{wigner_3j, wigner_6j};
use super::constants::AtomConstants;
use crate::consts::{LINEAR_ZEEMAN_LIMIT_GAUSS, MU_B_OVER_H_HZ_PER_GAUSS, TWO_PI};
use crate::error::{Error, Result};

pub const N_LEVELS: usize = 16;
pub const N_GROUND: usize = 8;
pub const N_EXCITED: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Term {
    /// 5S1/2
    Ground,
    /// 5P1/2
    Excited,
}

/// One magnetic sub-level. `f` and `m` are integers for 87Rb.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Level {
    pub term: Term,
    pub f: i32,
    pub m: i32,
}

impl Level {
    pub fn is_ground(&self) -> bool {
        self.term == Term::Ground
    }
}

/// Polarization component q of a photon, in the basis where absorption
/// changes m_F by q.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SphericalComponent {
    Minus,
    Pi,
    Plus,
}

impl SphericalComponent {
    pub const ALL: [SphericalComponent; 3] = [Self::Minus, Self::Pi, Self::Plus];

    pub fn q(self) -> i32 {
        match self {
            Self::Minus => -1,
            Self::Pi => 0,
            Self::Plus => 1,
        }
    }

    pub fn index(self) -> usize {
        (self.q() + 1) as usize
    }

    pub fn from_q(q: i32) -> Option<Self> {
        match q {
            -1 => Some(Self::Minus),
            0 => Some(Self::Pi),
            1 => Some(Self::Plus),
            _ => None,
        }
    }
}

/// Relative dipole amplitudes for every (ground, excited, q) triple.
///
/// Normalization: the reduced D1 matrix element ⟨J=½‖d‖J'=½⟩ is 1, so the
/// squared amplitudes out of any ground sub-level, summed over all excited
/// sub-levels and polarizations, add to 1, and the same holds for the
/// squared amplitudes into the ground term from any excited sub-level.
#[derive(Debug, Clone)]
pub struct TransitionTable {
    // [ground][excited-local][q index]
    amp: [[[f64; 3]; N_EXCITED]; N_GROUND],
}

impl TransitionTable {
    /// Amplitude for ground index `g` (0..8) and excited local index `e` (0..8).
    pub fn get(&self, g: usize, e: usize, q: SphericalComponent) -> f64 {
        self.amp[g][e][q.index()]
    }

    /// Σ_q |amp|², the spontaneous-emission branching weight e → g.
    pub fn branching(&self, g: usize, e: usize) -> f64 {
        self.amp[g][e].iter().map(|a| a * a).sum()
    }
}

/// The 16 D1 sub-levels of 87Rb with energies, g-factors and couplings.
///
/// Canonical order: ground before excited, then F ascending, then m_F
/// ascending. Index 0 is |5S, F=1, m=-1⟩ and index 15 is |5P, F'=2, m=+2⟩.
#[derive(Debug, Clone)]
pub struct LevelScheme {
    levels: Vec<Level>,
    constants: AtomConstants,
    /// Angular frequencies (rad/s).
    hyperfine_ground: f64,
    hyperfine_excited: f64,
    gamma: f64,
    g_f: [[f64; 2]; 2],
    transitions: TransitionTable,
}

impl LevelScheme {
    pub fn new(constants: &AtomConstants) -> Result<Self> {
        constants.validate()?;
        let mut levels = Vec::with_capacity(N_LEVELS);
        for term in [Term::Ground, Term::Excited] {
            for f in 1..=2 {
                for m in -f..=f {
                    levels.push(Level { term, f, m });
                }
            }
        }
        let i = constants.nuclear_spin;
        let j = 0.5;
        let lande = |g_j: f64, f: f64| {
            g_j * (f * (f + 1.0) - i * (i + 1.0) + j * (j + 1.0)) / (2.0 * f * (f + 1.0))
        };
        let g_f = [
            [lande(constants.g_j_ground, 1.0), lande(constants.g_j_ground, 2.0)],
            [lande(constants.g_j_excited, 1.0), lande(constants.g_j_excited, 2.0)],
        ];
        let mut scheme = Self {
            levels,
            constants: constants.clone(),
            hyperfine_ground: TWO_PI * constants.hyperfine_ground_hz,
            hyperfine_excited: TWO_PI * constants.hyperfine_excited_hz,
            gamma: TWO_PI * constants.gamma_natural_hz,
            g_f,
            transitions: TransitionTable {
                amp: [[[0.0; 3]; N_EXCITED]; N_GROUND],
            },
        };
        let mut amp = [[[0.0; 3]; N_EXCITED]; N_GROUND];
        for (g, row) in amp.iter_mut().enumerate() {
            for (e, cell) in row.iter_mut().enumerate() {
                let lg = scheme.levels[g];
                let le = scheme.levels[N_GROUND + e];
                for q in SphericalComponent::ALL {
                    cell[q.index()] = dipole_amplitude(&lg, &le, q);
                }
            }
        }
        scheme.transitions = TransitionTable { amp };
        Ok(scheme)
    }

    pub fn constants(&self) -> &AtomConstants {
        &self.constants
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn level(&self, index: usize) -> Level {
        self.levels[index]
    }

    pub fn index_of(&self, term: Term, f: i32, m: i32) -> Option<usize> {
        self.levels
            .iter()
            .position(|l| l.term == term && l.f == f && l.m == m)
    }

    pub fn ground_indices(&self) -> std::ops::Range<usize> {
        0..N_GROUND
    }

    pub fn excited_indices(&self) -> std::ops::Range<usize> {
        N_GROUND..N_LEVELS
    }

    /// Indices of the sub-levels of one hyperfine manifold.
    pub fn manifold(&self, term: Term, f: i32) -> Vec<usize> {
        (0..N_LEVELS)
            .filter(|&k| self.levels[k].term == term && self.levels[k].f == f)
            .collect()
    }

    /// Ground hyperfine splitting, rad/s.
    pub fn hyperfine_ground(&self) -> f64 {
        self.hyperfine_ground
    }

    /// Excited (5P1/2) hyperfine splitting, rad/s.
    pub fn hyperfine_excited(&self) -> f64 {
        self.hyperfine_excited
    }

    /// Natural linewidth Γ of the excited term, rad/s.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn g_factor(&self, term: Term, f: i32) -> f64 {
        let t = match term {
            Term::Ground => 0,
            Term::Excited => 1,
        };
        self.g_f[t][(f - 1) as usize]
    }

    /// Hyperfine energy within the level's term (rad/s): F=1 sits at zero in
    /// both terms, so ground energies are relative to the F=1 ground level.
    pub fn hyperfine_energy(&self, level: &Level) -> f64 {
        match (level.term, level.f) {
            (Term::Ground, 2) => self.hyperfine_ground,
            (Term::Excited, 2) => self.hyperfine_excited,
            _ => 0.0,
        }
    }

    /// Frequency of the F → F' hyperfine transition measured from the
    /// F=1 → F'=1 line (rad/s).
    pub fn transition_offset(&self, f_ground: i32, f_excited: i32) -> f64 {
        let e = Level {
            term: Term::Excited,
            f: f_excited,
            m: 0,
        };
        let g = Level {
            term: Term::Ground,
            f: f_ground,
            m: 0,
        };
        self.hyperfine_energy(&e) - self.hyperfine_energy(&g)
    }

    pub fn transitions(&self) -> &TransitionTable {
        &self.transitions
    }

    /// Linear Zeeman shift g_F µ_B B_z m_F / ħ in rad/s.
    pub fn zeeman_shift(&self, level: &Level, b_z_gauss: f64) -> Result<f64> {
        check_field(b_z_gauss)?;
        Ok(TWO_PI
            * self.g_factor(level.term, level.f)
            * MU_B_OVER_H_HZ_PER_GAUSS
            * b_z_gauss
            * level.m as f64)
    }
}

pub(crate) fn check_field(b_z_gauss: f64) -> Result<()> {
    if !b_z_gauss.is_finite() || b_z_gauss.abs() > LINEAR_ZEEMAN_LIMIT_GAUSS {
        return Err(Error::FieldOutOfRange {
            b_gauss: b_z_gauss,
            limit: LINEAR_ZEEMAN_LIMIT_GAUSS,
        });
    }
    Ok(())
}

fn parity(n: i32) -> f64 {
    if n.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Relative dipole amplitude for absorbing a σ_q photon on `g → e`.
///
/// ⟨F m|d|F' m'⟩ = (−1)^(F'+J+1+I) √((2F'+1)(2J+1)) {J J' 1; F' F I}
///                 × (−1)^(F'−1+m) √(2F+1) (F' 1 F; m' −q −m)
///
/// with the reduced D1 element set to 1 and m' = m + q. Zero for forbidden
/// pairs and when the arguments are not a ground/excited pair.
pub fn dipole_amplitude(g: &Level, e: &Level, q: SphericalComponent) -> f64 {
    if g.term != Term::Ground || e.term != Term::Excited {
        return 0.0;
    }
    let q = q.q();
    if e.m != g.m + q || (g.f - e.f).abs() > 1 {
        return 0.0;
    }
    // doubled angular momenta
    let (j2, jp2, i2) = (1, 1, 3);
    let (f2, fp2) = (2 * g.f, 2 * e.f);
    let hyperfine = parity(e.f + 1 + 2) // J + 1 + I = 3, integer for 87Rb
        * (((fp2 + 1) * (j2 + 1)) as f64).sqrt()
        * wigner_6j(j2, jp2, 2, fp2, f2, i2);
    let angular = parity(e.f - 1 + g.m)
        * ((f2 + 1) as f64).sqrt()
        * wigner_3j(fp2, 2, f2, 2 * e.m, -2 * q, -2 * g.m);
    hyperfine * angular
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn scheme() -> LevelScheme {
        LevelScheme::new(&AtomConstants::default()).unwrap()
    }

    fn lvl(term: Term, f: i32, m: i32) -> Level {
        Level { term, f, m }
    }

    #[test]
    fn sixteen_levels_in_canonical_order() {
        let s = scheme();
        assert_eq!(s.levels().len(), 16);
        assert_eq!(s.levels().iter().filter(|l| l.is_ground()).count(), 8);
        assert_eq!(s.manifold(Term::Ground, 1).len(), 3);
        assert_eq!(s.manifold(Term::Ground, 2).len(), 5);
        assert_eq!(s.manifold(Term::Excited, 1).len(), 3);
        assert_eq!(s.manifold(Term::Excited, 2).len(), 5);
        assert_eq!(s.level(0), lvl(Term::Ground, 1, -1));
        assert_eq!(s.level(3), lvl(Term::Ground, 2, -2));
        assert_eq!(s.level(8), lvl(Term::Excited, 1, -1));
        assert_eq!(s.level(15), lvl(Term::Excited, 2, 2));
        for w in s.levels().windows(2) {
            let key = |l: &Level| (l.term as u8, l.f, l.m);
            assert!(key(&w[0]) < key(&w[1]));
        }
    }

    #[test]
    fn ground_splitting_is_passed_through() {
        let c = AtomConstants::default();
        let s = LevelScheme::new(&c).unwrap();
        let e2 = s.hyperfine_energy(&lvl(Term::Ground, 2, 0));
        assert_eq!(e2, TWO_PI * c.hyperfine_ground_hz);
        assert_eq!(s.hyperfine_energy(&lvl(Term::Ground, 1, 1)), 0.0);
    }

    #[test]
    fn lande_factors() {
        let s = scheme();
        let g1 = s.g_factor(Term::Ground, 1);
        let g2 = s.g_factor(Term::Ground, 2);
        assert!(g1 * g2 < 0.0);
        assert_abs_diff_eq!(g2, 0.5, epsilon = 1e-3);
        assert_abs_diff_eq!(g1, -0.5, epsilon = 1e-3);
        // g_J = 2 exactly gives ±1/2 exactly
        let c = AtomConstants {
            g_j_ground: 2.0,
            ..AtomConstants::default()
        };
        let s = LevelScheme::new(&c).unwrap();
        assert_eq!(s.g_factor(Term::Ground, 2), 0.5);
        assert_eq!(s.g_factor(Term::Ground, 1), -0.5);
    }

    #[test]
    fn rejects_bad_constants() {
        let c = AtomConstants {
            gamma_natural_hz: -1.0,
            ..AtomConstants::default()
        };
        assert!(LevelScheme::new(&c).is_err());
        let c = AtomConstants {
            hyperfine_ground_hz: 0.0,
            ..AtomConstants::default()
        };
        assert!(LevelScheme::new(&c).is_err());
    }

    #[test]
    fn sigma_plus_weights_f1_to_f2() {
        let s = scheme();
        let w: Vec<f64> = (-1..=1)
            .map(|m| {
                let a = dipole_amplitude(
                    &lvl(Term::Ground, 1, m),
                    &lvl(Term::Excited, 2, m + 1),
                    SphericalComponent::Plus,
                );
                a * a
            })
            .collect();
        assert_abs_diff_eq!(w[0], 1.0 / 12.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w[1], 1.0 / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w[2], 1.0 / 2.0, epsilon = 1e-15);
        let _ = s;
    }

    #[test]
    fn delta_m_two_is_forbidden() {
        let a = dipole_amplitude(
            &lvl(Term::Ground, 1, 0),
            &lvl(Term::Excited, 2, 2),
            SphericalComponent::Plus,
        );
        assert_eq!(a, 0.0);
    }

    #[test]
    fn selection_rule_holds_everywhere() {
        let s = scheme();
        for g in s.ground_indices() {
            for e in s.excited_indices() {
                for q in SphericalComponent::ALL {
                    let a = s.transitions().get(g, e - N_GROUND, q);
                    if s.level(e).m != s.level(g).m + q.q() {
                        assert_eq!(a, 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn line_strength_sum_rules() {
        let s = scheme();
        let t = s.transitions();
        // every ground level carries total strength 1, every excited level
        // decays with total branching 1
        for g in 0..N_GROUND {
            let total: f64 = (0..N_EXCITED).map(|e| t.branching(g, e)).sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-14);
        }
        for e in 0..N_EXCITED {
            let total: f64 = (0..N_GROUND).map(|g| t.branching(g, e)).sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-14);
        }
        // orientation independence within each (F, F') pair
        for fg in 1..=2 {
            for fe in 1..=2 {
                let per_m: Vec<f64> = s
                    .manifold(Term::Ground, fg)
                    .into_iter()
                    .map(|g| {
                        s.manifold(Term::Excited, fe)
                            .into_iter()
                            .map(|e| t.branching(g, e - N_GROUND))
                            .sum()
                    })
                    .collect();
                for w in &per_m {
                    assert_abs_diff_eq!(*w, per_m[0], epsilon = 1e-14);
                }
            }
        }
    }

    #[test]
    fn zeeman_shift_values() {
        let s = scheme();
        let up = lvl(Term::Ground, 2, 1);
        let down = lvl(Term::Ground, 2, -1);
        assert_eq!(s.zeeman_shift(&up, 0.0).unwrap(), 0.0);
        let w = s.zeeman_shift(&up, 1e-3).unwrap();
        assert!((w / TWO_PI - 700.0).abs() < 2.0, "{}", w / TWO_PI);
        assert_abs_diff_eq!(w, -s.zeeman_shift(&down, 1e-3).unwrap(), epsilon = 1e-12);
        assert!(s.zeeman_shift(&up, 1.5).is_err());
        assert!(s.zeeman_shift(&up, -1.0).is_ok());
    }

    #[test]
    fn zeeman_manifold_sum_vanishes() {
        let s = scheme();
        for term in [Term::Ground, Term::Excited] {
            for f in 1..=2 {
                let sum: f64 = s
                    .manifold(term, f)
                    .into_iter()
                    .map(|k| s.zeeman_shift(&s.level(k), 3e-4).unwrap())
                    .sum();
                assert_abs_diff_eq!(sum, 0.0, epsilon = 1e-9);
            }
        }
    }
}
