//! Column-stacked superoperators: vec(AXB) = (Bᵀ ⊗ A)·vec(X), with vec index
//! of ρ_ij equal to j·16 + i.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fields::FieldConfig;
use crate::atom::{LevelScheme, SphericalComponent, Term, N_GROUND, N_LEVELS};
use crate::density::{Matrix16, LIOUVILLE_DIM};
use crate::error::{Error, Result};

/// Pressure-broadening coefficient of Rb D1 in neon, HWHM per torr (Hz/Torr).
/// Reference value 9.84 MHz/Torr FWHM.
pub const NE_BROADENING_HWHM_HZ_PER_TORR: f64 = 0.5 * 9.84e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxationConfig {
    /// Uniform, non-spin-preserving ground relaxation rate γ₀ (s⁻¹).
    pub gamma0: f64,
    /// Extra optical-coherence decay Γ_p from buffer-gas collisions (rad/s).
    pub gamma_pressure: f64,
}

impl RelaxationConfig {
    pub fn new(gamma0: f64, gamma_pressure: f64) -> Result<Self> {
        let r = Self { gamma0, gamma_pressure };
        r.validate()?;
        Ok(r)
    }

    /// Γ_p for a given neon pressure.
    pub fn neon_broadening(pressure_torr: f64) -> f64 {
        crate::consts::TWO_PI * NE_BROADENING_HWHM_HZ_PER_TORR * pressure_torr
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("gamma0", self.gamma0), ("gamma_pressure", self.gamma_pressure)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Constraint {
                    name: name.into(),
                    message: format!("rate must be >= 0, got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// A 256×256 complex superoperator.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    m: DMatrix<Complex64>,
}

impl Default for Superoperator {
    fn default() -> Self {
        Self::zeros()
    }
}

impl Superoperator {
    pub fn zeros() -> Self {
        Self {
            m: DMatrix::zeros(LIOUVILLE_DIM, LIOUVILLE_DIM),
        }
    }

    pub fn from_matrix(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != LIOUVILLE_DIM || m.ncols() != LIOUVILLE_DIM {
            return Err(Error::DimensionMismatch {
                expected: LIOUVILLE_DIM,
                got: m.nrows().max(m.ncols()),
            });
        }
        Ok(Self { m })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    /// Adds c·(X ↦ A X B).
    pub fn add_sandwich(&mut self, a: &Matrix16, b: &Matrix16, c: Complex64) {
        let nz = |m: &Matrix16| -> Vec<(usize, usize, Complex64)> {
            let mut v = Vec::new();
            for j in 0..N_LEVELS {
                for i in 0..N_LEVELS {
                    if m[(i, j)] != Complex64::new(0.0, 0.0) {
                        v.push((i, j, m[(i, j)]));
                    }
                }
            }
            v
        };
        let (na, nb) = (nz(a), nz(b));
        // (AXB)_ij = Σ A_ik X_kl B_lj: row j·16+i, column l·16+k
        for &(i, k, av) in &na {
            for &(l, j, bv) in &nb {
                self.m[(j * N_LEVELS + i, l * N_LEVELS + k)] += c * av * bv;
            }
        }
    }

    /// Adds the Lindblad dissipator D[L]ρ = LρL† − ½{L†L, ρ}.
    pub fn add_lindblad(&mut self, l: &Matrix16) {
        let one = Complex64::new(1.0, 0.0);
        let ld = l.adjoint();
        let ll = ld * l;
        let id = Matrix16::identity();
        self.add_sandwich(l, &ld, one);
        self.add_sandwich(&ll, &id, Complex64::new(-0.5, 0.0));
        self.add_sandwich(&id, &ll, Complex64::new(-0.5, 0.0));
    }

    pub fn add(&mut self, other: &Superoperator) {
        self.m += &other.m;
    }

    /// L·vec(ρ) reshaped back into a matrix.
    pub fn apply(&self, rho: &Matrix16) -> Matrix16 {
        let v = nalgebra::DVector::from_column_slice(rho.as_slice());
        let out = &self.m * v;
        Matrix16::from_column_slice(out.as_slice())
    }

    /// Matrix of the same map in the real Hermitian coordinates used by
    /// [`crate::density::DensityMatrix::to_real`]. Only valid for maps that
    /// preserve Hermiticity.
    pub fn to_real(&self) -> DMatrix<f64> {
        let n = N_LEVELS;
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let i_unit = Complex64::new(0.0, 1.0);
        let vec_idx = |i: usize, j: usize| j * n + i;
        // Hermitian basis element for real coordinate (i, j) as ≤ 2 vec entries
        let basis = |i: usize, j: usize| -> [(usize, Complex64); 2] {
            let z = Complex64::new(0.0, 0.0);
            if i == j {
                [(vec_idx(i, i), Complex64::new(1.0, 0.0)), (0, z)]
            } else if i < j {
                [(vec_idx(i, j), Complex64::new(r, 0.0)), (vec_idx(j, i), Complex64::new(r, 0.0))]
            } else {
                // coordinate j·16+i with j < i carries √2 Im ρ_ji
                [(vec_idx(j, i), i_unit * r), (vec_idx(i, j), -i_unit * r)]
            }
        };
        let mut out = DMatrix::<f64>::zeros(LIOUVILLE_DIM, LIOUVILLE_DIM);
        let mut col = vec![Complex64::new(0.0, 0.0); LIOUVILLE_DIM];
        for bi in 0..n {
            for bj in 0..n {
                let b = bi * n + bj;
                let terms = basis(bi, bj);
                for (p, c) in col.iter_mut().enumerate() {
                    let mut s = self.m[(p, terms[0].0)] * terms[0].1;
                    if bi != bj {
                        s += self.m[(p, terms[1].0)] * terms[1].1;
                    }
                    *c = s;
                }
                let s2 = std::f64::consts::SQRT_2;
                for i in 0..n {
                    out[(i * n + i, b)] = col[vec_idx(i, i)].re;
                    for j in i + 1..n {
                        let z = col[vec_idx(i, j)];
                        out[(i * n + j, b)] = s2 * z.re;
                        out[(j * n + i, b)] = s2 * z.im;
                    }
                }
            }
        }
        out
    }
}

/// −i[H, ·].
pub fn commutator(h: &Matrix16) -> Superoperator {
    let mut s = Superoperator::zeros();
    let id = Matrix16::identity();
    s.add_sandwich(h, &id, Complex64::new(0.0, -1.0));
    s.add_sandwich(&id, h, Complex64::new(0.0, 1.0));
    s
}

/// Spontaneous emission with total rate Γ from every excited level, split into
/// secular channels (q, F, F') so no coherence between hyperfine manifolds is
/// created by decay, plus pure dephasing Γ_p of every optical coherence.
pub fn build_optical_decay(scheme: &LevelScheme, relax: &RelaxationConfig) -> Superoperator {
    let mut s = Superoperator::zeros();
    let gamma = scheme.gamma();
    let table = scheme.transitions();
    for q in SphericalComponent::ALL {
        for fg in 1..=2 {
            for fe in 1..=2 {
                let mut l = Matrix16::zeros();
                for g in scheme.manifold(Term::Ground, fg) {
                    for e in scheme.manifold(Term::Excited, fe) {
                        let a = table.get(g, e - N_GROUND, q);
                        if a != 0.0 {
                            l[(g, e)] = Complex64::new(gamma.sqrt() * a, 0.0);
                        }
                    }
                }
                if l.iter().any(|z| z.norm() > 0.0) {
                    s.add_lindblad(&l);
                }
            }
        }
    }
    if relax.gamma_pressure > 0.0 {
        let mut p = Matrix16::zeros();
        let c = (2.0 * relax.gamma_pressure).sqrt();
        for e in N_GROUND..N_LEVELS {
            p[(e, e)] = Complex64::new(c, 0.0);
        }
        s.add_lindblad(&p);
    }
    s
}

/// γ₀·(ρ_th·Tr_g ρ − ρ_g) on the ground block.
pub fn build_uniform_relaxation(_scheme: &LevelScheme, gamma0: f64) -> Superoperator {
    let mut s = Superoperator::zeros();
    if gamma0 == 0.0 {
        return s;
    }
    let n = N_LEVELS;
    let feed = gamma0 / N_GROUND as f64;
    for k in 0..N_GROUND {
        for g in 0..N_GROUND {
            s.m[(k * n + k, g * n + g)] += Complex64::new(feed, 0.0);
        }
    }
    for i in 0..N_GROUND {
        for j in 0..N_GROUND {
            s.m[(j * n + i, j * n + i)] -= Complex64::new(gamma0, 0.0);
        }
    }
    s
}

/// Total generator of one piecewise-constant segment.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    op: Superoperator,
    real: OnceLock<DMatrix<f64>>,
    /// Fields the generator was built from.
    pub fields: FieldConfig,
    /// Whether a frozen spin-exchange term is included.
    pub with_spin_exchange: bool,
}

impl Liouvillian {
    pub fn superoperator(&self) -> &Superoperator {
        &self.op
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        self.op.matrix()
    }

    pub fn apply(&self, rho: &Matrix16) -> Matrix16 {
        self.op.apply(rho)
    }

    /// Real-coordinate form, computed once.
    pub fn real(&self) -> &DMatrix<f64> {
        self.real.get_or_init(|| self.op.to_real())
    }

    /// Largest |Σ_i L_(ii),(kl)|: trace leakage per unit input.
    pub fn trace_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for col in 0..LIOUVILLE_DIM {
            let mut s = Complex64::new(0.0, 0.0);
            for i in 0..N_LEVELS {
                s += self.op.m[(i * N_LEVELS + i, col)];
            }
            worst = worst.max(s.norm());
        }
        worst
    }
}

/// L = −i[H, ·] + Σ decay terms.
pub fn assemble_liouvillian(
    h: &Matrix16,
    terms: &[&Superoperator],
    fields: FieldConfig,
) -> Result<Liouvillian> {
    let mut op = commutator(h);
    for t in terms {
        if t.m.nrows() != LIOUVILLE_DIM || t.m.ncols() != LIOUVILLE_DIM {
            return Err(Error::DimensionMismatch {
                expected: LIOUVILLE_DIM,
                got: t.m.nrows(),
            });
        }
        op.add(t);
    }
    Ok(Liouvillian {
        op,
        real: OnceLock::new(),
        fields,
        with_spin_exchange: false,
    })
}

pub(crate) fn with_spin_exchange(mut l: Liouvillian, se: &Superoperator) -> Liouvillian {
    l.op.add(se);
    l.real = OnceLock::new();
    l.with_spin_exchange = true;
    l
}
