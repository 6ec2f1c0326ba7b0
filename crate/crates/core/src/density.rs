//! Single-atom density matrix in the canonical 16-level basis.

use nalgebra::{DVector, SMatrix};
use num_complex::Complex64;

use crate::atom::{N_GROUND, N_LEVELS};
use crate::error::{Error, Result};

pub type Matrix16 = SMatrix<Complex64, N_LEVELS, N_LEVELS>;
pub type Matrix8 = SMatrix<Complex64, N_GROUND, N_GROUND>;

/// Dimension of the Liouville space.
pub const LIOUVILLE_DIM: usize = N_LEVELS * N_LEVELS;

pub const HERMITICITY_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-9;

/// Real coordinates of a Hermitian matrix: `x[i*n+i] = ρ_ii`,
/// `x[i*n+j] = √2 Re ρ_ij` and `x[j*n+i] = √2 Im ρ_ij` for i < j.
/// The map is an isometry between Hilbert-Schmidt and Euclidean norms.
pub(crate) fn hermitian_to_real<const N: usize>(m: &SMatrix<Complex64, N, N>) -> Vec<f64> {
    let s = std::f64::consts::SQRT_2;
    let mut x = vec![0.0; N * N];
    for i in 0..N {
        x[i * N + i] = m[(i, i)].re;
        for j in i + 1..N {
            let z = m[(i, j)];
            x[i * N + j] = s * z.re;
            x[j * N + i] = s * z.im;
        }
    }
    x
}

pub(crate) fn real_to_hermitian<const N: usize>(x: &[f64]) -> SMatrix<Complex64, N, N> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = SMatrix::<Complex64, N, N>::zeros();
    for i in 0..N {
        m[(i, i)] = Complex64::new(x[i * N + i], 0.0);
        for j in i + 1..N {
            let z = Complex64::new(x[i * N + j] * r, x[j * N + i] * r);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: Matrix16,
}

impl DensityMatrix {
    pub fn zeros() -> Self {
        Self { m: Matrix16::zeros() }
    }

    pub fn from_matrix(m: Matrix16) -> Self {
        Self { m }
    }

    /// Projector onto a normalized pure state.
    pub fn pure(amplitudes: &[Complex64; N_LEVELS]) -> Self {
        let v = nalgebra::SVector::<Complex64, N_LEVELS>::from_column_slice(amplitudes);
        let norm = v.norm();
        let v = v / Complex64::new(norm, 0.0);
        Self { m: v * v.adjoint() }
    }

    pub fn matrix(&self) -> &Matrix16 {
        &self.m
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.m[(i, j)]
    }

    /// Sets a real diagonal or symmetric entry.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.m[(i, j)] = Complex64::new(v, 0.0);
        self.m[(j, i)] = Complex64::new(v, 0.0);
    }

    /// Sets `ρ_ij = z` and `ρ_ji = z*`.
    pub fn set_coherence(&mut self, i: usize, j: usize, z: Complex64) {
        self.m[(i, j)] = z;
        self.m[(j, i)] = z.conj();
    }

    pub fn population(&self, i: usize) -> f64 {
        self.m[(i, i)].re
    }

    pub fn populations(&self) -> [f64; N_LEVELS] {
        std::array::from_fn(|i| self.m[(i, i)].re)
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    pub fn ground_population(&self) -> f64 {
        (0..N_GROUND).map(|i| self.m[(i, i)].re).sum()
    }

    pub fn purity(&self) -> f64 {
        (self.m * self.m).trace().re
    }

    pub fn ground_block(&self) -> Matrix8 {
        self.m.fixed_view::<N_GROUND, N_GROUND>(0, 0).into_owned()
    }

    pub fn set_ground_block(&mut self, block: &Matrix8) {
        self.m.fixed_view_mut::<N_GROUND, N_GROUND>(0, 0).copy_from(block);
    }

    /// Largest |ρ_ij − ρ_ji*|.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..N_LEVELS {
            for j in i..N_LEVELS {
                worst = worst.max((self.m[(i, j)] - self.m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (self.m + self.m.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues().min()
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        (self.m - other.m).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Checks Hermiticity, unit trace and positivity at the module tolerances.
    pub fn validate(&self) -> Result<()> {
        let h = self.hermiticity_error();
        if h > HERMITICITY_TOL {
            return Err(Error::InvalidField(format!("density matrix not Hermitian ({h:e})")));
        }
        let t = self.trace();
        if (t - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidField(format!("density matrix trace {t}")));
        }
        let e = self.min_eigenvalue();
        if e < -POSITIVITY_TOL {
            return Err(Error::PositivityViolation { min_eigenvalue: e });
        }
        Ok(())
    }

    pub fn to_real(&self) -> DVector<f64> {
        DVector::from_vec(hermitian_to_real(&self.m))
    }

    pub fn from_real(x: &DVector<f64>) -> Self {
        Self {
            m: real_to_hermitian::<N_LEVELS>(x.as_slice()),
        }
    }

    /// Column-stacked vec(ρ).
    pub fn to_vec(&self) -> DVector<Complex64> {
        DVector::from_column_slice(self.m.as_slice())
    }

    pub fn from_vec(v: &DVector<Complex64>) -> Result<Self> {
        if v.len() != LIOUVILLE_DIM {
            return Err(Error::DimensionMismatch {
                expected: LIOUVILLE_DIM,
                got: v.len(),
            });
        }
        Ok(Self {
            m: Matrix16::from_column_slice(v.as_slice()),
        })
    }

    pub(crate) fn scale(&mut self, s: f64) {
        self.m *= Complex64::new(s, 0.0);
    }

    pub fn add_scaled(&self, other: &DensityMatrix, a: f64, b: f64) -> DensityMatrix {
        DensityMatrix {
            m: self.m * Complex64::new(a, 0.0) + other.m * Complex64::new(b, 0.0),
        }
    }
}
