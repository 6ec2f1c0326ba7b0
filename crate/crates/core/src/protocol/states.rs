use num_complex::Complex64;

use crate::atom::{LevelScheme, Term, N_LEVELS};
use crate::density::{DensityMatrix, Matrix16};

/// The F=2 superpositions that the balanced σ⁺+σ⁻ light on F=2 → F'=1 leaves
/// dark (|Λ⟩, |M⟩) or drives (|Λ*⟩).
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceStates {
    pub lambda: [Complex64; N_LEVELS],
    pub m_state: [Complex64; N_LEVELS],
    pub lambda_star: [Complex64; N_LEVELS],
}

impl ReferenceStates {
    pub fn new(scheme: &LevelScheme) -> Self {
        let ket = |terms: &[(i32, f64)]| {
            let mut a = [Complex64::new(0.0, 0.0); N_LEVELS];
            for &(m, c) in terms {
                a[scheme.index_of(Term::Ground, 2, m).expect("F=2 sub-level")] = Complex64::new(c, 0.0);
            }
            a
        };
        let r2 = std::f64::consts::FRAC_1_SQRT_2;
        let r8 = 1.0 / 8f64.sqrt();
        Self {
            lambda: ket(&[(-1, r2), (1, r2)]),
            m_state: ket(&[(-2, r8), (0, 6f64.sqrt() * r8), (2, r8)]),
            lambda_star: ket(&[(-1, r2), (1, -r2)]),
        }
    }

    pub fn lambda_density(&self) -> DensityMatrix {
        DensityMatrix::pure(&self.lambda)
    }

    pub fn m_density(&self) -> DensityMatrix {
        DensityMatrix::pure(&self.m_state)
    }

    pub fn lambda_star_density(&self) -> DensityMatrix {
        DensityMatrix::pure(&self.lambda_star)
    }
}

pub fn inner(a: &[Complex64; N_LEVELS], b: &[Complex64; N_LEVELS]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// ⟨ψ|ρ|ψ⟩.
pub fn expectation(rho: &Matrix16, psi: &[Complex64; N_LEVELS]) -> f64 {
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..N_LEVELS {
        for j in 0..N_LEVELS {
            s += psi[i].conj() * rho[(i, j)] * psi[j];
        }
    }
    s.re
}

/// The F=2 ground block of ρ, normalized to unit trace and embedded in the
/// 16-level space.
pub fn normalized_f2_block(rho: &DensityMatrix, scheme: &LevelScheme) -> Option<Matrix16> {
    let idx = scheme.manifold(Term::Ground, 2);
    let tr: f64 = idx.iter().map(|&k| rho.population(k)).sum();
    if !(tr > 0.0) {
        return None;
    }
    let mut out = Matrix16::zeros();
    for &i in &idx {
        for &j in &idx {
            out[(i, j)] = rho.get(i, j) / tr;
        }
    }
    Some(out)
}

/// Dark-state content of the normalized F=2 block.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DarkStateWeights {
    pub lambda: f64,
    pub m_state: f64,
    pub lambda_star: f64,
    /// Population of the F=2 block outside span{|Λ⟩, |M⟩}.
    pub leakage: f64,
    /// Frobenius distance to ½|Λ⟩⟨Λ| + ½|M⟩⟨M|.
    pub distance_to_equal_mixture: f64,
    /// Share of the ground population in F=2.
    pub f2_population: f64,
}

pub fn dark_state_weights(rho: &DensityMatrix, scheme: &LevelScheme) -> Option<DarkStateWeights> {
    let block = normalized_f2_block(rho, scheme)?;
    let refs = ReferenceStates::new(scheme);
    let wl = expectation(&block, &refs.lambda);
    let wm = expectation(&block, &refs.m_state);
    let target = (refs.lambda_density().matrix() + refs.m_density().matrix()) * Complex64::new(0.5, 0.0);
    let f2: f64 = scheme.manifold(Term::Ground, 2).iter().map(|&k| rho.population(k)).sum();
    Some(DarkStateWeights {
        lambda: wl,
        m_state: wm,
        lambda_star: expectation(&block, &refs.lambda_star),
        leakage: 1.0 - wl - wm,
        distance_to_equal_mixture: (block - target).norm(),
        f2_population: f2 / rho.ground_population(),
    })
}

/// ρ with its F=2 block replaced: the |Λ⟩ weight is dephased (its m = ±1
/// populations kept, the coherence removed) and the rest of the block is set
/// to w_M·|M⟩⟨M|. Used to isolate the |M⟩ contribution to the oscillation.
pub fn m_only_state(rho: &DensityMatrix, scheme: &LevelScheme) -> Option<DensityMatrix> {
    let w = dark_state_weights(rho, scheme)?;
    let idx = scheme.manifold(Term::Ground, 2);
    let tr: f64 = idx.iter().map(|&k| rho.population(k)).sum();
    let refs = ReferenceStates::new(scheme);
    let mut out = rho.clone();
    for &i in &idx {
        for &j in &idx {
            out.set_coherence(i, j, Complex64::new(0.0, 0.0));
        }
        // optical coherences of F=2 are negligible in the dark; drop them
        for e in scheme.excited_indices() {
            out.set_coherence(i, e, Complex64::new(0.0, 0.0));
        }
    }
    let scale = tr / (w.lambda + w.m_state);
    let m = refs.m_density();
    for &i in &idx {
        for &j in &idx {
            let mut v = m.get(i, j) * (w.m_state * scale);
            if i == j && (scheme.level(i).m == 1 || scheme.level(i).m == -1) {
                v += Complex64::new(0.5 * w.lambda * scale, 0.0);
            }
            out.set_coherence(i, j, v);
        }
    }
    Some(out)
}
