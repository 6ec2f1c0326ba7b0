//! Mean-field spin-exchange collisions.
//!
//! A collision is modeled as complete erasure of the singlet–triplet coherence
//! of the two valence electrons. The partner is a mean-field atom carrying the
//! normalized ground block of the ensemble state. Tracing the partner out, the
//! term depends on it only through its electron spin ⟨S⟩:
//!
//! Tr_B(P_s ρ_AB P_s + P_t ρ_AB P_t) = 5/8·ρ + ½{⟨S⟩·S, ρ} + ½ Σ_i S_i ρ S_i
//!                                      + i Σ_ijk ε_jik ⟨S_k⟩ S_i ρ S_j
//!
//! The erasure model transfers, on average, half of the spin-exchange phase
//! effect of a collision with σ_SE defined in the usual way (Happer), so the
//! erasure collision rate is 2·n·σ_SE·v̄_rel. With that rate the hyperfine
//! population ⟨I·S⟩ relaxes at exactly n·σ_SE·v̄_rel when ⟨S⟩ = 0.

use nalgebra::{DMatrix, SMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::atom::angular::clebsch_gordan;
use crate::atom::{LevelScheme, N_GROUND};
use crate::consts::{K_B, M_RB87};
use crate::density::{DensityMatrix, Matrix16, Matrix8};
use crate::dynamics::{propagate, Dynamics, FieldConfig, Superoperator};
use crate::error::{Error, Result};
use crate::fit::linear_fit;

/// Two-atom ground space dimension.
pub const PAIR_DIM: usize = N_GROUND * N_GROUND;

/// Mean-spin components are rounded to this grid so that states with equal
/// physics map to bit-identical generators (and hit the exponential cache).
const MEAN_SPIN_GRID: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinExchangeConfig {
    /// Cross-section σ_SE (cm²).
    pub sigma_cm2: f64,
    /// Rubidium density (cm⁻³).
    pub density_cm3: f64,
    /// Temperature (K).
    pub temperature_k: f64,
    /// Mean-field refresh interval (s); `None` uses min(0.1/γ_SE, segment).
    pub refresh_interval_s: Option<f64>,
    /// Self-consistency tolerance on max |Δρ_ij| between iterations.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SpinExchangeConfig {
    fn default() -> Self {
        Self {
            sigma_cm2: 2.05e-14,
            density_cm3: 3.8e11,
            temperature_k: 333.0,
            refresh_interval_s: None,
            tolerance: 1e-8,
            max_iterations: 50,
        }
    }
}

impl SpinExchangeConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("sigma_cm2", self.sigma_cm2),
            ("density_cm3", self.density_cm3),
            ("temperature_k", self.temperature_k),
            ("tolerance", self.tolerance),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidSpinExchange(format!("{name} must be > 0, got {v}")));
            }
        }
        if let Some(h) = self.refresh_interval_s {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::InvalidSpinExchange(format!("refresh interval must be > 0, got {h}")));
            }
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidSpinExchange("max_iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// Mean relative speed of two identical atoms, √(16 k_B T/(π m)), in cm/s.
pub fn mean_relative_speed(temperature_k: f64) -> f64 {
    100.0 * (16.0 * K_B * temperature_k / (std::f64::consts::PI * M_RB87)).sqrt()
}

/// γ_SE = n·σ_SE·v̄_rel (s⁻¹). Zero density gives zero.
pub fn se_rate(cfg: &SpinExchangeConfig) -> f64 {
    cfg.density_cm3 * cfg.sigma_cm2 * mean_relative_speed(cfg.temperature_k)
}

/// Rate of singlet–triplet erasure events, 2·γ_SE (see module docs).
pub fn erasure_rate(cfg: &SpinExchangeConfig) -> f64 {
    2.0 * se_rate(cfg)
}

/// Unitary from the uncoupled |m_S, m_I⟩ basis (index e·4 + n, m ascending,
/// electron first) to the ground |F, m_F⟩ basis: U[(g, u)] = ⟨F m_F | m_S m_I⟩.
pub fn basis_change() -> Matrix8 {
    let mut u = Matrix8::zeros();
    let mut g = 0;
    for f in 1..=2 {
        for m in -f..=f {
            for e in 0..2 {
                for n in 0..4 {
                    let ms2 = 2 * e as i32 - 1;
                    let mi2 = 2 * n as i32 - 3;
                    let c = clebsch_gordan(1, ms2, 3, mi2, 2 * f, 2 * m);
                    u[(g, e * 4 + n)] = Complex64::new(c, 0.0);
                }
            }
            g += 1;
        }
    }
    u
}

fn pauli_half() -> [SMatrix<Complex64, 2, 2>; 3] {
    let z = Complex64::new(0.0, 0.0);
    let h = Complex64::new(0.5, 0.0);
    let ih = Complex64::new(0.0, 0.5);
    // basis (m_S = −½, +½)
    [
        SMatrix::<Complex64, 2, 2>::new(z, h, h, z),
        SMatrix::<Complex64, 2, 2>::new(z, ih, -ih, z),
        SMatrix::<Complex64, 2, 2>::new(-h, z, z, h),
    ]
}

/// Electron spin S_x, S_y, S_z on the 8 ground levels in the |F, m_F⟩ basis.
pub fn electron_spin_ground() -> [Matrix8; 3] {
    let u = basis_change();
    let s = pauli_half();
    std::array::from_fn(|k| {
        let mut su = Matrix8::zeros();
        for e1 in 0..2 {
            for e2 in 0..2 {
                for n in 0..4 {
                    su[(e1 * 4 + n, e2 * 4 + n)] = s[k][(e1, e2)];
                }
            }
        }
        u * su * u.adjoint()
    })
}

/// F_z on the ground levels.
pub fn fz_ground(scheme: &LevelScheme) -> Matrix8 {
    let mut f = Matrix8::zeros();
    for g in 0..N_GROUND {
        f[(g, g)] = Complex64::new(scheme.level(g).m as f64, 0.0);
    }
    f
}

fn embed(m: &Matrix8) -> Matrix16 {
    let mut out = Matrix16::zeros();
    out.fixed_view_mut::<N_GROUND, N_GROUND>(0, 0).copy_from(m);
    out
}

/// Partner atom: normalized ground block.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldAtom {
    rho: Matrix8,
}

impl MeanFieldAtom {
    pub fn new(rho: Matrix8) -> Result<Self> {
        let t = rho.trace().re;
        if !(t > 0.0) {
            return Err(Error::InvalidSpinExchange("mean-field ground block has no population".into()));
        }
        let rho = rho / Complex64::new(t, 0.0);
        let herm = (rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > 1e-12 {
            return Err(Error::InvalidSpinExchange(format!("mean-field block not Hermitian ({herm:e})")));
        }
        let h = (rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
        let e = h.symmetric_eigenvalues().min();
        if e < -1e-9 {
            return Err(Error::PositivityViolation { min_eigenvalue: e });
        }
        Ok(Self { rho })
    }

    pub fn from_state(rho: &DensityMatrix) -> Result<Self> {
        Self::new(rho.ground_block())
    }

    pub fn thermal() -> Self {
        Self {
            rho: Matrix8::identity() / Complex64::new(N_GROUND as f64, 0.0),
        }
    }

    pub fn matrix(&self) -> &Matrix8 {
        &self.rho
    }

    pub fn mean_spin(&self) -> [f64; 3] {
        let s = electron_spin_ground();
        std::array::from_fn(|k| (s[k] * self.rho).trace().re)
    }
}

/// ρ_g ⊗ mf in the uncoupled pair basis (e_A n_A)(e_B n_B).
pub fn product_space_embed(rho_g: &DMatrix<Complex64>, mf: &MeanFieldAtom) -> Result<DMatrix<Complex64>> {
    if rho_g.nrows() != N_GROUND || rho_g.ncols() != N_GROUND {
        return Err(Error::DimensionMismatch {
            expected: N_GROUND,
            got: rho_g.nrows().max(rho_g.ncols()),
        });
    }
    let u = basis_change();
    let a = u.adjoint() * Matrix8::from_iterator(rho_g.iter().cloned()) * u;
    let b = u.adjoint() * mf.rho * u;
    Ok(DMatrix::from_fn(PAIR_DIM, PAIR_DIM, |r, c| {
        a[(r / N_GROUND, c / N_GROUND)] * b[(r % N_GROUND, c % N_GROUND)]
    }))
}

/// Singlet projector of the two electrons, identity on both nuclei.
pub fn singlet_projector() -> DMatrix<Complex64> {
    let s = pauli_half();
    let mut ss = DMatrix::<Complex64>::zeros(PAIR_DIM, PAIR_DIM);
    // S_A·S_B acts on (e_A, e_B) only
    for ea in 0..2 {
        for eb in 0..2 {
            for fa in 0..2 {
                for fb in 0..2 {
                    let mut v = Complex64::new(0.0, 0.0);
                    for k in 0..3 {
                        v += s[k][(ea, fa)] * s[k][(eb, fb)];
                    }
                    if v == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for na in 0..4 {
                        for nb in 0..4 {
                            let r = (ea * 4 + na) * N_GROUND + eb * 4 + nb;
                            let c = (fa * 4 + na) * N_GROUND + fb * 4 + nb;
                            ss[(r, c)] += v;
                        }
                    }
                }
            }
        }
    }
    DMatrix::<Complex64>::identity(PAIR_DIM, PAIR_DIM) * Complex64::new(0.25, 0.0) - ss
}

/// rate·[Tr_B(P_s ρ_AB P_s + P_t ρ_AB P_t) − ρ_g] by direct 64×64 evaluation,
/// returned in the |F, m_F⟩ basis.
pub fn se_superoperator_apply(rho_g: &Matrix8, mf: &MeanFieldAtom, rate: f64) -> Matrix8 {
    let dm = DMatrix::from_iterator(N_GROUND, N_GROUND, rho_g.iter().cloned());
    let ab = product_space_embed(&dm, mf).expect("8×8 input");
    let ps = singlet_projector();
    let pt = DMatrix::<Complex64>::identity(PAIR_DIM, PAIR_DIM) - &ps;
    let after = &ps * &ab * &ps + &pt * &ab * &pt;
    let mut reduced = Matrix8::zeros();
    for i in 0..N_GROUND {
        for j in 0..N_GROUND {
            let mut z = Complex64::new(0.0, 0.0);
            for k in 0..N_GROUND {
                z += after[(i * N_GROUND + k, j * N_GROUND + k)];
            }
            reduced[(i, j)] = z;
        }
    }
    let u = basis_change();
    (u * reduced * u.adjoint() - rho_g) * Complex64::new(rate, 0.0)
}

fn snap(x: f64) -> f64 {
    (x / MEAN_SPIN_GRID).round() * MEAN_SPIN_GRID
}

/// Spin-exchange term with a frozen partner, in closed form.
#[derive(Debug, Clone)]
pub struct SpinExchange {
    cfg: SpinExchangeConfig,
    rate: f64,
    spin: [Matrix16; 3],
}

impl SpinExchange {
    pub fn new(cfg: SpinExchangeConfig) -> Result<Self> {
        cfg.validate()?;
        let s = electron_spin_ground();
        Ok(Self {
            rate: erasure_rate(&cfg),
            cfg,
            spin: std::array::from_fn(|k| embed(&s[k])),
        })
    }

    pub fn config(&self) -> &SpinExchangeConfig {
        &self.cfg
    }

    /// γ_SE = n·σ·v̄_rel.
    pub fn gamma_se(&self) -> f64 {
        0.5 * self.rate
    }

    /// Electron spin of the normalized ground block, rounded to a fixed grid.
    pub fn mean_spin(&self, rho: &DensityMatrix) -> [f64; 3] {
        let tg = rho.ground_population();
        if tg <= 0.0 {
            return [0.0; 3];
        }
        let m = rho.matrix();
        std::array::from_fn(|k| snap((self.spin[k] * m).trace().re / tg))
    }

    /// Generator of the SE term for a partner with electron spin ⟨S⟩, acting on
    /// the ground block of the 16-level state.
    pub fn superoperator(&self, mean_spin: [f64; 3]) -> Superoperator {
        let r = self.rate;
        let c = |x: f64| Complex64::new(x, 0.0);
        let mut pg = Matrix16::zeros();
        for g in 0..N_GROUND {
            pg[(g, g)] = c(1.0);
        }
        let mut op = Superoperator::zeros();
        op.add_sandwich(&pg, &pg, c(r * (5.0 / 8.0 - 1.0)));
        let ns: Matrix16 = (0..3).fold(Matrix16::zeros(), |acc, k| acc + self.spin[k] * c(mean_spin[k]));
        if ns.iter().any(|z| z.norm() > 0.0) {
            op.add_sandwich(&ns, &pg, c(0.5 * r));
            op.add_sandwich(&pg, &ns, c(0.5 * r));
        }
        for k in 0..3 {
            op.add_sandwich(&self.spin[k], &self.spin[k], c(0.5 * r));
        }
        // i Σ ε_jik ⟨S_k⟩ S_i ρ S_j
        for (i, j, k, sign) in [
            (0, 1, 2, -1.0),
            (1, 0, 2, 1.0),
            (1, 2, 0, -1.0),
            (2, 1, 0, 1.0),
            (2, 0, 1, -1.0),
            (0, 2, 1, 1.0),
        ] {
            let v = mean_spin[k] * sign;
            if v != 0.0 {
                op.add_sandwich(&self.spin[i], &self.spin[j], Complex64::new(0.0, r * v));
            }
        }
        op
    }

    /// Refresh interval for a segment of the given length.
    pub fn refresh_interval(&self, segment: f64) -> f64 {
        let default = if self.rate > 0.0 { 0.1 / self.gamma_se() } else { segment };
        self.cfg.refresh_interval_s.unwrap_or(default).min(segment)
    }

    /// Propagates one interval with a frozen partner refreshed by midpoint
    /// predictor–corrector iteration until self-consistent.
    fn step(&self, rho: &DensityMatrix, fields: &FieldConfig, dt: f64, dynamics: &Dynamics) -> Result<DensityMatrix> {
        let s0 = self.mean_spin(rho);
        let run = |s: [f64; 3]| -> Result<DensityMatrix> {
            let l = dynamics.liouvillian_with(fields, &self.superoperator(s))?;
            propagate(rho, &l, dt)
        };
        let mut current = run(s0)?;
        let mut s_used = s0;
        let mut change = f64::INFINITY;
        for _ in 0..self.cfg.max_iterations {
            let s1 = self.mean_spin(&current);
            let mid: [f64; 3] = std::array::from_fn(|k| snap(0.5 * (s0[k] + s1[k])));
            if mid == s_used {
                return Ok(current);
            }
            let next = run(mid)?;
            change = next.max_abs_diff(&current);
            current = next;
            s_used = mid;
            if change < self.cfg.tolerance {
                return Ok(current);
            }
        }
        Err(Error::MeanFieldNotConverged {
            iterations: self.cfg.max_iterations,
            change,
        })
    }

    /// Evolves ρ through one constant-field segment, splitting it into equal
    /// refresh intervals.
    pub fn evolve(
        &self,
        rho: &DensityMatrix,
        fields: &FieldConfig,
        duration: f64,
        dynamics: &Dynamics,
    ) -> Result<DensityMatrix> {
        if duration == 0.0 {
            return Ok(rho.clone());
        }
        let h = self.refresh_interval(duration);
        let n = (duration / h - 1e-9).ceil().max(1.0) as usize;
        let dt = duration / n as f64;
        let mut out = rho.clone();
        for _ in 0..n {
            out = self.step(&out, fields, dt, dynamics)?;
        }
        Ok(out)
    }
}

/// Propagates a segment with or without spin exchange.
pub fn self_consistent_evolve(
    rho: &DensityMatrix,
    fields: &FieldConfig,
    duration: f64,
    dynamics: &Dynamics,
    se: Option<&SpinExchange>,
) -> Result<DensityMatrix> {
    match se {
        Some(se) if se.rate > 0.0 => se.evolve(rho, fields, duration, dynamics),
        _ => {
            let l = dynamics.liouvillian(fields)?;
            propagate(rho, &l, duration)
        }
    }
}

/// σ_SE from (density, rate, rate uncertainty) triples: weighted linear fit of
/// γ vs n, σ = slope/v̄_rel(T). Returns (σ, δσ, intercept, δintercept).
pub fn extract_cross_section(points: &[(f64, f64, f64)], temperature_k: f64) -> Result<CrossSection> {
    if points.len() < 3 {
        return Err(Error::Degenerate(format!("need >= 3 density points, got {}", points.len())));
    }
    let x: Vec<f64> = points.iter().map(|p| p.0).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let w: Vec<f64> = points
        .iter()
        .map(|p| if p.2 > 0.0 { 1.0 / (p.2 * p.2) } else { 1.0 })
        .collect();
    let fit = linear_fit(&x, &y, Some(&w))?;
    if fit.slope <= 0.0 {
        return Err(Error::Fit(format!("non-positive slope {:e}", fit.slope)));
    }
    let v = mean_relative_speed(temperature_k);
    Ok(CrossSection {
        sigma_cm2: fit.slope / v,
        sigma_err_cm2: fit.slope_err / v,
        intercept: fit.intercept,
        intercept_err: fit.intercept_err,
        r_squared: fit.r_squared,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossSection {
    pub sigma_cm2: f64,
    pub sigma_err_cm2: f64,
    pub intercept: f64,
    pub intercept_err: f64,
    pub r_squared: f64,
}
