//! Damped Gauss–Newton with a fixed Levenberg schedule.
//!
//! The step solves (JᵀJ + λ·diag(JᵀJ))δ = −Jᵀr. λ starts at 1e-3 and is
//! multiplied by 10 after a rejected step and divided by 10 after an accepted
//! one. Iteration stops when an accepted step changes the cost by less than
//! 1e-10 relative, when the scaled gradient falls below 1e-8, or after 200
//! iterations. A residual at round-off level (exact data) also counts as
//! converged. The schedule is fixed so fits are reproducible bit for bit.

use nalgebra::{DMatrix, DVector};

/// A model y = f(t; p) with an analytic Jacobian.
pub trait Model {
    fn n_params(&self) -> usize;
    fn eval(&self, t: f64, p: &[f64]) -> f64;
    /// ∂f/∂p_k at t, written into `out`.
    fn gradient(&self, t: f64, p: &[f64], out: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub lambda0: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    pub cost_tol: f64,
    pub gradient_tol: f64,
    pub max_iterations: usize,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            lambda0: 1e-3,
            lambda_up: 10.0,
            lambda_down: 10.0,
            cost_tol: 1e-10,
            gradient_tol: 1e-8,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    /// ½ Σ r².
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// max_k |(Jᵀr)_k| / (‖r‖·‖J_k‖): cosine between residual and columns.
    pub gradient_norm: f64,
    pub message: String,
}

pub fn residuals<M: Model>(model: &M, t: &[f64], y: &[f64], p: &[f64]) -> DVector<f64> {
    DVector::from_iterator(t.len(), t.iter().zip(y).map(|(&t, &y)| model.eval(t, p) - y))
}

pub fn jacobian<M: Model>(model: &M, t: &[f64], p: &[f64]) -> DMatrix<f64> {
    let k = model.n_params();
    let mut j = DMatrix::zeros(t.len(), k);
    let mut row = vec![0.0; k];
    for (i, &ti) in t.iter().enumerate() {
        model.gradient(ti, p, &mut row);
        for c in 0..k {
            j[(i, c)] = row[c];
        }
    }
    j
}

fn scaled_gradient(j: &DMatrix<f64>, r: &DVector<f64>) -> f64 {
    let g = j.transpose() * r;
    let rn = r.norm();
    if rn == 0.0 {
        return 0.0;
    }
    (0..j.ncols())
        .map(|c| {
            let cn = j.column(c).norm();
            if cn == 0.0 {
                0.0
            } else {
                g[c].abs() / (rn * cn)
            }
        })
        .fold(0.0, f64::max)
}

pub fn levenberg_marquardt<M: Model>(model: &M, t: &[f64], y: &[f64], p0: &[f64], opts: &LmOptions) -> LmOutcome {
    let mut p = p0.to_vec();
    let mut r = residuals(model, t, y, &p);
    let mut cost = 0.5 * r.norm_squared();
    let mut lambda = opts.lambda0;
    let mut j = jacobian(model, t, &p);
    let mut grad = scaled_gradient(&j, &r);
    if !cost.is_finite() {
        return LmOutcome {
            params: p,
            cost,
            iterations: 0,
            converged: false,
            gradient_norm: grad,
            message: "non-finite residual at the initial point".into(),
        };
    }
    let floor = 1e-13 * DVector::from_column_slice(y).norm();
    for it in 1..=opts.max_iterations {
        if r.norm() <= floor {
            return LmOutcome {
                params: p,
                cost,
                iterations: it - 1,
                converged: true,
                gradient_norm: grad,
                message: "residual at round-off level".into(),
            };
        }
        if grad < opts.gradient_tol {
            return LmOutcome {
                params: p,
                cost,
                iterations: it - 1,
                converged: true,
                gradient_norm: grad,
                message: "gradient below tolerance".into(),
            };
        }
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        let mut accepted = false;
        while lambda < 1e20 {
            let mut a = jtj.clone();
            for d in 0..a.nrows() {
                a[(d, d)] += lambda * jtj[(d, d)].max(1e-300);
            }
            let step = match a.cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => {
                    lambda *= opts.lambda_up;
                    continue;
                }
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let rt = residuals(model, t, y, &trial);
            let ct = 0.5 * rt.norm_squared();
            if ct.is_finite() && ct <= cost {
                let rel = (cost - ct) / cost.max(f64::MIN_POSITIVE);
                p = trial;
                r = rt;
                cost = ct;
                lambda /= opts.lambda_down;
                j = jacobian(model, t, &p);
                grad = scaled_gradient(&j, &r);
                accepted = true;
                if rel < opts.cost_tol || cost == 0.0 {
                    return LmOutcome {
                        params: p,
                        cost,
                        iterations: it,
                        converged: true,
                        gradient_norm: grad,
                        message: "relative cost change below tolerance".into(),
                    };
                }
                break;
            }
            lambda *= opts.lambda_up;
        }
        if !accepted {
            let converged = grad < opts.gradient_tol;
            return LmOutcome {
                params: p,
                cost,
                iterations: it,
                converged,
                gradient_norm: grad,
                message: "no decreasing step at any damping".into(),
            };
        }
    }
    LmOutcome {
        params: p,
        cost,
        iterations: opts.max_iterations,
        converged: grad < opts.gradient_tol,
        gradient_norm: grad,
        message: "iteration cap reached".into(),
    }
}

/// (JᵀJ)⁻¹·SSR/(N−p); `None` when JᵀJ is singular or N ≤ p.
pub fn covariance<M: Model>(model: &M, t: &[f64], y: &[f64], p: &[f64]) -> Option<DMatrix<f64>> {
    let n = t.len();
    let k = model.n_params();
    if n <= k {
        return None;
    }
    let j = jacobian(model, t, p);
    let r = residuals(model, t, y, p);
    let jtj = j.transpose() * &j;
    // scale columns before inverting to keep the condition number honest
    let d: Vec<f64> = (0..k).map(|c| jtj[(c, c)].sqrt()).collect();
    if d.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return None;
    }
    let scaled = DMatrix::from_fn(k, k, |a, b| jtj[(a, b)] / (d[a] * d[b]));
    let svd = scaled.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-14 * smax) {
        return None;
    }
    let inv = scaled.try_inverse()?;
    let s2 = r.norm_squared() / (n - k) as f64;
    Some(DMatrix::from_fn(k, k, |a, b| inv[(a, b)] / (d[a] * d[b]) * s2))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Line;
    impl Model for Line {
        fn n_params(&self) -> usize {
            2
        }
        fn eval(&self, t: f64, p: &[f64]) -> f64 {
            p[0] + p[1] * t
        }
        fn gradient(&self, t: f64, _p: &[f64], out: &mut [f64]) {
            out[0] = 1.0;
            out[1] = t;
        }
    }

    #[test]
    fn solves_linear_problem() {
        let t: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let y: Vec<f64> = t.iter().map(|t| 1.0 + 2.0 * t).collect();
        let out = levenberg_marquardt(&Line, &t, &y, &[0.0, 0.0], &LmOptions::default());
        assert!(out.converged);
        assert!((out.params[0] - 1.0).abs() < 1e-9);
        assert!((out.params[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn covariance_of_exact_fit_is_zero() {
        let t: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let y: Vec<f64> = t.iter().map(|t| 1.0 + 2.0 * t).collect();
        let c = covariance(&Line, &t, &y, &[1.0, 2.0]).unwrap();
        assert!(c.iter().all(|v| v.abs() < 1e-20));
    }
}
