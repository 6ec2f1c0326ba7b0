use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_err: f64,
    pub intercept_err: f64,
    /// Cov(slope, intercept).
    pub covariance: f64,
    /// Weighted coefficient of determination.
    pub r_squared: f64,
}

/// Weighted least-squares line y = slope·x + intercept. Uncertainties are
/// scaled by the reduced χ², so only relative weights matter.
pub fn linear_fit(x: &[f64], y: &[f64], weights: Option<&[f64]>) -> Result<LinearFit> {
    let n = x.len();
    if y.len() != n || weights.is_some_and(|w| w.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if n < 3 {
        return Err(Error::Degenerate(format!("line fit needs >= 3 points, got {n}")));
    }
    let w: Vec<f64> = weights.map_or_else(|| vec![1.0; n], <[f64]>::to_vec);
    if w.iter().chain(x).chain(y).any(|v| !v.is_finite()) || w.iter().any(|&v| v <= 0.0) {
        return Err(Error::Fit("non-finite data or non-positive weight".into()));
    }
    let sw: f64 = w.iter().sum();
    let mx = w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() / sw;
    let my = w.iter().zip(y).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = (0..n).map(|i| w[i] * (x[i] - mx).powi(2)).sum();
    let sxy: f64 = (0..n).map(|i| w[i] * (x[i] - mx) * (y[i] - my)).sum();
    let syy: f64 = (0..n).map(|i| w[i] * (y[i] - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let chi2: f64 = (0..n).map(|i| w[i] * (y[i] - slope * x[i] - intercept).powi(2)).sum();
    let s2 = chi2 / (n - 2) as f64;
    let var_slope = s2 / sxx;
    let var_int = s2 * (1.0 / sw + mx * mx / sxx);
    Ok(LinearFit {
        slope,
        intercept,
        slope_err: var_slope.sqrt(),
        intercept_err: var_int.sqrt(),
        covariance: -mx * var_slope,
        r_squared: if syy > 0.0 { 1.0 - chi2 / syy } else { 1.0 },
    })
}
