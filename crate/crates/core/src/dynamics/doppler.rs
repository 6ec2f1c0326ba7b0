use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::consts::{K_B, M_RB87};
use crate::error::{Error, Result};
use crate::trace::DecayTrace;

/// Gauss–Hermite nodes and weights for the standard normal density
/// (Golub–Welsch). Weights sum to 1.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    if n <= 1 {
        return (vec![0.0], vec![1.0]);
    }
    // Jacobi matrix of the probabilists' Hermite polynomials
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64).sqrt();
        j[(k - 1, k)] = b;
        j[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    (
        pairs.iter().map(|p| p.0).collect(),
        pairs.iter().map(|p| p.1 / total).collect(),
    )
}

/// 1-D Maxwell velocity classes (m/s) along k̂ with their weights.
pub fn velocity_nodes(temperature: f64, n_groups: usize) -> Result<Vec<(f64, f64)>> {
    if n_groups == 0 {
        return Err(Error::OutOfRange("N_groups must be >= 1".into()));
    }
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::OutOfRange(format!("temperature must be > 0, got {temperature}")));
    }
    let sigma = (K_B * temperature / M_RB87).sqrt();
    let (x, w) = gauss_hermite(n_groups);
    Ok(x.into_iter().zip(w).map(|(x, w)| (x * sigma, w)).collect())
}

/// Weighted average of `trace_fn(v)` over the velocity distribution. Every
/// velocity class must return the same time grid. Classes are evaluated in
/// parallel and summed in node order, so the result does not depend on the
/// schedule.
pub fn doppler_average<F>(trace_fn: F, temperature: f64, n_groups: usize) -> Result<DecayTrace>
where
    F: Fn(f64) -> Result<DecayTrace> + Sync,
{
    let nodes = velocity_nodes(temperature, n_groups)?;
    let traces: Vec<DecayTrace> = nodes
        .par_iter()
        .map(|&(v, _)| trace_fn(v))
        .collect::<Result<_>>()?;
    let mut out = traces[0].clone();
    out.alpha_raw.iter_mut().for_each(|a| *a = 0.0);
    out.alpha_norm.iter_mut().for_each(|a| *a = 0.0);
    for (t, &(_, w)) in traces.iter().zip(&nodes) {
        if t.time != out.time {
            return Err(Error::InvalidTrace("velocity classes returned different time grids".into()));
        }
        for i in 0..t.len() {
            out.alpha_raw[i] += w * t.alpha_raw[i];
            out.alpha_norm[i] += w * t.alpha_norm[i];
        }
    }
    out.set_meta("doppler_groups", n_groups);
    Ok(out)
}
