//! Decay-rate fitting: exponential, double exponential and decaying sinusoid
//! by Levenberg–Marquardt, plus weighted straight-line fits.

mod linear;
pub mod lm;
mod models;

pub use linear::{linear_fit, LinearFit};
pub use lm::{covariance, jacobian, levenberg_marquardt, LmOptions, LmOutcome, Model};
pub use models::{
    fit_decaying_sinusoid, fit_decaying_sinusoid_xy, fit_double_exponential, fit_double_exponential_xy,
    fit_exponential, fit_exponential_xy, numerical_gradient, spectral_peak, DecayingSinusoid, DoubleExponential,
    Exponential, FitResult, ModelKind,
};
