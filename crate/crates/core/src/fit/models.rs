use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use super::lm::{covariance, levenberg_marquardt, residuals, LmOptions, Model};
use crate::error::{Error, Result};
use crate::trace::{DecayTrace, MIN_FIT_SAMPLES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// A·exp(−γt) + C
    Exponential,
    /// A₁·exp(−γ₁t) + A₂·exp(−γ₂t) + C, γ₁ > γ₂
    DoubleExponential,
    /// A·exp(−γt)·sin(ωt + φ) + C
    DecayingSinusoid,
}

impl ModelKind {
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Self::Exponential => &["A", "gamma", "C"],
            Self::DoubleExponential => &["A1", "gamma1", "A2", "gamma2", "C"],
            Self::DecayingSinusoid => &["A", "gamma", "omega", "phi", "C"],
        }
    }

    pub fn eval(self, t: f64, p: &[f64]) -> f64 {
        match self {
            Self::Exponential => Exponential.eval(t, p),
            Self::DoubleExponential => DoubleExponential.eval(t, p),
            Self::DecayingSinusoid => DecayingSinusoid.eval(t, p),
        }
    }

    pub fn gradient(self, t: f64, p: &[f64], out: &mut [f64]) {
        match self {
            Self::Exponential => Exponential.gradient(t, p, out),
            Self::DoubleExponential => DoubleExponential.gradient(t, p, out),
            Self::DecayingSinusoid => DecayingSinusoid.gradient(t, p, out),
        }
    }
}

mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| if x.is_finite() { Some(*x) } else { None }))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let v: Vec<Option<f64>> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|x| x.unwrap_or(f64::NAN)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: ModelKind,
    pub params: Vec<f64>,
    /// 1-σ uncertainties; NaN (null in JSON) when the covariance is singular.
    #[serde(with = "nan_as_null")]
    pub uncertainties: Vec<f64>,
    /// RMS of the residuals in the units of the fitted values.
    pub rms_residual: f64,
    /// RMS residual divided by the peak-to-peak range of the data.
    pub relative_rms: f64,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub message: String,
}

impl FitResult {
    pub fn param(&self, name: &str) -> Option<f64> {
        let i = self.model.param_names().iter().position(|n| *n == name)?;
        Some(self.params[i])
    }

    pub fn uncertainty(&self, name: &str) -> Option<f64> {
        let i = self.model.param_names().iter().position(|n| *n == name)?;
        Some(self.uncertainties[i])
    }

    /// The decay rate: γ, γ₁ for the double exponential.
    pub fn rate(&self) -> f64 {
        self.params[1]
    }

    pub fn rate_uncertainty(&self) -> f64 {
        self.uncertainties[1]
    }

    pub fn predict(&self, t: f64) -> f64 {
        self.model.eval(t, &self.params)
    }
}

pub struct Exponential;
pub struct DoubleExponential;
pub struct DecayingSinusoid;

impl Model for Exponential {
    fn n_params(&self) -> usize {
        3
    }
    fn eval(&self, t: f64, p: &[f64]) -> f64 {
        p[0] * (-p[1] * t).exp() + p[2]
    }
    fn gradient(&self, t: f64, p: &[f64], out: &mut [f64]) {
        let e = (-p[1] * t).exp();
        out[0] = e;
        out[1] = -p[0] * t * e;
        out[2] = 1.0;
    }
}

impl Model for DoubleExponential {
    fn n_params(&self) -> usize {
        5
    }
    fn eval(&self, t: f64, p: &[f64]) -> f64 {
        p[0] * (-p[1] * t).exp() + p[2] * (-p[3] * t).exp() + p[4]
    }
    fn gradient(&self, t: f64, p: &[f64], out: &mut [f64]) {
        let e1 = (-p[1] * t).exp();
        let e2 = (-p[3] * t).exp();
        out[0] = e1;
        out[1] = -p[0] * t * e1;
        out[2] = e2;
        out[3] = -p[2] * t * e2;
        out[4] = 1.0;
    }
}

impl Model for DecayingSinusoid {
    fn n_params(&self) -> usize {
        5
    }
    fn eval(&self, t: f64, p: &[f64]) -> f64 {
        p[0] * (-p[1] * t).exp() * (p[2] * t + p[3]).sin() + p[4]
    }
    fn gradient(&self, t: f64, p: &[f64], out: &mut [f64]) {
        let e = (-p[1] * t).exp();
        let (s, c) = (p[2] * t + p[3]).sin_cos();
        out[0] = e * s;
        out[1] = -p[0] * t * e * s;
        out[2] = p[0] * e * c * t;
        out[3] = p[0] * e * c;
        out[4] = 1.0;
    }
}

fn check_trace(t: &[f64], y: &[f64]) -> Result<()> {
    if t.len() != y.len() {
        return Err(Error::InvalidTrace("time and value arrays differ in length".into()));
    }
    if t.len() < MIN_FIT_SAMPLES {
        return Err(Error::InvalidTrace(format!(
            "{} samples; at least {MIN_FIT_SAMPLES} are needed",
            t.len()
        )));
    }
    if t.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidTrace("non-finite sample".into()));
    }
    if t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidTrace("time stamps must be strictly increasing".into()));
    }
    Ok(())
}

fn peak_to_peak(y: &[f64]) -> f64 {
    let max = y.iter().cloned().fold(f64::MIN, f64::max);
    let min = y.iter().cloned().fold(f64::MAX, f64::min);
    max - min
}

fn finish<M: Model>(kind: ModelKind, model: &M, t: &[f64], y: &[f64], p0: &[f64]) -> FitResult {
    let out = levenberg_marquardt(model, t, y, p0, &LmOptions::default());
    assemble(kind, model, t, y, out.params, out.converged, out.iterations, out.gradient_norm, out.message)
}

#[allow(clippy::too_many_arguments)]
fn assemble<M: Model>(
    kind: ModelKind,
    model: &M,
    t: &[f64],
    y: &[f64],
    params: Vec<f64>,
    mut converged: bool,
    iterations: usize,
    gradient_norm: f64,
    mut message: String,
) -> FitResult {
    let r = residuals(model, t, y, &params);
    let rms = (r.norm_squared() / t.len() as f64).sqrt();
    let range = peak_to_peak(y);
    let uncertainties = match covariance(model, t, y, &params) {
        Some(c) => (0..params.len()).map(|k| c[(k, k)].max(0.0).sqrt()).collect(),
        None => {
            converged = false;
            message = format!("{message}; singular Jacobian at the optimum, parameters unidentifiable");
            vec![f64::NAN; params.len()]
        }
    };
    FitResult {
        model: kind,
        params,
        uncertainties,
        rms_residual: rms,
        relative_rms: if range > 0.0 { rms / range } else { f64::INFINITY },
        converged,
        iterations,
        gradient_norm,
        message,
    }
}

fn degenerate(kind: ModelKind, y: &[f64], why: &str) -> FitResult {
    let n = kind.param_names().len();
    let mut params = vec![0.0; n];
    params[n - 1] = y.iter().sum::<f64>() / y.len() as f64;
    let rms = (y.iter().map(|v| (v - params[n - 1]).powi(2)).sum::<f64>() / y.len() as f64).sqrt();
    FitResult {
        model: kind,
        params,
        uncertainties: vec![f64::NAN; n],
        rms_residual: rms,
        relative_rms: f64::INFINITY,
        converged: false,
        iterations: 0,
        gradient_norm: 0.0,
        message: why.to_string(),
    }
}

fn is_flat(y: &[f64]) -> bool {
    let scale = y.iter().map(|v| v.abs()).fold(0.0, f64::max);
    peak_to_peak(y) <= 1e-12 * scale.max(f64::MIN_POSITIVE)
}

/// Weighted log-linear fit of |y − C| ≈ a·exp(−γt) over samples that are
/// clearly above the baseline. Returns (a, γ) with a carrying the sign.
fn log_linear(t: &[f64], y: &[f64], c: f64) -> Option<(f64, f64)> {
    let d0 = y[0] - c;
    if d0 == 0.0 {
        return None;
    }
    let sign = d0.signum();
    let thresh = 0.05 * d0.abs();
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(y)
        .map(|(&t, &y)| (t, (y - c) * sign))
        .take_while(|&(_, d)| d > thresh)
        .map(|(t, d)| (t, d.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let gamma = -slope;
    if !(gamma > 0.0) {
        return None;
    }
    let a = sign * (my - slope * mx).exp();
    Some((a, gamma))
}

fn exponential_guess(t: &[f64], y: &[f64]) -> [f64; 3] {
    let n = y.len();
    let tail = (n / 10).max(2);
    let c = y[n - tail..].iter().sum::<f64>() / tail as f64;
    let span = t[n - 1] - t[0];
    let (a, gamma) = match log_linear(t, y, c) {
        Some((_, g)) => ((y[0] - c) * (g * t[0]).exp(), g),
        None => (y[0] - c, 3.0 / span),
    };
    [a, gamma, c]
}

/// Fit of y = A·exp(−γt) + C.
pub fn fit_exponential(trace: &DecayTrace) -> Result<FitResult> {
    fit_exponential_xy(&trace.time, &trace.alpha_norm)
}

pub fn fit_exponential_xy(t: &[f64], y: &[f64]) -> Result<FitResult> {
    check_trace(t, y)?;
    if is_flat(y) {
        return Ok(degenerate(
            ModelKind::Exponential,
            y,
            "constant trace: amplitude is zero and the rate is unidentifiable",
        ));
    }
    let p0 = exponential_guess(t, y);
    let mut fit = finish(ModelKind::Exponential, &Exponential, t, y, &p0);
    if fit.converged && !(fit.params[1] > 0.0) {
        fit.converged = false;
        fit.message = format!("non-positive rate {:e}", fit.params[1]);
    }
    Ok(fit)
}

fn order_double(p: &mut [f64]) {
    let swap = p[3] > p[1] || (p[3] == p[1] && p[2].abs() > p[0].abs());
    if swap {
        p.swap(0, 2);
        p.swap(1, 3);
    }
}

/// Fit of y = A₁·exp(−γ₁t) + A₂·exp(−γ₂t) + C with γ₁ > γ₂. Initialized by
/// peeling: the tail is fit with one exponential, subtracted, and the early
/// remainder gives the fast component. Rates closer than a factor 1.5 at
/// convergence are flagged as unidentifiable; identifiability in practice
/// needs a separation of about 3×.
pub fn fit_double_exponential(trace: &DecayTrace) -> Result<FitResult> {
    fit_double_exponential_xy(&trace.time, &trace.alpha_norm)
}

pub fn fit_double_exponential_xy(t: &[f64], y: &[f64]) -> Result<FitResult> {
    check_trace(t, y)?;
    if is_flat(y) {
        return Ok(degenerate(ModelKind::DoubleExponential, y, "constant trace: rates unidentifiable"));
    }
    let n = t.len();
    let mut best: Option<FitResult> = None;
    let mut starts = Vec::new();
    for frac in [0.5, 0.35, 0.65, 0.2] {
        let k = ((n as f64 * frac) as usize).clamp(3, n.saturating_sub(MIN_FIT_SAMPLES.min(n / 2)));
        if n - k < 4 {
            continue;
        }
        let (tt, yt) = (&t[k..], &y[k..]);
        let slow = exponential_guess(tt, yt);
        let slow = if yt.len() >= MIN_FIT_SAMPLES {
            let f = levenberg_marquardt(&Exponential, tt, yt, &slow, &LmOptions::default());
            [f.params[0], f.params[1], f.params[2]]
        } else {
            slow
        };
        let rem: Vec<f64> = t
            .iter()
            .zip(y)
            .map(|(&ti, &yi)| yi - slow[0] * (-slow[1] * ti).exp() - slow[2])
            .collect();
        let (a1, g1) = match log_linear(&t[..k.max(2)], &rem[..k.max(2)], 0.0) {
            Some((a, g)) if g > slow[1] => (a, g),
            _ => {
                let g = 5.0 * slow[1].max(1.0 / (t[n - 1] - t[0]));
                (rem[0] * (g * t[0]).exp(), g)
            }
        };
        starts.push([a1, g1, slow[0], slow[1], slow[2]]);
    }
    // fallback start: one component carries everything
    let e = exponential_guess(t, y);
    starts.push([e[0], 3.0 * e[1], 0.1 * e[0], 0.3 * e[1], e[2]]);
    for p0 in starts {
        if p0.iter().any(|v| !v.is_finite()) {
            continue;
        }
        let mut fit = finish(ModelKind::DoubleExponential, &DoubleExponential, t, y, &p0);
        order_double(&mut fit.params);
        if fit.uncertainties.len() == 5 {
            let (u0, u1) = (fit.uncertainties[0], fit.uncertainties[1]);
            if fit.params[1] != p0[1] {
                // re-derive uncertainties in the reported order
                if let Some(c) = covariance(&DoubleExponential, t, y, &fit.params) {
                    fit.uncertainties = (0..5).map(|k| c[(k, k)].max(0.0).sqrt()).collect();
                } else {
                    let _ = (u0, u1);
                }
            }
        }
        let better = match &best {
            None => true,
            Some(b) => (fit.converged && !b.converged) || (fit.converged == b.converged && fit.rms_residual < b.rms_residual),
        };
        if better {
            best = Some(fit);
        }
    }
    let mut fit = best.ok_or_else(|| Error::Fit("no usable starting point".into()))?;
    if fit.converged {
        let (g1, g2) = (fit.params[1], fit.params[3]);
        if !(g2 > 0.0) || g1 / g2 < 1.5 {
            fit.converged = false;
            fit.message = format!("rate collapse: γ₁ = {g1:e}, γ₂ = {g2:e} are not separable");
        }
    }
    Ok(fit)
}

/// Resamples onto a uniform grid by linear interpolation when needed.
fn uniform(t: &[f64], y: &[f64]) -> (f64, Vec<f64>) {
    let n = t.len();
    let dt = (t[n - 1] - t[0]) / (n - 1) as f64;
    let is_uniform = t.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-6 * dt);
    if is_uniform {
        return (dt, y.to_vec());
    }
    let mut out = Vec::with_capacity(n);
    let mut k = 0;
    for i in 0..n {
        let ti = t[0] + dt * i as f64;
        while k + 2 < n && t[k + 1] < ti {
            k += 1;
        }
        let f = ((ti - t[k]) / (t[k + 1] - t[k])).clamp(0.0, 1.0);
        out.push(y[k] + f * (y[k + 1] - y[k]));
    }
    (dt, out)
}

/// Dominant angular frequency of the mean-subtracted trace, or `None` when no
/// bin stands clear of the spectral floor.
pub fn spectral_peak(t: &[f64], y: &[f64]) -> Option<f64> {
    let (dt, yu) = uniform(t, y);
    let n = yu.len();
    let mean = yu.iter().sum::<f64>() / n as f64;
    let m = (8 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = yu.iter().map(|v| Complex::new(v - mean, 0.0)).collect();
    buf.resize(m, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let mag: Vec<f64> = buf[..m / 2].iter().map(|z| z.norm()).collect();
    let span = dt * (n - 1) as f64;
    // ignore frequencies with fewer than 1.5 cycles in the window
    let kmin = ((1.5 / span) * dt * m as f64).ceil() as usize;
    if kmin + 2 >= mag.len() {
        return None;
    }
    let (kpk, &peak) = mag[kmin..]
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, v)| (k + kmin, v))?;
    let mut sorted: Vec<f64> = mag[kmin..].to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    if !(peak > 5.0 * median) || peak == 0.0 {
        return None;
    }
    let shift = if kpk > 0 && kpk + 1 < mag.len() {
        let (a, b, c) = (mag[kpk - 1].ln(), mag[kpk].ln(), mag[kpk + 1].ln());
        let den = a - 2.0 * b + c;
        if den != 0.0 {
            0.5 * (a - c) / den
        } else {
            0.0
        }
    } else {
        0.0
    };
    let f = (kpk as f64 + shift) / (m as f64 * dt);
    Some(2.0 * PI * f)
}

/// Linear least squares for (A sin, A cos, C) at fixed γ, ω.
fn quadrature(t: &[f64], y: &[f64], gamma: f64, omega: f64) -> Option<([f64; 5], f64)> {
    let n = t.len();
    let x = DMatrix::from_fn(n, 3, |i, c| {
        let e = (-gamma * t[i]).exp();
        match c {
            0 => e * (omega * t[i]).sin(),
            1 => e * (omega * t[i]).cos(),
            _ => 1.0,
        }
    });
    let yv = DVector::from_column_slice(y);
    let sol = (x.transpose() * &x).cholesky()?.solve(&(x.transpose() * &yv));
    let r = &x * &sol - yv;
    // A sin(ωt + φ) = A cos φ sin ωt + A sin φ cos ωt
    let a = sol[0].hypot(sol[1]);
    let phi = sol[1].atan2(sol[0]);
    Some(([a, gamma, omega, phi, sol[2]], r.norm_squared()))
}

fn canonical_sinusoid(p: &mut [f64]) {
    if p[2] < 0.0 {
        // A e sin(−|ω|t + φ) = −A e sin(|ω|t − φ)
        p[2] = -p[2];
        p[3] = -p[3];
        p[0] = -p[0];
    }
    if p[0] < 0.0 {
        p[0] = -p[0];
        p[3] += PI;
    }
    p[3] = p[3].rem_euclid(2.0 * PI);
}

/// Fit of y = A·exp(−γt)·sin(ωt + φ) + C; γ is the Zeeman decoherence rate.
/// ω starts at the spectral peak, γ at the best of a log-spaced scan, and A, φ,
/// C at the quadrature projections for those.
pub fn fit_decaying_sinusoid(trace: &DecayTrace) -> Result<FitResult> {
    fit_decaying_sinusoid_xy(&trace.time, &trace.alpha_norm)
}

pub fn fit_decaying_sinusoid_xy(t: &[f64], y: &[f64]) -> Result<FitResult> {
    check_trace(t, y)?;
    let Some(omega) = spectral_peak(t, y) else {
        return Ok(degenerate(
            ModelKind::DecayingSinusoid,
            y,
            "no spectral peak above the noise floor",
        ));
    };
    let span = t[t.len() - 1] - t[0];
    let mut best: Option<([f64; 5], f64)> = None;
    let mut candidates = vec![0.0];
    for k in 0..=40 {
        candidates.push(0.1 / span * 10f64.powf(k as f64 / 20.0));
    }
    for g in candidates {
        if let Some((p, ssr)) = quadrature(t, y, g, omega) {
            if best.as_ref().map_or(true, |b| ssr < b.1) {
                best = Some((p, ssr));
            }
        }
    }
    let (p0, _) = best.ok_or_else(|| Error::Fit("quadrature projection failed".into()))?;
    let mut fit = finish(ModelKind::DecayingSinusoid, &DecayingSinusoid, t, y, &p0);
    canonical_sinusoid(&mut fit.params);
    if span * fit.params[2] < 2.0 * 2.0 * PI * 0.999 {
        fit.converged = false;
        fit.message = format!("{}; trace spans fewer than 2 oscillation periods", fit.message);
    }
    Ok(fit)
}

/// Central finite-difference Jacobian of a model, for verification.
pub fn numerical_gradient(kind: ModelKind, t: f64, p: &[f64]) -> Vec<f64> {
    (0..p.len())
        .map(|k| {
            let h = 1e-6 * p[k].abs().max(1e-3);
            let mut up = p.to_vec();
            let mut dn = p.to_vec();
            up[k] += h;
            dn[k] -= h;
            (kind.eval(t, &up) - kind.eval(t, &dn)) / (2.0 * h)
        })
        .collect()
}
