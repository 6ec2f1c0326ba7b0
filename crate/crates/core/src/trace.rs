use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sampled absorption vs. time with run metadata.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DecayTrace {
    pub time: Vec<f64>,
    pub alpha_raw: Vec<f64>,
    pub alpha_norm: Vec<f64>,
    pub metadata: BTreeMap<String, String>,
}

/// Minimum sample count for any fit.
pub const MIN_FIT_SAMPLES: usize = 8;

impl DecayTrace {
    pub fn new(time: Vec<f64>, alpha_raw: Vec<f64>, alpha_norm: Vec<f64>) -> Result<Self> {
        let t = Self {
            time,
            alpha_raw,
            alpha_norm,
            metadata: BTreeMap::new(),
        };
        t.validate()?;
        Ok(t)
    }

    /// Trace from normalized values only (raw set equal to them).
    pub fn from_normalized(time: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        Self::new(time, y.clone(), y)
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha_raw.len() != self.time.len() || self.alpha_norm.len() != self.time.len() {
            return Err(Error::InvalidTrace(format!(
                "array lengths differ: time {}, raw {}, norm {}",
                self.time.len(),
                self.alpha_raw.len(),
                self.alpha_norm.len()
            )));
        }
        if self.time.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidTrace("time stamps must be strictly increasing".into()));
        }
        Ok(())
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    pub fn set_meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.insert(key.to_string(), value.to_string());
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.get(key).map(String::as_str)
    }

    pub fn meta_f64(&self, key: &str) -> Option<f64> {
        self.meta(key).and_then(|v| v.parse().ok())
    }

    /// Samples with t ≥ t_min, times unchanged.
    pub fn window_from(&self, t_min: f64) -> DecayTrace {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| self.time[i] >= t_min).collect();
        DecayTrace {
            time: keep.iter().map(|&i| self.time[i]).collect(),
            alpha_raw: keep.iter().map(|&i| self.alpha_raw[i]).collect(),
            alpha_norm: keep.iter().map(|&i| self.alpha_norm[i]).collect(),
            metadata: self.metadata.clone(),
        }
    }

    /// The same trace with every time stamp shifted by −t0.
    pub fn shifted(&self, t0: f64) -> DecayTrace {
        DecayTrace {
            time: self.time.iter().map(|t| t - t0).collect(),
            ..self.clone()
        }
    }
}

impl DecayTrace {
    /// A copy with Gaussian noise of standard deviation `sigma` (in normalized
    /// units) added to `alpha_norm`; `alpha_raw` gets the same noise scaled by
    /// α_ini − α_ss when the metadata records them. Same seed, same noise.
    pub fn with_noise(&self, sigma: f64, seed: u64) -> Result<DecayTrace> {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::OutOfRange(format!("noise level {sigma} must be finite and non-negative")));
        }
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::OutOfRange(format!("noise level {sigma}: {e}")))?;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let scale = match (self.meta_f64("alpha_ini"), self.meta_f64("alpha_ss")) {
            (Some(ini), Some(ss)) => ini - ss,
            _ => 1.0,
        };
        let mut out = self.clone();
        for i in 0..out.len() {
            let e = normal.sample(&mut rng);
            out.alpha_norm[i] += e;
            out.alpha_raw[i] += e * scale;
        }
        out.set_meta("noise_sigma", sigma);
        out.set_meta("noise_seed", seed);
        Ok(out)
    }
}

/// (α_m − α_ss)/(α_ini − α_ss).
pub fn normalize_trace(alpha: &[f64], alpha_ss: f64, alpha_ini: f64) -> Result<Vec<f64>> {
    let d = alpha_ini - alpha_ss;
    let scale = alpha_ini.abs().max(alpha_ss.abs());
    if !(d.abs() > 1e-12 * scale) || !d.is_finite() {
        return Err(Error::Degenerate(format!(
            "α_ini = {alpha_ini:e} and α_ss = {alpha_ss:e} are indistinguishable"
        )));
    }
    Ok(alpha.iter().map(|a| (a - alpha_ss) / d).collect())
}
