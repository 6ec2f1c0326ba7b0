//! Atomic constants for the 87Rb D1 line.
//!
//! The shipped defaults are reference values for 87Rb:
//! ground hyperfine splitting 6 834 682 610.904 Hz, 5P1/2 hyperfine splitting
//! 814.5 MHz, natural D1 linewidth 5.746 MHz (FWHM, Hz), g_J(5S1/2) = 2.00233113,
//! g_J(5P1/2) = 0.666, I = 3/2.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constant set in Hz / dimensionless units, as stored in a constants file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConstants {
    pub hyperfine_ground_hz: f64,
    pub hyperfine_excited_hz: f64,
    pub gamma_natural_hz: f64,
    #[serde(rename = "gJ_ground")]
    pub g_j_ground: f64,
    #[serde(rename = "gJ_excited")]
    pub g_j_excited: f64,
    pub nuclear_spin: f64,
}

impl Default for AtomConstants {
    fn default() -> Self {
        Self {
            hyperfine_ground_hz: 6_834_682_610.904,
            hyperfine_excited_hz: 814.5e6,
            gamma_natural_hz: 5.746e6,
            g_j_ground: 2.002_331_13,
            g_j_excited: 0.666,
            nuclear_spin: 1.5,
        }
    }
}

impl AtomConstants {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("hyperfine_ground_hz", self.hyperfine_ground_hz),
            ("hyperfine_excited_hz", self.hyperfine_excited_hz),
            ("gamma_natural_hz", self.gamma_natural_hz),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConstants(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.g_j_ground.is_finite() || !self.g_j_excited.is_finite() {
            return Err(Error::InvalidConstants("g_J factors must be finite".into()));
        }
        if self.nuclear_spin != 1.5 {
            return Err(Error::InvalidConstants(format!(
                "nuclear_spin must be 3/2 for the 16-level 87Rb D1 scheme, got {}",
                self.nuclear_spin
            )));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let c: AtomConstants = toml::from_str(text).map_err(|e| crate::config::toml_error(text, e))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("constants serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_text() {
        let c = AtomConstants::default();
        let back = AtomConstants::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn rejects_non_positive() {
        let mut c = AtomConstants::default();
        c.gamma_natural_hz = 0.0;
        assert!(c.validate().is_err());
        let mut c = AtomConstants::default();
        c.hyperfine_excited_hz = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn rejects_unknown_key() {
        let text = format!("{}\nextra_hz = 1.0\n", AtomConstants::default().to_toml_string());
        assert!(AtomConstants::from_toml_str(&text).is_err());
    }
}
