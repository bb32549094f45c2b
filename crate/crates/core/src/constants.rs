use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ambient parameters of every solve: reduced Planck constant, speed of
/// light and the Lagrange parameter `T` of the maximum-entropy density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub c: f64,
    pub temperature: f64,
}

impl PhysicalConstants {
    pub fn new(hbar: f64, c: f64, temperature: f64) -> Result<Self> {
        let k = Self { hbar, c, temperature };
        k.validate()?;
        Ok(k)
    }

    /// Natural units `hbar = c = 1` at the given `T`.
    pub fn natural(temperature: f64) -> Self {
        Self { hbar: 1.0, c: 1.0, temperature }
    }

    pub fn with_temperature(self, temperature: f64) -> Self {
        Self { temperature, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hbar.is_finite() && self.hbar > 0.0) {
            return Err(Error::InvalidInput(format!("hbar must be positive, got {}", self.hbar)));
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::InvalidInput(format!("c must be positive, got {}", self.c)));
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "T must be non-negative, got {}",
                self.temperature
            )));
        }
        Ok(())
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::natural(0.0)
    }
}
