use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Voigt-line first-order coherence of the laser.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceSpec {
    /// Coherence time, ns.
    pub tau_coh: f64,
    /// Central angular frequency, rad/ns. Only relative phases are observable,
    /// so this defaults to zero.
    #[serde(default)]
    pub omega0: f64,
}

impl CoherenceSpec {
    pub fn new(tau_coh: f64) -> Result<Self> {
        let spec = CoherenceSpec {
            tau_coh,
            omega0: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_coh.is_finite() && self.tau_coh > 0.0) {
            return Err(Error::config("tau_coh", "must be finite and > 0"));
        }
        if !(self.omega0.is_finite() && self.omega0 >= 0.0) {
            return Err(Error::config("omega0", "must be finite and >= 0"));
        }
        Ok(())
    }

    /// |G¹(τ)| = exp(−|τ|/τ_c − τ²/τ_c²).
    pub fn g1_abs(&self, tau: f64) -> f64 {
        let x = tau.abs() / self.tau_coh;
        (-x - x * x).exp()
    }

    /// |G¹(τ)|², the coherence of the relative phase of two independent
    /// fields with this line shape.
    pub fn g1_abs_sq(&self, tau: f64) -> f64 {
        let x = tau.abs() / self.tau_coh;
        (-2.0 * x - 2.0 * x * x).exp()
    }
}

/// G¹(τ) = exp(−|τ|/τ_c − τ²/τ_c²) · exp(−iω₀τ).
pub fn g1(coh: &CoherenceSpec, tau: f64) -> Complex64 {
    Complex64::from_polar(coh.g1_abs(tau), -coh.omega0 * tau)
}
