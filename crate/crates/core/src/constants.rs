//! The constant triple `(C, β, f)` the model is tuned with.
//!
//! `C = 3^{-3/4}`, `β = exp(C)` and `f = exp((C − 1)/2)`. The two logarithmic
//! identities `ln β = C` and `2 ln f − ln β = −1` are what make the λ finite
//! parts come out as `C` and `−1`, and `27·C⁴ = 1` is what normalizes the density.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConstants {
    #[serde(rename = "C")]
    pub c: f64,
    pub beta: f64,
    pub f: f64,
}

impl Default for ModelConstants {
    fn default() -> Self {
        Self::canonical()
    }
}

impl ModelConstants {
    /// `C = 3^{-3/4}` with `β` and `f` derived from it.
    pub fn canonical() -> Self {
        Self::from_c(3f64.powf(-0.75))
    }

    /// Derive `β = exp(C)` and `f = exp((C − 1)/2)` from an arbitrary `C`.
    ///
    /// Only the canonical `C` normalizes the density; other values are useful
    /// for negative testing.
    pub fn from_c(c: f64) -> Self {
        Self { c, beta: c.exp(), f: ((c - 1.0) / 2.0).exp() }
    }

    /// Fully custom triple. Requires `C`, `β`, `f` finite with `β, f > 0`.
    pub fn custom(c: f64, beta: f64, f: f64) -> Result<Self> {
        if !(c.is_finite() && beta.is_finite() && f.is_finite()) {
            return Err(Error::domain("model constants must be finite"));
        }
        if beta <= 0.0 || f <= 0.0 {
            return Err(Error::domain(format!("beta and f must be positive (beta = {beta}, f = {f})")));
        }
        Ok(Self { c, beta, f })
    }

    /// `27·C⁴`; equals 1 for the canonical constants.
    pub fn normalization(&self) -> f64 {
        27.0 * self.c.powi(4)
    }

    /// `ln β − C`; zero when `β = exp(C)`.
    pub fn beta_log_residual(&self) -> f64 {
        self.beta.ln() - self.c
    }

    /// `2 ln f − ln β`; equals −1 when `f = exp((C − 1)/2)` and `β = exp(C)`.
    pub fn sign_log_combination(&self) -> f64 {
        2.0 * self.f.ln() - self.beta.ln()
    }

    /// `0 < f < 1 < β`.
    pub fn is_ordered(&self) -> bool {
        0.0 < self.f && self.f < 1.0 && 1.0 < self.beta
    }
}
