//! Laplace and Gaussian mechanisms over token histograms, with sequential
//! budget accounting.
//!
//! Noise is drawn from [`NoiseRng`] (ChaCha8 from `rand_chacha` 0.3, seeded with
//! `seed_from_u64`). Uniforms are built from the top 53 bits of `next_u64`, so
//! every draw is bit-stable across platforms for a given seed.

mod ledger;
mod perturb;
mod sampling;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ledger::{BudgetLedger, LedgerEntry};
pub use perturb::{perturb_histogram, perturb_histogram_with, NoisyHistogram};
pub use sampling::{
    gaussian_from_uniforms, laplace_density, laplace_from_uniform, noise_rng, sample_gaussian,
    sample_laplace, unit_f64, NoiseRng,
};

/// Per-document token cap used for the default sensitivity bound.
pub const DEFAULT_DOC_TOKEN_CAP: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DpError {
    #[error("epsilon must be positive and finite, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("delta must lie in (0, 1) for the Gaussian mechanism, got {0}")]
    InvalidDelta(f64),
    #[error("epsilon {0} is outside (0, 1], where the classical Gaussian calibration holds")]
    EpsilonOutOfRange(f64),
    #[error("operation requires the {expected:?} mechanism, params use {actual:?}")]
    InvalidMechanism {
        expected: Mechanism,
        actual: Mechanism,
    },
    #[error("sensitivity must satisfy 0 < l2 <= l1, got l1={l1}, l2={l2}")]
    InvalidSensitivity { l1: f64, l2: f64 },
    #[error("histogram has no cells to perturb")]
    EmptyHistogram,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    Laplace,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    pub epsilon: f64,
    /// Only meaningful for the Gaussian mechanism.
    pub delta: f64,
    pub mechanism: Mechanism,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta: f64, mechanism: Mechanism) -> Result<Self, DpError> {
        let params = PrivacyParams {
            epsilon,
            delta,
            mechanism,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn laplace(epsilon: f64) -> Result<Self, DpError> {
        Self::new(epsilon, 0.0, Mechanism::Laplace)
    }

    pub fn gaussian(epsilon: f64, delta: f64) -> Result<Self, DpError> {
        Self::new(epsilon, delta, Mechanism::Gaussian)
    }

    pub fn validate(&self) -> Result<(), DpError> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(DpError::NonPositiveEpsilon(self.epsilon));
        }
        let delta_ok = match self.mechanism {
            Mechanism::Laplace => (0.0..1.0).contains(&self.delta),
            Mechanism::Gaussian => self.delta > 0.0 && self.delta < 1.0,
        };
        if !delta_ok {
            return Err(DpError::InvalidDelta(self.delta));
        }
        Ok(())
    }
}

/// L1 and L2 sensitivity of the released statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityBound {
    pub l1: f64,
    pub l2: f64,
}

impl SensitivityBound {
    pub fn new(l1: f64, l2: f64) -> Result<Self, DpError> {
        let s = SensitivityBound { l1, l2 };
        s.validate()?;
        Ok(s)
    }

    /// Neighbours differ by one document clipped to `cap` tokens: it moves at
    /// most `cap` units of L1 mass and at most `sqrt(cap)` of L2 mass.
    pub fn for_document_cap(cap: usize) -> Self {
        let cap = cap.max(1) as f64;
        SensitivityBound {
            l1: cap,
            l2: cap.sqrt(),
        }
    }

    pub fn validate(&self) -> Result<(), DpError> {
        let ok = self.l1.is_finite() && self.l2 > 0.0 && self.l2 <= self.l1;
        if ok {
            Ok(())
        } else {
            Err(DpError::InvalidSensitivity {
                l1: self.l1,
                l2: self.l2,
            })
        }
    }
}

impl Default for SensitivityBound {
    fn default() -> Self {
        Self::for_document_cap(DEFAULT_DOC_TOKEN_CAP)
    }
}

/// Laplace scale `b = l1 / epsilon`.
pub fn laplace_scale(params: &PrivacyParams, sens: &SensitivityBound) -> Result<f64, DpError> {
    if params.mechanism != Mechanism::Laplace {
        return Err(DpError::InvalidMechanism {
            expected: Mechanism::Laplace,
            actual: params.mechanism,
        });
    }
    if !(params.epsilon > 0.0 && params.epsilon.is_finite()) {
        return Err(DpError::NonPositiveEpsilon(params.epsilon));
    }
    sens.validate()?;
    Ok(sens.l1 / params.epsilon)
}

/// Classical Gaussian calibration `sigma = l2 * sqrt(2 ln(1.25 / delta)) / epsilon`,
/// valid for `epsilon <= 1`.
pub fn gaussian_sigma(params: &PrivacyParams, sens: &SensitivityBound) -> Result<f64, DpError> {
    if params.mechanism != Mechanism::Gaussian {
        return Err(DpError::InvalidMechanism {
            expected: Mechanism::Gaussian,
            actual: params.mechanism,
        });
    }
    if !(params.epsilon > 0.0 && params.epsilon.is_finite()) {
        return Err(DpError::NonPositiveEpsilon(params.epsilon));
    }
    if !(params.delta > 0.0 && params.delta < 1.0) {
        return Err(DpError::InvalidDelta(params.delta));
    }
    if params.epsilon > 1.0 {
        return Err(DpError::EpsilonOutOfRange(params.epsilon));
    }
    sens.validate()?;
    Ok(sens.l2 * (2.0 * (1.25 / params.delta).ln()).sqrt() / params.epsilon)
}
