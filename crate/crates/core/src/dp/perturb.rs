use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{
    gaussian_sigma, laplace_scale, sample_gaussian, sample_laplace, DpError, Mechanism,
    PrivacyParams, SensitivityBound,
};
use crate::corpus::TokenHistogram;

/// A token histogram after noise, rounding and clamping at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyHistogram {
    pub counts: TokenHistogram,
    pub params_used: PrivacyParams,
    pub sensitivity_used: SensitivityBound,
}

/// Adds one independent noise draw to every cell of `hist`.
///
/// Cells are visited class by class in enum order and token-ascending within a
/// class, so the result is reproducible from the RNG seed.
pub fn perturb_histogram<R: RngCore + ?Sized>(
    hist: &TokenHistogram,
    params: &PrivacyParams,
    sens: &SensitivityBound,
    rng: &mut R,
) -> Result<NoisyHistogram, DpError> {
    match params.mechanism {
        Mechanism::Laplace => {
            let b = laplace_scale(params, sens)?;
            perturb_histogram_with(hist, params, sens, || sample_laplace(rng, b))
        }
        Mechanism::Gaussian => {
            let sigma = gaussian_sigma(params, sens)?;
            perturb_histogram_with(hist, params, sens, || sample_gaussian(rng, sigma))
        }
    }
}

/// [`perturb_histogram`] with the noise source supplied by the caller.
/// Calibration is still validated.
pub fn perturb_histogram_with(
    hist: &TokenHistogram,
    params: &PrivacyParams,
    sens: &SensitivityBound,
    mut noise: impl FnMut() -> f64,
) -> Result<NoisyHistogram, DpError> {
    match params.mechanism {
        Mechanism::Laplace => laplace_scale(params, sens).map(drop)?,
        Mechanism::Gaussian => gaussian_sigma(params, sens).map(drop)?,
    }
    if hist.cells() == 0 {
        return Err(DpError::EmptyHistogram);
    }
    let mut counts = hist.clone();
    for cells in counts.per_class.values_mut() {
        for count in cells.values_mut() {
            *count = noisy_count(*count, noise());
        }
    }
    Ok(NoisyHistogram {
        counts,
        params_used: *params,
        sensitivity_used: *sens,
    })
}

fn noisy_count(count: u64, eta: f64) -> u64 {
    let v = (count as f64 + eta).round();
    // `as` saturates, and NaN maps to 0.
    if v > 0.0 {
        v as u64
    } else {
        0
    }
}
