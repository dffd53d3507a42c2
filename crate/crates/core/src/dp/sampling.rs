use std::f64::consts::PI;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type NoiseRng = ChaCha8Rng;

pub fn noise_rng(seed: u64) -> NoiseRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform in `[0, 1)` from the top 53 bits of one `u64`.
pub fn unit_f64<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Inverse CDF of Laplace(0, b) at `u` in `(-1/2, 1/2)`.
pub fn laplace_from_uniform(u: f64, b: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

pub fn sample_laplace<R: RngCore + ?Sized>(rng: &mut R, b: f64) -> f64 {
    loop {
        let u = unit_f64(rng) - 0.5;
        // u = -1/2 maps to an infinite draw.
        if u > -0.5 {
            return laplace_from_uniform(u, b);
        }
    }
}

/// Box-Muller cosine branch: `u1` in `(0, 1]`, `u2` in `[0, 1)`.
pub fn gaussian_from_uniforms(u1: f64, u2: f64, sigma: f64) -> f64 {
    sigma * (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// One Normal(0, sigma^2) draw; consumes exactly two `u64`s.
pub fn sample_gaussian<R: RngCore + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    let u1 = 1.0 - unit_f64(rng);
    let u2 = unit_f64(rng);
    gaussian_from_uniforms(u1, u2, sigma)
}

pub fn laplace_density(x: f64, center: f64, b: f64) -> f64 {
    (-(x - center).abs() / b).exp() / (2.0 * b)
}
