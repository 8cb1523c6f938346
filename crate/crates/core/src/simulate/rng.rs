//! Seeded random streams and the samplers built on them.
//!
//! Every random quantity is drawn from a ChaCha8 stream selected by
//! `(seed, domain, index)`. Work split across threads indexes its own
//! stream, so results never depend on scheduling.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::moments::GaussianModel;
use crate::power::quantile_unchecked;

pub(crate) const DOMAIN_SPECTRUM: u64 = 1;
pub(crate) const DOMAIN_MEANS: u64 = 2;
pub(crate) const DOMAIN_ROWS: u64 = 3;
pub(crate) const DOMAIN_PAIRS: u64 = 4;

/// Random stream number `index` within `domain` for the given seed.
pub fn stream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    debug_assert!(index < 1 << 56);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((domain << 56) | index);
    rng
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for a labelled sub-task, e.g. `(dimension index, spectrum index)`.
pub fn derive_seed(seed: u64, labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(splitmix64(seed), |h, &l| splitmix64(h ^ splitmix64(l)))
}

/// Uniform on the open interval `(0, 1)`.
#[inline]
pub fn uniform_open<R: RngCore>(rng: &mut R) -> f64 {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    ((rng.next_u64() >> 11) as f64 + 0.5) * SCALE
}

/// Standard normal by inversion of the normal CDF.
#[inline]
pub fn standard_normal<R: RngCore>(rng: &mut R) -> f64 {
    quantile_unchecked(uniform_open(rng))
}

/// Natural log of a Gamma(shape, 1) variate.
///
/// Marsaglia–Tsang squeeze for `shape >= 1`; for `shape < 1` the draw is
/// `G(shape + 1) · U^(1/shape)`, kept in log space so tiny shapes do not
/// underflow before the caller sees them.
pub fn ln_gamma_variate<R: RngCore>(rng: &mut R, shape: f64) -> f64 {
    if shape < 1.0 {
        let boost = uniform_open(rng).ln() / shape;
        return ln_gamma_variate(rng, shape + 1.0) + boost;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let z = standard_normal(rng);
        let t = 1.0 + c * z;
        if t <= 0.0 {
            continue;
        }
        let v = t * t * t;
        let u = uniform_open(rng);
        if u < 1.0 - 0.0331 * z.powi(4) || u.ln() < 0.5 * z * z + d * (1.0 - v + v.ln()) {
            return (d * v).ln();
        }
    }
}

/// Gamma variate with the given shape and rate. May underflow to zero for
/// very small shapes.
pub fn gamma_variate<R: RngCore>(rng: &mut R, shape: f64, rate: f64) -> f64 {
    ln_gamma_variate(rng, shape).exp() / rate
}

/// One draw from `N(μ, diag(σ²))` written into `out`.
pub fn fill_gaussian<R: RngCore>(rng: &mut R, means: &[f64], sds: &[f64], out: &mut [f64]) {
    for ((o, &m), &s) in out.iter_mut().zip(means).zip(sds) {
        *o = m + s * standard_normal(rng);
    }
}

/// Means and standard deviations of a model, ready for [`fill_gaussian`].
pub(crate) fn model_params(model: &GaussianModel) -> (Vec<f64>, Vec<f64>) {
    (model.means().to_vec(), model.spectrum().std_devs())
}
