//! Seeded Monte Carlo sampling of Gaussian vectors and empirical cosine
//! statistics.
//!
//! Results are pure functions of their arguments. Each sampled row, pair or
//! spectrum draws from its own random stream, and parallel reductions merge
//! in a fixed order, so output is bit-identical for any thread count.

mod experiments;
pub mod rng;

pub use experiments::{
    run_case1_experiment, run_case2_experiment, run_case3_experiment, run_case3_experiment_with,
    run_norm_experiment, ExperimentResult, ExperimentRow, NormPlan, NormRow,
};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::moments::{GaussianModel, Spectrum, DEGENERATE_RATIO};
use crate::sum::{ksum, KahanSum};
use rng::{
    fill_gaussian, gamma_variate, model_params, standard_normal, stream, DOMAIN_MEANS,
    DOMAIN_PAIRS, DOMAIN_ROWS, DOMAIN_SPECTRUM,
};

/// Cap on redraws in [`sample_spectrum_gamma`].
pub const MAX_RETRIES: usize = 100;

/// Where the covariance eigenvalues come from.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumSource {
    /// All eigenvalues one.
    Isotropic,
    /// Two-stage gamma draw, see [`sample_spectrum_gamma`].
    GammaHyper,
    Explicit(Spectrum),
}

/// Where the per-axis means come from.
#[derive(Debug, Clone, PartialEq)]
pub enum MeanSource {
    Zero,
    /// Each mean drawn independently from `N(0, v)`.
    NormalWithVariance(f64),
    Explicit(Vec<f64>),
}

/// A fully specified sampling run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    pub dimension: usize,
    pub num_vectors: usize,
    pub spectrum_source: SpectrumSource,
    pub mean_source: MeanSource,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::domain("dimension must be positive"));
        }
        if self.num_vectors < 2 {
            return Err(Error::domain(format!(
                "need at least 2 vectors to form pairs, got {}",
                self.num_vectors
            )));
        }
        if let SpectrumSource::Explicit(s) = &self.spectrum_source {
            if s.len() != self.dimension {
                return Err(Error::LengthMismatch {
                    what: "explicit spectrum",
                    got: s.len(),
                    expected: self.dimension,
                });
            }
        }
        match &self.mean_source {
            MeanSource::NormalWithVariance(v) if !(*v > 0.0 && v.is_finite()) => {
                Err(Error::domain(format!(
                    "mean variance must be positive and finite, got {v}"
                )))
            }
            MeanSource::Explicit(m) if m.len() != self.dimension => Err(Error::LengthMismatch {
                what: "explicit means",
                got: m.len(),
                expected: self.dimension,
            }),
            _ => Ok(()),
        }
    }

    /// Resolves the spectrum and mean sources into a concrete model.
    pub fn model(&self) -> Result<GaussianModel> {
        self.validate()?;
        let spectrum = match &self.spectrum_source {
            SpectrumSource::Isotropic => Spectrum::isotropic(self.dimension, 1.0)?,
            SpectrumSource::GammaHyper => sample_spectrum_gamma(self.seed, self.dimension)?,
            SpectrumSource::Explicit(s) => s.clone(),
        };
        let means = match &self.mean_source {
            MeanSource::Zero => vec![0.0; self.dimension],
            MeanSource::NormalWithVariance(v) => sample_means(self.seed, self.dimension, *v),
            MeanSource::Explicit(m) => m.clone(),
        };
        GaussianModel::new(means, spectrum)
    }
}

/// `n` means drawn i.i.d. from `N(0, variance)`.
pub fn sample_means(seed: u64, n: usize, variance: f64) -> Vec<f64> {
    let mut rng = stream(seed, DOMAIN_MEANS, 0);
    let sd = variance.sqrt();
    (0..n).map(|_| sd * standard_normal(&mut rng)).collect()
}

/// Spectrum drawn in two stages: shape and rate hyperparameters from
/// Gamma(shape 1, rate 2), then `n` eigenvalues from Gamma(shape, rate).
///
/// An eigenvalue that underflows to zero or lands below the degenerate
/// floor relative to the largest is redrawn, at most [`MAX_RETRIES`] times
/// per entry. If an entry exhausts its retries the hyperparameters are
/// redrawn, also at most [`MAX_RETRIES`] times.
pub fn sample_spectrum_gamma(seed: u64, n: usize) -> Result<Spectrum> {
    if n == 0 {
        return Err(Error::domain("spectrum dimension must be positive"));
    }
    let mut rng = stream(seed, DOMAIN_SPECTRUM, 0);
    'hyper: for _ in 0..=MAX_RETRIES {
        let shape = gamma_variate(&mut rng, 1.0, 2.0);
        let rate = gamma_variate(&mut rng, 1.0, 2.0);
        if !(shape > 0.0 && rate > 0.0) {
            continue;
        }
        let mut draw = || {
            let v = gamma_variate(&mut rng, shape, rate);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        };
        let mut values: Vec<f64> = (0..n).map(|_| draw()).collect();
        let mut retries = vec![0usize; n];
        loop {
            let floor = DEGENERATE_RATIO * values.iter().copied().fold(0.0, f64::max);
            let mut clean = true;
            for (v, r) in values.iter_mut().zip(retries.iter_mut()) {
                while *v < floor || *v == 0.0 {
                    if *r == MAX_RETRIES {
                        continue 'hyper;
                    }
                    *r += 1;
                    clean = false;
                    *v = draw();
                }
            }
            if clean {
                return Spectrum::new(values);
            }
        }
    }
    Err(Error::domain(format!(
        "gamma spectrum of dimension {n} stayed degenerate after {MAX_RETRIES} hyperparameter draws"
    )))
}

/// Sample matrix with one model draw per row; row `i` uses stream `i`.
pub fn sample_rows(model: &GaussianModel, num_vectors: usize, seed: u64) -> Matrix {
    let n = model.dim();
    let (means, sds) = model_params(model);
    let mut data = vec![0.0; num_vectors * n];
    data.par_chunks_mut(n.max(1))
        .enumerate()
        .for_each(|(i, row)| {
            let mut rng = stream(seed, DOMAIN_ROWS, i as u64);
            fill_gaussian(&mut rng, &means, &sds, row);
        });
    Matrix::from_vec(num_vectors, n, data).expect("buffer sized to shape")
}

/// `num_vectors × dimension` matrix of i.i.d. rows from the configured model.
pub fn sample_gaussian_matrix(config: &SimConfig) -> Result<Matrix> {
    let model = config.model()?;
    Ok(sample_rows(&model, config.num_vectors, config.seed))
}

/// Statistics of cosine similarity over all unordered row pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineStats {
    pub mean: f64,
    /// Unbiased (`1/(m − 1)`) sample variance over the `m` pair values.
    pub variance: f64,
    pub num_pairs: u64,
}

/// Squared Euclidean norm of every row; errors on the first zero row.
pub fn row_norms_sq(matrix: &Matrix) -> Result<Vec<f64>> {
    matrix
        .row_iter()
        .enumerate()
        .map(|(i, row)| {
            let nsq = dot(row, row);
            if nsq > 0.0 && nsq.is_finite() {
                Ok(nsq)
            } else {
                Err(Error::ZeroNormRow(i))
            }
        })
        .collect()
}

/// Cosine similarity of every pair `i < j`, in row-major pair order.
pub fn all_pair_cosines(matrix: &Matrix) -> Result<Vec<f64>> {
    let m = matrix.rows();
    if m < 2 {
        return Err(Error::domain(format!("need at least 2 rows, got {m}")));
    }
    let norms = row_norms_sq(matrix)?;
    let chunks: Vec<Vec<f64>> = (0..m - 1)
        .into_par_iter()
        .map(|i| {
            let a = matrix.row(i);
            (i + 1..m)
                .map(|j| {
                    let c = dot(a, matrix.row(j)) / (norms[i] * norms[j]).sqrt();
                    c.clamp(-1.0, 1.0)
                })
                .collect()
        })
        .collect();
    Ok(chunks.concat())
}

/// Mean and unbiased variance with a compensated two-pass sum.
pub fn mean_and_variance(values: &[f64]) -> Result<(f64, f64)> {
    let m = values.len();
    if m < 2 {
        return Err(Error::domain(format!("need at least 2 values, got {m}")));
    }
    let mean = ksum(values.iter().copied()) / m as f64;
    let ss: KahanSum = values.iter().map(|x| (x - mean) * (x - mean)).collect();
    Ok((mean, ss.value() / (m - 1) as f64))
}

/// Mean and variance of cosine similarity over all unordered row pairs.
pub fn empirical_cosine_stats(matrix: &Matrix) -> Result<CosineStats> {
    let cosines = all_pair_cosines(matrix)?;
    let (mean, variance) = mean_and_variance(&cosines)?;
    Ok(CosineStats {
        mean,
        variance,
        num_pairs: cosines.len() as u64,
    })
}

/// Cosine similarity of `pairs` independent pairs `(A, B)` drawn from `model`.
/// Unlike the all-pairs values these are i.i.d., which goodness-of-fit tests need.
pub fn independent_pair_cosines(model: &GaussianModel, pairs: usize, seed: u64) -> Vec<f64> {
    pair_map(model, pairs, seed, |a, b| {
        (dot(a, b) / (dot(a, a) * dot(b, b)).sqrt()).clamp(-1.0, 1.0)
    })
}

/// Mean squared gap between cosine similarity and the rescaled dot product
/// `AᵀB / E|X|²` over `pairs` independent pairs.
pub fn cos_hat_gap(model: &GaussianModel, pairs: usize, seed: u64) -> f64 {
    let total = model.spectrum().eigenvalues().iter().sum::<f64>()
        + model.means().iter().map(|m| m * m).sum::<f64>();
    let gaps = pair_map(model, pairs, seed, |a, b| {
        let ab = dot(a, b);
        let cos = ab / (dot(a, a) * dot(b, b)).sqrt();
        let d = cos - ab / total;
        d * d
    });
    ksum(gaps) / pairs as f64
}

fn pair_map<F>(model: &GaussianModel, pairs: usize, seed: u64, f: F) -> Vec<f64>
where
    F: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    let n = model.dim();
    let (means, sds) = model_params(model);
    (0..pairs)
        .into_par_iter()
        .map_init(
            || (vec![0.0; n], vec![0.0; n]),
            |(a, b), k| {
                let mut rng = stream(seed, DOMAIN_PAIRS, k as u64);
                fill_gaussian(&mut rng, &means, &sds, a);
                fill_gaussian(&mut rng, &means, &sds, b);
                f(a, b)
            },
        )
        .collect()
}

/// Sample Pearson correlation of two equal-length lists.
pub fn pearson_correlation(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            what: "second list",
            got: ys.len(),
            expected: xs.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::domain("pearson correlation needs at least 2 points"));
    }
    let n = xs.len() as f64;
    let mx = ksum(xs.iter().copied()) / n;
    let my = ksum(ys.iter().copied()) / n;
    let mut sxy = KahanSum::new();
    let mut sxx = KahanSum::new();
    let mut syy = KahanSum::new();
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy.add(dx * dy);
        sxx.add(dx * dx);
        syy.add(dy * dy);
    }
    if !(sxx.value() > 0.0) || !(syy.value() > 0.0) {
        return Err(Error::domain(
            "pearson correlation undefined for a constant list",
        ));
    }
    Ok((sxy.value() / (sxx.value().sqrt() * syy.value().sqrt())).clamp(-1.0, 1.0))
}
