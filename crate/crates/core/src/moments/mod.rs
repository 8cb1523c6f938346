//! Exact and asymptotic moments of cosine similarity.
//!
//! All models live in the eigenbasis of the covariance matrix: a [`Spectrum`]
//! holds the per-axis variances and a [`GaussianModel`] adds per-axis means.
//! Cosine similarity is invariant under orthogonal change of basis, so this
//! loses nothing.
//!
//! The asymptotic formulas replace each vector norm by the square root of
//! its expected squared norm. The approximation error in the variance decays
//! like `1/n` as the dimension grows, provided no single axis dominates the
//! total variance.

mod charfn;
mod special;

pub use charfn::{cf_moments, char_dot_normal, char_product_normal, char_square_normal, CfMoments};
pub use special::{ln_gamma, log_beta};

use crate::error::{Error, Result};
use crate::sum::{ksum, KahanSum};

/// Eigenvalues smaller than this fraction of the largest are treated as a
/// collapsed dimension and rejected.
pub const DEGENERATE_RATIO: f64 = 1e-12;

/// Covariance eigenvalues (per-axis variances in the diagonal basis).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
}

impl Spectrum {
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::domain("spectrum must have at least one eigenvalue"));
        }
        let mut max = 0.0f64;
        for (i, &v) in eigenvalues.iter().enumerate() {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::domain(format!(
                    "eigenvalue {i} must be finite and strictly positive, got {v}"
                )));
            }
            max = max.max(v);
        }
        if let Some(i) = eigenvalues.iter().position(|&v| v < DEGENERATE_RATIO * max) {
            return Err(Error::domain(format!(
                "eigenvalue {i} = {} is below {DEGENERATE_RATIO:e} x max eigenvalue {max}; \
                 drop the collapsed dimension first",
                eigenvalues[i]
            )));
        }
        Ok(Self { eigenvalues })
    }

    /// `n` copies of `value`.
    pub fn isotropic(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Per-axis standard deviations.
    pub fn std_devs(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|v| v.sqrt()).collect()
    }

    /// Every eigenvalue multiplied by `k > 0`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(self.eigenvalues.iter().map(|v| v * k).collect())
    }

    /// The spectrum repeated `r` times end to end.
    pub fn tiled(&self, r: usize) -> Result<Self> {
        Self::new(self.eigenvalues.repeat(r))
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.eigenvalues
    }
}

/// Diagonal-basis data model: per-axis means plus a covariance spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianModel {
    means: Vec<f64>,
    spectrum: Spectrum,
}

impl GaussianModel {
    pub fn new(means: Vec<f64>, spectrum: Spectrum) -> Result<Self> {
        if means.len() != spectrum.len() {
            return Err(Error::LengthMismatch {
                what: "means",
                got: means.len(),
                expected: spectrum.len(),
            });
        }
        if let Some(i) = means.iter().position(|m| !m.is_finite()) {
            return Err(Error::domain(format!("mean {i} is not finite")));
        }
        Ok(Self { means, spectrum })
    }

    pub fn centered(spectrum: Spectrum) -> Self {
        Self {
            means: vec![0.0; spectrum.len()],
            spectrum,
        }
    }

    /// Model with means `μᵢ = ηᵢ σᵢ`.
    pub fn from_etas(etas: &DimensionlessMeans, spectrum: Spectrum) -> Result<Self> {
        if etas.len() != spectrum.len() {
            return Err(Error::LengthMismatch {
                what: "etas",
                got: etas.len(),
                expected: spectrum.len(),
            });
        }
        let means = etas
            .values()
            .iter()
            .zip(spectrum.eigenvalues())
            .map(|(e, v)| e * v.sqrt())
            .collect();
        Self::new(means, spectrum)
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    /// Dimensionless means `ηᵢ = μᵢ / σᵢ`.
    pub fn etas(&self) -> DimensionlessMeans {
        DimensionlessMeans {
            etas: self
                .means
                .iter()
                .zip(self.spectrum.eigenvalues())
                .map(|(m, v)| m / v.sqrt())
                .collect(),
        }
    }

    /// The model repeated `r` times end to end.
    pub fn tiled(&self, r: usize) -> Result<Self> {
        Self::new(self.means.repeat(r), self.spectrum.tiled(r)?)
    }
}

/// Per-axis means in units of the per-axis standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionlessMeans {
    etas: Vec<f64>,
}

impl DimensionlessMeans {
    pub fn new(etas: Vec<f64>) -> Result<Self> {
        if let Some(i) = etas.iter().position(|e| !e.is_finite()) {
            return Err(Error::domain(format!("eta {i} is not finite")));
        }
        Ok(Self { etas })
    }

    pub fn zeros(n: usize) -> Self {
        Self { etas: vec![0.0; n] }
    }

    pub fn values(&self) -> &[f64] {
        &self.etas
    }

    pub fn len(&self) -> usize {
        self.etas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.etas.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentKind {
    /// Exact moments of the true cosine distribution.
    Exact,
    /// Moments of the norm-replaced approximation.
    AsymptoticApprox,
}

/// Mean and variance of `cos(A, B)` for `A, B` i.i.d. from a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineMoments {
    pub mean: f64,
    pub variance: f64,
    pub kind: MomentKind,
}

impl CosineMoments {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Moments of the squared norm `|X|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormMoments {
    /// `E[|X|²]`
    pub mean_sq: f64,
    /// `Var(|X|²)` for normally distributed components.
    pub var_sq: f64,
    /// Jensen upper bound on `E[|X|]`, equal to `sqrt(mean_sq)`.
    pub jensen_upper_bound_mean: f64,
}

/// Cosine similarity `aᵀb / (|a||b|)`, clamped to `[-1, 1]`.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            what: "b",
            got: b.len(),
            expected: a.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::domain("cosine of empty vectors"));
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 {
        return Err(Error::domain("cosine: first argument has zero norm"));
    }
    if nb == 0.0 {
        return Err(Error::domain("cosine: second argument has zero norm"));
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

/// Exact moments for i.i.d. standard normal vectors in `n` dimensions.
pub fn case1_moments(n: usize) -> Result<CosineMoments> {
    if n == 0 {
        return Err(Error::domain("dimension must be at least 1"));
    }
    Ok(CosineMoments {
        mean: 0.0,
        variance: 1.0 / n as f64,
        kind: MomentKind::Exact,
    })
}

/// Exact density of `cos(A, B)` for standard normal `A, B` in `n ≥ 2`
/// dimensions: `(1 − x²)^((n−3)/2) / B(1/2, (n−1)/2)` on `[-1, 1]`.
///
/// Equivalently `(1 + cos)/2 ~ Beta((n−1)/2, (n−1)/2)`. At `n = 2` the
/// density is infinite at `x = ±1`.
pub fn case1_density(x: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::domain(format!(
            "case-1 density needs n >= 2, got {n}"
        )));
    }
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("x = {x} lies outside [-1, 1]")));
    }
    let half = (n as f64 - 3.0) / 2.0;
    let ln_norm = -log_beta(0.5, (n as f64 - 1.0) / 2.0)?;
    if n == 3 {
        return Ok(ln_norm.exp());
    }
    if x.abs() == 1.0 {
        return Ok(if n == 2 { f64::INFINITY } else { 0.0 });
    }
    Ok((ln_norm + half * (-x * x).ln_1p()).exp())
}

/// Asymptotic variance for centered data, `Σσ⁴ / (Σσ²)²`.
pub fn case2_variance(spectrum: &Spectrum) -> CosineMoments {
    let v = spectrum.eigenvalues();
    let num = ksum(v.iter().map(|s| s * s));
    let den = ksum(v.iter().copied());
    CosineMoments {
        mean: 0.0,
        variance: num / (den * den),
        kind: MomentKind::AsymptoticApprox,
    }
}

/// Asymptotic mean and variance for data with nonzero means:
/// `E = Σμ² / Σ(μ² + σ²)`, `Var = Σσ²(σ² + 2μ²) / (Σ(μ² + σ²))²`.
pub fn case3_moments(model: &GaussianModel) -> CosineMoments {
    let v = model.spectrum().eigenvalues();
    let mu = model.means();
    let mean_num = ksum(mu.iter().map(|m| m * m));
    let num = ksum(v.iter().zip(mu).map(|(s, m)| s * (s + 2.0 * m * m)));
    let den = ksum(v.iter().zip(mu).map(|(s, m)| m * m + s));
    CosineMoments {
        mean: mean_num / den,
        variance: num / (den * den),
        kind: MomentKind::AsymptoticApprox,
    }
}

/// Gradient of the case-2 variance with respect to each eigenvalue `vᵢ`:
/// `2 (S vᵢ − Σv²) / S³` with `S = Σv`.
///
/// Without the positive factor `2/S³` this is `S vᵢ − Σv²`, which has the
/// same signs and zeros. The bracket is evaluated as `Σⱼ vⱼ (vᵢ − vⱼ)` so an
/// isotropic spectrum yields an exact zero vector; this costs O(n²).
pub fn case2_variance_gradient(spectrum: &Spectrum) -> Vec<f64> {
    let v = spectrum.eigenvalues();
    let s = ksum(v.iter().copied());
    let scale = 2.0 / (s * s * s);
    v.iter()
        .map(|&vi| {
            let bracket = ksum(v.iter().map(|&vj| vj * (vi - vj)));
            scale * bracket
        })
        .collect()
}

/// Moments of `|X|²` for a Gaussian model.
pub fn norm_moments(model: &GaussianModel) -> NormMoments {
    let v = model.spectrum().eigenvalues();
    let mu = model.means();
    let mut mean_sq = KahanSum::new();
    let mut var_sq = KahanSum::new();
    for (s, m) in v.iter().zip(mu) {
        mean_sq.add(s + m * m);
        var_sq.add(2.0 * s * (s + 2.0 * m * m));
    }
    let mean_sq = mean_sq.value();
    NormMoments {
        mean_sq,
        var_sq: var_sq.value(),
        jensen_upper_bound_mean: mean_sq.sqrt(),
    }
}

/// `sqrt(Var|X|²) / E|X|²`. Equals `sqrt(2/n)` for isotropic centered data.
pub fn norm_concentration_ratio(model: &GaussianModel) -> f64 {
    let m = norm_moments(model);
    m.var_sq.sqrt() / m.mean_sq
}
