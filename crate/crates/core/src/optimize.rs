//! Variance-minimizing covariance spectra.
//!
//! With the dimensionless means `η` held fixed, the asymptotic cosine
//! variance is
//!
//! ```text
//! V(σ²) = Σ σₖ⁴ (1 + 2ηₖ²) / (Σ σⱼ² (1 + ηⱼ²))²
//! ```
//!
//! It is invariant under a common rescaling of `σ²` and strictly convex on the
//! gauge slice `Σ σᵢ² (1 + ηᵢ²) = 1`, with the unique minimizer
//! `σᵢ² ∝ wᵢ = (1 + ηᵢ²) / (1 + 2ηᵢ²)`.

use crate::error::{Error, Result};
use crate::moments::{DimensionlessMeans, GaussianModel, Spectrum};
use crate::sum::ksum;

/// Lower bound on eigenvalues inside the numerical minimizer.
pub const EIGEN_FLOOR: f64 = 1e-9;
const ARMIJO: f64 = 1e-4;
const MAX_ITERATIONS: usize = 100_000;
/// Largest dimension accepted by [`numerical_min_case3`].
pub const MAX_NUMERICAL_DIM: usize = 64;

/// The closed-form variance-minimizing spectrum for given `η`.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalSpectrum {
    etas: DimensionlessMeans,
    weights: Vec<f64>,
    scale: f64,
    eigenvalues: Vec<f64>,
}

impl OptimalSpectrum {
    pub fn etas(&self) -> &DimensionlessMeans {
        &self.etas
    }

    /// `wᵢ = (1 + ηᵢ²) / (1 + 2ηᵢ²)`, each in `(1/2, 1]`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `σᵢ² = C wᵢ`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `max σ² / min σ²`, never above 2.
    pub fn spread(&self) -> f64 {
        let max = self.eigenvalues.iter().copied().fold(f64::MIN, f64::max);
        let min = self.eigenvalues.iter().copied().fold(f64::MAX, f64::min);
        max / min
    }

    pub fn to_spectrum(&self) -> Result<Spectrum> {
        Spectrum::new(self.eigenvalues.clone())
    }
}

#[inline]
fn weight(eta: f64) -> f64 {
    let e2 = eta * eta;
    (1.0 + e2) / (1.0 + 2.0 * e2)
}

/// `σᵢ² = C (1 + ηᵢ²) / (1 + 2ηᵢ²)`.
pub fn optimal_spectrum(etas: &DimensionlessMeans, scale: f64) -> Result<OptimalSpectrum> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::domain(format!(
            "scale must be positive and finite, got {scale}"
        )));
    }
    if etas.is_empty() {
        return Err(Error::domain("need at least one eta"));
    }
    let weights: Vec<f64> = etas.values().iter().map(|&e| weight(e)).collect();
    let eigenvalues = weights.iter().map(|w| scale * w).collect();
    Ok(OptimalSpectrum {
        etas: etas.clone(),
        weights,
        scale,
        eigenvalues,
    })
}

/// Smallest achievable asymptotic cosine variance over spectra, given `η`:
/// `Σ wₖ² (1 + 2ηₖ²) / (Σ wⱼ (1 + ηⱼ²))²`. Equals `1/n` at `η = 0`.
pub fn min_variance(etas: &DimensionlessMeans) -> f64 {
    let e = etas.values();
    let num = ksum(e.iter().map(|&x| {
        let w = weight(x);
        w * w * (1.0 + 2.0 * x * x)
    }));
    let den = ksum(e.iter().map(|&x| weight(x) * (1.0 + x * x)));
    num / (den * den)
}

/// Gradient of the case-3 variance with respect to each standard deviation
/// `σᵢ`, holding `ηᵢ = μᵢ/σᵢ` fixed:
///
/// ```text
/// ∂V/∂σᵢ = 4σᵢ³(1 + 2ηᵢ²)/D² − 4 N σᵢ (1 + ηᵢ²)/D³
/// ```
///
/// with `N = Σσ⁴(1 + 2η²)` and `D = Σσ²(1 + η²)`.
pub fn case3_variance_gradient(model: &GaussianModel) -> Vec<f64> {
    let etas = model.etas();
    let v = model.spectrum().eigenvalues();
    let e = etas.values();
    let a: Vec<f64> = e.iter().map(|x| 1.0 + 2.0 * x * x).collect();
    let b: Vec<f64> = e.iter().map(|x| 1.0 + x * x).collect();
    let n = ksum(v.iter().zip(&a).map(|(s, a)| s * s * a));
    let d = ksum(v.iter().zip(&b).map(|(s, b)| s * b));
    v.iter()
        .zip(a.iter().zip(&b))
        .map(|(&s, (&ai, &bi))| 4.0 * s.sqrt() * (s * ai * d - n * bi) / (d * d * d))
        .collect()
}

/// Converged output of the projected-gradient minimizer.
#[derive(Debug, Clone)]
pub struct NumericalMinimum {
    /// Minimizer in the gauge `Σ σᵢ² (1 + ηᵢ²) = 1`.
    pub spectrum: Spectrum,
    /// Number of accepted steps.
    pub iterations: usize,
    /// Norm of the final projected gradient.
    pub grad_norm: f64,
}

/// Minimizes the case-3 variance numerically and returns the minimizing
/// spectrum in the gauge `Σ σᵢ² (1 + ηᵢ²) = 1`.
///
/// Used to cross-check [`optimal_spectrum`]; see [`minimize_case3`].
pub fn numerical_min_case3(etas: &DimensionlessMeans, tol: f64) -> Result<Spectrum> {
    minimize_case3(etas, tol).map(|m| m.spectrum)
}

/// Projected gradient descent over `{v : Σ vᵢ (1 + ηᵢ²) = 1, vᵢ ≥ 1e-9}`,
/// starting from the isotropic point, with backtracking (halving, Armijo
/// constant `1e-4`).
///
/// Stops once the 2-norm of the projected gradient is at most `tol`. On the
/// gauge slice the objective has curvature at least 2 in every tangent
/// direction, so the iterate is then within `tol/2` of the minimizer.
pub fn minimize_case3(etas: &DimensionlessMeans, tol: f64) -> Result<NumericalMinimum> {
    let n = etas.len();
    if n == 0 || n > MAX_NUMERICAL_DIM {
        return Err(Error::domain(format!(
            "numerical minimizer supports 1..={MAX_NUMERICAL_DIM} dimensions, got {n}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::domain(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let e = etas.values();
    let a: Vec<f64> = e.iter().map(|x| 1.0 + 2.0 * x * x).collect();
    let b: Vec<f64> = e.iter().map(|x| 1.0 + x * x).collect();

    // f(c) − f(v) for f = N/D², written in terms of δ = c − v so the
    // difference stays accurate after f itself stops resolving it.
    let change = |v: &[f64], c: &[f64]| {
        let n_v = ksum(v.iter().zip(&a).map(|(s, a)| s * s * a));
        let d_v = ksum(v.iter().zip(&b).map(|(s, b)| s * b));
        let dn = ksum(
            v.iter()
                .zip(c)
                .zip(&a)
                .map(|((x, y), a)| a * (y - x) * (y + x)),
        );
        let dd = ksum(v.iter().zip(c).zip(&b).map(|((x, y), b)| b * (y - x)));
        let d_c = d_v + dd;
        (dn * d_v * d_v - n_v * dd * (d_c + d_v)) / (d_c * d_c * d_v * d_v)
    };
    let gradient = |v: &[f64]| -> Vec<f64> {
        let num = ksum(v.iter().zip(&a).map(|(s, a)| s * s * a));
        let den = ksum(v.iter().zip(&b).map(|(s, b)| s * b));
        v.iter()
            .zip(a.iter().zip(&b))
            .map(|(&s, (&ai, &bi))| 2.0 * s * ai / (den * den) - 2.0 * num * bi / (den * den * den))
            .collect()
    };

    let total_b = ksum(b.iter().copied());
    let mut v = vec![1.0 / total_b; n];
    let max_a = a.iter().copied().fold(1.0, f64::max);
    let mut step = 1.0 / (2.0 * max_a);
    let mut iterations = 0;

    loop {
        let g = gradient(&v);
        let trial = project(&sub_scaled(&v, &g, step), &b, EIGEN_FLOOR);
        let grad_norm = mapping_norm(&v, &trial, step);
        if grad_norm <= tol {
            return Ok(NumericalMinimum {
                spectrum: Spectrum::new(v)?,
                iterations,
                grad_norm,
            });
        }
        if iterations >= MAX_ITERATIONS {
            return Err(Error::NotConverged {
                iterations,
                grad_norm,
                last_iterate: v,
            });
        }

        let mut t = step;
        let mut candidate = trial;
        loop {
            let decrease: f64 = g
                .iter()
                .zip(candidate.iter().zip(&v))
                .map(|(gi, (c, x))| gi * (c - x))
                .sum();
            if change(&v, &candidate) <= ARMIJO * decrease || t < 1e-300 {
                break;
            }
            t *= 0.5;
            candidate = project(&sub_scaled(&v, &g, t), &b, EIGEN_FLOOR);
        }
        v = candidate;
        step = 2.0 * t;
        iterations += 1;
    }
}

fn sub_scaled(v: &[f64], g: &[f64], t: f64) -> Vec<f64> {
    v.iter().zip(g).map(|(x, gi)| x - t * gi).collect()
}

fn mapping_norm(v: &[f64], projected: &[f64], t: f64) -> f64 {
    v.iter()
        .zip(projected)
        .map(|(x, p)| ((x - p) / t).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Euclidean projection of `y` onto `{v : b·v = 1, v ≥ floor}` by active-set
/// refinement of the multiplier.
fn project(y: &[f64], b: &[f64], floor: f64) -> Vec<f64> {
    let n = y.len();
    let mut clamped = vec![false; n];
    loop {
        let mut free_by = 0.0;
        let mut free_bb = 0.0;
        let mut fixed = 0.0;
        for i in 0..n {
            if clamped[i] {
                fixed += b[i] * floor;
            } else {
                free_by += b[i] * y[i];
                free_bb += b[i] * b[i];
            }
        }
        let theta = (free_by + fixed - 1.0) / free_bb;
        let mut changed = false;
        for i in 0..n {
            if !clamped[i] && y[i] - theta * b[i] < floor {
                clamped[i] = true;
                changed = true;
            }
        }
        if !changed || clamped.iter().all(|&c| c) {
            return (0..n)
                .map(|i| {
                    if clamped[i] {
                        floor
                    } else {
                        y[i] - theta * b[i]
                    }
                })
                .collect();
        }
    }
}
