//! Characteristic functions of normal products and squares, and numerical
//! extraction of their first two moments.

use num_complex::Complex64;

use super::GaussianModel;

/// Characteristic function of `XY` for independent `X ~ N(mu1, var1)`,
/// `Y ~ N(mu2, var2)`.
pub fn char_product_normal(t: f64, mu1: f64, var1: f64, mu2: f64, var2: f64) -> Complex64 {
    let g = 1.0 + var1 * var2 * t * t;
    let re = -(mu1 * mu1 * var2 + mu2 * mu2 * var1) * t * t / (2.0 * g);
    let im = mu1 * mu2 * t / g;
    Complex64::new(re, im).exp() / g.sqrt()
}

/// Characteristic function of `X²` for `X ~ N(mu, var)`.
pub fn char_square_normal(t: f64, mu: f64, var: f64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let b = Complex64::new(1.0, -2.0 * var * t);
    let phase = Complex64::new(0.0, t * mu * mu) / b;
    phase.exp() * (one / b).sqrt()
}

/// Characteristic function of the dot product `AᵀB` for `A, B` drawn i.i.d.
/// from a diagonal Gaussian model.
pub fn char_dot_normal(t: f64, model: &GaussianModel) -> Complex64 {
    model
        .means()
        .iter()
        .zip(model.spectrum().eigenvalues())
        .map(|(&m, &v)| char_product_normal(t, m, v, m, v))
        .product()
}

/// Mean and variance recovered from a characteristic function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfMoments {
    pub mean: f64,
    pub variance: f64,
}

impl CfMoments {
    /// Raw second moment `E[W²]`.
    pub fn second_moment(&self) -> f64 {
        self.variance + self.mean * self.mean
    }
}

const BASE_STEP: f64 = 1e-4;

/// First two cumulants of a distribution from its characteristic function.
///
/// Differentiates `ln φ` at zero by central differences, Richardson
/// extrapolated over steps `h` and `h/2`, with `h = 1e-4 / (1 + scale)`.
/// `scale` should be of the order of the root second moment of the variable
/// so the step tracks the width of `φ`.
pub fn cf_moments<F>(cf: F, scale: f64) -> CfMoments
where
    F: Fn(f64) -> Complex64,
{
    let h = BASE_STEP / (1.0 + scale.abs());
    let psi = |t: f64| cf(t).ln();
    let psi0 = psi(0.0);

    let first = |h: f64| (psi(h) - psi(-h)).im / (2.0 * h);
    let second = |h: f64| -(psi(h) - 2.0 * psi0 + psi(-h)).re / (h * h);

    let richardson = |d: &dyn Fn(f64) -> f64| (4.0 * d(h / 2.0) - d(h)) / 3.0;
    CfMoments {
        mean: richardson(&first),
        variance: richardson(&second),
    }
}
