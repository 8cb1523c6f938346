//! Discriminative power of cosine similarity for class-vs-background tests.
//!
//! Both the class and the background share one covariance spectrum and
//! differ in their dimensionless means (`ζ` for the class, `η` for the
//! background). Cosine similarity over each population is approximated as
//! normal with the asymptotic moments of [`case3_moments`]. The test rejects
//! "unrelated" when `cos > τ(α)`, the upper `α` quantile of the background.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use crate::error::{Error, Result};
use crate::moments::{case3_moments, CosineMoments, DimensionlessMeans, GaussianModel, Spectrum};

/// Standard normal CDF `Φ(x)`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

// Acklam's rational approximation, relative error ~1.15e-9 before refinement.
const A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];
const P_LOW: f64 = 0.024_25;

/// Inverse of the standard normal CDF on `(0, 1)`.
///
/// A rational initial guess refined by one Halley step on `Φ`. Upper-half
/// arguments are reflected (`1 − p` is exact there), so `Q(1 − p) = −Q(p)`
/// whenever `1 − p` is representable.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!(
            "quantile needs p in (0, 1), got {p}"
        )));
    }
    Ok(quantile_unchecked(p))
}

pub(crate) fn quantile_unchecked(p: f64) -> f64 {
    if p > 0.5 {
        return -lower_quantile(1.0 - p);
    }
    lower_quantile(p)
}

fn lower_quantile(p: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    // Halley step; erfc keeps the residual accurate deep in the lower tail.
    let e = 0.5 * libm::erfc(-x / SQRT_2) - p;
    let u = e / normal_pdf(x);
    x - u / (1.0 + 0.5 * x * u)
}

/// Class model, background model and significance level.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpec {
    class_etas: DimensionlessMeans,
    background_etas: DimensionlessMeans,
    spectrum: Spectrum,
    alpha: f64,
}

impl PowerSpec {
    pub fn new(
        class_etas: DimensionlessMeans,
        background_etas: DimensionlessMeans,
        spectrum: Spectrum,
        alpha: f64,
    ) -> Result<Self> {
        let n = spectrum.len();
        for (what, len) in [
            ("class etas", class_etas.len()),
            ("background etas", background_etas.len()),
        ] {
            if len != n {
                return Err(Error::LengthMismatch {
                    what,
                    got: len,
                    expected: n,
                });
            }
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        Ok(Self {
            class_etas,
            background_etas,
            spectrum,
            alpha,
        })
    }

    pub fn class_etas(&self) -> &DimensionlessMeans {
        &self.class_etas
    }

    pub fn background_etas(&self) -> &DimensionlessMeans {
        &self.background_etas
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn class_model(&self) -> Result<GaussianModel> {
        GaussianModel::from_etas(&self.class_etas, self.spectrum.clone())
    }

    pub fn background_model(&self) -> Result<GaussianModel> {
        GaussianModel::from_etas(&self.background_etas, self.spectrum.clone())
    }

    pub fn class_moments(&self) -> Result<CosineMoments> {
        Ok(case3_moments(&self.class_model()?))
    }

    pub fn background_moments(&self) -> Result<CosineMoments> {
        Ok(case3_moments(&self.background_model()?))
    }
}

/// Detection threshold `τ = E_B + Q(1 − α) · SD_B`.
pub fn threshold_tau(spec: &PowerSpec) -> Result<f64> {
    let bg = spec.background_moments()?;
    Ok(bg.mean + quantile_unchecked(1.0 - spec.alpha) * bg.std_dev())
}

/// Standardized separation `Δ = (E_C − τ) / SD_C`.
pub fn delta(spec: &PowerSpec) -> Result<f64> {
    let class = spec.class_moments()?;
    if !(class.variance > 0.0) {
        return Err(Error::domain("class cosine variance is zero"));
    }
    Ok((class.mean - threshold_tau(spec)?) / class.std_dev())
}

/// Power `P(cos(C_a, C_b) > τ) ≈ Φ(Δ)`.
pub fn discriminative_power(spec: &PowerSpec) -> Result<f64> {
    Ok(normal_cdf(delta(spec)?))
}

/// `τ`, `Δ` and power together.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerReport {
    pub tau: f64,
    pub delta: f64,
    pub power: f64,
}

pub fn power_report(spec: &PowerSpec) -> Result<PowerReport> {
    let tau = threshold_tau(spec)?;
    let delta = delta(spec)?;
    Ok(PowerReport {
        tau,
        delta,
        power: normal_cdf(delta),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iso_spec(zeta: f64, eta: f64, n: usize, alpha: f64) -> PowerSpec {
        PowerSpec::new(
            DimensionlessMeans::new(vec![zeta; n]).unwrap(),
            DimensionlessMeans::new(vec![eta; n]).unwrap(),
            Spectrum::isotropic(n, 1.0).unwrap(),
            alpha,
        )
        .unwrap()
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        assert!((normal_quantile(0.975).unwrap() - 1.959_963_984_540_054).abs() < 1e-12);
        let lo = normal_quantile(0.01).unwrap();
        let hi = normal_quantile(0.99).unwrap();
        assert!((lo + hi).abs() < 1e-14);
        assert_eq!(
            normal_quantile(0.25).unwrap(),
            -normal_quantile(0.75).unwrap()
        );
    }

    #[test]
    fn quantile_domain() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(normal_quantile(p).is_err(), "{p}");
        }
    }

    #[test]
    fn quantile_deep_tail() {
        let x = normal_quantile(1e-300).unwrap();
        assert!(x < -37.0 && x > -37.1, "{x}");
        assert!((normal_cdf(x) / 1e-300 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn tau_examples() {
        assert!(threshold_tau(&iso_spec(0.0, 0.0, 100, 0.5)).unwrap().abs() < 1e-18);
        let alpha = 1.0 - normal_cdf(1.0);
        let tau = threshold_tau(&iso_spec(0.0, 0.0, 100, alpha)).unwrap();
        assert!((tau - 0.1).abs() < 1e-12);
    }

    #[test]
    fn delta_examples() {
        let d = delta(&iso_spec(0.7, 0.7, 50, 0.05)).unwrap();
        assert!((d + normal_quantile(0.95).unwrap()).abs() < 1e-12);
        assert!(delta(&iso_spec(0.7, 0.7, 50, 0.5)).unwrap().abs() < 1e-12);

        let d = delta(&iso_spec(1.0, 0.0, 100, 0.05)).unwrap();
        let want = (0.5 - normal_quantile(0.95).unwrap() * 0.1) / 0.0075f64.sqrt();
        assert!((d - want).abs() < 1e-12);
        assert!((d - 3.874).abs() < 1e-3);
        let p = discriminative_power(&iso_spec(1.0, 0.0, 100, 0.05)).unwrap();
        assert!((p - normal_cdf(want)).abs() < 1e-15);
        assert!(p > 0.9999);
    }

    #[test]
    fn null_power_is_alpha() {
        let p = discriminative_power(&iso_spec(0.3, 0.3, 40, 0.05)).unwrap();
        assert!((p - 0.05).abs() < 1e-9);
    }

    #[test]
    fn spec_validation() {
        let e = DimensionlessMeans::zeros(3);
        let s = Spectrum::isotropic(3, 1.0).unwrap();
        assert!(PowerSpec::new(e.clone(), e.clone(), s.clone(), 0.0).is_err());
        assert!(PowerSpec::new(e.clone(), e.clone(), s.clone(), 1.0).is_err());
        assert!(PowerSpec::new(DimensionlessMeans::zeros(2), e, s, 0.05).is_err());
    }
}
