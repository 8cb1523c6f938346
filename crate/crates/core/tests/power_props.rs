use proptest::prelude::*;
use statrs::function::erf::erfc;

use cosvar::moments::{DimensionlessMeans, Spectrum};
use cosvar::power::{
    delta, discriminative_power, normal_cdf, normal_quantile, power_report, threshold_tau,
    PowerSpec,
};

/// Quantile by bisection on an independent normal CDF.
fn bisect_quantile(p: f64) -> f64 {
    let cdf = |x: f64| 0.5 * erfc(-x / std::f64::consts::SQRT_2);
    let (mut lo, mut hi) = (-40.0, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn spec(class: Vec<f64>, bg: Vec<f64>, v: Vec<f64>, alpha: f64) -> PowerSpec {
    PowerSpec::new(
        DimensionlessMeans::new(class).unwrap(),
        DimensionlessMeans::new(bg).unwrap(),
        Spectrum::new(v).unwrap(),
        alpha,
    )
    .unwrap()
}

proptest! {
    #[test]
    fn quantile_matches_bisection(p in 1e-12..(1.0 - 1e-12)) {
        let got = normal_quantile(p).unwrap();
        let want = bisect_quantile(p);
        prop_assert!((got - want).abs() < 1e-9 * want.abs().max(1.0), "p={p}: {got} vs {want}");
    }

    #[test]
    fn cdf_inverts_quantile(p in 1e-300..0.5f64) {
        let x = normal_quantile(p).unwrap();
        prop_assert!((normal_cdf(x) / p - 1.0).abs() < 1e-12, "p={p}");
    }

    #[test]
    fn null_power_equals_alpha(
        pairs in prop::collection::vec((-2.0..2.0f64, 0.1..5.0f64), 2..80),
        alpha in 0.001..0.5f64,
    ) {
        let (e, v): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let p = discriminative_power(&spec(e.clone(), e, v, alpha)).unwrap();
        prop_assert!((p - alpha).abs() < 1e-9);
    }
}

#[test]
fn report_is_consistent() {
    let s = spec(vec![1.0; 100], vec![0.0; 100], vec![1.0; 100], 0.05);
    let r = power_report(&s).unwrap();
    assert_eq!(r.tau, threshold_tau(&s).unwrap());
    assert_eq!(r.delta, delta(&s).unwrap());
    assert_eq!(r.power, normal_cdf(r.delta));
    assert!((r.power - 0.99995).abs() < 2e-5, "{}", r.power);
}

#[test]
fn smaller_alpha_raises_threshold() {
    let v = vec![1.0, 2.0, 0.5, 1.5];
    let e = vec![0.2, -0.4, 0.1, 0.0];
    let strict = threshold_tau(&spec(e.clone(), e.clone(), v.clone(), 0.001)).unwrap();
    let loose = threshold_tau(&spec(e.clone(), e, v, 0.1)).unwrap();
    assert!(strict > loose);
}
