use approx::assert_relative_eq;
use nalgebra::DMatrix;
use proptest::prelude::*;
use statrs::distribution::{Beta, Continuous};
use statrs::function::gamma::ln_gamma as statrs_ln_gamma;

use cosvar::moments::{
    case1_density, case2_variance, case3_moments, cosine, ln_gamma, log_beta, norm_moments,
    GaussianModel, Spectrum,
};
use cosvar::simulate::{empirical_cosine_stats, sample_means, sample_rows, sample_spectrum_gamma};

fn vec_pair(n: std::ops::Range<usize>) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    n.prop_flat_map(|n| {
        (
            prop::collection::vec(-100.0..100.0f64, n),
            prop::collection::vec(-100.0..100.0f64, n),
        )
    })
    .prop_filter("nonzero", |(a, b)| {
        a.iter().any(|x| x.abs() > 1e-3) && b.iter().any(|x| x.abs() > 1e-3)
    })
}

fn random_orthogonal(n: usize, entries: &[f64]) -> DMatrix<f64> {
    DMatrix::from_column_slice(n, n, entries).qr().q()
}

proptest! {
    #[test]
    fn cosine_is_scale_invariant((a, b) in vec_pair(1..40), k in 1e-3..1e3f64) {
        let c = cosine(&a, &b).unwrap();
        let scaled: Vec<f64> = a.iter().map(|x| k * x).collect();
        prop_assert!((cosine(&scaled, &b).unwrap() - c).abs() < 1e-13);
    }

    #[test]
    fn cosine_is_rotation_invariant(
        (a, b) in vec_pair(2..12),
        seed_entries in prop::collection::vec(-1.0..1.0f64, 144),
    ) {
        let n = a.len();
        let q = random_orthogonal(n, &seed_entries[..n * n]);
        let ra = &q * nalgebra::DVector::from_vec(a.clone());
        let rb = &q * nalgebra::DVector::from_vec(b.clone());
        let before = cosine(&a, &b).unwrap();
        let after = cosine(ra.as_slice(), rb.as_slice()).unwrap();
        prop_assert!((before - after).abs() < 1e-12, "{before} vs {after}");
    }

    #[test]
    fn cosine_stays_in_range((a, b) in vec_pair(1..30)) {
        let c = cosine(&a, &b).unwrap();
        prop_assert!((-1.0..=1.0).contains(&c));
        prop_assert!((cosine(&a, &a).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn case2_variance_is_scale_invariant(
        v in prop::collection::vec(0.01..100.0f64, 1..50),
        k in 1e-3..1e3f64,
    ) {
        let s = Spectrum::new(v).unwrap();
        let base = case2_variance(&s).variance;
        let scaled = case2_variance(&s.scaled(k).unwrap()).variance;
        prop_assert!((base - scaled).abs() <= 1e-14 * base);
        let n = s.len() as f64;
        prop_assert!(base >= 1.0 / n * (1.0 - 1e-14) && base <= 1.0 + 1e-15);
    }

    #[test]
    fn case3_mean_in_unit_interval(
        pairs in prop::collection::vec((0.01..10.0f64, -5.0..5.0f64), 1..50),
    ) {
        let (v, mu): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let m = case3_moments(&GaussianModel::new(mu, Spectrum::new(v).unwrap()).unwrap());
        prop_assert!((0.0..1.0).contains(&m.mean));
        prop_assert!(m.variance > 0.0);
    }

    #[test]
    fn ln_gamma_matches_reference(x in 1e-3..200.0f64) {
        let want = statrs_ln_gamma(x);
        prop_assert!((ln_gamma(x) - want).abs() <= 1e-12 * want.abs().max(1.0), "x={x}");
    }

    #[test]
    fn log_beta_matches_reference(a in 0.01..500.0f64, b in 0.01..500.0f64) {
        let want = statrs_ln_gamma(a) + statrs_ln_gamma(b) - statrs_ln_gamma(a + b);
        let got = log_beta(a, b).unwrap();
        prop_assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0), "a={a} b={b}: {got} vs {want}");
    }

    #[test]
    fn case1_density_is_transformed_beta(n in 3usize..400, x in -0.99..0.99f64) {
        let shape = (n as f64 - 1.0) / 2.0;
        let want = 0.5 * Beta::new(shape, shape).unwrap().pdf((1.0 + x) / 2.0);
        let got = case1_density(x, n).unwrap();
        prop_assert!((got - want).abs() <= 1e-9 * want.max(1e-300), "n={n} x={x}: {got} vs {want}");
    }
}

#[test]
fn case1_density_integrates_to_one() {
    for n in [3usize, 4, 7, 30, 300] {
        let steps = 20_000;
        let h = 2.0 / steps as f64;
        let total: f64 = (0..steps)
            .map(|k| {
                let x = -1.0 + (k as f64 + 0.5) * h;
                case1_density(x, n).unwrap() * h
            })
            .sum();
        assert_relative_eq!(total, 1.0, max_relative = 1e-6);
    }
}

#[test]
fn norm_moments_match_chi_square_law() {
    let s = Spectrum::new(vec![1.0, 2.0, 3.0]).unwrap();
    let m = norm_moments(&GaussianModel::new(vec![1.0, 0.0, -1.0], s).unwrap());
    assert_relative_eq!(m.mean_sq, 8.0);
    assert_relative_eq!(m.var_sq, 2.0 * 14.0 + 4.0 * 4.0);
    assert_relative_eq!(m.jensen_upper_bound_mean, 8f64.sqrt());
}

/// First-order expansion of `cos` that keeps the norm fluctuations along the
/// mean direction: `[2(1−E)²Σμ²σ² + (1+E²)Σσ⁴] / S²`.
fn full_expansion_variance(model: &GaussianModel) -> f64 {
    let v = model.spectrum().eigenvalues();
    let mu = model.means();
    let s: f64 = mu.iter().zip(v).map(|(m, v)| m * m + v).sum();
    let e = mu.iter().map(|m| m * m).sum::<f64>() / s;
    let cross: f64 = mu.iter().zip(v).map(|(m, v)| m * m * v).sum();
    let quartic: f64 = v.iter().map(|v| v * v).sum();
    (2.0 * (1.0 - e).powi(2) * cross + (1.0 + e * e) * quartic) / (s * s)
}

#[test]
fn case3_against_simulation_for_gamma_spectra() {
    let n = 500;
    for seed in 0..6u64 {
        let spectrum = sample_spectrum_gamma(seed, n).unwrap();
        let model = GaussianModel::new(sample_means(seed, n, 2.0), spectrum).unwrap();
        let theory = case3_moments(&model);
        let stats = empirical_cosine_stats(&sample_rows(&model, 2000, seed + 100)).unwrap();
        assert!((stats.mean - theory.mean).abs() < 0.01, "seed {seed}");
        let full = full_expansion_variance(&model);
        let rel = (stats.variance - full).abs() / full;
        assert!(
            rel < 0.15,
            "seed {seed}: expansion {full} empirical {}",
            stats.variance
        );
    }
}

#[test]
fn case3_variance_close_to_simulation_for_small_means() {
    let n = 500;
    for seed in 0..4u64 {
        let spectrum = sample_spectrum_gamma(seed, n).unwrap();
        let means: Vec<f64> = spectrum
            .std_devs()
            .iter()
            .zip(sample_means(seed, n, 0.1))
            .map(|(sd, z)| sd * z)
            .collect();
        let model = GaussianModel::new(means, spectrum).unwrap();
        let theory = case3_moments(&model);
        assert!(theory.mean < 0.3);
        let stats = empirical_cosine_stats(&sample_rows(&model, 2000, seed + 100)).unwrap();
        let rel = (stats.variance - theory.variance).abs() / theory.variance;
        assert!(
            rel < 0.15,
            "seed {seed}: theory {} empirical {}",
            theory.variance,
            stats.variance
        );
    }
}
