use cosvar::moments::DimensionlessMeans;
use cosvar::moments::{case2_variance, case3_moments, GaussianModel, Spectrum};
use cosvar::power::{discriminative_power, threshold_tau, PowerSpec};
use cosvar::simulate::rng::{gamma_variate, stream};
use cosvar::simulate::{
    empirical_cosine_stats, independent_pair_cosines, run_case2_experiment, run_case3_experiment,
    run_norm_experiment, sample_gaussian_matrix, sample_rows, sample_spectrum_gamma, MeanSource,
    NormPlan, SimConfig, SpectrumSource,
};

fn config(seed: u64, dimension: usize, num_vectors: usize) -> SimConfig {
    SimConfig {
        seed,
        dimension,
        num_vectors,
        spectrum_source: SpectrumSource::Isotropic,
        mean_source: MeanSource::Zero,
    }
}

fn column_stats(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, var)
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn gamma_sampler_mean_at_fixed_hyperparameters() {
    for (k, r) in [(0.2, 2.0), (1.5, 0.7), (6.0, 3.0)] {
        let mut rng = stream(77, 0, 0);
        let m = 10_000;
        let xs: Vec<f64> = (0..m).map(|_| gamma_variate(&mut rng, k, r)).collect();
        let (mean, _) = column_stats(&xs);
        let se = (k / (r * r) / m as f64).sqrt();
        assert!((mean - k / r).abs() < 3.0 * se, "k={k} r={r}: {mean}");
    }
}

#[test]
fn gamma_spectra_are_positive_and_seeded() {
    for seed in 0..50 {
        let s = sample_spectrum_gamma(seed, 64).unwrap();
        assert!(s.eigenvalues().iter().all(|&v| v > 0.0));
        assert_eq!(s, sample_spectrum_gamma(seed, 64).unwrap());
        assert_ne!(s, sample_spectrum_gamma(seed + 1, 64).unwrap());
    }
}

#[test]
fn isotropic_columns_have_unit_variance() {
    let m = sample_gaussian_matrix(&config(3, 4, 10_000)).unwrap();
    let tol = 3.0 * (2.0f64 / 10_000.0).sqrt();
    for j in 0..4 {
        let (_, var) = column_stats(&m.column(j));
        assert!((var - 1.0).abs() < tol, "column {j}: {var}");
    }
}

#[test]
fn explicit_means_are_respected() {
    let mut c = config(4, 2, 10_000);
    c.mean_source = MeanSource::Explicit(vec![5.0, 0.0]);
    let m = sample_gaussian_matrix(&c).unwrap();
    let (mean, _) = column_stats(&m.column(0));
    assert!((mean - 5.0).abs() < 3.0 / 100.0, "{mean}");
}

#[test]
fn sampling_is_deterministic() {
    let c = config(5, 30, 50);
    let a = sample_gaussian_matrix(&c).unwrap();
    assert_eq!(a, sample_gaussian_matrix(&c).unwrap());
    assert_eq!(a, in_pool(1, || sample_gaussian_matrix(&c).unwrap()));
    assert_ne!(a, sample_gaussian_matrix(&config(6, 30, 50)).unwrap());
}

#[test]
fn standard_normal_cosine_variance() {
    let m = sample_gaussian_matrix(&config(8, 1000, 1000)).unwrap();
    let s = empirical_cosine_stats(&m).unwrap();
    assert_eq!(s.num_pairs, 499_500);
    assert!((s.variance - 0.001).abs() < 1e-4, "{}", s.variance);
}

#[test]
fn all_pairs_statistics_ignore_thread_count() {
    let model = GaussianModel::new(vec![0.3; 40], sample_spectrum_gamma(9, 40).unwrap()).unwrap();
    let m = sample_rows(&model, 300, 9);
    let one = in_pool(1, || empirical_cosine_stats(&m).unwrap());
    let four = in_pool(4, || empirical_cosine_stats(&m).unwrap());
    assert_eq!(one.mean.to_bits(), four.mean.to_bits());
    assert_eq!(one.variance.to_bits(), four.variance.to_bits());
}

#[test]
fn experiments_ignore_thread_count() {
    let run = || run_case3_experiment(&[20, 40], 60, 11).unwrap();
    assert_eq!(in_pool(1, run), in_pool(3, run));
}

#[test]
fn isotropic_case2_theory_is_one_over_dim() {
    for n in 1..=1000 {
        let s = Spectrum::isotropic(n, 1.0).unwrap();
        assert_eq!(case2_variance(&s).variance, 1.0 / n as f64, "n={n}");
    }
}

fn median_relative_error(num_vectors: usize) -> f64 {
    let res = run_case2_experiment(&[100, 200, 300], num_vectors, 3, 1, 12).unwrap();
    let mut errs: Vec<f64> = res
        .rows
        .iter()
        .map(|r| (r.theory_variance - r.empirical_variance).abs() / r.theory_variance)
        .collect();
    errs.sort_by(f64::total_cmp);
    errs[errs.len() / 2]
}

#[test]
fn more_vectors_shrink_case2_error() {
    let small = median_relative_error(100);
    let large = median_relative_error(800);
    assert!(large < small, "{small} -> {large}");
}

#[test]
fn case3_oracle_holds_for_modest_means() {
    let n = 200;
    let spectrum = sample_spectrum_gamma(13, n).unwrap();
    let means: Vec<f64> = spectrum
        .std_devs()
        .iter()
        .enumerate()
        .map(|(i, sd)| 0.3 * sd * ((i % 5) as f64 - 2.0))
        .collect();
    let model = GaussianModel::new(means, spectrum).unwrap();
    let theory = case3_moments(&model).variance;
    let trials = 50;
    let hits = (0..trials)
        .filter(|&t| {
            let s = empirical_cosine_stats(&sample_rows(&model, 2000, 1000 + t)).unwrap();
            (s.variance - theory).abs() <= 0.2 * theory
        })
        .count();
    assert!(hits as f64 >= 0.95 * trials as f64, "{hits}/{trials}");
}

#[test]
fn norm_concentration_trends() {
    let plan = |dims: Vec<usize>| NormPlan {
        dims,
        vectors_per_draw: 100,
        draws: 5,
        spectrum: SpectrumSource::Isotropic,
        means: MeanSource::Zero,
        seed: 14,
    };
    let rows = run_norm_experiment(&plan(vec![10, 1000])).unwrap();
    let gap = |dim: usize| {
        let sel: Vec<f64> = rows
            .iter()
            .filter(|r| r.dimension == dim)
            .map(|r| 1.0 - r.ratio_to_bound)
            .collect();
        sel.iter().sum::<f64>() / sel.len() as f64
    };
    assert!(gap(1000).abs() < gap(10).abs());
    assert!(rows
        .iter()
        .filter(|r| r.dimension == 1000)
        .all(|r| r.sd_over_mean < 0.05));
}

#[test]
fn monte_carlo_power_for_unit_class_means() {
    let n = 100;
    let spec = PowerSpec::new(
        DimensionlessMeans::new(vec![1.0; n]).unwrap(),
        DimensionlessMeans::zeros(n),
        Spectrum::isotropic(n, 1.0).unwrap(),
        0.05,
    )
    .unwrap();
    let tau = threshold_tau(&spec).unwrap();
    let predicted = discriminative_power(&spec).unwrap();
    let pairs = 100_000;
    let cos = independent_pair_cosines(&spec.class_model().unwrap(), pairs, 15);
    let observed = cos.iter().filter(|&&c| c > tau).count() as f64 / pairs as f64;
    assert!(
        (observed - predicted).abs() < 0.002,
        "{predicted} vs {observed}"
    );
}

#[test]
fn background_false_positive_rate_for_small_means() {
    let n = 300;
    let spectrum = sample_spectrum_gamma(16, n).unwrap();
    let etas: Vec<f64> = {
        let mut rng = stream(16, 50, 0);
        (0..n)
            .map(|_| 0.1 * cosvar::simulate::rng::standard_normal(&mut rng))
            .collect()
    };
    let etas = DimensionlessMeans::new(etas).unwrap();
    let spec = PowerSpec::new(etas.clone(), etas, spectrum, 0.05).unwrap();
    let tau = threshold_tau(&spec).unwrap();
    let model = spec.background_model().unwrap();
    let m = 2000;
    let mut cos = independent_pair_cosines(&model, m, 17);
    cos.sort_by(f64::total_cmp);
    let q95 = cos[(0.95 * m as f64) as usize];
    let fpr = cos.iter().filter(|&&c| c > tau).count() as f64 / m as f64;
    let se = (0.05 * 0.95 / m as f64).sqrt();
    assert!(
        (fpr - 0.05).abs() < 3.0 * se,
        "tau {tau}, q95 {q95}, fpr {fpr}"
    );
}
