//! Theory-versus-simulation experiments over a range of dimensions.
//!
//! Each experiment cell `(dimension index, spectrum index)` gets its own
//! seed derived from the run seed; the spectrum and means come from that
//! cell seed and repeat `r` samples its rows from a seed derived from the
//! cell seed and `r`. Case 2 and case 3 with zero means therefore sample
//! the same rows for the same run seed.

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::moments::{
    case1_moments, case2_variance, case3_moments, norm_moments, GaussianModel, Spectrum,
};

use super::rng::derive_seed;
use super::{
    empirical_cosine_stats, mean_and_variance, pearson_correlation, sample_means, sample_rows,
    sample_spectrum_gamma, MeanSource, SpectrumSource,
};

/// One theory-versus-simulation comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentRow {
    pub dimension: usize,
    pub spectrum_index: usize,
    pub repeat: usize,
    pub theory_mean: f64,
    pub empirical_mean: f64,
    pub theory_variance: f64,
    pub empirical_variance: f64,
    pub num_pairs: u64,
    /// Cell seed; the rows of repeat `r` come from `derive_seed(seed, &[r])`.
    pub seed: u64,
}

/// Rows of an experiment plus agreement between theory and simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub rows: Vec<ExperimentRow>,
    /// Pearson correlation of the theory and empirical variance columns;
    /// `None` when either column is constant or there is only one row.
    pub pearson_variance: Option<f64>,
    /// Same for the mean columns.
    pub pearson_mean: Option<f64>,
}

impl ExperimentResult {
    fn from_rows(rows: Vec<ExperimentRow>) -> Self {
        let column = |f: fn(&ExperimentRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
        let pearson_variance = pearson_correlation(
            &column(|r| r.theory_variance),
            &column(|r| r.empirical_variance),
        )
        .ok();
        let pearson_mean =
            pearson_correlation(&column(|r| r.theory_mean), &column(|r| r.empirical_mean)).ok();
        Self {
            rows,
            pearson_variance,
            pearson_mean,
        }
    }
}

fn check_common(dims: &[usize], num_vectors: usize) -> Result<()> {
    if dims.is_empty() {
        return Err(Error::Empty("dimension list".into()));
    }
    if dims.contains(&0) {
        return Err(Error::domain("dimensions must be positive"));
    }
    if num_vectors < 2 {
        return Err(Error::domain(format!(
            "need at least 2 vectors to form pairs, got {num_vectors}"
        )));
    }
    Ok(())
}

fn sample_cell(
    model: &GaussianModel,
    theory_mean: f64,
    theory_variance: f64,
    num_vectors: usize,
    cell_seed: u64,
    spectrum_index: usize,
    repeat: usize,
) -> Result<ExperimentRow> {
    let rows = sample_rows(model, num_vectors, derive_seed(cell_seed, &[repeat as u64]));
    let stats = empirical_cosine_stats(&rows)?;
    Ok(ExperimentRow {
        dimension: model.dim(),
        spectrum_index,
        repeat,
        theory_mean,
        empirical_mean: stats.mean,
        theory_variance,
        empirical_variance: stats.variance,
        num_pairs: stats.num_pairs,
        seed: cell_seed,
    })
}

/// Standard normal vectors: theory variance `1/n` against simulation, one
/// row per dimension.
pub fn run_case1_experiment(
    dims: &[usize],
    num_vectors: usize,
    seed: u64,
) -> Result<ExperimentResult> {
    check_common(dims, num_vectors)?;
    let mut rows = Vec::with_capacity(dims.len());
    for (d, &n) in dims.iter().enumerate() {
        let cell_seed = derive_seed(seed, &[d as u64, 0]);
        let model = GaussianModel::centered(Spectrum::isotropic(n, 1.0)?);
        let theory = case1_moments(n)?;
        rows.push(sample_cell(
            &model,
            theory.mean,
            theory.variance,
            num_vectors,
            cell_seed,
            0,
            0,
        )?);
    }
    Ok(ExperimentResult::from_rows(rows))
}

/// Centered vectors with gamma-sampled spectra. Each dimension gets
/// `spectra_per_dim` spectra and each spectrum `repeats` independent samples.
pub fn run_case2_experiment(
    dims: &[usize],
    num_vectors: usize,
    spectra_per_dim: usize,
    repeats: usize,
    seed: u64,
) -> Result<ExperimentResult> {
    check_common(dims, num_vectors)?;
    if spectra_per_dim == 0 || repeats == 0 {
        return Err(Error::domain(
            "spectra per dimension and repeats must be positive",
        ));
    }
    let mut rows = Vec::with_capacity(dims.len() * spectra_per_dim * repeats);
    for (d, &n) in dims.iter().enumerate() {
        for s in 0..spectra_per_dim {
            let cell_seed = derive_seed(seed, &[d as u64, s as u64]);
            let model = GaussianModel::centered(sample_spectrum_gamma(cell_seed, n)?);
            let theory = case2_variance(model.spectrum());
            for r in 0..repeats {
                rows.push(sample_cell(
                    &model,
                    0.0,
                    theory.variance,
                    num_vectors,
                    cell_seed,
                    s,
                    r,
                )?);
            }
        }
    }
    Ok(ExperimentResult::from_rows(rows))
}

/// Gamma-sampled spectra with means drawn from `N(0, 2)`, one spectrum per
/// dimension.
pub fn run_case3_experiment(
    dims: &[usize],
    num_vectors: usize,
    seed: u64,
) -> Result<ExperimentResult> {
    run_case3_experiment_with(
        dims,
        num_vectors,
        1,
        &MeanSource::NormalWithVariance(2.0),
        seed,
    )
}

/// Case 3 with a chosen number of spectra per dimension and mean source.
pub fn run_case3_experiment_with(
    dims: &[usize],
    num_vectors: usize,
    spectra_per_dim: usize,
    means: &MeanSource,
    seed: u64,
) -> Result<ExperimentResult> {
    check_common(dims, num_vectors)?;
    if spectra_per_dim == 0 {
        return Err(Error::domain("spectra per dimension must be positive"));
    }
    let mut rows = Vec::with_capacity(dims.len() * spectra_per_dim);
    for (d, &n) in dims.iter().enumerate() {
        for s in 0..spectra_per_dim {
            let cell_seed = derive_seed(seed, &[d as u64, s as u64]);
            let spectrum = sample_spectrum_gamma(cell_seed, n)?;
            let model = GaussianModel::new(resolve_means(means, cell_seed, n)?, spectrum)?;
            let theory = case3_moments(&model);
            rows.push(sample_cell(
                &model,
                theory.mean,
                theory.variance,
                num_vectors,
                cell_seed,
                s,
                0,
            )?);
        }
    }
    Ok(ExperimentResult::from_rows(rows))
}

fn resolve_means(source: &MeanSource, seed: u64, n: usize) -> Result<Vec<f64>> {
    match source {
        MeanSource::Zero => Ok(vec![0.0; n]),
        MeanSource::NormalWithVariance(v) => {
            if !(*v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!(
                    "mean variance must be positive, got {v}"
                )));
            }
            Ok(sample_means(seed, n, *v))
        }
        MeanSource::Explicit(m) if m.len() == n => Ok(m.clone()),
        MeanSource::Explicit(m) => Err(Error::LengthMismatch {
            what: "explicit means",
            got: m.len(),
            expected: n,
        }),
    }
}

fn resolve_spectrum(source: &SpectrumSource, seed: u64, n: usize) -> Result<Spectrum> {
    match source {
        SpectrumSource::Isotropic => Spectrum::isotropic(n, 1.0),
        SpectrumSource::GammaHyper => sample_spectrum_gamma(seed, n),
        SpectrumSource::Explicit(s) if s.len() == n => Ok(s.clone()),
        SpectrumSource::Explicit(s) => Err(Error::LengthMismatch {
            what: "explicit spectrum",
            got: s.len(),
            expected: n,
        }),
    }
}

/// Settings for [`run_norm_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct NormPlan {
    pub dims: Vec<usize>,
    pub vectors_per_draw: usize,
    /// Independent draws per dimension; each resolves its own spectrum and
    /// means.
    pub draws: usize,
    pub spectrum: SpectrumSource,
    pub means: MeanSource,
    pub seed: u64,
}

/// Observed vector norms against the Jensen bound `√E|X|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormRow {
    pub dimension: usize,
    pub draw: usize,
    pub jensen_bound: f64,
    pub mean_norm: f64,
    pub sd_norm: f64,
    /// `mean_norm / jensen_bound`; tends to 1 as the dimension grows.
    pub ratio_to_bound: f64,
    /// `sd_norm / mean_norm`; tends to 0 as the dimension grows.
    pub sd_over_mean: f64,
    pub num_vectors: usize,
    pub seed: u64,
}

/// One row per `(dimension, draw)`.
pub fn run_norm_experiment(plan: &NormPlan) -> Result<Vec<NormRow>> {
    check_common(&plan.dims, plan.vectors_per_draw)?;
    if plan.draws == 0 {
        return Err(Error::domain("number of draws must be positive"));
    }
    let mut out = Vec::with_capacity(plan.dims.len() * plan.draws);
    for (d, &n) in plan.dims.iter().enumerate() {
        for draw in 0..plan.draws {
            let cell_seed = derive_seed(plan.seed, &[d as u64, draw as u64]);
            let spectrum = resolve_spectrum(&plan.spectrum, cell_seed, n)?;
            let model = GaussianModel::new(resolve_means(&plan.means, cell_seed, n)?, spectrum)?;
            let rows = sample_rows(&model, plan.vectors_per_draw, derive_seed(cell_seed, &[0]));
            let norms: Vec<f64> = rows.row_iter().map(|r| dot(r, r).sqrt()).collect();
            let (mean_norm, var) = mean_and_variance(&norms)?;
            let jensen_bound = norm_moments(&model).jensen_upper_bound_mean;
            let sd_norm = var.sqrt();
            out.push(NormRow {
                dimension: n,
                draw,
                jensen_bound,
                mean_norm,
                sd_norm,
                ratio_to_bound: mean_norm / jensen_bound,
                sd_over_mean: sd_norm / mean_norm,
                num_vectors: plan.vectors_per_draw,
                seed: cell_seed,
            });
        }
    }
    Ok(out)
}
