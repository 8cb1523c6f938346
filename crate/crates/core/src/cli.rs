//! Command-line interface.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::dataio::{
    center_rows, estimate_model, format_f64, load_csv, load_vector, optimal_transform,
    svg::scatter_loglog, write_csv, write_experiment_rows, write_norm_rows, write_table,
    DataMatrix,
};
use crate::error::{Error, Result};
use crate::moments::{
    case1_moments, case2_variance, case3_moments, DimensionlessMeans, GaussianModel, Spectrum,
};
use crate::optimize::{min_variance, optimal_spectrum};
use crate::power::{power_report, PowerSpec};
use crate::simulate::{
    run_case1_experiment, run_case2_experiment, run_case3_experiment_with, run_norm_experiment,
    ExperimentResult, MeanSource, NormPlan, SpectrumSource,
};

#[derive(Debug, Parser)]
#[command(
    name = "cosvar",
    version,
    about = "Moments of cosine similarity for multivariate data"
)]
struct Cli {
    /// Worker threads for sampling (default: all cores). Output does not
    /// depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Mean and variance of cosine similarity under a Gaussian model.
    Moments {
        /// 1: standard normal, 2: centered with a spectrum, 3: spectrum and means.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        case: u8,
        /// Dimension; with cases 2 and 3 and no spectrum file, an isotropic
        /// unit spectrum of this size.
        #[arg(long)]
        dim: Option<usize>,
        /// Covariance eigenvalues, one row or one column.
        #[arg(long)]
        spectrum: Option<PathBuf>,
        /// Per-axis means in the eigenbasis (case 3).
        #[arg(long)]
        means: Option<PathBuf>,
    },
    /// Variance-minimizing spectrum for given dimensionless means.
    Optimize {
        /// Dimensionless means, one row or one column.
        #[arg(long)]
        etas: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
    /// Threshold, separation and power of a class-vs-background test.
    Power {
        /// Dimensionless means of the class.
        #[arg(long)]
        class_etas: PathBuf,
        /// Dimensionless means of the background.
        #[arg(long)]
        bg_etas: PathBuf,
        #[arg(long)]
        spectrum: PathBuf,
        #[arg(long)]
        alpha: f64,
    },
    /// Monte Carlo check of the moment formulas.
    Simulate {
        #[arg(long, value_enum)]
        experiment: Experiment,
        #[arg(long)]
        seed: u64,
        /// Comma-separated dimensions.
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        /// Vectors per sample.
        #[arg(long)]
        vectors: Option<usize>,
        /// Spectra per dimension (case2, case3).
        #[arg(long)]
        spectra_per_dim: Option<usize>,
        /// Samples per spectrum (case2).
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        /// Draws per dimension (norm).
        #[arg(long, default_value_t = 20)]
        draws: usize,
        /// Spectrum for the norm experiment.
        #[arg(long, value_enum, default_value_t = SpectrumKind::Isotropic)]
        spectrum: SpectrumKind,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a log-log theory-vs-empirical scatter plot.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Fit a Gaussian model to data and predict cosine moments.
    Analyze {
        /// CSV with samples in rows.
        #[arg(long)]
        input: PathBuf,
        /// Center each row first, so cosine becomes Pearson correlation.
        #[arg(long)]
        pearson_mode: bool,
        /// Write per-axis eigenvalues and dimensionless means here.
        #[arg(long)]
        axes: Option<PathBuf>,
    },
    /// Write the variance-minimizing linear transform for a data set.
    Transform {
        /// CSV with samples in rows.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Experiment {
    Case1,
    Case2,
    Case3,
    Norm,
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum)]
enum SpectrumKind {
    Isotropic,
    Gamma,
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code: 0 on success, 1 on a computation error, 2 on a usage
/// error.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let mut buf = Vec::new();
    let result = match cli.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::domain(format!("cannot start {t} threads: {e}")))
            .and_then(|pool| pool.install(|| dispatch(cli.command, &mut buf))),
        None => dispatch(cli.command, &mut buf),
    }
    .and_then(|()| Ok(stdout.write_all(&buf)?));
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::Moments {
            case,
            dim,
            spectrum,
            means,
        } => moments(case, dim, spectrum.as_deref(), means.as_deref(), stdout),
        Command::Optimize { etas, scale } => optimize(&etas, scale, stdout),
        Command::Power {
            class_etas,
            bg_etas,
            spectrum,
            alpha,
        } => {
            let spec = PowerSpec::new(
                DimensionlessMeans::new(load_vector(class_etas)?)?,
                DimensionlessMeans::new(load_vector(bg_etas)?)?,
                Spectrum::new(load_vector(spectrum)?)?,
                alpha,
            )?;
            let r = power_report(&spec)?;
            write_table(
                stdout,
                &["tau", "delta", "power"],
                [[r.tau, r.delta, r.power].map(format_f64)],
            )
        }
        Command::Simulate {
            experiment,
            seed,
            dims,
            vectors,
            spectra_per_dim,
            repeats,
            draws,
            spectrum,
            out,
            svg,
        } => {
            let plan = SimulatePlan {
                experiment,
                seed,
                dims,
                vectors,
                spectra_per_dim,
                repeats,
                draws,
                spectrum,
            };
            simulate(plan, out.as_deref(), svg.as_deref(), stdout)
        }
        Command::Analyze {
            input,
            pearson_mode,
            axes,
        } => analyze(&input, pearson_mode, axes.as_deref(), stdout),
        Command::Transform { input, out } => {
            let data = load_csv(&input)?;
            let w = optimal_transform(&estimate_model(&data)?)?;
            let w = DataMatrix::new(w, data.column_names().map(<[String]>::to_vec))?;
            write_csv(create(&out)?, &w)
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn moments(
    case: u8,
    dim: Option<usize>,
    spectrum: Option<&Path>,
    means: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<()> {
    let resolve_spectrum = || -> Result<Spectrum> {
        match (spectrum, dim) {
            (Some(p), d) => {
                let s = Spectrum::new(load_vector(p)?)?;
                match d {
                    Some(d) if d != s.len() => Err(Error::LengthMismatch {
                        what: "spectrum",
                        got: s.len(),
                        expected: d,
                    }),
                    _ => Ok(s),
                }
            }
            (None, Some(d)) => Spectrum::isotropic(d, 1.0),
            (None, None) => Err(Error::domain("give --dim or --spectrum")),
        }
    };
    let m = match case {
        1 => {
            if spectrum.is_some() || means.is_some() {
                return Err(Error::domain("case 1 takes only --dim"));
            }
            case1_moments(dim.ok_or_else(|| Error::domain("case 1 needs --dim"))?)?
        }
        2 => {
            if means.is_some() {
                return Err(Error::domain("case 2 is centered; use case 3 for --means"));
            }
            case2_variance(&resolve_spectrum()?)
        }
        _ => {
            let s = resolve_spectrum()?;
            let mu = match means {
                Some(p) => load_vector(p)?,
                None => vec![0.0; s.len()],
            };
            case3_moments(&GaussianModel::new(mu, s)?)
        }
    };
    write_table(
        stdout,
        &["mean", "variance"],
        [[m.mean, m.variance].map(format_f64)],
    )
}

fn optimize(etas: &Path, scale: f64, stdout: &mut dyn Write) -> Result<()> {
    let etas = DimensionlessMeans::new(load_vector(etas)?)?;
    let opt = optimal_spectrum(&etas, scale)?;
    let mv = format_f64(min_variance(&etas));
    let rows = (0..etas.len()).map(|i| {
        vec![
            i.to_string(),
            format_f64(etas.values()[i]),
            format_f64(opt.weights()[i]),
            format_f64(opt.eigenvalues()[i]),
            mv.clone(),
        ]
    });
    write_table(
        stdout,
        &["axis", "eta", "weight", "eigenvalue", "min_variance"],
        rows,
    )
}

struct SimulatePlan {
    experiment: Experiment,
    seed: u64,
    dims: Option<Vec<usize>>,
    vectors: Option<usize>,
    spectra_per_dim: Option<usize>,
    repeats: usize,
    draws: usize,
    spectrum: SpectrumKind,
}

/// Twenty log-spaced dimensions from 1 to 1000.
fn log_spaced_dims() -> Vec<usize> {
    (0..20)
        .map(|i| 1000f64.powf(i as f64 / 19.0).round() as usize)
        .collect()
}

fn simulate(
    plan: SimulatePlan,
    out: Option<&Path>,
    svg: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<()> {
    let hundreds = || (1..=10).map(|k| 100 * k).collect::<Vec<_>>();
    let mut buf = Vec::new();
    let points: Vec<(f64, f64)>;
    let title;
    match plan.experiment {
        Experiment::Norm => {
            let rows = run_norm_experiment(&NormPlan {
                dims: plan.dims.unwrap_or_else(|| vec![10, 100, 1000]),
                vectors_per_draw: plan.vectors.unwrap_or(100),
                draws: plan.draws,
                spectrum: match plan.spectrum {
                    SpectrumKind::Isotropic => SpectrumSource::Isotropic,
                    SpectrumKind::Gamma => SpectrumSource::GammaHyper,
                },
                means: MeanSource::Zero,
                seed: plan.seed,
            })?;
            write_norm_rows(&mut buf, &rows)?;
            points = rows.iter().map(|r| (r.jensen_bound, r.mean_norm)).collect();
            title = "mean norm vs Jensen bound";
        }
        experiment => {
            let vectors = plan.vectors.unwrap_or(1000);
            let res: ExperimentResult = match experiment {
                Experiment::Case1 => run_case1_experiment(
                    &plan.dims.unwrap_or_else(log_spaced_dims),
                    vectors,
                    plan.seed,
                )?,
                Experiment::Case2 => run_case2_experiment(
                    &plan.dims.unwrap_or_else(hundreds),
                    vectors,
                    plan.spectra_per_dim.unwrap_or(3),
                    plan.repeats,
                    plan.seed,
                )?,
                _ => run_case3_experiment_with(
                    &plan.dims.unwrap_or_else(hundreds),
                    vectors,
                    plan.spectra_per_dim.unwrap_or(1),
                    &MeanSource::NormalWithVariance(2.0),
                    plan.seed,
                )?,
            };
            write_experiment_rows(&mut buf, &res.rows)?;
            let opt = |p: Option<f64>| p.map_or_else(|| "NA".to_owned(), format_f64);
            writeln!(
                buf,
                "# pearson_variance={},pearson_mean={}",
                opt(res.pearson_variance),
                opt(res.pearson_mean)
            )?;
            points = res
                .rows
                .iter()
                .map(|r| (r.theory_variance, r.empirical_variance))
                .collect();
            title = "cosine variance: theory vs simulation";
        }
    }
    match out {
        Some(path) => {
            let mut f = create(path)?;
            f.write_all(&buf)?;
            f.flush()?;
        }
        None => stdout.write_all(&buf)?,
    }
    if let Some(path) = svg {
        let (x, y) = match plan.experiment {
            Experiment::Norm => ("sqrt(E|X|^2)", "observed mean |X|"),
            _ => ("theory", "empirical"),
        };
        std::fs::write(path, scatter_loglog(&points, title, x, y))?;
    }
    Ok(())
}

fn analyze(
    input: &Path,
    pearson_mode: bool,
    axes: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<()> {
    let mut data = load_csv(input)?;
    if pearson_mode {
        data = center_rows(&data)?;
    }
    let model = estimate_model(&data)?;
    let null = model.null_moments()?;
    let mut summary: Vec<(&str, String)> = vec![
        ("rows", data.rows().to_string()),
        ("cols", data.cols().to_string()),
        ("trace", format_f64(model.trace())),
        ("floor", format_f64(model.floor)),
        ("floored_axes", model.floored.len().to_string()),
        ("null_mean", format_f64(null.mean)),
        ("null_variance", format_f64(null.variance)),
    ];
    if let Ok(mv) = model.min_variance() {
        summary.push(("optimal_variance", format_f64(mv)));
    }
    write_table(
        stdout,
        &["quantity", "value"],
        summary.into_iter().map(|(k, v)| vec![k.to_owned(), v]),
    )?;
    if let Some(path) = axes {
        let rows = (0..data.cols()).map(|i| {
            vec![
                i.to_string(),
                format_f64(model.eigenvalues[i]),
                format_f64(model.etas.values()[i]),
                u8::from(model.floored.contains(&i)).to_string(),
            ]
        });
        let mut f = create(path)?;
        write_table(&mut f, &["axis", "eigenvalue", "eta", "floored"], rows)?;
        f.flush()?;
    }
    Ok(())
}
