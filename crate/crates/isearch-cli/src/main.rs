//! Command-line front end for innovation-search experiments.
//!
//! Subcommands mirror the library surface: `gen` writes synthetic datasets,
//! `run`/`cop`/`pca` score one data matrix, `cluster` and `correct` drive
//! the clustering branch, `sweep` runs Monte Carlo grids, and `exp` executes
//! a JSON experiment config. Exit codes: 0 on success, 2 on an invalid
//! config/spec (with field-level diagnostics), 1 on runtime failures; errors
//! are reported as a JSON object on stderr.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use isearch::cluster::{self, CorrectionOptions};
use isearch::detect::{self, PipelineConfig, Selection};
use isearch::error::Error;
use isearch::eval::{self, TrialOptions};
use isearch::mat::{read_matrix_csv, write_matrix_csv, RandomSource};
use isearch::solver::SolverOptions;
use isearch::synth::{gen_dataset, ModelSpec};
use isearch::Matrix;

use config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "isearch", version, about = "Innovation-search robust PCA and clustering")]
struct Cli {
    /// Seed for all randomized steps.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Cap on worker threads (0 = default).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Write per-trial records as JSON lines.
    #[arg(long, global = true)]
    trace: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct AdmmArgs {
    /// ADMM penalty parameter.
    #[arg(long = "admm-rho", default_value_t = 1.0)]
    rho: f64,
    /// ADMM primal/dual tolerance.
    #[arg(long = "admm-tol", default_value_t = 1e-6)]
    tol: f64,
    /// ADMM iteration cap.
    #[arg(long = "admm-max-iters", default_value_t = 2000)]
    max_iters: usize,
    /// Dump per-column solver statistics as JSON.
    #[arg(long = "solver-stats")]
    solver_stats: Option<PathBuf>,
}

impl AdmmArgs {
    fn options(&self) -> SolverOptions {
        SolverOptions {
            rho: self.rho,
            feas_tol: self.tol,
            dual_tol: self.tol,
            max_iters: self.max_iters,
            ..Default::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset directory from a model JSON file.
    Gen {
        /// Model spec (JSON, same schema as the `model` field of configs).
        #[arg(long)]
        model: PathBuf,
        /// Output directory (data.csv, labels.csv, basis.csv, meta.json).
        #[arg(long)]
        out: PathBuf,
    },
    /// Run innovation-search detection on a data matrix.
    Run {
        #[arg(long)]
        data: PathBuf,
        /// Rank of the recovered subspace.
        #[arg(long)]
        rank: usize,
        /// Keep this fraction of lowest-innovation columns instead of
        /// adaptive sampling.
        #[arg(long = "keep-fraction", conflicts_with = "adaptive")]
        keep_fraction: Option<f64>,
        /// Adaptive column sampling (the default selection rule).
        #[arg(long)]
        adaptive: bool,
        /// Residual tolerance for adaptive basis growth.
        #[arg(long = "add-tol", default_value_t = detect::ADD_TOL_NOISELESS)]
        add_tol: f64,
        /// Outlier decision threshold on normalized residuals.
        #[arg(long = "residual-threshold", default_value_t = detect::RESIDUAL_THRESHOLD_DEFAULT)]
        residual_threshold: f64,
        /// Innovation values and residual scores per column.
        #[arg(long = "out-scores")]
        out_scores: PathBuf,
        /// Recovered basis.
        #[arg(long = "out-basis")]
        out_basis: PathBuf,
        #[command(flatten)]
        admm: AdmmArgs,
    },
    /// Coherence scores for a data matrix.
    Cop {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Plain PCA basis for a data matrix.
    Pca {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Spectral clustering on the innovation affinity matrix.
    Cluster {
        #[arg(long)]
        data: PathBuf,
        #[arg(long = "num-clusters")]
        num_clusters: usize,
        /// Cluster labels, one per column.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        admm: AdmmArgs,
    },
    /// Robust cluster error correction over a directory of cluster CSVs.
    Correct {
        /// Directory of cluster matrices (cluster_*.csv, sorted by name).
        #[arg(long)]
        clusters: PathBuf,
        /// Per-cluster recovery rank.
        #[arg(long)]
        rank: usize,
        /// Corrected labels for the concatenated columns.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        admm: AdmmArgs,
    },
    /// Monte Carlo sweep from a grid JSON file.
    Sweep {
        /// Grid spec (JSON).
        #[arg(long)]
        grid: PathBuf,
        /// Output CSV (axis columns + probability).
        #[arg(long)]
        out: PathBuf,
        /// Trials per cell override.
        #[arg(long = "trials-per-cell")]
        trials_per_cell: Option<usize>,
    },
    /// Execute a JSON experiment config (any of the modes above).
    Exp {
        config: PathBuf,
        /// Parse and validate the config without running it.
        #[arg(long)]
        check: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .ok();
    }
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (code, kind) = match &err {
                Error::InvalidSpec { .. }
                | Error::Parse { .. }
                | Error::Json(_)
                | Error::InvalidInput(_) => (2u8, "config"),
                _ => (1u8, "runtime"),
            };
            let diag = serde_json::json!({
                "error": err.to_string(),
                "kind": kind,
                "field": match &err {
                    Error::InvalidSpec { field, .. } => Some(field.clone()),
                    _ => None,
                },
            });
            eprintln!("{diag}");
            ExitCode::from(code)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Gen { model, out } => {
            let text = std::fs::read_to_string(model)?;
            let spec: ModelSpec = serde_json::from_str(&text)?;
            spec.validate()?;
            let mut rng = RandomSource::new(cli.seed);
            let dataset: isearch::Dataset = gen_dataset(&spec, &mut rng)?;
            dataset.write_dir(out)?;
            println!(
                "gen: {} columns ({} outliers) -> {}",
                dataset.num_columns(),
                dataset.num_outliers(),
                out.display()
            );
            Ok(())
        }
        Command::Run {
            data,
            rank,
            keep_fraction,
            adaptive: _,
            add_tol,
            residual_threshold,
            out_scores,
            out_basis,
            admm,
        } => {
            let matrix: Matrix = read_matrix_csv(data)?;
            let selection = match keep_fraction {
                Some(f) => Selection::Fraction { keep: *f },
                None => Selection::Adaptive {
                    rank: *rank,
                    add_tol: *add_tol,
                },
            };
            let config = PipelineConfig {
                preprocess: detect::PreprocessOptions::default(),
                solver: admm.options(),
                selection,
                residual_threshold: *residual_threshold,
                accept_unconverged: true,
            };
            let output = detect::run_pipeline(&matrix.view(), &config)?;
            write_matrix_csv(out_scores, &score_table(&output).view())?;
            write_matrix_csv(out_basis, &output.recovery.basis.matrix().view())?;
            if let Some(path) = &admm.solver_stats {
                std::fs::write(
                    path,
                    serde_json::to_string_pretty(&output.directions.stats)?,
                )?;
            }
            let flagged = output.scores.verdicts.iter().filter(|&&v| v).count();
            println!(
                "run: rank={} flagged={}/{} innovation range [{:.6}, {:.6}]",
                output.recovery.basis.dim(),
                flagged,
                matrix.ncols(),
                output
                    .profile
                    .values
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min),
                output.profile.values.iter().cloned().fold(0.0, f64::max),
            );
            Ok(())
        }
        Command::Cop { data, out } => {
            let matrix: Matrix = read_matrix_csv(data)?;
            let pre = detect::preprocess(&matrix.view(), &detect::PreprocessOptions::default())?;
            let profile = isearch::baselines::coherence_values(&pre);
            let mut scores = Matrix::zeros((matrix.ncols(), 1));
            for j in 0..matrix.ncols() {
                scores[[j, 0]] = profile.values[j];
            }
            write_matrix_csv(out, &scores.view())?;
            println!("cop: wrote {} coherence values", matrix.ncols());
            Ok(())
        }
        Command::Pca { data, rank, out } => {
            let matrix: Matrix = read_matrix_csv(data)?;
            let basis = isearch::baselines::pca_recover(&matrix.view(), *rank)?;
            write_matrix_csv(out, &basis.matrix().view())?;
            println!("pca: wrote rank-{} basis", basis.dim());
            Ok(())
        }
        Command::Cluster {
            data,
            num_clusters,
            out,
            admm,
        } => {
            let matrix: Matrix = read_matrix_csv(data)?;
            let labels = cluster_data(&matrix, *num_clusters, &admm.options(), cli.seed)?;
            write_usize_csv(out, &labels)?;
            println!(
                "cluster: {} columns into {} clusters",
                labels.len(),
                num_clusters
            );
            Ok(())
        }
        Command::Correct {
            clusters,
            rank,
            out,
            admm,
        } => {
            let mut paths: Vec<PathBuf> = std::fs::read_dir(clusters)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    p.extension().is_some_and(|x| x == "csv")
                        && p.file_name()
                            .and_then(|n| n.to_str())
                            .is_some_and(|n| n.starts_with("cluster_"))
                })
                .collect();
            paths.sort();
            if paths.is_empty() {
                return Err(Error::invalid_input(format!(
                    "no cluster_*.csv files in {}",
                    clusters.display()
                )));
            }
            let matrices: Vec<Matrix> = paths
                .iter()
                .map(|p| read_matrix_csv(p))
                .collect::<Result<_, _>>()?;
            let ranks = vec![*rank; matrices.len()];
            let mut opts = CorrectionOptions::with_rank(*rank);
            opts.pipeline.solver = admm.options();
            let (bases, relabeled) = cluster::correct_clusters(&matrices, &ranks, &opts)?;
            write_usize_csv(out, &relabeled.labels)?;
            println!(
                "correct: {} clusters, {} columns reassigned",
                bases.len(),
                relabeled.labels.len()
            );
            Ok(())
        }
        Command::Sweep {
            grid,
            out,
            trials_per_cell,
        } => {
            let text = std::fs::read_to_string(grid)?;
            let mut grid: eval::GridSpec = serde_json::from_str(&text)?;
            if let Some(t) = trials_per_cell {
                grid.trials_per_cell = *t;
            }
            let opts = TrialOptions::survey();
            let (result, records) = eval::run_sweep(&grid, cli.seed, &opts)?;
            result.write_csv(out)?;
            if let Some(trace) = &cli.trace {
                eval::write_records_jsonl(trace, &records)?;
            }
            let mean: f64 = result.cells.iter().map(|c| c.probability).sum::<f64>()
                / result.cells.len() as f64;
            println!(
                "sweep: {} cells x {} trials, mean probability {:.3}",
                result.cells.len(),
                result.trials_per_cell,
                mean
            );
            Ok(())
        }
        Command::Exp { config, check } => {
            let text = std::fs::read_to_string(config)?;
            let parsed: ExperimentConfig = serde_json::from_str(&text)?;
            if *check {
                config::validate_experiment(&parsed)?;
                println!("ok: {}", config.display());
                return Ok(());
            }
            config::run_experiment(&parsed, cli.seed, cli.trace.as_deref())
        }
    }
}

/// Columns: innovation value, residual score, outlier verdict.
fn score_table(output: &detect::PipelineOutput<f64>) -> Matrix {
    let m2 = output.profile.values.len();
    let mut scores = Matrix::zeros((m2, 3));
    for j in 0..m2 {
        scores[[j, 0]] = output.profile.values[j];
        scores[[j, 1]] = output.scores.scores[j];
        scores[[j, 2]] = if output.scores.verdicts[j] { 1.0 } else { 0.0 };
    }
    scores
}

/// Innovation affinity + spectral clustering for one matrix.
fn cluster_data(
    matrix: &Matrix,
    num_clusters: usize,
    solver: &SolverOptions,
    seed: u64,
) -> Result<Vec<usize>, Error> {
    let pre = detect::preprocess(&matrix.view(), &detect::PreprocessOptions::default())?;
    let dirs = match isearch::solver::solve_all(&pre.reduced.view(), solver) {
        Ok(set) => set,
        Err(isearch::solver::SolveAllError::Invalid(e)) => return Err(e),
        Err(isearch::solver::SolveAllError::Unconverged(b)) => b.into_partial(),
    };
    let affinity = cluster::affinity_from_directions(&pre, &dirs)?;
    let mut rng = RandomSource::new(seed);
    let clustering = cluster::spectral_cluster(&affinity, num_clusters, &mut rng)?;
    Ok(clustering.labels)
}

fn write_usize_csv(path: &PathBuf, values: &[usize]) -> Result<(), Error> {
    let mut text = String::new();
    for v in values {
        text.push_str(&v.to_string());
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}
