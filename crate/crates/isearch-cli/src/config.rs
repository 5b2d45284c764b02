//! JSON experiment configs: one file describes a full reproducible run.
//!
//! A config either embeds a generation model (the data is synthesized from
//! the seed) or points at a data CSV. The `mode` selects what happens;
//! outputs are written to the declared paths and a one-line summary goes to
//! stdout.

use std::path::{Path, PathBuf};

use isearch::cluster::{self, CorrectionOptions};
use isearch::detect::{self, PipelineConfig, Selection};
use isearch::error::Error;
use isearch::eval::{self, separation_margin, GridSpec, TrialOptions};
use isearch::mat::{read_matrix_csv, write_matrix_csv, RandomSource};
use isearch::solver::SolverOptions;
use isearch::synth::{gen_dataset, ModelSpec};
use isearch::{Dataset, Matrix};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Gen,
    Run,
    Cop,
    Pca,
    Cluster,
    Correct,
    Sweep,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keep_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub add_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_clusters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub admm_rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub admm_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub admm_max_iters: Option<usize>,
}

impl MethodOptions {
    fn solver(&self) -> SolverOptions {
        let mut opts = SolverOptions::default();
        if let Some(rho) = self.admm_rho {
            opts.rho = rho;
        }
        if let Some(tol) = self.admm_tol {
            opts.feas_tol = tol;
            opts.dual_tol = tol;
        }
        if let Some(iters) = self.admm_max_iters {
            opts.max_iters = iters;
        }
        opts
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoPaths {
    /// Input data CSV (alternative to generating from `model`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    /// Directory of cluster_*.csv files for `correct` mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clusters: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_scores: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_basis: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_labels: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_grid: Option<PathBuf>,
    /// Dataset directory for `gen` mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

/// A fully declared experiment. Round-trips losslessly through JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials_per_cell: Option<usize>,
    #[serde(default)]
    pub method: MethodOptions,
    #[serde(default)]
    pub io: IoPaths,
}

fn require<'a, T>(value: &'a Option<T>, field: &str) -> Result<&'a T, Error> {
    value
        .as_ref()
        .ok_or_else(|| Error::invalid_spec(field, "required for this mode"))
}

/// Data for single-matrix modes: read from `io.data` or generate from the
/// embedded model. Labels are only known in the generated case.
fn load_data(
    config: &ExperimentConfig,
    seed: u64,
) -> Result<(Matrix, Option<Vec<bool>>), Error> {
    match (&config.io.data, &config.model) {
        (Some(path), _) => Ok((read_matrix_csv(path)?, None)),
        (None, Some(model)) => {
            model.validate()?;
            let mut rng = RandomSource::new(seed);
            let dataset: Dataset = gen_dataset(model, &mut rng)?;
            Ok((dataset.data.clone(), Some(dataset.labels)))
        }
        (None, None) => Err(Error::invalid_spec(
            "io.data",
            "either io.data or model must be given",
        )),
    }
}

/// Validate mode requirements and the embedded model/grid without running.
pub fn validate_experiment(config: &ExperimentConfig) -> Result<(), Error> {
    if let Some(model) = &config.model {
        model.validate()?;
    }
    if let Some(grid) = &config.grid {
        grid.base.validate()?;
    }
    match config.mode {
        Mode::Gen => {
            require(&config.model, "model")?;
            require(&config.io.out_dir, "io.out_dir")?;
        }
        Mode::Run | Mode::Cop | Mode::Pca | Mode::Cluster => {
            if config.io.data.is_none() && config.model.is_none() {
                return Err(Error::invalid_spec(
                    "io.data",
                    "either io.data or model must be given",
                ));
            }
            if config.mode == Mode::Cluster {
                require(&config.method.num_clusters, "method.num_clusters")?;
            }
        }
        Mode::Correct => {
            require(&config.io.clusters, "io.clusters")?;
            require(&config.method.rank, "method.rank")?;
        }
        Mode::Sweep => {
            require(&config.grid, "grid")?;
            require(&config.io.out_grid, "io.out_grid")?;
        }
    }
    Ok(())
}

pub fn run_experiment(
    config: &ExperimentConfig,
    cli_seed: u64,
    trace: Option<&Path>,
) -> Result<(), Error> {
    let seed = config.seed.unwrap_or(cli_seed);
    match config.mode {
        Mode::Gen => {
            let model = require(&config.model, "model")?;
            model.validate()?;
            let out_dir = require(&config.io.out_dir, "io.out_dir")?;
            let mut rng = RandomSource::new(seed);
            let dataset: Dataset = gen_dataset(model, &mut rng)?;
            dataset.write_dir(out_dir)?;
            println!(
                "gen: {} columns ({} outliers) -> {}",
                dataset.num_columns(),
                dataset.num_outliers(),
                out_dir.display()
            );
            Ok(())
        }
        Mode::Run => {
            let rank = match (&config.method.rank, &config.model) {
                (Some(r), _) => *r,
                (None, Some(m)) => m.rank(),
                (None, None) => return Err(Error::invalid_spec("method.rank", "required")),
            };
            let (matrix, labels) = load_data(config, seed)?;
            let noisy = config
                .model
                .as_ref()
                .and_then(|m| m.noise_sigma)
                .is_some_and(|s| s > 0.0);
            let add_tol = config.method.add_tol.unwrap_or(if noisy {
                detect::ADD_TOL_NOISY
            } else {
                detect::ADD_TOL_NOISELESS
            });
            let selection = match config.method.keep_fraction {
                Some(keep) => Selection::Fraction { keep },
                None => Selection::Adaptive { rank, add_tol },
            };
            let pipeline = PipelineConfig {
                preprocess: detect::PreprocessOptions::default(),
                solver: config.method.solver(),
                selection,
                residual_threshold: config
                    .method
                    .residual_threshold
                    .unwrap_or(detect::RESIDUAL_THRESHOLD_DEFAULT),
                accept_unconverged: true,
            };
            let output = detect::run_pipeline(&matrix.view(), &pipeline)?;
            if let Some(path) = &config.io.out_scores {
                let m2 = matrix.ncols();
                let mut scores = Matrix::zeros((m2, 3));
                for j in 0..m2 {
                    scores[[j, 0]] = output.profile.values[j];
                    scores[[j, 1]] = output.scores.scores[j];
                    scores[[j, 2]] = if output.scores.verdicts[j] { 1.0 } else { 0.0 };
                }
                write_matrix_csv(path, &scores.view())?;
            }
            if let Some(path) = &config.io.out_basis {
                write_matrix_csv(path, &output.recovery.basis.matrix().view())?;
            }
            let flagged = output.scores.verdicts.iter().filter(|&&v| v).count();
            match labels {
                Some(labels) => {
                    let margin = separation_margin(&output.profile.values.view(), &labels);
                    println!(
                        "run: rank={} flagged={}/{} separation_margin={margin:.6}",
                        output.recovery.basis.dim(),
                        flagged,
                        matrix.ncols()
                    );
                }
                None => println!(
                    "run: rank={} flagged={}/{}",
                    output.recovery.basis.dim(),
                    flagged,
                    matrix.ncols()
                ),
            }
            Ok(())
        }
        Mode::Cop => {
            let (matrix, labels) = load_data(config, seed)?;
            let pre = detect::preprocess(&matrix.view(), &detect::PreprocessOptions::default())?;
            let profile = isearch::baselines::coherence_values(&pre);
            if let Some(path) = &config.io.out_scores {
                let mut scores = Matrix::zeros((matrix.ncols(), 1));
                for j in 0..matrix.ncols() {
                    scores[[j, 0]] = profile.values[j];
                }
                write_matrix_csv(path, &scores.view())?;
            }
            match labels {
                Some(labels) => {
                    let flipped = profile.values.mapv(|v| -v);
                    let margin = separation_margin(&flipped.view(), &labels);
                    println!("cop: {} columns separation_margin={margin:.6}", matrix.ncols());
                }
                None => println!("cop: {} columns", matrix.ncols()),
            }
            Ok(())
        }
        Mode::Pca => {
            let rank = match (&config.method.rank, &config.model) {
                (Some(r), _) => *r,
                (None, Some(m)) => m.rank(),
                (None, None) => return Err(Error::invalid_spec("method.rank", "required")),
            };
            let (matrix, _) = load_data(config, seed)?;
            let basis = isearch::baselines::pca_recover(&matrix.view(), rank)?;
            if let Some(path) = &config.io.out_basis {
                write_matrix_csv(path, &basis.matrix().view())?;
            }
            println!("pca: rank={}", basis.dim());
            Ok(())
        }
        Mode::Cluster => {
            let num_clusters = *require(&config.method.num_clusters, "method.num_clusters")?;
            let (matrix, _) = load_data(config, seed)?;
            let pre = detect::preprocess(&matrix.view(), &detect::PreprocessOptions::default())?;
            let dirs = match isearch::solver::solve_all(&pre.reduced.view(), &config.method.solver())
            {
                Ok(set) => set,
                Err(isearch::solver::SolveAllError::Invalid(e)) => return Err(e),
                Err(isearch::solver::SolveAllError::Unconverged(b)) => b.into_partial(),
            };
            let affinity = cluster::affinity_from_directions(&pre, &dirs)?;
            let mut rng = RandomSource::new(seed);
            let clustering = cluster::spectral_cluster(&affinity, num_clusters, &mut rng)?;
            if let Some(path) = &config.io.out_labels {
                write_labels(path, &clustering.labels)?;
            }
            println!(
                "cluster: {} columns into {} clusters",
                clustering.labels.len(),
                num_clusters
            );
            Ok(())
        }
        Mode::Correct => {
            let dir = require(&config.io.clusters, "io.clusters")?;
            let rank = *require(&config.method.rank, "method.rank")?;
            let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
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
                return Err(Error::invalid_spec(
                    "io.clusters",
                    format!("no cluster_*.csv files in {}", dir.display()),
                ));
            }
            let matrices: Vec<Matrix> = paths
                .iter()
                .map(|p| read_matrix_csv(p))
                .collect::<Result<_, _>>()?;
            let ranks = vec![rank; matrices.len()];
            let mut opts = CorrectionOptions::with_rank(rank);
            opts.pipeline.solver = config.method.solver();
            let (bases, relabeled) = cluster::correct_clusters(&matrices, &ranks, &opts)?;
            if let Some(path) = &config.io.out_labels {
                write_labels(path, &relabeled.labels)?;
            }
            println!(
                "correct: {} clusters, {} columns",
                bases.len(),
                relabeled.labels.len()
            );
            Ok(())
        }
        Mode::Sweep => {
            let mut grid: GridSpec = require(&config.grid, "grid")?.clone();
            if let Some(t) = config.trials_per_cell {
                grid.trials_per_cell = t;
            }
            let out = require(&config.io.out_grid, "io.out_grid")?;
            let mut opts = TrialOptions::survey();
            opts.solver = config.method.solver_or_survey();
            if let Some(t) = config.method.residual_threshold {
                opts.residual_threshold = t;
            }
            if let Some(a) = config.method.add_tol {
                opts.add_tol = Some(a);
            }
            if let Some(r) = config.method.rank {
                opts.rank = Some(r);
            }
            if let Some(k) = config.method.keep_fraction {
                opts.keep_fraction = Some(k);
            }
            let (result, records) = eval::run_sweep(&grid, seed, &opts)?;
            result.write_csv(out)?;
            if let Some(trace) = trace {
                eval::write_records_jsonl(trace, &records)?;
            }
            let mean: f64 = result.cells.iter().map(|c| c.probability).sum::<f64>()
                / result.cells.len() as f64;
            println!(
                "sweep: {} cells x {} trials, mean probability {:.3}",
                result.cells.len(),
                result.trials_per_cell
            ,
                mean
            );
            Ok(())
        }
    }
}

impl MethodOptions {
    /// Sweep solver defaults favor throughput; explicit fields override.
    fn solver_or_survey(&self) -> SolverOptions {
        let mut opts = SolverOptions::survey();
        if let Some(rho) = self.admm_rho {
            opts.rho = rho;
        }
        if let Some(tol) = self.admm_tol {
            opts.feas_tol = tol;
            opts.dual_tol = tol;
        }
        if let Some(iters) = self.admm_max_iters {
            opts.max_iters = iters;
        }
        opts
    }
}

fn write_labels(path: &Path, labels: &[usize]) -> Result<(), Error> {
    let mut text = String::new();
    for l in labels {
        text.push_str(&l.to_string());
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}
