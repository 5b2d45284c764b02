//! Metrics and Monte Carlo experiment drivers.
//!
//! A *trial* generates a dataset from a [`ModelSpec`], runs one method end to
//! end, and records recovery and detection metrics. A *sweep* runs a grid of
//! trials over named parameter axes and aggregates per-cell success
//! probabilities. Per-trial seeds derive deterministically from the master
//! seed, the cell index, and the trial index, so grids are reproducible and
//! cells are independent.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use ndarray::{ArrayView1, NdFloat};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines;
use crate::detect::{self, PipelineConfig, Selection};
use crate::error::{Error, Result};
use crate::mat::{RandomSource, SubspaceBasis};
use crate::solver::SolverOptions;
use crate::synth::{gen_dataset, Dataset, ModelSpec};

/// A trial is successful when the recovery error is below this threshold.
pub const SUCCESS_THRESHOLD: f64 = 1e-2;

/// Subspace recovery error `‖(I − UUᵀ)Û‖_F / ‖U‖_F`.
///
/// Zero iff `span(Û) ⊆ span(U)`; 1 for orthogonal spans of equal dimension.
pub fn recovery_error<F: NdFloat>(
    truth: &SubspaceBasis<F>,
    recovered: &SubspaceBasis<F>,
) -> Result<F> {
    if truth.ambient_dim() != recovered.ambient_dim() {
        return Err(Error::invalid_input(format!(
            "ambient dimensions differ: {} vs {}",
            truth.ambient_dim(),
            recovered.ambient_dim()
        )));
    }
    let residuals = truth.residual_norms(&recovered.matrix().view());
    let num = residuals
        .iter()
        .map(|&r| r * r)
        .fold(F::zero(), |a, b| a + b)
        .sqrt();
    let denom = F::from(truth.dim()).unwrap().sqrt();
    Ok(num / denom)
}

/// Exact detection: every inlier residual strictly below every outlier
/// residual. Vacuously true when either side is empty.
pub fn detection_success<F: NdFloat>(scores: &ArrayView1<F>, labels: &[bool]) -> bool {
    let mut max_inlier = F::neg_infinity();
    let mut min_outlier = F::infinity();
    for (&s, &outlier) in scores.iter().zip(labels.iter()) {
        if outlier {
            min_outlier = min_outlier.min(s);
        } else {
            max_inlier = max_inlier.max(s);
        }
    }
    max_inlier < min_outlier
}

/// Separation margin between outlier and inlier scores in a convention
/// where outliers score high: `min(outlier scores) − max(inlier scores)`.
/// Positive iff the two groups separate strictly; infinite when a side is
/// empty.
pub fn separation_margin<F: NdFloat>(scores: &ArrayView1<F>, labels: &[bool]) -> f64 {
    let mut max_inlier = F::neg_infinity();
    let mut min_outlier = F::infinity();
    for (&s, &outlier) in scores.iter().zip(labels.iter()) {
        if outlier {
            min_outlier = min_outlier.min(s);
        } else {
            max_inlier = max_inlier.max(s);
        }
    }
    (min_outlier - max_inlier).to_f64().unwrap()
}

/// Methods the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Isearch,
    Cop,
    Pca,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Isearch => "isearch",
            Method::Cop => "cop",
            Method::Pca => "pca",
        }
    }
}

/// Working scalar type for trials. Crossing to `f32` halves the memory
/// traffic of the solver on large grids; the success criteria sit far above
/// single precision, so the aggregate statistics are unaffected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    F32,
    F64,
}

/// Per-trial method knobs shared across a sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialOptions {
    pub solver: SolverOptions,
    pub residual_threshold: f64,
    /// Basis-growth tolerance; defaults to the noiseless/noisy preset based
    /// on the model's noise.
    pub add_tol: Option<f64>,
    /// Recovery rank override; defaults to the model rank.
    pub rank: Option<usize>,
    /// When set, recovery keeps this fraction of lowest-innovation columns
    /// and truncates their span at the recovery rank instead of adaptive
    /// sampling (the noise-robust recovery).
    pub keep_fraction: Option<f64>,
    pub precision: Precision,
}

impl Default for TrialOptions {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            residual_threshold: detect::RESIDUAL_THRESHOLD_DEFAULT,
            add_tol: None,
            rank: None,
            keep_fraction: None,
            precision: Precision::F64,
        }
    }
}

impl TrialOptions {
    /// Faster solver settings for large grids.
    pub fn survey() -> Self {
        Self {
            solver: SolverOptions::survey(),
            ..Default::default()
        }
    }
}

/// Everything one Monte Carlo trial produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub model: ModelSpec,
    pub method: Method,
    pub seed: u64,
    /// `‖(I − UUᵀ)Û‖_F/‖U‖_F`; infinite when the method failed outright.
    pub recovery_error: f64,
    /// `log₁₀(recovery_error)` when the error is positive and finite.
    pub log_recovery_error: Option<f64>,
    /// `recovery_error < 1e-2`.
    pub success: bool,
    /// Strict inlier/outlier separation of the projection residuals.
    pub detection_success: bool,
    /// Score separation in the method's own outlier-scoring convention:
    /// innovation values for isearch, coherence values (sign flipped) for
    /// cop, projection residuals for pca.
    pub separation_margin: f64,
    pub wall_time: f64,
    /// Failure note when the method could not produce a basis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn failed_record(
    model: &ModelSpec,
    method: Method,
    seed: u64,
    started: Instant,
    message: String,
) -> TrialRecord {
    TrialRecord {
        model: model.clone(),
        method,
        seed,
        recovery_error: f64::INFINITY,
        log_recovery_error: None,
        success: false,
        detection_success: false,
        separation_margin: f64::NEG_INFINITY,
        wall_time: started.elapsed().as_secs_f64(),
        error: Some(message),
    }
}

/// Generate a dataset from `spec` with the given seed, run `method` end to
/// end, and fill in all metrics. Method failures (rank-deficient data,
/// invalid dimensions) are folded into a failed record rather than an error.
pub fn run_trial(
    spec: &ModelSpec,
    method: Method,
    seed: u64,
    opts: &TrialOptions,
) -> TrialRecord {
    match opts.precision {
        Precision::F64 => run_trial_typed::<f64>(spec, method, seed, opts),
        Precision::F32 => run_trial_typed::<f32>(spec, method, seed, opts),
    }
}

fn run_trial_typed<F: NdFloat>(
    spec: &ModelSpec,
    method: Method,
    seed: u64,
    opts: &TrialOptions,
) -> TrialRecord {
    let started = Instant::now();
    let mut rng = RandomSource::new(seed);
    let dataset: Dataset<F> = match gen_dataset(spec, &mut rng) {
        Ok(ds) => ds,
        Err(e) => return failed_record(spec, method, seed, started, e.to_string()),
    };
    let rank = opts.rank.unwrap_or_else(|| spec.rank());
    let noisy = spec.noise_sigma.is_some_and(|s| s > 0.0);
    let add_tol = opts.add_tol.unwrap_or(if noisy {
        detect::ADD_TOL_NOISY
    } else {
        detect::ADD_TOL_NOISELESS
    });

    let (basis, margin) = match method {
        Method::Isearch => {
            let selection = match opts.keep_fraction {
                Some(keep) => Selection::FractionRank { keep, rank },
                None => Selection::Adaptive { rank, add_tol },
            };
            let config = PipelineConfig {
                preprocess: detect::PreprocessOptions::default(),
                solver: opts.solver.clone(),
                selection,
                residual_threshold: opts.residual_threshold,
                accept_unconverged: true,
            };
            let output = match detect::run_pipeline(&dataset.data.view(), &config) {
                Ok(o) => o,
                Err(e) => return failed_record(spec, method, seed, started, e.to_string()),
            };
            let margin = separation_margin(&output.profile.values.view(), &dataset.labels);
            (output.recovery.basis, margin)
        }
        Method::Cop => {
            let pre = match detect::preprocess(
                &dataset.data.view(),
                &detect::PreprocessOptions::default(),
            ) {
                Ok(p) => p,
                Err(e) => return failed_record(spec, method, seed, started, e.to_string()),
            };
            let coherence = baselines::coherence_values(&pre);
            let order = coherence.descending_order();
            let basis = match detect::adaptive_basis_by_order(&pre, &order, rank, add_tol) {
                Ok((b, _)) => b,
                Err(e) => return failed_record(spec, method, seed, started, e.to_string()),
            };
            // Coherence scores inliers high; flip the sign so the margin
            // convention (outliers high) applies.
            let flipped = coherence.values.mapv(|v| -v);
            let margin = separation_margin(&flipped.view(), &dataset.labels);
            (basis, margin)
        }
        Method::Pca => {
            let basis = match baselines::pca_recover(&dataset.data.view(), rank) {
                Ok(b) => b,
                Err(e) => return failed_record(spec, method, seed, started, e.to_string()),
            };
            let scores = detect::detect_outliers(
                &dataset.data.view(),
                &basis,
                opts.residual_threshold,
            );
            let margin = separation_margin(&scores.scores.view(), &dataset.labels);
            (basis, margin)
        }
    };

    let error = match recovery_error(&dataset.truth_basis, &basis) {
        Ok(e) => e.to_f64().unwrap(),
        Err(e) => return failed_record(spec, method, seed, started, e.to_string()),
    };
    let scores = detect::detect_outliers(&dataset.data.view(), &basis, opts.residual_threshold);
    let detection = detection_success(&scores.scores.view(), &dataset.labels);
    TrialRecord {
        model: spec.clone(),
        method,
        seed,
        recovery_error: error,
        log_recovery_error: (error > 0.0 && error.is_finite()).then(|| error.log10()),
        success: error < SUCCESS_THRESHOLD,
        detection_success: detection,
        separation_margin: margin,
        wall_time: started.elapsed().as_secs_f64(),
        error: None,
    }
}

/// Which per-trial flag a sweep aggregates into the cell probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuccessKind {
    Recovery,
    Detection,
    Separation,
}

impl SuccessKind {
    fn holds(&self, record: &TrialRecord) -> bool {
        match self {
            SuccessKind::Recovery => record.success,
            SuccessKind::Detection => record.detection_success,
            SuccessKind::Separation => record.separation_margin > 0.0,
        }
    }
}

/// One sweep axis: either a named model parameter or the method itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridAxis {
    Param { name: String, values: Vec<f64> },
    Method { methods: Vec<Method> },
}

impl GridAxis {
    fn name(&self) -> &str {
        match self {
            GridAxis::Param { name, .. } => name,
            GridAxis::Method { .. } => "method",
        }
    }

    fn len(&self) -> usize {
        match self {
            GridAxis::Param { values, .. } => values.len(),
            GridAxis::Method { methods } => methods.len(),
        }
    }
}

/// A full sweep description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub base: ModelSpec,
    /// Method used when no method axis is present.
    pub method: Method,
    pub axes: Vec<GridAxis>,
    pub trials_per_cell: usize,
    pub criterion: SuccessKind,
}

/// Aggregated sweep results: one success probability per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub axis_names: Vec<String>,
    /// Cell coordinates (formatted) and probabilities, last axis fastest.
    pub cells: Vec<SweepCell>,
    pub trials_per_cell: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub coords: Vec<String>,
    pub probability: f64,
}

impl SweepGrid {
    /// CSV with a header of axis names plus `probability`, one row per cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for name in &self.axis_names {
            out.push_str(name);
            out.push(',');
        }
        out.push_str("probability\n");
        for cell in &self.cells {
            for c in &cell.coords {
                out.push_str(c);
                out.push(',');
            }
            writeln!(out, "{}", cell.probability).expect("write to string");
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Set a named parameter on a model spec. Supported axes: `n_i`, `n_o`,
/// `n_i_over_r`, `n_o_over_m1`, `eta`, `gamma`, `snr`, `sigma_n`.
pub fn apply_axis(spec: &ModelSpec, name: &str, value: f64) -> Result<ModelSpec> {
    use crate::synth::{InlierModel, OutlierModel};
    let mut out = spec.clone();
    let as_count = |v: f64, field: &str| -> Result<usize> {
        if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
            return Err(Error::invalid_spec(
                field,
                format!("value {v} is not a nonnegative integer"),
            ));
        }
        Ok(v as usize)
    };
    match name {
        "n_i" => out.num_inliers = as_count(value, "n_i")?,
        "n_o" => out.num_outliers = as_count(value, "n_o")?,
        "n_i_over_r" => {
            out.num_inliers = as_count(value * spec.rank() as f64, "n_i_over_r")?;
        }
        "n_o_over_m1" => {
            out.num_outliers = as_count(value * spec.ambient_dim as f64, "n_o_over_m1")?;
        }
        "eta" => match &mut out.outliers {
            OutlierModel::Clustered { eta, .. } | OutlierModel::Mixed { eta, .. } => *eta = value,
            _ => {
                return Err(Error::invalid_spec(
                    "eta",
                    "outlier model has no eta parameter",
                ))
            }
        },
        "gamma" => match &mut out.inliers {
            InlierModel::Clustered { gamma, .. } => *gamma = value,
            _ => {
                return Err(Error::invalid_spec(
                    "gamma",
                    "inlier model has no gamma parameter",
                ))
            }
        },
        "snr" => {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::invalid_spec("snr", "must be positive"));
            }
            out.noise_sigma = Some(1.0 / value.sqrt());
        }
        "sigma_n" => out.noise_sigma = Some(value),
        other => {
            return Err(Error::invalid_spec(
                "axes",
                format!("unknown axis name {other:?}"),
            ))
        }
    }
    Ok(out)
}

fn format_axis_value(v: f64) -> String {
    format!("{v}")
}

/// Deterministic per-trial seed from master seed, cell index, and trial
/// index (splitmix64 chain).
pub fn derive_trial_seed(master: u64, cell: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ cell) ^ trial)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Run every cell of the grid. Cells are evaluated in row-major order (last
/// axis fastest); the returned records are ordered cell-major, trial-minor,
/// and the whole sweep is a pure function of the grid and the master seed.
pub fn run_sweep(
    grid: &GridSpec,
    master_seed: u64,
    opts: &TrialOptions,
) -> Result<(SweepGrid, Vec<TrialRecord>)> {
    if grid.axes.is_empty() {
        return Err(Error::invalid_spec("axes", "sweep needs at least one axis"));
    }
    if grid.trials_per_cell == 0 {
        return Err(Error::invalid_spec("trials_per_cell", "must be positive"));
    }
    for axis in &grid.axes {
        if axis.len() == 0 {
            return Err(Error::invalid_spec("axes", "axis has no values"));
        }
    }
    let num_cells: usize = grid.axes.iter().map(GridAxis::len).product();
    let mut cell_specs = Vec::with_capacity(num_cells);
    let mut coords_per_cell = Vec::with_capacity(num_cells);
    let mut indices = vec![0usize; grid.axes.len()];
    for cell_idx in 0..num_cells {
        // Decode the row-major cell index into per-axis positions.
        let mut rest = cell_idx;
        for (a, axis) in grid.axes.iter().enumerate().rev() {
            indices[a] = rest % axis.len();
            rest /= axis.len();
        }
        let mut spec = grid.base.clone();
        let mut method = grid.method;
        let mut coords = Vec::with_capacity(grid.axes.len());
        for (axis, &pos) in grid.axes.iter().zip(indices.iter()) {
            match axis {
                GridAxis::Param { name, values } => {
                    spec = apply_axis(&spec, name, values[pos])?;
                    coords.push(format_axis_value(values[pos]));
                }
                GridAxis::Method { methods } => {
                    method = methods[pos];
                    coords.push(methods[pos].name().to_string());
                }
            }
        }
        spec.validate()?;
        cell_specs.push((spec, method));
        coords_per_cell.push(coords);
    }

    // Trials are independent with derived seeds; the ordered collect keeps
    // the aggregation deterministic whatever the thread count.
    let records: Vec<TrialRecord> = (0..num_cells * grid.trials_per_cell)
        .into_par_iter()
        .map(|job| {
            let cell_idx = job / grid.trials_per_cell;
            let trial = job % grid.trials_per_cell;
            let (spec, method) = &cell_specs[cell_idx];
            let seed = derive_trial_seed(master_seed, cell_idx as u64, trial as u64);
            run_trial(spec, *method, seed, opts)
        })
        .collect();

    let cells = coords_per_cell
        .into_iter()
        .enumerate()
        .map(|(cell_idx, coords)| {
            let slice =
                &records[cell_idx * grid.trials_per_cell..(cell_idx + 1) * grid.trials_per_cell];
            let successes = slice.iter().filter(|r| grid.criterion.holds(r)).count();
            SweepCell {
                coords,
                probability: successes as f64 / grid.trials_per_cell as f64,
            }
        })
        .collect();
    Ok((
        SweepGrid {
            axis_names: grid.axes.iter().map(|a| a.name().to_string()).collect(),
            cells,
            trials_per_cell: grid.trials_per_cell,
        },
        records,
    ))
}

/// Append records as JSON lines.
pub fn write_records_jsonl(path: &Path, records: &[TrialRecord]) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}
