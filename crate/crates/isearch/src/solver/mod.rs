//! Direction-search solver.
//!
//! For a data matrix `D` with unit columns and a target column `d`, the
//! direction of innovation is the optimum of the convex program
//!
//! ```text
//!     min ‖cᵀD‖₁   subject to   cᵀd = 1 .
//! ```
//!
//! The solver is ADMM on the splitting `z = Dᵀc`:
//!
//! * c-update: equality-constrained least squares, solved in closed form
//!   through the KKT system `ρDDᵀ c + λ d = ρD(z − u)`, `dᵀc = 1`, with a
//!   Cholesky factorization of `ρDDᵀ` (plus a 1e-10 ridge when the Gram
//!   matrix is numerically singular) computed once and shared by every
//!   column.
//! * z-update: soft thresholding at `1/ρ`.
//! * u-update: standard scaled dual ascent.
//!
//! Initialization is `c₀ = d`, `z₀ = Dᵀd`, `u₀ = 0`; `d` is always feasible,
//! so the starting objective is bounded. Iterations stop when the primal
//! residual `‖Dᵀc − z‖₂/√M2` and the dual change `ρ‖z − z_prev‖₂/√M2` both
//! fall below their tolerances. The c-update satisfies `cᵀd = 1` to machine
//! precision at every iterate, which makes the reported objective `‖Dᵀc‖₁`
//! an upper bound on the optimum at all times.
//!
//! [`solve_all`] batches columns into blocks so that the two matrix products
//! per iteration run as GEMMs; converged columns are frozen at their own
//! stopping iteration (their iterates match a stand-alone solve up to kernel
//! summation order) and the active block is compacted as columns finish.

mod admm;
mod oracle;

pub use admm::{solve_all, solve_direction, SolveAllError};
pub use oracle::lp_oracle_direction;

use ndarray::{Array1, Array2, ArrayView2, NdFloat};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::mat::cast;

/// ADMM parameters. Tolerances are absolute on the √M2-scaled residuals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverOptions {
    pub rho: f64,
    pub feas_tol: f64,
    pub dual_tol: f64,
    pub max_iters: usize,
    /// Number of columns solved together per GEMM block.
    pub block_size: usize,
    /// Over-relaxation factor α ∈ [1, 2); 1 disables it. Values around 1.8
    /// typically cut the iteration count roughly in half.
    pub over_relaxation: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rho: 1.0,
            feas_tol: 1e-6,
            dual_tol: 1e-6,
            max_iters: 2000,
            block_size: 128,
            over_relaxation: 1.0,
        }
    }
}

impl SolverOptions {
    /// Looser tolerances and over-relaxation for large Monte Carlo runs
    /// where only the ranking of the objectives matters.
    pub fn survey() -> Self {
        Self {
            feas_tol: 1e-4,
            dual_tol: 1e-4,
            max_iters: 600,
            over_relaxation: 1.8,
            ..Self::default()
        }
    }
}

/// One column's direction-search instance: the (reduced, unit-column) data
/// and the index of the constraint column.
#[derive(Debug, Clone)]
pub struct DirectionProblem<F> {
    data: Array2<F>,
    target_index: usize,
}

impl<F: NdFloat> DirectionProblem<F> {
    pub fn new(data: Array2<F>, target_index: usize) -> Result<Self> {
        crate::mat::ensure_finite("DirectionProblem", &data.view())?;
        if target_index >= data.ncols() {
            return Err(Error::invalid_input(format!(
                "target index {target_index} out of range for {} columns",
                data.ncols()
            )));
        }
        let col = data.column(target_index);
        let norm = col.dot(&col).sqrt();
        if (norm - F::one()).abs() > cast(1e-6) {
            return Err(Error::invalid_input(format!(
                "target column must have unit norm, got {norm:?}"
            )));
        }
        Ok(Self { data, target_index })
    }

    pub fn data(&self) -> &Array2<F> {
        &self.data
    }

    pub fn target_index(&self) -> usize {
        self.target_index
    }
}

/// Per-column solver diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnStats {
    pub iterations: usize,
    /// `‖Dᵀc − z‖₂ / √M2` at termination.
    pub primal_residual: f64,
    /// `ρ‖z − z_prev‖₂ / √M2` at termination.
    pub dual_residual: f64,
    pub converged: bool,
}

/// A solved direction for one column.
#[derive(Debug, Clone)]
pub struct Direction<F> {
    pub direction: Array1<F>,
    pub objective: F,
    pub stats: ColumnStats,
}

/// The solver hit `max_iters`; the last iterate is still feasible
/// (`cᵀd = 1`), so callers that only need a ranking may accept it.
#[derive(Debug, Error)]
#[error(
    "direction search did not converge in {} iterations (primal {:.3e}, dual {:.3e})",
    .last.stats.iterations, .last.stats.primal_residual, .last.stats.dual_residual
)]
pub struct Unconverged<F: std::fmt::Debug> {
    pub last: Direction<F>,
}

/// All per-column optimal directions for a data matrix.
#[derive(Debug, Clone)]
pub struct DirectionSet<F> {
    /// `r_d × M2`; column `i` is the direction for target column `i`.
    pub directions: Array2<F>,
    /// `‖Dᵀc*_i‖₁` per column.
    pub objectives: Array1<F>,
    pub stats: Vec<ColumnStats>,
}

impl<F: NdFloat> DirectionSet<F> {
    pub fn num_columns(&self) -> usize {
        self.objectives.len()
    }

    pub fn unconverged_columns(&self) -> Vec<usize> {
        self.stats
            .iter()
            .enumerate()
            .filter(|(_, s)| !s.converged)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Some columns of a batched solve hit the iteration cap. The partial set
/// carries the last iterates for every column, converged or not.
#[derive(Debug, Error)]
#[error("{} of {} columns did not converge (first: {:?})", .columns.len(), .partial.objectives.len(), .columns.first())]
pub struct BatchUnconverged<F: std::fmt::Debug> {
    pub partial: DirectionSet<F>,
    pub columns: Vec<usize>,
}

impl<F: std::fmt::Debug + NdFloat> BatchUnconverged<F> {
    /// Accept the partial result, discarding convergence bookkeeping.
    pub fn into_partial(self) -> DirectionSet<F> {
        self.partial
    }
}

pub(crate) fn validate_unit_columns<F: NdFloat>(data: &ArrayView2<F>) -> Result<()> {
    crate::mat::ensure_finite("solve_all", data)?;
    for (i, col) in data.columns().into_iter().enumerate() {
        let norm = col.dot(&col).sqrt();
        if (norm - F::one()).abs() > cast(1e-6) {
            return Err(Error::invalid_input(format!(
                "column {i} must have unit norm, got {norm:?}"
            )));
        }
    }
    Ok(())
}
