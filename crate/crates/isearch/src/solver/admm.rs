use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView2, NdFloat};
use rayon::prelude::*;

use super::{
    BatchUnconverged, ColumnStats, Direction, DirectionProblem, DirectionSet, SolverOptions,
    Unconverged,
};
use crate::error::Error;
use crate::mat::{cast, Cholesky};

/// Validation or convergence failure of a batched solve.
#[derive(Debug, thiserror::Error)]
pub enum SolveAllError<F: std::fmt::Debug> {
    #[error(transparent)]
    Invalid(#[from] Error),
    #[error(transparent)]
    Unconverged(#[from] BatchUnconverged<F>),
}

/// Solve the direction-search program for every column of `data`.
///
/// The Gram factorization is computed once and shared; per-column solves
/// differ only in the rank-one KKT border. Columns are processed in GEMM
/// blocks of `opts.block_size` and each column stops at its own convergence
/// iteration, so the result matches per-column solves up to kernel summation
/// order. Deterministic given identical inputs and options.
///
/// On iteration-cap exhaustion the error carries the full partial result;
/// every column (converged or not) holds its last feasible iterate.
#[allow(clippy::result_large_err)] // the error intentionally carries the partial result
pub fn solve_all<F: NdFloat>(
    data: &ArrayView2<F>,
    opts: &SolverOptions,
) -> Result<DirectionSet<F>, SolveAllError<F>> {
    super::validate_unit_columns(data)?;
    let targets: Vec<usize> = (0..data.ncols()).collect();
    let set = solve_targets(data, &targets, opts)?;
    let unconverged = set.unconverged_columns();
    if unconverged.is_empty() {
        Ok(set)
    } else {
        Err(BatchUnconverged {
            partial: set,
            columns: unconverged,
        }
        .into())
    }
}

/// Solve the program for a single target column.
pub fn solve_direction<F: NdFloat>(
    p: &DirectionProblem<F>,
    opts: &SolverOptions,
) -> Result<Direction<F>, Unconverged<F>> {
    let set = solve_targets(&p.data().view(), &[p.target_index()], opts)
        .expect("DirectionProblem is validated on construction");
    let direction = Direction {
        direction: set.directions.column(0).to_owned(),
        objective: set.objectives[0],
        stats: set.stats[0].clone(),
    };
    if direction.stats.converged {
        Ok(direction)
    } else {
        Err(Unconverged { last: direction })
    }
}

/// Shared-factorization ADMM over an arbitrary subset of target columns.
/// `stats[k]` corresponds to `targets[k]`.
pub(crate) fn solve_targets<F: NdFloat>(
    data: &ArrayView2<F>,
    targets: &[usize],
    opts: &SolverOptions,
) -> Result<DirectionSet<F>, Error> {
    if opts.rho <= 0.0 || opts.feas_tol <= 0.0 || opts.dual_tol <= 0.0 || opts.max_iters == 0 {
        return Err(Error::invalid_input(
            "solver options must be positive (rho, tolerances, max_iters)",
        ));
    }
    if !(1.0..2.0).contains(&opts.over_relaxation) {
        return Err(Error::invalid_input(
            "over_relaxation must lie in [1, 2)",
        ));
    }
    let (rd, m2) = data.dim();
    let rho = cast::<F>(opts.rho);

    // G = ρDDᵀ, factorized once per call.
    let mut gram = Array2::zeros((rd, rd));
    general_mat_mul(rho, data, &data.t(), F::zero(), &mut gram);
    let chol = Cholesky::factor_with_ridge(&gram.view())?;
    // Border vectors G⁻¹d_j and their Schur denominators dⱼᵀG⁻¹dⱼ.
    let ginv_d = chol.solve_matrix(data);
    let denom: Vec<F> = (0..m2)
        .map(|j| data.column(j).dot(&ginv_d.column(j)))
        .collect();

    let block = opts.block_size.max(1);
    let ranges: Vec<(usize, usize)> = (0..targets.len())
        .step_by(block)
        .map(|s| (s, (s + block).min(targets.len())))
        .collect();
    // Blocks are independent; results are assembled by index, so the outcome
    // does not depend on scheduling.
    let blocks: Vec<BlockResult<F>> = ranges
        .par_iter()
        .map(|&(s, e)| solve_block(data, &chol, &ginv_d, &denom, &targets[s..e], opts, rho))
        .collect();

    let mut directions = Array2::zeros((rd, targets.len()));
    let mut objectives = Array1::zeros(targets.len());
    let mut stats: Vec<ColumnStats> = Vec::with_capacity(targets.len());
    for (&(s, e), block) in ranges.iter().zip(blocks) {
        directions
            .slice_mut(s![.., s..e])
            .assign(&block.directions);
        for (k, (obj, stat)) in block
            .objectives
            .into_iter()
            .zip(block.stats)
            .enumerate()
        {
            objectives[s + k] = obj;
            stats.push(stat);
        }
    }

    Ok(DirectionSet {
        directions,
        objectives,
        stats,
    })
}

struct BlockResult<F> {
    directions: Array2<F>,
    objectives: Vec<F>,
    stats: Vec<ColumnStats>,
}

/// ADMM iterations for one block of target columns. State matrices are laid
/// out with one row per active column so the scalar updates stream over
/// contiguous memory; the two per-iteration GEMMs carry the `O(r_d·M2)` work.
fn solve_block<F: NdFloat>(
    data: &ArrayView2<F>,
    chol: &Cholesky<F>,
    ginv_d: &Array2<F>,
    denom: &[F],
    block_targets: &[usize],
    opts: &SolverOptions,
    rho: F,
) -> BlockResult<F> {
    let (rd, m2) = data.dim();
    let b0 = block_targets.len();
    let kappa = F::one() / rho;
    let scale = cast::<F>((m2 as f64).sqrt());
    let feas_tol = cast::<F>(opts.feas_tol) * scale;
    let dual_tol = cast::<F>(opts.dual_tol) * scale;

    let mut directions = Array2::zeros((rd, b0));
    let mut objectives = vec![F::zero(); b0];
    let mut stats = vec![
        ColumnStats {
            iterations: 0,
            primal_residual: f64::INFINITY,
            dual_residual: f64::INFINITY,
            converged: false,
        };
        b0
    ];

    // active[l] = (slot within the block, global column index).
    let mut active: Vec<(usize, usize)> = block_targets.iter().copied().enumerate().collect();

    let alpha = cast::<F>(opts.over_relaxation);
    let one_minus_alpha = F::one() - alpha;
    let mut c_t = Array2::<F>::zeros((b0, rd)); // row l = c for active[l]
    let mut z_t = Array2::<F>::zeros((b0, m2));
    let mut u_t = Array2::<F>::zeros((b0, m2));
    let mut v_t = Array2::<F>::zeros((b0, m2));
    let mut t_t = Array2::<F>::zeros((b0, m2));
    // Exact-size KKT right-hand-side block; rebuilt on compaction so the
    // in-place batched solve always sees contiguous storage.
    let mut rhs = Array2::<F>::zeros((rd, b0));

    // c₀ = d, z₀ = Dᵀd, u₀ = 0.
    for (l, &(_, j)) in active.iter().enumerate() {
        for (x, &y) in c_t.row_mut(l).iter_mut().zip(data.column(j).iter()) {
            *x = y;
        }
    }
    general_mat_mul(
        F::one(),
        &c_t.slice(s![0..b0, ..]),
        data,
        F::zero(),
        &mut z_t.slice_mut(s![0..b0, ..]),
    );

    for iter in 1..=opts.max_iters {
        let b = active.len();

        // v = z − u
        {
            let z = z_t.slice(s![0..b, ..]);
            let u = u_t.slice(s![0..b, ..]);
            let mut v = v_t.slice_mut(s![0..b, ..]);
            v.assign(&z);
            v -= &u;
        }
        // rhs = ρ·D·v, then solve G·W = rhs in place.
        general_mat_mul(
            rho,
            data,
            &v_t.slice(s![0..b, ..]).t(),
            F::zero(),
            &mut rhs,
        );
        chol.solve_in_place_rows(&mut rhs);
        // Rank-one border: c = w − λ·G⁻¹d with λ chosen so dᵀc = 1.
        for (l, &(_, j)) in active.iter().enumerate() {
            let d_col = data.column(j);
            let w_col = rhs.column(l);
            let lambda = (d_col.dot(&w_col) - F::one()) / denom[j];
            let g_col = ginv_d.column(j);
            for (t, x) in c_t.row_mut(l).iter_mut().enumerate() {
                *x = w_col[t] - lambda * g_col[t];
            }
        }
        // t = Dᵀc (one row per column, contiguous for the scalar pass)
        general_mat_mul(
            F::one(),
            &c_t.slice(s![0..b, ..]),
            data,
            F::zero(),
            &mut t_t.slice_mut(s![0..b, ..]),
        );

        // z/u updates + per-column residuals, then freeze finished columns.
        let mut finished: Vec<usize> = Vec::new();
        #[allow(clippy::needless_range_loop)]
        for l in 0..b {
            let t_row = t_t.row(l);
            let t_row = t_row.as_slice().expect("row-major");
            let z_row = z_t.row_mut(l);
            let z_row = z_row.into_slice().expect("row-major");
            let u_row = u_t.row_mut(l);
            let u_row = u_row.into_slice().expect("row-major");
            let mut primal_sq = F::zero();
            let mut dual_sq = F::zero();
            for t in 0..m2 {
                // Over-relaxed splitting input; α = 1 reduces to plain ADMM.
                let t_hat = alpha * t_row[t] + one_minus_alpha * z_row[t];
                let v = t_hat + u_row[t];
                let mag = v.abs() - kappa;
                let z_new = if mag > F::zero() {
                    v.signum() * mag
                } else {
                    F::zero()
                };
                let dz = z_new - z_row[t];
                dual_sq += dz * dz;
                u_row[t] = u_row[t] + t_hat - z_new;
                // The true primal residual uses the unrelaxed Dᵀc.
                let r = t_row[t] - z_new;
                primal_sq += r * r;
                z_row[t] = z_new;
            }
            let primal = primal_sq.sqrt();
            let dual = rho * dual_sq.sqrt();
            let converged = primal <= feas_tol && dual <= dual_tol;
            if converged || iter == opts.max_iters {
                let (slot, _) = active[l];
                let scale_f64 = scale.to_f64().unwrap();
                stats[slot] = ColumnStats {
                    iterations: iter,
                    primal_residual: primal.to_f64().unwrap() / scale_f64,
                    dual_residual: dual.to_f64().unwrap() / scale_f64,
                    converged,
                };
                objectives[slot] =
                    t_row.iter().map(|&x| x.abs()).fold(F::zero(), |a, x| a + x);
                for (t, &x) in c_t.row(l).iter().enumerate() {
                    directions[[t, slot]] = x;
                }
                finished.push(l);
            }
        }

        if !finished.is_empty() {
            compact(&mut active, &finished, &mut c_t, &mut z_t, &mut u_t);
            if active.is_empty() {
                break;
            }
            rhs = Array2::zeros((rd, active.len()));
        }
    }

    BlockResult {
        directions,
        objectives,
        stats,
    }
}

/// Drop finished rows by moving surviving rows up in place.
fn compact<F: NdFloat>(
    active: &mut Vec<(usize, usize)>,
    finished: &[usize],
    c_t: &mut Array2<F>,
    z_t: &mut Array2<F>,
    u_t: &mut Array2<F>,
) {
    let mut keep = 0usize;
    let mut finished_iter = finished.iter().peekable();
    for l in 0..active.len() {
        if finished_iter.peek() == Some(&&l) {
            finished_iter.next();
            continue;
        }
        if keep != l {
            active.swap(keep, l);
            move_row(c_t, l, keep);
            move_row(z_t, l, keep);
            move_row(u_t, l, keep);
        }
        keep += 1;
    }
    active.truncate(keep);
}

fn move_row<F: NdFloat>(m: &mut Array2<F>, src: usize, dst: usize) {
    let cols = m.ncols();
    for t in 0..cols {
        m[[dst, t]] = m[[src, t]];
    }
}
