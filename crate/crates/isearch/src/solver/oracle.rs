//! Exact reference solver for the direction-search program.
//!
//! The objective `‖Dᵀc‖₁` is piecewise linear on the affine slice
//! `{c : dᵀc = 1}`, so its minimum is attained at a vertex of the hyperplane
//! arrangement `{c : d_iᵀc = 0}` restricted to that slice. The oracle
//! enumerates every subset of `r_d − 1` column hyperplanes, solves the
//! resulting square system together with the constraint row, and keeps the
//! best feasible candidate. This is exponential in the subset count and is
//! only meant for test-scale problems; [`super::solve_direction`] is the
//! production path it verifies.

use ndarray::{Array1, NdFloat};

use super::DirectionProblem;
use crate::error::{Error, Result};
use crate::mat::cast;

const MAX_ROWS: usize = 8;
const MAX_COLS: usize = 30;

/// Globally optimal direction and objective by basic-solution enumeration.
///
/// Limited to `r_d ≤ 8`, `M2 ≤ 30`; larger problems return
/// [`Error::SizeLimit`].
pub fn lp_oracle_direction<F: NdFloat>(p: &DirectionProblem<F>) -> Result<(Array1<F>, F)> {
    let data = p.data();
    let (rd, m2) = data.dim();
    if rd > MAX_ROWS || m2 > MAX_COLS {
        return Err(Error::SizeLimit(format!(
            "oracle accepts at most {MAX_ROWS}×{MAX_COLS}, got {rd}×{m2}"
        )));
    }
    if m2 < rd.saturating_sub(1) {
        return Err(Error::invalid_input(
            "oracle needs at least r_d - 1 data columns",
        ));
    }
    let target = data.column(p.target_index());

    // The constraint plane itself is the whole candidate set when r_d = 1.
    if rd == 1 {
        let c0 = F::one() / target[0];
        let c = Array1::from_vec(vec![c0]);
        let obj = objective(p, &c);
        return Ok((c, obj));
    }

    let mut best: Option<(F, Array1<F>)> = None;
    let mut subset = vec![0usize; rd - 1];
    enumerate_subsets(m2, rd - 1, &mut subset, 0, 0, &mut |chosen| {
        // Square system: d_iᵀ c = 0 for chosen i, plus dᵀ c = 1.
        let mut a = vec![F::zero(); rd * rd];
        let mut b = vec![F::zero(); rd];
        for (row, &i) in chosen.iter().enumerate() {
            for t in 0..rd {
                a[row * rd + t] = data[[t, i]];
            }
        }
        for t in 0..rd {
            a[(rd - 1) * rd + t] = target[t];
        }
        b[rd - 1] = F::one();
        if let Some(c) = solve_dense(&mut a, &mut b, rd) {
            let c = Array1::from_vec(c);
            let obj = objective(p, &c);
            if best.as_ref().is_none_or(|(bo, _)| obj < *bo) {
                best = Some((obj, c));
            }
        }
    });

    let (obj, c) = best.ok_or_else(|| {
        Error::invalid_input("no non-degenerate vertex found; data may be rank deficient")
    })?;
    Ok((c, obj))
}

fn objective<F: NdFloat>(p: &DirectionProblem<F>, c: &Array1<F>) -> F {
    p.data()
        .t()
        .dot(c)
        .iter()
        .map(|x| x.abs())
        .fold(F::zero(), |a, x| a + x)
}

fn enumerate_subsets(
    n: usize,
    k: usize,
    subset: &mut [usize],
    depth: usize,
    start: usize,
    visit: &mut impl FnMut(&[usize]),
) {
    if depth == k {
        visit(subset);
        return;
    }
    for i in start..n {
        subset[depth] = i;
        enumerate_subsets(n, k, subset, depth + 1, i + 1, visit);
    }
}

/// Gaussian elimination with partial pivoting; `None` on a (numerically)
/// singular system, which just skips that vertex candidate.
fn solve_dense<F: NdFloat>(a: &mut [F], b: &mut [F], n: usize) -> Option<Vec<F>> {
    let tiny = cast::<F>(1e-12);
    for col in 0..n {
        let mut pivot = col;
        let mut pmax = a[col * n + col].abs();
        for row in col + 1..n {
            let v = a[row * n + col].abs();
            if v > pmax {
                pmax = v;
                pivot = row;
            }
        }
        if pmax <= tiny {
            return None;
        }
        if pivot != col {
            for t in 0..n {
                a.swap(col * n + t, pivot * n + t);
            }
            b.swap(col, pivot);
        }
        let diag = a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] / diag;
            if factor == F::zero() {
                continue;
            }
            for t in col..n {
                a[row * n + t] -= factor * a[col * n + t];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![F::zero(); n];
    for row in (0..n).rev() {
        let mut sum = b[row];
        for t in row + 1..n {
            sum -= a[row * n + t] * x[t];
        }
        x[row] = sum / a[row * n + row];
    }
    Some(x)
}
