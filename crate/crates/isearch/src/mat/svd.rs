//! Thin SVD via one-sided (Hestenes) Jacobi rotations.
//!
//! The rotations orthogonalize the vectors along the smaller matrix
//! dimension, which keeps every inner loop on a contiguous row of the
//! working buffer. One-sided Jacobi computes small singular values to far
//! better relative accuracy than an eigendecomposition of the Gram matrix
//! would, which is what the downstream rank-estimation rule relies on.

use ndarray::{Array1, Array2, ArrayView2, NdFloat};

use super::{cast, ensure_finite};
use crate::error::Result;

const MAX_SWEEPS: usize = 40;

/// Thin singular value decomposition `m = U · diag(s) · Vᵀ`.
#[derive(Debug, Clone)]
pub struct ThinSvd<F> {
    /// `M1 × k` matrix of left singular vectors (orthonormal columns).
    pub left: Array2<F>,
    /// Singular values sorted in descending order, length `k = min(M1, M2)`.
    pub singular_values: Array1<F>,
    /// `M2 × k` matrix of right singular vectors (orthonormal columns).
    pub right: Array2<F>,
}

/// Compute the thin SVD of a dense matrix.
pub fn svd_thin<F: NdFloat>(m: &ArrayView2<F>) -> Result<ThinSvd<F>> {
    ensure_finite("svd_thin", m)?;
    let (rows, cols) = m.dim();
    let wide = rows <= cols;
    // Rows of `work` are the vectors being orthogonalized: the rows of `m`
    // itself when it is wide, the columns of `m` otherwise.
    let (k, len, mut work) = if wide {
        (rows, cols, to_row_major(m))
    } else {
        (cols, rows, to_row_major(&m.t()))
    };

    // J accumulates the applied rotations: work_final = J · work_initial.
    let mut j = identity_buf::<F>(k);
    jacobi_orthogonalize_rows(&mut work, &mut j, k, len);

    // Row norms are the singular values; sort descending, permuting the
    // rotation accumulator and the orthogonalized rows together.
    let mut norms: Vec<F> = (0..k).map(|r| row_norm(&work, len, r)).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap().then(a.cmp(&b)));
    let work = permute_rows(&work, len, &order);
    let j = permute_rows(&j, k, &order);
    norms = order.iter().map(|&r| norms[r]).collect();

    // P holds the orthonormalized rows; rows with (numerically) zero norm are
    // completed deterministically from canonical basis vectors so the factor
    // stays orthonormal even for rank-deficient input.
    let max_norm = norms.first().copied().unwrap_or_else(F::zero);
    let rank_tol = max_norm * F::epsilon() * cast::<F>(k as f64).max(F::one());
    let mut p = vec![F::zero(); k * len];
    let mut completed: Vec<usize> = Vec::new();
    for r in 0..k {
        if norms[r] > rank_tol && norms[r] > F::zero() {
            let inv = F::one() / norms[r];
            for t in 0..len {
                p[r * len + t] = work[r * len + t] * inv;
            }
        } else {
            norms[r] = F::zero();
            completed.push(r);
        }
    }
    for &r in &completed {
        complete_orthonormal_row(&mut p, k, len, r);
    }

    let singular_values = Array1::from_vec(norms);
    let j_t = transpose_buf(&j, k, k);
    let p_t = transpose_buf(&p, k, len);
    let (left, right) = if wide {
        (
            Array2::from_shape_vec((rows, k), j_t).unwrap(),
            Array2::from_shape_vec((cols, k), p_t).unwrap(),
        )
    } else {
        (
            Array2::from_shape_vec((rows, k), p_t).unwrap(),
            Array2::from_shape_vec((cols, k), j_t).unwrap(),
        )
    };
    Ok(ThinSvd {
        left,
        singular_values,
        right,
    })
}

/// Cyclic sweeps of plane rotations until every row pair is orthogonal to
/// machine precision (or the sweep budget runs out, at which point the
/// factorization is still accurate to the achieved orthogonality).
fn jacobi_orthogonalize_rows<F: NdFloat>(work: &mut [F], acc: &mut [F], k: usize, len: usize) {
    let eps = F::epsilon();
    for _ in 0..MAX_SWEEPS {
        // Fresh norms once per sweep; within the sweep they are updated by
        // the exact rotation identities.
        let mut sq: Vec<F> = (0..k)
            .map(|r| {
                let row = &work[r * len..(r + 1) * len];
                dot(row, row)
            })
            .collect();
        let mut rotated = false;
        for i in 0..k.saturating_sub(1) {
            for jdx in i + 1..k {
                let alpha = sq[i];
                let beta = sq[jdx];
                if alpha <= F::zero() || beta <= F::zero() {
                    continue;
                }
                let gamma = {
                    let (ri, rj) = row_pair(work, len, i, jdx);
                    dot(ri, rj)
                };
                if gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma + gamma);
                let t = if zeta >= F::zero() {
                    F::one() / (zeta + (F::one() + zeta * zeta).sqrt())
                } else {
                    -F::one() / (-zeta + (F::one() + zeta * zeta).sqrt())
                };
                let c = F::one() / (F::one() + t * t).sqrt();
                let s = c * t;
                rotate_rows(work, len, i, jdx, c, s);
                rotate_rows(acc, k, i, jdx, c, s);
                // Exact post-rotation norms keep the sweep from recomputing
                // two of the three dot products per pair.
                let two = cast::<F>(2.0);
                sq[i] = c * c * alpha - two * c * s * gamma + s * s * beta;
                sq[jdx] = s * s * alpha + two * c * s * gamma + c * c * beta;
            }
        }
        if !rotated {
            break;
        }
    }
}

#[inline]
fn rotate_rows<F: NdFloat>(buf: &mut [F], len: usize, i: usize, j: usize, c: F, s: F) {
    let (ri, rj) = row_pair_mut(buf, len, i, j);
    for t in 0..len {
        let x = ri[t];
        let y = rj[t];
        ri[t] = c * x - s * y;
        rj[t] = s * x + c * y;
    }
}

fn row_pair<F>(buf: &[F], len: usize, i: usize, j: usize) -> (&[F], &[F]) {
    debug_assert!(i < j);
    (&buf[i * len..(i + 1) * len], &buf[j * len..(j + 1) * len])
}

fn row_pair_mut<F>(buf: &mut [F], len: usize, i: usize, j: usize) -> (&mut [F], &mut [F]) {
    debug_assert!(i < j);
    let (head, tail) = buf.split_at_mut(j * len);
    (&mut head[i * len..(i + 1) * len], &mut tail[..len])
}

/// Dot product with four independent accumulators so the reduction pipelines.
fn dot<F: NdFloat>(a: &[F], b: &[F]) -> F {
    let n = a.len();
    let mut s0 = F::zero();
    let mut s1 = F::zero();
    let mut s2 = F::zero();
    let mut s3 = F::zero();
    let chunks = n - n % 4;
    let mut t = 0;
    while t < chunks {
        s0 += a[t] * b[t];
        s1 += a[t + 1] * b[t + 1];
        s2 += a[t + 2] * b[t + 2];
        s3 += a[t + 3] * b[t + 3];
        t += 4;
    }
    while t < n {
        s0 += a[t] * b[t];
        t += 1;
    }
    (s0 + s1) + (s2 + s3)
}

fn row_norm<F: NdFloat>(buf: &[F], len: usize, r: usize) -> F {
    let row = &buf[r * len..(r + 1) * len];
    dot(row, row).sqrt()
}

fn to_row_major<F: NdFloat>(m: &ArrayView2<F>) -> Vec<F> {
    let (rows, cols) = m.dim();
    let mut buf = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            buf.push(m[[r, c]]);
        }
    }
    buf
}

fn identity_buf<F: NdFloat>(k: usize) -> Vec<F> {
    let mut buf = vec![F::zero(); k * k];
    for r in 0..k {
        buf[r * k + r] = F::one();
    }
    buf
}

fn permute_rows<F: Copy>(buf: &[F], len: usize, order: &[usize]) -> Vec<F> {
    let mut out = Vec::with_capacity(buf.len());
    for &r in order {
        out.extend_from_slice(&buf[r * len..(r + 1) * len]);
    }
    out
}

fn transpose_buf<F: Copy + num_traits::Zero>(buf: &[F], rows: usize, cols: usize) -> Vec<F> {
    let mut out = vec![F::zero(); rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = buf[r * cols + c];
        }
    }
    out
}

/// Replace row `r` of `p` with the canonical basis vector that has the
/// largest residual against the other rows, orthonormalized.
fn complete_orthonormal_row<F: NdFloat>(p: &mut [F], k: usize, len: usize, r: usize) {
    let mut best: Option<(F, Vec<F>)> = None;
    for t in 0..len {
        let mut v = vec![F::zero(); len];
        v[t] = F::one();
        for other in 0..k {
            if other == r {
                continue;
            }
            let row = &p[other * len..(other + 1) * len];
            let proj = dot(row, &v);
            for (x, &y) in v.iter_mut().zip(row.iter()) {
                *x -= proj * y;
            }
        }
        let norm = dot(&v, &v).sqrt();
        if best.as_ref().is_none_or(|(b, _)| norm > *b) {
            best = Some((norm, v));
        }
    }
    let (norm, v) = best.expect("len >= 1");
    for (t, &x) in v.iter().enumerate() {
        p[r * len + t] = x / norm;
    }
}
