//! Symmetric eigendecomposition via cyclic two-sided Jacobi rotations.

use ndarray::{Array1, Array2, ArrayView2, NdFloat};

use super::{cast, ensure_finite};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 60;

/// Eigendecomposition of a symmetric matrix.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvalues sorted ascending
/// and eigenvectors as the corresponding columns, so `a ≈ V Λ Vᵀ`.
pub fn symmetric_eigen<F: NdFloat>(a: &ArrayView2<F>) -> Result<(Array1<F>, Array2<F>)> {
    ensure_finite("symmetric_eigen", a)?;
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::invalid_input("symmetric_eigen: matrix not square"));
    }
    let scale = a.iter().map(|v| v.abs()).fold(F::zero(), F::max);
    let sym_tol = scale * cast::<F>(1e-12).max(F::epsilon() * cast(1e3));
    for i in 0..n {
        for j in i + 1..n {
            if (a[[i, j]] - a[[j, i]]).abs() > sym_tol {
                return Err(Error::invalid_input(format!(
                    "symmetric_eigen: entry ({i},{j}) is not symmetric"
                )));
            }
        }
    }

    let mut b = a.to_owned();
    let mut v = Array2::<F>::eye(n);
    let stop = scale * F::epsilon() * cast::<F>(n as f64);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let apq = b[[p, q]];
                if apq.abs() <= stop {
                    continue;
                }
                rotated = true;
                let theta = (b[[q, q]] - b[[p, p]]) / (apq + apq);
                let t = if theta >= F::zero() {
                    F::one() / (theta + (F::one() + theta * theta).sqrt())
                } else {
                    -F::one() / (-theta + (F::one() + theta * theta).sqrt())
                };
                let c = F::one() / (F::one() + t * t).sqrt();
                let s = c * t;
                apply_two_sided(&mut b, p, q, c, s);
                for r in 0..n {
                    let x = v[[r, p]];
                    let y = v[[r, q]];
                    v[[r, p]] = c * x - s * y;
                    v[[r, q]] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| b[[i, i]].partial_cmp(&b[[j, j]]).unwrap().then(i.cmp(&j)));
    let values = Array1::from_iter(order.iter().map(|&i| b[[i, i]]));
    let mut vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        vectors.column_mut(dst).assign(&v.column(src));
    }
    Ok((values, vectors))
}

/// B ← GᵀBG for the (p, q) rotation, exploiting symmetry.
fn apply_two_sided<F: NdFloat>(b: &mut Array2<F>, p: usize, q: usize, c: F, s: F) {
    let n = b.nrows();
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let x = b[[r, p]];
        let y = b[[r, q]];
        b[[r, p]] = c * x - s * y;
        b[[r, q]] = s * x + c * y;
        b[[p, r]] = b[[r, p]];
        b[[q, r]] = b[[r, q]];
    }
    let app = b[[p, p]];
    let aqq = b[[q, q]];
    let apq = b[[p, q]];
    let two_cs = c * s + c * s;
    b[[p, p]] = c * c * app - two_cs * apq + s * s * aqq;
    b[[q, q]] = s * s * app + two_cs * apq + c * c * aqq;
    b[[p, q]] = F::zero();
    b[[q, p]] = F::zero();
}
