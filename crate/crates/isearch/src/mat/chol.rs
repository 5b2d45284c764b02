use ndarray::{Array2, ArrayView2, NdFloat};

use super::cast;
use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<F> {
    l: Array2<F>,
}

impl<F: NdFloat> Cholesky<F> {
    /// Factor `a`; on a non-positive pivot, retry once with a small ridge
    /// (1e-10 times the largest diagonal entry) added to the diagonal.
    pub fn factor_with_ridge(a: &ArrayView2<F>) -> Result<Self> {
        if let Some(c) = Self::factor(a) {
            return Ok(c);
        }
        let max_diag = (0..a.nrows())
            .map(|i| a[[i, i]].abs())
            .fold(F::zero(), F::max)
            .max(F::one());
        let ridge = max_diag * cast::<F>(1e-10);
        let mut ridged = a.to_owned();
        for i in 0..ridged.nrows() {
            ridged[[i, i]] += ridge;
        }
        Self::factor(&ridged.view())
            .ok_or_else(|| Error::invalid_input("matrix is not positive definite even with ridge"))
    }

    pub fn factor(a: &ArrayView2<F>) -> Option<Self> {
        let n = a.nrows();
        if a.ncols() != n || n == 0 {
            return None;
        }
        let mut l = Array2::<F>::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let mut sum = a[[i, j]];
                for k in 0..j {
                    sum -= l[[i, k]] * l[[j, k]];
                }
                if i == j {
                    if sum <= F::zero() || !sum.is_finite() {
                        return None;
                    }
                    l[[i, j]] = sum.sqrt();
                } else {
                    l[[i, j]] = sum / l[[j, j]];
                }
            }
        }
        Some(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// Solve `A x = b` in place.
    #[allow(clippy::needless_range_loop)]
    pub fn solve_slice(&self, b: &mut [F]) {
        let n = self.dim();
        debug_assert_eq!(b.len(), n);
        for i in 0..n {
            let mut sum = b[i];
            for k in 0..i {
                sum -= self.l[[i, k]] * b[k];
            }
            b[i] = sum / self.l[[i, i]];
        }
        for i in (0..n).rev() {
            let mut sum = b[i];
            for k in i + 1..n {
                sum -= self.l[[k, i]] * b[k];
            }
            b[i] = sum / self.l[[i, i]];
        }
    }

    /// Solve `A X = B` column by column, returning `X`.
    pub fn solve_matrix(&self, b: &ArrayView2<F>) -> Array2<F> {
        let mut out = b.to_owned();
        self.solve_in_place_rows(&mut out);
        out
    }

    /// Solve `A X = B` in place for a whole block of right-hand sides
    /// (`B` is `n × m`, one system per column). The substitutions run as
    /// axpy passes over contiguous rows, so the block dimension vectorizes.
    pub fn solve_in_place_rows(&self, x: &mut Array2<F>) {
        let n = self.dim();
        debug_assert_eq!(x.nrows(), n);
        let m = x.ncols();
        let l = self.l.as_slice().expect("factor is row-major");
        let buf = x.as_slice_mut().expect("rhs block is row-major");
        // Forward: L y = B.
        for i in 0..n {
            let (head, tail) = buf.split_at_mut(i * m);
            let row_i = &mut tail[..m];
            for k in 0..i {
                let lik = l[i * n + k];
                if lik != F::zero() {
                    let row_k = &head[k * m..(k + 1) * m];
                    for (xi, &xk) in row_i.iter_mut().zip(row_k.iter()) {
                        *xi -= lik * xk;
                    }
                }
            }
            let inv = F::one() / l[i * n + i];
            for xi in row_i.iter_mut() {
                *xi *= inv;
            }
        }
        // Backward: Lᵀ x = y.
        for i in (0..n).rev() {
            let (head, tail) = buf.split_at_mut((i + 1) * m);
            let row_i = &mut head[i * m..(i + 1) * m];
            for k in i + 1..n {
                let lki = l[k * n + i];
                if lki != F::zero() {
                    let row_k = &tail[(k - i - 1) * m..(k - i) * m];
                    for (xi, &xk) in row_i.iter_mut().zip(row_k.iter()) {
                        *xi -= lki * xk;
                    }
                }
            }
            let inv = F::one() / l[i * n + i];
            for xi in row_i.iter_mut() {
                *xi *= inv;
            }
        }
    }
}
