//! Dense linear-algebra substrate shared by the rest of the crate: column
//! normalization, thin SVD, symmetric eigendecomposition, Cholesky solves,
//! deterministic random sampling, and matrix file I/O.
//!
//! All routines are generic over the scalar type through [`ndarray::NdFloat`];
//! the crate root exposes `f64` aliases for the common case.

mod chol;
mod eigen;
mod io;
mod rng;
mod svd;

pub use chol::Cholesky;
pub use eigen::symmetric_eigen;
pub use io::{read_labels_csv, read_matrix_csv, write_labels_csv, write_matrix_csv};
pub use rng::RandomSource;
pub use svd::{svd_thin, ThinSvd};

use ndarray::{Array1, Array2, ArrayView2, NdFloat};

use crate::error::{Error, Result};

/// Columns with ℓ2 norm below this are rejected as zero columns.
pub const ZERO_COLUMN_TOL: f64 = 1e-14;

/// Convert an `f64` constant into the working scalar type.
#[inline]
pub(crate) fn cast<F: NdFloat>(x: f64) -> F {
    F::from(x).expect("finite f64 constant must convert to the scalar type")
}

/// Orthonormality tolerance: 1e-10 for `f64`, widened for coarser scalar
/// types where that sits below machine precision.
pub(crate) fn ortho_tol<F: NdFloat>() -> F {
    cast::<F>(1e-10).max(F::epsilon() * cast(1e3))
}

pub(crate) fn ensure_finite<F: NdFloat>(name: &str, m: &ArrayView2<F>) -> Result<()> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::invalid_input(format!("{name}: empty matrix")));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid_input(format!(
            "{name}: matrix contains non-finite entries"
        )));
    }
    Ok(())
}

/// ℓ2 norm of each column.
pub fn column_norms<F: NdFloat>(m: &ArrayView2<F>) -> Array1<F> {
    Array1::from_iter(
        m.columns()
            .into_iter()
            .map(|c| c.iter().map(|&v| v * v).fold(F::zero(), |a, b| a + b).sqrt()),
    )
}

/// Rescale every column to unit ℓ2 norm, preserving its direction.
///
/// A column with norm below [`ZERO_COLUMN_TOL`] yields [`Error::ZeroColumn`]
/// with its index.
pub fn normalize_columns_unit<F: NdFloat>(m: &ArrayView2<F>) -> Result<Array2<F>> {
    ensure_finite("normalize_columns_unit", m)?;
    let norms = column_norms(m);
    if let Some(index) = norms.iter().position(|&n| n < cast(ZERO_COLUMN_TOL)) {
        return Err(Error::ZeroColumn { index });
    }
    let mut out = m.to_owned();
    for (mut col, &n) in out.columns_mut().into_iter().zip(norms.iter()) {
        col.mapv_inplace(|v| v / n);
    }
    Ok(out)
}

pub fn frobenius_norm<F: NdFloat>(m: &ArrayView2<F>) -> F {
    m.iter().map(|&v| v * v).fold(F::zero(), |a, b| a + b).sqrt()
}

/// Modified Gram–Schmidt with one re-orthogonalization pass.
///
/// Returns the orthonormal columns whose residual against the previously
/// accepted ones exceeds `tol` times the column norm; dependent columns are
/// dropped, so the result may have fewer columns than the input.
pub fn mgs_orthonormalize<F: NdFloat>(m: &ArrayView2<F>, tol: F) -> Array2<F> {
    let rows = m.nrows();
    let mut accepted: Vec<Array1<F>> = Vec::new();
    for col in m.columns() {
        let scale = col.iter().map(|&v| v * v).fold(F::zero(), |a, b| a + b).sqrt();
        if scale <= F::zero() {
            continue;
        }
        let mut v = col.to_owned();
        for _ in 0..2 {
            for q in &accepted {
                let proj = q.dot(&v);
                v.zip_mut_with(q, |x, &y| *x -= proj * y);
            }
        }
        let norm = v.dot(&v).sqrt();
        if norm > tol * scale {
            accepted.push(v / norm);
        }
    }
    let mut out = Array2::zeros((rows, accepted.len()));
    for (j, q) in accepted.iter().enumerate() {
        out.column_mut(j).assign(q);
    }
    out
}

/// An orthonormal basis for a linear subspace of the ambient space.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis<F> {
    matrix: Array2<F>,
}

impl<F: NdFloat> SubspaceBasis<F> {
    /// Wrap a matrix after checking `‖BᵀB − I‖_max` against the
    /// orthonormality tolerance.
    pub fn new(matrix: Array2<F>) -> Result<Self> {
        ensure_finite("SubspaceBasis", &matrix.view())?;
        let gram = matrix.t().dot(&matrix);
        let dim = gram.nrows();
        let tol = ortho_tol::<F>();
        for i in 0..dim {
            for j in 0..dim {
                let target = if i == j { F::one() } else { F::zero() };
                if (gram[[i, j]] - target).abs() > tol {
                    return Err(Error::invalid_input(format!(
                        "basis columns are not orthonormal (gram[{i},{j}] off by {:e})",
                        (gram[[i, j]] - target).abs()
                    )));
                }
            }
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &Array2<F> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// ‖(I − BBᵀ)d_k‖₂ for every column of `data`, computed from the explicit
    /// residual vector (the Pythagorean shortcut loses the small residuals
    /// this crate has to resolve).
    pub fn residual_norms(&self, data: &ArrayView2<F>) -> Array1<F> {
        let coeffs = self.matrix.t().dot(data);
        let projected = self.matrix.dot(&coeffs);
        let mut out = Array1::zeros(data.ncols());
        for (j, (col, proj)) in data
            .columns()
            .into_iter()
            .zip(projected.columns())
            .enumerate()
        {
            let mut acc = F::zero();
            for (&x, &p) in col.iter().zip(proj.iter()) {
                let d = x - p;
                acc += d * d;
            }
            out[j] = acc.sqrt();
        }
        out
    }
}
