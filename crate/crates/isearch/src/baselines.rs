//! Comparison methods: coherence scoring and plain PCA recovery.

use ndarray::{Array1, ArrayView2, NdFloat};

use crate::detect::PreprocessedData;
use crate::error::{Error, Result};
use crate::mat::{self, SubspaceBasis};

/// Aggregation exponent for the coherence statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoherenceExponent {
    Abs,
    Squared,
}

/// Per-column coherence scores; higher means more inlier-like.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceProfile<F> {
    pub values: Array1<F>,
}

/// Coherence of each column with the rest of the data:
/// `value(i) = Σ_{k≠i} |d_iᵀd_k|^p`, the self term excluded.
pub fn coherence_values<F: NdFloat>(pre: &PreprocessedData<F>) -> CoherenceProfile<F> {
    coherence_values_with(pre, CoherenceExponent::Squared)
}

pub fn coherence_values_with<F: NdFloat>(
    pre: &PreprocessedData<F>,
    exponent: CoherenceExponent,
) -> CoherenceProfile<F> {
    let gram = pre.reduced.t().dot(&pre.reduced);
    let m2 = gram.nrows();
    let mut values = Array1::zeros(m2);
    for i in 0..m2 {
        let mut acc = F::zero();
        for k in 0..m2 {
            if k == i {
                continue;
            }
            let g = gram[[i, k]];
            acc += match exponent {
                CoherenceExponent::Abs => g.abs(),
                CoherenceExponent::Squared => g * g,
            };
        }
        values[i] = acc;
    }
    CoherenceProfile { values }
}

impl<F: NdFloat> CoherenceProfile<F> {
    /// Column indices ordered by descending coherence (ties by index), the
    /// most inlier-like first.
    pub fn descending_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.values.len()).collect();
        order.sort_by(|&a, &b| {
            self.values[b]
                .partial_cmp(&self.values[a])
                .unwrap()
                .then(a.cmp(&b))
        });
        order
    }
}

/// Plain PCA: the top-`rank` left singular vectors of the data.
pub fn pca_recover<F: NdFloat>(data: &ArrayView2<F>, rank: usize) -> Result<SubspaceBasis<F>> {
    if rank == 0 || rank > data.nrows().min(data.ncols()) {
        return Err(Error::invalid_input(format!(
            "rank {rank} outside 1..={}",
            data.nrows().min(data.ncols())
        )));
    }
    let svd = mat::svd_thin(data)?;
    SubspaceBasis::new(svd.left.slice(ndarray::s![.., 0..rank]).to_owned())
}
