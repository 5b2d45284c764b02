//! The outlier-detection / subspace-recovery pipeline.
//!
//! Stages: reduce the data onto its dominant left singular vectors and
//! normalize columns ([`preprocess`]), solve the direction search for every
//! column ([`crate::solver::solve_all`]), convert objectives to innovation
//! values ([`innovation_values`]), build a basis from the least innovative
//! columns ([`build_basis_adaptive`] / [`build_basis_fraction`]), and score
//! columns against the recovered basis ([`detect_outliers`]).

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, NdFloat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::{self, cast, SubspaceBasis};
use crate::solver::{self, DirectionSet, SolverOptions};

/// Default spectral-ratio cutoff for rank estimation: retain σᵢ > ratio·σ₁.
pub const RANK_RATIO_DEFAULT: f64 = 1e-4;
/// Default residual threshold for basis growth on noiseless data.
pub const ADD_TOL_NOISELESS: f64 = 1e-3;
/// Looser residual threshold for noisy data, where every column carries an
/// off-subspace component.
pub const ADD_TOL_NOISY: f64 = 5e-2;
/// Default outlier decision threshold on normalized projection residuals.
pub const RESIDUAL_THRESHOLD_DEFAULT: f64 = 0.2;

/// Count of singular values above `threshold_ratio` times the largest.
///
/// The input must be sorted descending with `σ₁ > 0`; the result is at
/// least 1 because `threshold_ratio < 1`.
pub fn estimate_rank<F: NdFloat>(
    singular_values: &ArrayView1<F>,
    threshold_ratio: f64,
) -> Result<usize> {
    if !(threshold_ratio > 0.0 && threshold_ratio < 1.0) {
        return Err(Error::invalid_input(
            "threshold_ratio must lie strictly between 0 and 1",
        ));
    }
    let first = singular_values
        .first()
        .copied()
        .ok_or_else(|| Error::invalid_input("empty spectrum"))?;
    if first <= F::zero() {
        return Err(Error::invalid_input("all-zero spectrum"));
    }
    let cut = first * cast(threshold_ratio);
    Ok(singular_values.iter().filter(|&&s| s > cut).count())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreprocessOptions {
    /// Keep the ambient coordinates (projector = identity); columns are
    /// still normalized.
    pub skip_reduction: bool,
    /// Spectral-ratio cutoff used by rank estimation.
    pub rank_ratio: f64,
    /// Bypass rank estimation with a fixed reduced dimension.
    pub rank_override: Option<usize>,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        Self {
            skip_reduction: false,
            rank_ratio: RANK_RATIO_DEFAULT,
            rank_override: None,
        }
    }
}

/// Data after dimensionality reduction and column normalization.
#[derive(Debug, Clone)]
pub struct PreprocessedData<F> {
    /// `r_d × M2`, unit columns: `normalize(Qᵀ·D)`.
    pub reduced: Array2<F>,
    /// `M1 × r_d` orthonormal projector `Q`.
    pub projector: Array2<F>,
    /// Retained rank `r_d`.
    pub rank: usize,
    /// ℓ2 norms of the original columns.
    pub original_norms: Array1<F>,
}

impl<F: NdFloat> PreprocessedData<F> {
    pub fn num_columns(&self) -> usize {
        self.reduced.ncols()
    }

    /// Map a basis expressed in reduced coordinates back to the ambient
    /// space.
    pub fn to_ambient(&self, reduced_basis: &ArrayView2<F>) -> Result<SubspaceBasis<F>> {
        SubspaceBasis::new(self.projector.dot(reduced_basis))
    }
}

/// Project the data onto its dominant left singular vectors and normalize
/// the columns.
pub fn preprocess<F: NdFloat>(
    data: &ArrayView2<F>,
    opts: &PreprocessOptions,
) -> Result<PreprocessedData<F>> {
    mat::ensure_finite("preprocess", data)?;
    let original_norms = mat::column_norms(data);
    if opts.skip_reduction {
        return Ok(PreprocessedData {
            reduced: mat::normalize_columns_unit(data)?,
            projector: Array2::eye(data.nrows()),
            rank: data.nrows(),
            original_norms,
        });
    }
    let svd = mat::svd_thin(data)?;
    let rank = match opts.rank_override {
        Some(r) => {
            if r == 0 || r > svd.singular_values.len() {
                return Err(Error::invalid_input(format!(
                    "rank override {r} outside 1..={}",
                    svd.singular_values.len()
                )));
            }
            r
        }
        None => estimate_rank(&svd.singular_values.view(), opts.rank_ratio)?,
    };
    let projector = svd.left.slice(ndarray::s![.., 0..rank]).to_owned();
    let reduced = mat::normalize_columns_unit(&projector.t().dot(data).view())?;
    Ok(PreprocessedData {
        reduced,
        projector,
        rank,
        original_norms,
    })
}

/// Per-column innovation values `x(i) = 1/‖Dᵀc*_i‖₁ ∈ (0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct InnovationProfile<F> {
    pub values: Array1<F>,
}

impl<F: NdFloat> InnovationProfile<F> {
    /// Column indices ordered by ascending innovation (ties by index).
    pub fn ascending_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.values.len()).collect();
        order.sort_by(|&a, &b| {
            self.values[a]
                .partial_cmp(&self.values[b])
                .unwrap()
                .then(a.cmp(&b))
        });
        order
    }
}

/// Invert the direction-search objectives.
pub fn innovation_values<F: NdFloat>(
    pre: &PreprocessedData<F>,
    dirs: &DirectionSet<F>,
) -> Result<InnovationProfile<F>> {
    if dirs.num_columns() != pre.num_columns() {
        return Err(Error::invalid_input(format!(
            "direction set covers {} columns, data has {}",
            dirs.num_columns(),
            pre.num_columns()
        )));
    }
    Ok(InnovationProfile {
        values: dirs.objectives.mapv(|o| F::one() / o),
    })
}

/// A recovered subspace along with the columns that produced it.
#[derive(Debug, Clone)]
pub struct RecoveryResult<F> {
    /// Orthonormal basis in ambient coordinates.
    pub basis: SubspaceBasis<F>,
    /// Column indices used to build the basis.
    pub selected_columns: Vec<usize>,
    pub profile: InnovationProfile<F>,
}

/// Walk columns in the given order, appending each one whose residual
/// against the partial basis exceeds `add_tol`, until `target_rank` columns
/// are accepted. Shared by innovation-ordered and coherence-ordered
/// recovery.
pub fn adaptive_basis_by_order<F: NdFloat>(
    pre: &PreprocessedData<F>,
    order: &[usize],
    target_rank: usize,
    add_tol: f64,
) -> Result<(SubspaceBasis<F>, Vec<usize>)> {
    if target_rank == 0 {
        return Err(Error::invalid_input("target rank must be at least 1"));
    }
    if target_rank > pre.rank {
        // The reduced data spans only r_d dimensions, so the request cannot
        // be met no matter which columns are chosen.
        return Err(Error::RankDeficient {
            achieved: pre.rank,
            requested: target_rank,
        });
    }
    let tol = cast::<F>(add_tol);
    let mut accepted: Vec<Array1<F>> = Vec::with_capacity(target_rank);
    let mut selected = Vec::with_capacity(target_rank);
    for &idx in order {
        let mut v = pre.reduced.column(idx).to_owned();
        for q in &accepted {
            let proj = q.dot(&v);
            v.zip_mut_with(q, |x, &y| *x -= proj * y);
        }
        let norm = v.dot(&v).sqrt();
        if norm <= tol {
            continue;
        }
        // Second pass tightens orthogonality before the column joins the
        // basis.
        for q in &accepted {
            let proj = q.dot(&v);
            v.zip_mut_with(q, |x, &y| *x -= proj * y);
        }
        let norm = v.dot(&v).sqrt();
        accepted.push(v / norm);
        selected.push(idx);
        if accepted.len() == target_rank {
            break;
        }
    }
    if accepted.len() < target_rank {
        return Err(Error::RankDeficient {
            achieved: accepted.len(),
            requested: target_rank,
        });
    }
    let mut reduced_basis = Array2::zeros((pre.rank, target_rank));
    for (j, q) in accepted.iter().enumerate() {
        reduced_basis.column_mut(j).assign(q);
    }
    let basis = pre.to_ambient(&reduced_basis.view())?;
    Ok((basis, selected))
}

/// Adaptive column sampling: grow the basis from the least innovative
/// columns, skipping columns nearly dependent on those already chosen.
pub fn build_basis_adaptive<F: NdFloat>(
    pre: &PreprocessedData<F>,
    profile: &InnovationProfile<F>,
    target_rank: usize,
    add_tol: f64,
) -> Result<RecoveryResult<F>> {
    let order = profile.ascending_order();
    let (basis, selected_columns) = adaptive_basis_by_order(pre, &order, target_rank, add_tol)?;
    Ok(RecoveryResult {
        basis,
        selected_columns,
        profile: profile.clone(),
    })
}

/// Keep the `⌊keep_fraction·M2⌋` least innovative columns and orthonormalize
/// their span; the basis dimension is the numerical rank of the kept block
/// at `1e-8·σ₁`.
pub fn build_basis_fraction<F: NdFloat>(
    pre: &PreprocessedData<F>,
    profile: &InnovationProfile<F>,
    keep_fraction: f64,
) -> Result<RecoveryResult<F>> {
    let m2 = pre.num_columns();
    if !(keep_fraction > 0.0 && keep_fraction < 1.0) {
        return Err(Error::invalid_input(
            "keep_fraction must lie strictly between 0 and 1",
        ));
    }
    let keep = ((keep_fraction * m2 as f64).floor() as usize).min(m2);
    if keep == 0 {
        return Err(Error::invalid_input(
            "keep_fraction keeps no columns; need keep_fraction * M2 >= 1",
        ));
    }
    let order = profile.ascending_order();
    let selected: Vec<usize> = order[..keep].to_vec();
    let mut kept = Array2::zeros((pre.rank, keep));
    for (j, &idx) in selected.iter().enumerate() {
        kept.column_mut(j).assign(&pre.reduced.column(idx));
    }
    let svd = mat::svd_thin(&kept.view())?;
    let rank = estimate_rank(&svd.singular_values.view(), 1e-8)?;
    let reduced_basis = svd.left.slice(ndarray::s![.., 0..rank]).to_owned();
    let basis = pre.to_ambient(&reduced_basis.view())?;
    Ok(RecoveryResult {
        basis,
        selected_columns: selected,
        profile: profile.clone(),
    })
}

/// Keep the `⌊keep_fraction·M2⌋` least innovative columns and take the
/// top-`target_rank` left singular vectors of the kept block.
///
/// On noisy data this is the robust recovery of choice: the innovation
/// ranking screens out the outliers and the rank-`r` truncation averages the
/// per-column noise away, which a basis of `r` raw columns cannot do.
pub fn build_basis_fraction_rank<F: NdFloat>(
    pre: &PreprocessedData<F>,
    profile: &InnovationProfile<F>,
    keep_fraction: f64,
    target_rank: usize,
) -> Result<RecoveryResult<F>> {
    let m2 = pre.num_columns();
    if !(keep_fraction > 0.0 && keep_fraction < 1.0) {
        return Err(Error::invalid_input(
            "keep_fraction must lie strictly between 0 and 1",
        ));
    }
    let keep = ((keep_fraction * m2 as f64).floor() as usize).min(m2);
    if keep == 0 {
        return Err(Error::invalid_input(
            "keep_fraction keeps no columns; need keep_fraction * M2 >= 1",
        ));
    }
    let order = profile.ascending_order();
    let selected: Vec<usize> = order[..keep].to_vec();
    let mut kept = Array2::zeros((pre.rank, keep));
    for (j, &idx) in selected.iter().enumerate() {
        kept.column_mut(j).assign(&pre.reduced.column(idx));
    }
    let svd = mat::svd_thin(&kept.view())?;
    let available = estimate_rank(&svd.singular_values.view(), 1e-8)?;
    if target_rank == 0 || target_rank > available {
        return Err(Error::RankDeficient {
            achieved: available,
            requested: target_rank,
        });
    }
    let reduced_basis = svd.left.slice(ndarray::s![.., 0..target_rank]).to_owned();
    let basis = pre.to_ambient(&reduced_basis.view())?;
    Ok(RecoveryResult {
        basis,
        selected_columns: selected,
        profile: profile.clone(),
    })
}

/// Normalized projection residuals and outlier verdicts.
#[derive(Debug, Clone)]
pub struct OutlierScores<F> {
    /// `f(k) = ‖(I − ÛÛᵀ)d_k‖₂ / ‖d_k‖₂ ∈ [0, 1]`.
    pub scores: Array1<F>,
    /// `scores[k] >= residual_threshold`.
    pub verdicts: Vec<bool>,
}

/// Score every column by its normalized residual against the basis; a
/// column is declared an outlier when the score reaches the threshold.
pub fn detect_outliers<F: NdFloat>(
    data: &ArrayView2<F>,
    basis: &SubspaceBasis<F>,
    residual_threshold: f64,
) -> OutlierScores<F> {
    let residuals = basis.residual_norms(data);
    let norms = mat::column_norms(data);
    let threshold = cast::<F>(residual_threshold);
    let mut scores = Array1::zeros(data.ncols());
    let mut verdicts = vec![false; data.ncols()];
    for k in 0..data.ncols() {
        let score = if norms[k] > F::zero() {
            (residuals[k] / norms[k]).min(F::one()).max(F::zero())
        } else {
            F::zero()
        };
        scores[k] = score;
        verdicts[k] = score >= threshold;
    }
    OutlierScores { scores, verdicts }
}

/// How the recovery step chooses its columns.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Selection {
    Adaptive { rank: usize, add_tol: f64 },
    Fraction { keep: f64 },
    FractionRank { keep: f64, rank: usize },
}

/// End-to-end configuration for [`run_pipeline`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub preprocess: PreprocessOptions,
    pub solver: SolverOptions,
    pub selection: Selection,
    pub residual_threshold: f64,
    /// Keep going with the last feasible iterates when some columns exhaust
    /// the iteration budget (the ranking only needs the objectives).
    pub accept_unconverged: bool,
}

impl PipelineConfig {
    pub fn adaptive(rank: usize) -> Self {
        Self {
            preprocess: PreprocessOptions::default(),
            solver: SolverOptions::default(),
            selection: Selection::Adaptive {
                rank,
                add_tol: ADD_TOL_NOISELESS,
            },
            residual_threshold: RESIDUAL_THRESHOLD_DEFAULT,
            accept_unconverged: true,
        }
    }
}

/// Everything the pipeline produces for one data matrix.
#[derive(Debug, Clone)]
pub struct PipelineOutput<F> {
    pub pre: PreprocessedData<F>,
    pub directions: DirectionSet<F>,
    pub profile: InnovationProfile<F>,
    pub recovery: RecoveryResult<F>,
    pub scores: OutlierScores<F>,
}

/// Preprocess, solve, rank, recover, and score in one call.
pub fn run_pipeline<F: NdFloat>(
    data: &ArrayView2<F>,
    config: &PipelineConfig,
) -> Result<PipelineOutput<F>> {
    let pre = preprocess(data, &config.preprocess)?;
    let directions = match solver::solve_all(&pre.reduced.view(), &config.solver) {
        Ok(set) => set,
        Err(solver::SolveAllError::Invalid(e)) => return Err(e),
        Err(solver::SolveAllError::Unconverged(batch)) => {
            if config.accept_unconverged {
                batch.into_partial()
            } else {
                return Err(Error::Unconverged {
                    columns: batch.columns,
                });
            }
        }
    };
    let profile = innovation_values(&pre, &directions)?;
    let recovery = match &config.selection {
        Selection::Adaptive { rank, add_tol } => {
            build_basis_adaptive(&pre, &profile, *rank, *add_tol)?
        }
        Selection::Fraction { keep } => build_basis_fraction(&pre, &profile, *keep)?,
        Selection::FractionRank { keep, rank } => {
            build_basis_fraction_rank(&pre, &profile, *keep, *rank)?
        }
    };
    let scores = detect_outliers(data, &recovery.basis, config.residual_threshold);
    Ok(PipelineOutput {
        pre,
        directions,
        profile,
        recovery,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn estimate_rank_counts_above_cut() {
        let s = array![10.0, 5.0, 1e-6];
        assert_eq!(estimate_rank(&s.view(), 1e-4).unwrap(), 2);
        let s = array![1.0];
        assert_eq!(estimate_rank(&s.view(), 0.5).unwrap(), 1);
        let s = array![0.0, 0.0];
        assert!(estimate_rank(&s.view(), 1e-4).is_err());
    }

    #[test]
    fn skip_reduction_keeps_ambient_coordinates() {
        let data = array![[3.0, 0.0], [4.0, 2.0]];
        let pre = preprocess(
            &data.view(),
            &PreprocessOptions {
                skip_reduction: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(pre.rank, 2);
        assert_eq!(pre.projector, Array2::<f64>::eye(2));
        assert_abs_diff_eq!(pre.reduced[[0, 0]], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(pre.original_norms[0], 5.0, epsilon = 1e-12);
    }

    #[test]
    fn preprocess_reduces_to_numerical_rank() {
        // Rank-2 data embedded in 5 dimensions.
        let mut rng = mat::RandomSource::new(12);
        let u = rng.random_orthonormal::<f64>(5, 2);
        let coeffs = rng.unit_sphere_columns::<f64>(2, 9);
        let data = u.dot(&coeffs);
        let pre = preprocess(&data.view(), &PreprocessOptions::default()).unwrap();
        assert_eq!(pre.rank, 2);
        for col in pre.reduced.columns() {
            assert_abs_diff_eq!(col.dot(&col).sqrt(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn innovation_of_orthonormal_columns_is_one() {
        let data = Array2::<f64>::eye(2);
        let pre = preprocess(
            &data.view(),
            &PreprocessOptions {
                skip_reduction: true,
                ..Default::default()
            },
        )
        .unwrap();
        let dirs = solver::solve_all(&pre.reduced.view(), &SolverOptions::default()).unwrap();
        let profile = innovation_values(&pre, &dirs).unwrap();
        assert_abs_diff_eq!(profile.values[0], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(profile.values[1], 1.0, epsilon = 1e-6);
    }

    #[test]
    fn rank_one_adaptive_basis_is_lowest_innovation_column() {
        let s = 1.0 / 2.0f64.sqrt();
        let data = array![[1.0, 0.0, s], [0.0, 1.0, s]];
        let pre = preprocess(
            &data.view(),
            &PreprocessOptions {
                skip_reduction: true,
                ..Default::default()
            },
        )
        .unwrap();
        let profile = InnovationProfile {
            values: array![0.405, 0.405, 0.414],
        };
        let result = build_basis_adaptive(&pre, &profile, 1, 1e-3).unwrap();
        assert_eq!(result.selected_columns, vec![0]);
        let b = result.basis.matrix();
        assert_abs_diff_eq!(b[[0, 0]].abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn adaptive_sampling_skips_duplicates() {
        let data = array![[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let pre = preprocess(
            &data.view(),
            &PreprocessOptions {
                skip_reduction: true,
                ..Default::default()
            },
        )
        .unwrap();
        let profile = InnovationProfile {
            values: array![0.1, 0.1, 0.2],
        };
        let result = build_basis_adaptive(&pre, &profile, 2, 1e-3).unwrap();
        assert_eq!(result.selected_columns, vec![0, 2]);
    }

    #[test]
    fn rank_deficient_reported_with_achieved_dimension() {
        let data = array![[1.0, 1.0], [0.0, 0.0], [0.0, 0.0]];
        let pre = preprocess(
            &data.view(),
            &PreprocessOptions {
                skip_reduction: true,
                ..Default::default()
            },
        )
        .unwrap();
        let profile = InnovationProfile {
            values: array![0.1, 0.1],
        };
        match build_basis_adaptive(&pre, &profile, 2, 1e-3) {
            Err(Error::RankDeficient { achieved, .. }) => assert_eq!(achieved, 1),
            other => panic!("expected RankDeficient, got {other:?}"),
        }
    }

    #[test]
    fn rank_estimation_exact_on_clean_low_rank_data() {
        // Pure rank-5 data: 20 seeds, always exactly 5.
        for seed in 0..20 {
            let mut rng = mat::RandomSource::new(seed);
            let u = rng.random_orthonormal::<f64>(20, 5);
            let data = u.dot(&rng.unit_sphere_columns::<f64>(5, 40));
            let svd = mat::svd_thin(&data.view()).unwrap();
            assert_eq!(
                estimate_rank(&svd.singular_values.view(), RANK_RATIO_DEFAULT).unwrap(),
                5
            );
        }
    }

    #[test]
    fn fraction_of_pure_inliers_spans_truth() {
        let mut rng = mat::RandomSource::new(21);
        let u = rng.random_orthonormal::<f64>(12, 3);
        let data = u.dot(&rng.unit_sphere_columns::<f64>(3, 20));
        let pre = preprocess(&data.view(), &PreprocessOptions::default()).unwrap();
        let profile = InnovationProfile {
            values: Array1::linspace(0.2, 0.8, 20),
        };
        let result = build_basis_fraction(&pre, &profile, 0.95).unwrap();
        assert_eq!(result.basis.dim(), 3);
        let residuals = result.basis.residual_norms(&u.view());
        for &r in residuals.iter() {
            assert!(r < 1e-10, "residual {r}");
        }
    }

    #[test]
    fn fraction_keeps_cardinality_bound() {
        let mut rng = mat::RandomSource::new(20);
        let data = mat::normalize_columns_unit(&rng.gaussian_matrix::<f64>(4, 10).view()).unwrap();
        let pre = preprocess(
            &data.view(),
            &PreprocessOptions {
                skip_reduction: true,
                ..Default::default()
            },
        )
        .unwrap();
        let profile = InnovationProfile {
            values: Array1::linspace(0.1, 0.9, 10),
        };
        let result = build_basis_fraction(&pre, &profile, 2.0 / 10.0).unwrap();
        assert_eq!(result.selected_columns.len(), 2);
        assert!(result.basis.dim() <= 2);
    }

    #[test]
    fn outlier_scores_projection_cases() {
        let basis = SubspaceBasis::new(array![[1.0], [0.0]]).unwrap();
        let data = array![[2.0, 0.0], [0.0, 3.0]];
        let scores = detect_outliers(&data.view(), &basis, 0.2);
        assert_abs_diff_eq!(scores.scores[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(scores.scores[1], 1.0, epsilon = 1e-12);
        assert_eq!(scores.verdicts, vec![false, true]);
    }
}
