//! Clustering via directions of innovation.
//!
//! The affinity between columns `i` and `j` is `|c*_iᵀd_j| + |c*_jᵀd_i|`:
//! each column's direction has strong projections on the columns sharing its
//! subspace and weak projections elsewhere. Spectral clustering on the
//! symmetrized affinity recovers the partition, and a robust-PCA pass per
//! cluster corrects misassigned columns afterwards.

use ndarray::{Array2, ArrayView2, NdFloat};

use crate::detect::{self, PreprocessedData, Selection};
use crate::error::{Error, Result};
use crate::mat::{self, cast, RandomSource, SubspaceBasis};
use crate::solver::DirectionSet;

/// Symmetric nonnegative affinity with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix<F> {
    pub weights: Array2<F>,
}

/// `W = |C*ᵀD| + |C*ᵀD|ᵀ` with the self-affinity diagonal zeroed (the
/// constraint forces `|c*_iᵀd_i| = 1`, which carries no information).
pub fn affinity_from_directions<F: NdFloat>(
    pre: &PreprocessedData<F>,
    dirs: &DirectionSet<F>,
) -> Result<AffinityMatrix<F>> {
    if dirs.num_columns() != pre.num_columns() {
        return Err(Error::invalid_input(format!(
            "direction set covers {} columns, data has {}",
            dirs.num_columns(),
            pre.num_columns()
        )));
    }
    let cross = dirs.directions.t().dot(&pre.reduced);
    let m2 = cross.nrows();
    let mut weights = Array2::zeros((m2, m2));
    for i in 0..m2 {
        for j in 0..m2 {
            if i == j {
                continue;
            }
            weights[[i, j]] = cross[[i, j]].abs() + cross[[j, i]].abs();
        }
    }
    Ok(AffinityMatrix { weights })
}

/// Cluster assignment for every column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    pub labels: Vec<usize>,
    pub num_clusters: usize,
}

/// Spectral clustering on the symmetric normalized Laplacian: embed each
/// column into the `num_clusters` smallest eigenvectors, normalize the rows,
/// and run seeded k-means with restarts.
pub fn spectral_cluster<F: NdFloat>(
    affinity: &AffinityMatrix<F>,
    num_clusters: usize,
    rng: &mut RandomSource,
) -> Result<Clustering> {
    let w = &affinity.weights;
    let m2 = w.nrows();
    if num_clusters == 0 || num_clusters > m2 {
        return Err(Error::invalid_input(format!(
            "num_clusters {num_clusters} outside 1..={m2}"
        )));
    }
    let degrees: Vec<F> = (0..m2).map(|i| w.row(i).sum()).collect();
    let max_degree = degrees.iter().copied().fold(F::zero(), F::max);
    let degree_floor = max_degree * cast::<F>(1e-12);
    if let Some(index) = degrees.iter().position(|&d| d <= degree_floor) {
        return Err(Error::IsolatedNode { index });
    }

    // L = I − D^{-1/2} W D^{-1/2}
    let inv_sqrt: Vec<F> = degrees.iter().map(|&d| F::one() / d.sqrt()).collect();
    let mut laplacian = Array2::zeros((m2, m2));
    for i in 0..m2 {
        for j in 0..m2 {
            let v = -inv_sqrt[i] * w[[i, j]] * inv_sqrt[j];
            laplacian[[i, j]] = if i == j { F::one() + v } else { v };
        }
    }
    let (_, vectors) = mat::symmetric_eigen(&laplacian.view())?;
    let mut embedding = vectors
        .slice(ndarray::s![.., 0..num_clusters])
        .to_owned();
    for mut row in embedding.rows_mut() {
        let norm = row.iter().map(|&v| v * v).fold(F::zero(), |a, b| a + b).sqrt();
        if norm > F::zero() {
            row.mapv_inplace(|v| v / norm);
        }
    }
    let labels = kmeans(&embedding.view(), num_clusters, 10, 300, rng);
    Ok(Clustering {
        labels,
        num_clusters,
    })
}

/// Seeded k-means (k-means++ initialization, best inertia over restarts).
/// Ties in assignment and seeding go to the lowest index, so the outcome is
/// a pure function of the embedding and the random stream.
#[allow(clippy::needless_range_loop)]
fn kmeans<F: NdFloat>(
    points: &ArrayView2<F>,
    k: usize,
    restarts: usize,
    max_iters: usize,
    rng: &mut RandomSource,
) -> Vec<usize> {
    let n = points.nrows();
    let dim = points.ncols();
    let mut best: Option<(F, Vec<usize>)> = None;
    for _ in 0..restarts {
        let mut centroids = plus_plus_init(points, k, rng);
        let mut labels = vec![0usize; n];
        for _ in 0..max_iters {
            let mut changed = false;
            for p in 0..n {
                let mut best_c = 0usize;
                let mut best_d = F::infinity();
                for c in 0..k {
                    let d = sq_dist(&points.row(p), &centroids.row(c).view());
                    if d < best_d {
                        best_d = d;
                        best_c = c;
                    }
                }
                if labels[p] != best_c {
                    labels[p] = best_c;
                    changed = true;
                }
            }
            // Recompute centroids; an emptied cluster takes the point
            // farthest from its centroid.
            let mut counts = vec![0usize; k];
            let mut sums = Array2::<F>::zeros((k, dim));
            for p in 0..n {
                counts[labels[p]] += 1;
                let mut row = sums.row_mut(labels[p]);
                row += &points.row(p);
            }
            for c in 0..k {
                if counts[c] == 0 {
                    let far = (0..n)
                        .max_by(|&a, &b| {
                            let da = sq_dist(&points.row(a), &centroids.row(labels[a]).view());
                            let db = sq_dist(&points.row(b), &centroids.row(labels[b]).view());
                            da.partial_cmp(&db).unwrap().then(b.cmp(&a))
                        })
                        .expect("n >= k >= 1");
                    centroids.row_mut(c).assign(&points.row(far));
                    changed = true;
                } else {
                    let inv = F::one() / cast::<F>(counts[c] as f64);
                    for t in 0..dim {
                        centroids[[c, t]] = sums[[c, t]] * inv;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let inertia = (0..n)
            .map(|p| sq_dist(&points.row(p), &centroids.row(labels[p]).view()))
            .fold(F::zero(), |a, b| a + b);
        if best.as_ref().is_none_or(|(b, _)| inertia < *b) {
            best = Some((inertia, labels));
        }
    }
    best.expect("restarts >= 1").1
}

fn plus_plus_init<F: NdFloat>(
    points: &ArrayView2<F>,
    k: usize,
    rng: &mut RandomSource,
) -> Array2<F> {
    let n = points.nrows();
    let dim = points.ncols();
    let mut centroids = Array2::zeros((k, dim));
    let first = rng.uniform_usize(n);
    centroids.row_mut(0).assign(&points.row(first));
    let mut dist: Vec<F> = (0..n)
        .map(|p| sq_dist(&points.row(p), &centroids.row(0).view()))
        .collect();
    for c in 1..k {
        let total: F = dist.iter().copied().fold(F::zero(), |a, b| a + b);
        let chosen = if total > F::zero() {
            // Weighted draw by squared distance via one uniform variate.
            let target = cast::<F>(rng.uniform()) * total;
            let mut acc = F::zero();
            let mut pick = n - 1;
            for (p, &d) in dist.iter().enumerate() {
                acc += d;
                if acc >= target {
                    pick = p;
                    break;
                }
            }
            pick
        } else {
            rng.uniform_usize(n)
        };
        centroids.row_mut(c).assign(&points.row(chosen));
        for (p, d) in dist.iter_mut().enumerate() {
            let nd = sq_dist(&points.row(p), &centroids.row(c).view());
            if nd < *d {
                *d = nd;
            }
        }
    }
    centroids
}

fn sq_dist<F: NdFloat>(a: &ndarray::ArrayView1<F>, b: &ndarray::ArrayView1<F>) -> F {
    let mut acc = F::zero();
    for (&x, &y) in a.iter().zip(b.iter()) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

/// Options for the per-cluster recovery inside [`correct_clusters`].
#[derive(Debug, Clone)]
pub struct CorrectionOptions {
    pub pipeline: detect::PipelineConfig,
}

impl CorrectionOptions {
    pub fn with_rank(rank: usize) -> Self {
        Self {
            pipeline: detect::PipelineConfig::adaptive(rank),
        }
    }
}

/// Robust cluster error correction: recover a basis for each cluster with
/// the innovation pipeline, then reassign every column to the cluster whose
/// basis captures the most of its energy (`argmax_k ‖dᵀÛ^k‖₂`, ties to the
/// lowest k).
///
/// Returns the per-cluster bases and the relabeling of the concatenated
/// columns (cluster 0 columns first, then cluster 1, ...). The number of
/// clusters never grows and the column count is preserved.
pub fn correct_clusters<F: NdFloat>(
    clusters: &[Array2<F>],
    ranks: &[usize],
    opts: &CorrectionOptions,
) -> Result<(Vec<SubspaceBasis<F>>, Clustering)> {
    if clusters.is_empty() {
        return Err(Error::invalid_input("no clusters given"));
    }
    if clusters.len() != ranks.len() {
        return Err(Error::invalid_input(format!(
            "{} clusters but {} ranks",
            clusters.len(),
            ranks.len()
        )));
    }
    let ambient = clusters[0].nrows();
    let mut bases = Vec::with_capacity(clusters.len());
    for (k, data) in clusters.iter().enumerate() {
        if data.ncols() == 0 {
            return Err(Error::invalid_input(format!("cluster {k} is empty")));
        }
        if data.nrows() != ambient {
            return Err(Error::invalid_input(
                "clusters disagree on the ambient dimension",
            ));
        }
        let mut config = opts.pipeline.clone();
        if let Selection::Adaptive { rank, .. } = &mut config.selection {
            *rank = ranks[k];
        }
        let output = detect::run_pipeline(&data.view(), &config)?;
        bases.push(output.recovery.basis);
    }

    let mut labels = Vec::new();
    for data in clusters {
        for col in data.columns() {
            let mut best_k = 0usize;
            let mut best_energy = -F::one();
            for (k, basis) in bases.iter().enumerate() {
                let coeffs = basis.matrix().t().dot(&col);
                let energy = coeffs.dot(&coeffs).sqrt();
                if energy > best_energy {
                    best_energy = energy;
                    best_k = k;
                }
            }
            labels.push(best_k);
        }
    }
    Ok((
        bases,
        Clustering {
            labels,
            num_clusters: clusters.len(),
        },
    ))
}

/// Fraction of misassigned columns under the best label permutation
/// (exhaustive for up to 8 clusters).
pub fn clustering_error(predicted: &[usize], truth: &[usize], num_clusters: usize) -> f64 {
    assert_eq!(predicted.len(), truth.len());
    assert!(num_clusters <= 8, "exhaustive matching limited to 8 clusters");
    let mut perm: Vec<usize> = (0..num_clusters).collect();
    let mut best = usize::MAX;
    permute(&mut perm, 0, &mut |p| {
        let mismatches = predicted
            .iter()
            .zip(truth.iter())
            .filter(|(&pred, &t)| p[pred] != t)
            .count();
        best = best.min(mismatches);
    });
    best as f64 / predicted.len().max(1) as f64
}

fn permute(perm: &mut Vec<usize>, at: usize, visit: &mut impl FnMut(&[usize])) {
    if at == perm.len() {
        visit(perm);
        return;
    }
    for i in at..perm.len() {
        perm.swap(at, i);
        permute(perm, at + 1, visit);
        perm.swap(at, i);
    }
}
