//! Synthetic data generators with ground-truth labels.
//!
//! Every generator produces a column matrix `D` laid out internally as
//! `[B A]` (outliers first, then inliers) and then shuffled by a recorded
//! random permutation. Inlier and outlier models:
//!
//! * inliers uniform on the unit sphere of a random `r`-dimensional
//!   subspace `U`;
//! * inliers in a union of `m` random `d`-dimensional subspaces whose direct
//!   sum is `U` (`r = m·d`, degenerate draws are regenerated);
//! * clustered inliers `a_i = U s_i / ‖U s_i‖` with `s_i = w + γ z_i`;
//! * outliers uniform on the ambient unit sphere;
//! * clustered outliers `b_i = (q + η v_i)/√(1+η²)` around a center `q`
//!   (either uniform on the sphere or drawn close to `U`);
//! * linearly dependent outliers uniform on the sphere of a subspace `U_o`
//!   sharing exactly `intersect_dim` dimensions with `U`;
//! * outliers close to `U`, drawn as normalized `[U H]·g` with `H` spanning a
//!   few extra random dimensions;
//! * a mix of ambient and clustered outliers.
//!
//! The noise model replaces each inlier `a` by `(a + σₙ·u)/(1 + σₙ²)` with
//! `u` uniform on the sphere. The printed model scales by `1/(1+σₙ²)` even
//! though that does not give expected squared norm 1; the generator follows
//! the formula as written.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, NdFloat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::{
    self, cast, mgs_orthonormalize, read_labels_csv, read_matrix_csv, write_labels_csv,
    write_matrix_csv, RandomSource, SubspaceBasis,
};

/// Distribution of the inlier columns. The inlier model fixes the rank `r`
/// of the ground-truth subspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InlierModel {
    /// Uniform on `U ∩ S^{M1−1}` for a random `rank`-dimensional `U`.
    UniformOnSubspace { rank: usize },
    /// Union of `counts.len()` random subspaces of dimension `subspace_dim`;
    /// `counts[k]` columns are drawn uniformly on the k-th subspace sphere.
    UnionOfSubspaces { subspace_dim: usize, counts: Vec<usize> },
    /// Clustered around a random unit coefficient vector `w`:
    /// `a_i = U(w + γ z_i)/‖w + γ z_i‖` with `z_i` uniform on the sphere.
    Clustered { rank: usize, gamma: f64 },
}

impl InlierModel {
    pub fn rank(&self) -> usize {
        match self {
            InlierModel::UniformOnSubspace { rank } => *rank,
            InlierModel::UnionOfSubspaces {
                subspace_dim,
                counts,
            } => subspace_dim * counts.len(),
            InlierModel::Clustered { rank, .. } => *rank,
        }
    }
}

/// How the clustered-outlier center `q` is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QMode {
    /// Uniform on the ambient unit sphere.
    UniformSphere,
    /// `q = [U p]h/‖[U p]h‖` with `p` uniform on the sphere and `h` standard
    /// normal, which places `q` close to `U` with high probability.
    NearSubspace,
}

/// Distribution of the outlier columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OutlierModel {
    /// Uniform on the ambient unit sphere.
    UniformAmbient,
    /// `b_i = (q + η v_i)/√(1+η²)` clustered around `q ∉ U`.
    Clustered { eta: f64, q_mode: QMode },
    /// Uniform on the sphere of a `rank`-dimensional subspace `U_o` sharing
    /// exactly `intersect_dim` dimensions with `U`.
    Dependent { rank: usize, intersect_dim: usize },
    /// Normalized `[U H]·g` with `H` a raw `M1 × extra_dims` standard
    /// Gaussian matrix (its span is a random subspace; the √M1-scale columns
    /// give the off-subspace part enough weight to matter) and `g` standard
    /// normal.
    CloseToSubspace { extra_dims: usize },
    /// `ambient` uniform-sphere outliers followed by `clustered` clustered
    /// outliers (their sum must equal the outlier count).
    Mixed {
        ambient: usize,
        clustered: usize,
        eta: f64,
        q_mode: QMode,
    },
}

/// Full generation recipe: dimensions, inlier model, outlier model, noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub ambient_dim: usize,
    pub num_inliers: usize,
    pub num_outliers: usize,
    pub inliers: InlierModel,
    pub outliers: OutlierModel,
    /// Noise amplitude σₙ; `None` or `Some(0.0)` means noiseless.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_sigma: Option<f64>,
}

/// Finite and strictly positive (rejects NaN).
fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

impl ModelSpec {
    /// Rank of the ground-truth inlier subspace.
    pub fn rank(&self) -> usize {
        self.inliers.rank()
    }

    pub fn num_columns(&self) -> usize {
        self.num_inliers + self.num_outliers
    }

    pub fn validate(&self) -> Result<()> {
        let m1 = self.ambient_dim;
        if m1 == 0 {
            return Err(Error::invalid_spec("ambient_dim", "must be at least 1"));
        }
        if self.num_inliers == 0 {
            return Err(Error::invalid_spec("num_inliers", "must be at least 1"));
        }
        let r = self.rank();
        if r == 0 {
            return Err(Error::invalid_spec("inliers.rank", "must be at least 1"));
        }
        if r > m1 {
            return Err(Error::invalid_spec(
                "inliers.rank",
                format!("rank {r} exceeds ambient dimension {m1}"),
            ));
        }
        match &self.inliers {
            InlierModel::UniformOnSubspace { .. } => {}
            InlierModel::UnionOfSubspaces {
                subspace_dim,
                counts,
            } => {
                if *subspace_dim == 0 || counts.is_empty() {
                    return Err(Error::invalid_spec(
                        "inliers.counts",
                        "need at least one subspace of dimension >= 1",
                    ));
                }
                if counts.iter().sum::<usize>() != self.num_inliers {
                    return Err(Error::invalid_spec(
                        "inliers.counts",
                        format!(
                            "counts sum to {}, expected num_inliers = {}",
                            counts.iter().sum::<usize>(),
                            self.num_inliers
                        ),
                    ));
                }
            }
            InlierModel::Clustered { gamma, .. } => {
                if !positive(*gamma) {
                    return Err(Error::invalid_spec("inliers.gamma", "must be positive"));
                }
            }
        }
        match &self.outliers {
            OutlierModel::UniformAmbient => {}
            OutlierModel::Clustered { eta, .. } => {
                if !positive(*eta) {
                    return Err(Error::invalid_spec("outliers.eta", "must be positive"));
                }
            }
            OutlierModel::Dependent {
                rank: ro,
                intersect_dim,
            } => {
                if *ro == 0 || *ro > m1 {
                    return Err(Error::invalid_spec(
                        "outliers.rank",
                        format!("must be in 1..={m1}"),
                    ));
                }
                if *intersect_dim > r.min(*ro) {
                    return Err(Error::invalid_spec(
                        "outliers.intersect_dim",
                        format!("exceeds min(r, r_o) = {}", r.min(*ro)),
                    ));
                }
                if r + (ro - intersect_dim) > m1 {
                    return Err(Error::invalid_spec(
                        "outliers.rank",
                        "r + r_o - intersect_dim exceeds the ambient dimension",
                    ));
                }
            }
            OutlierModel::CloseToSubspace { extra_dims } => {
                if *extra_dims == 0 || r + extra_dims > m1 {
                    return Err(Error::invalid_spec(
                        "outliers.extra_dims",
                        "need 1 <= extra_dims <= ambient_dim - rank",
                    ));
                }
            }
            OutlierModel::Mixed {
                ambient,
                clustered,
                eta,
                ..
            } => {
                if ambient + clustered != self.num_outliers {
                    return Err(Error::invalid_spec(
                        "outliers.ambient",
                        format!(
                            "ambient + clustered = {} must equal num_outliers = {}",
                            ambient + clustered,
                            self.num_outliers
                        ),
                    ));
                }
                if *clustered > 0 && !positive(*eta) {
                    return Err(Error::invalid_spec("outliers.eta", "must be positive"));
                }
            }
        }
        if let Some(sigma) = self.noise_sigma {
            if !sigma.is_finite() || sigma < 0.0 {
                return Err(Error::invalid_spec(
                    "noise_sigma",
                    "must be finite and nonnegative",
                ));
            }
        }
        Ok(())
    }
}

/// Generation parameters stored alongside a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub model: ModelSpec,
    pub seed: u64,
}

/// A generated dataset with its ground truth.
#[derive(Debug, Clone)]
pub struct Dataset<F> {
    /// `M1 × M2`, one data point per column, shuffled by `permutation`.
    pub data: Array2<F>,
    /// Per-column outlier flag (`true` = outlier).
    pub labels: Vec<bool>,
    /// Ground-truth basis of the inlier subspace.
    pub truth_basis: SubspaceBasis<F>,
    /// `data.column(j)` is column `permutation[j]` of the block layout
    /// `[B A]` (outliers first).
    pub permutation: Vec<usize>,
    /// For union-of-subspaces inliers: which subspace each column belongs
    /// to; `None` on outliers and on other inlier models.
    pub inlier_cluster: Vec<Option<usize>>,
    pub meta: DatasetMeta,
}

impl<F: NdFloat> Dataset<F> {
    pub fn num_columns(&self) -> usize {
        self.data.ncols()
    }

    pub fn num_outliers(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    /// Undo the recorded permutation, recovering the `[B A]` block layout.
    pub fn unpermuted_data(&self) -> Array2<F> {
        let mut out = Array2::zeros(self.data.raw_dim());
        for (j, &src) in self.permutation.iter().enumerate() {
            out.column_mut(src).assign(&self.data.column(j));
        }
        out
    }

    /// Write `data.csv`, `labels.csv`, `basis.csv`, and `meta.json` into a
    /// directory (created if missing).
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_matrix_csv(&dir.join("data.csv"), &self.data.view())?;
        write_labels_csv(&dir.join("labels.csv"), &self.labels)?;
        write_matrix_csv(&dir.join("basis.csv"), &self.truth_basis.matrix().view())?;
        let json = serde_json::to_string_pretty(&self.meta)?;
        fs::write(dir.join("meta.json"), json)?;
        Ok(())
    }
}

/// A dataset read back from a directory written by [`Dataset::write_dir`].
/// The permutation and per-column cluster ids are not serialized; re-run the
/// generator with the stored seed to recover them.
#[derive(Debug, Clone)]
pub struct StoredDataset<F> {
    pub data: Array2<F>,
    pub labels: Vec<bool>,
    pub truth_basis: SubspaceBasis<F>,
    pub meta: DatasetMeta,
}

pub fn read_dataset_dir<F: NdFloat>(dir: &Path) -> Result<StoredDataset<F>> {
    let data = read_matrix_csv(&dir.join("data.csv"))?;
    let labels = read_labels_csv(&dir.join("labels.csv"))?;
    let basis = read_matrix_csv(&dir.join("basis.csv"))?;
    let meta: DatasetMeta = serde_json::from_str(&fs::read_to_string(dir.join("meta.json"))?)?;
    if labels.len() != data.ncols() {
        return Err(Error::invalid_input(format!(
            "labels.csv has {} entries for {} data columns",
            labels.len(),
            data.ncols()
        )));
    }
    Ok(StoredDataset {
        data,
        labels,
        truth_basis: SubspaceBasis::new(basis)?,
        meta,
    })
}

/// Generate a dataset. Draw order: inlier subspace(s), inlier columns,
/// outlier structure (center / basis), outlier columns, permutation, noise.
pub fn gen_dataset<F: NdFloat>(spec: &ModelSpec, rng: &mut RandomSource) -> Result<Dataset<F>> {
    spec.validate()?;
    let m1 = spec.ambient_dim;
    let n_i = spec.num_inliers;
    let n_o = spec.num_outliers;
    let seed = rng.seed();

    let (truth, inliers, cluster_ids) = gen_inliers::<F>(spec, rng);
    let outliers = gen_outliers::<F>(spec, &truth, rng);

    // Block layout [B A], then shuffle by a recorded permutation.
    let m2 = n_i + n_o;
    let mut blocks = Array2::zeros((m1, m2));
    blocks.slice_mut(ndarray::s![.., 0..n_o]).assign(&outliers);
    blocks.slice_mut(ndarray::s![.., n_o..]).assign(&inliers);
    let permutation = rng.shuffled_indices(m2);
    let mut data = Array2::zeros((m1, m2));
    let mut labels = vec![false; m2];
    let mut inlier_cluster = vec![None; m2];
    for (j, &src) in permutation.iter().enumerate() {
        data.column_mut(j).assign(&blocks.column(src));
        labels[j] = src < n_o;
        if src >= n_o {
            inlier_cluster[j] = cluster_ids[src - n_o];
        }
    }

    let mut dataset = Dataset {
        data,
        labels,
        truth_basis: SubspaceBasis::new(truth)?,
        permutation,
        inlier_cluster,
        meta: DatasetMeta {
            model: spec.clone(),
            seed,
        },
    };
    if let Some(sigma) = spec.noise_sigma {
        if sigma > 0.0 {
            dataset = apply_noise(&dataset, sigma, rng);
        }
    }
    Ok(dataset)
}

fn gen_inliers<F: NdFloat>(
    spec: &ModelSpec,
    rng: &mut RandomSource,
) -> (Array2<F>, Array2<F>, Vec<Option<usize>>) {
    let m1 = spec.ambient_dim;
    let n_i = spec.num_inliers;
    match &spec.inliers {
        InlierModel::UniformOnSubspace { rank } => {
            let u = rng.random_orthonormal::<F>(m1, *rank);
            let coeffs = rng.unit_sphere_columns::<F>(*rank, n_i);
            let a = u.dot(&coeffs);
            (u, a, vec![None; n_i])
        }
        InlierModel::UnionOfSubspaces {
            subspace_dim,
            counts,
        } => {
            let d = *subspace_dim;
            let r = d * counts.len();
            // Redraw until the direct sum of the subspaces has full dimension
            // r (degenerate draws have probability zero but are checked).
            let (bases, truth) = loop {
                let bases: Vec<Array2<F>> =
                    counts.iter().map(|_| rng.random_orthonormal(m1, d)).collect();
                let mut stacked = Array2::zeros((m1, r));
                for (k, b) in bases.iter().enumerate() {
                    stacked
                        .slice_mut(ndarray::s![.., k * d..(k + 1) * d])
                        .assign(b);
                }
                let truth = mgs_orthonormalize(&stacked.view(), cast(1e-8));
                if truth.ncols() == r {
                    break (bases, truth);
                }
            };
            let mut a = Array2::zeros((m1, n_i));
            let mut ids = Vec::with_capacity(n_i);
            let mut col = 0;
            for (k, (&count, basis)) in counts.iter().zip(bases.iter()).enumerate() {
                for _ in 0..count {
                    let s = rng.unit_sphere_vector::<F>(d);
                    a.column_mut(col).assign(&basis.dot(&s));
                    ids.push(Some(k));
                    col += 1;
                }
            }
            (truth, a, ids)
        }
        InlierModel::Clustered { rank, gamma } => {
            let u = rng.random_orthonormal::<F>(m1, *rank);
            let w = rng.unit_sphere_vector::<F>(*rank);
            let g = cast::<F>(*gamma);
            let mut a = Array2::zeros((m1, n_i));
            for j in 0..n_i {
                let s = loop {
                    let z = rng.unit_sphere_vector::<F>(*rank);
                    let s: Array1<F> = &w + &(z * g);
                    let norm = s.dot(&s).sqrt();
                    if norm > cast(1e-8) {
                        break s / norm;
                    }
                };
                a.column_mut(j).assign(&u.dot(&s));
            }
            (u, a, vec![None; n_i])
        }
    }
}

fn gen_outliers<F: NdFloat>(
    spec: &ModelSpec,
    truth: &Array2<F>,
    rng: &mut RandomSource,
) -> Array2<F> {
    let m1 = spec.ambient_dim;
    let n_o = spec.num_outliers;
    match &spec.outliers {
        OutlierModel::UniformAmbient => rng.unit_sphere_columns(m1, n_o),
        OutlierModel::Clustered { eta, q_mode } => {
            clustered_outliers(truth, *eta, *q_mode, n_o, rng)
        }
        OutlierModel::Dependent {
            rank: ro,
            intersect_dim,
        } => {
            let u_o = dependent_basis(truth, *ro, *intersect_dim, rng);
            u_o.dot(&rng.unit_sphere_columns::<F>(*ro, n_o))
        }
        OutlierModel::CloseToSubspace { extra_dims } => {
            let r = truth.ncols();
            let h = rng.gaussian_matrix::<F>(m1, *extra_dims);
            let mut span = Array2::zeros((m1, r + extra_dims));
            span.slice_mut(ndarray::s![.., 0..r]).assign(truth);
            span.slice_mut(ndarray::s![.., r..]).assign(&h);
            let g = rng.gaussian_matrix::<F>(r + extra_dims, n_o);
            let cols = span.dot(&g);
            mat::normalize_columns_unit(&cols.view())
                .expect("Gaussian combinations are nonzero almost surely")
        }
        OutlierModel::Mixed {
            ambient,
            clustered,
            eta,
            q_mode,
        } => {
            let unstructured = rng.unit_sphere_columns::<F>(m1, *ambient);
            let structured = clustered_outliers(truth, *eta, *q_mode, *clustered, rng);
            let mut out = Array2::zeros((m1, n_o));
            out.slice_mut(ndarray::s![.., 0..*ambient]).assign(&unstructured);
            out.slice_mut(ndarray::s![.., *ambient..]).assign(&structured);
            out
        }
    }
}

/// `b_i = (q + η v_i)/√(1+η²)`; the center is redrawn on the measure-zero
/// event that it lands inside the inlier subspace.
fn clustered_outliers<F: NdFloat>(
    truth: &Array2<F>,
    eta: f64,
    q_mode: QMode,
    count: usize,
    rng: &mut RandomSource,
) -> Array2<F> {
    let m1 = truth.nrows();
    let q = loop {
        let q: Array1<F> = match q_mode {
            QMode::UniformSphere => rng.unit_sphere_vector(m1),
            QMode::NearSubspace => {
                let p = rng.unit_sphere_vector::<F>(m1);
                let h = Array1::from_shape_fn(truth.ncols() + 1, |_| rng.standard_normal::<F>());
                let mut q = truth.dot(&h.slice(ndarray::s![0..truth.ncols()]));
                let scale = h[truth.ncols()];
                q.zip_mut_with(&p, |x, &y| *x += scale * y);
                let norm = q.dot(&q).sqrt();
                if norm <= cast(1e-8) {
                    continue;
                }
                q / norm
            }
        };
        // Require a component outside span(U).
        let coeffs = truth.t().dot(&q);
        let inside = truth.dot(&coeffs);
        let mut outside = F::zero();
        for (a, b) in q.iter().zip(inside.iter()) {
            let d = *a - *b;
            outside += d * d;
        }
        if outside.sqrt() > cast(1e-8) {
            break q;
        }
    };
    let eta_f = cast::<F>(eta);
    let scale = F::one() / (F::one() + eta_f * eta_f).sqrt();
    let mut out = Array2::zeros((m1, count));
    for j in 0..count {
        let v = rng.unit_sphere_vector::<F>(m1);
        for (t, x) in out.column_mut(j).iter_mut().enumerate() {
            *x = (q[t] + eta_f * v[t]) * scale;
        }
    }
    out
}

/// Basis sharing exactly `intersect_dim` dimensions with `truth`: the first
/// `intersect_dim` truth columns plus fresh random directions orthogonal to
/// the whole truth subspace, re-orthonormalized.
fn dependent_basis<F: NdFloat>(
    truth: &Array2<F>,
    ro: usize,
    intersect_dim: usize,
    rng: &mut RandomSource,
) -> Array2<F> {
    let m1 = truth.nrows();
    let mut cols = Array2::zeros((m1, ro));
    cols.slice_mut(ndarray::s![.., 0..intersect_dim])
        .assign(&truth.slice(ndarray::s![.., 0..intersect_dim]));
    let mut accepted = 0usize;
    while accepted < ro - intersect_dim {
        let g = Array1::from_shape_fn(m1, |_| rng.standard_normal::<F>());
        // Project out the full truth subspace and previously accepted columns.
        let mut v = g.clone();
        let coeffs = truth.t().dot(&v);
        let inside = truth.dot(&coeffs);
        v.zip_mut_with(&inside, |x, &y| *x -= y);
        for k in 0..intersect_dim + accepted {
            let col = cols.column(k);
            let proj = col.dot(&v);
            v.zip_mut_with(&col, |x, &y| *x -= proj * y);
        }
        let norm = v.dot(&v).sqrt();
        if norm > cast(1e-8) {
            cols.column_mut(intersect_dim + accepted).assign(&(v / norm));
            accepted += 1;
        }
    }
    let q = mgs_orthonormalize(&cols.view(), cast(1e-10));
    debug_assert_eq!(q.ncols(), ro);
    q
}

/// Replace each inlier column `a` by `(a + σₙ·u)/(1 + σₙ²)` with `u` uniform
/// on the unit sphere, drawn in data-column order. Outliers, labels, and the
/// ground-truth basis are untouched.
pub fn apply_noise<F: NdFloat>(ds: &Dataset<F>, sigma: f64, rng: &mut RandomSource) -> Dataset<F> {
    assert!(sigma >= 0.0, "noise amplitude must be nonnegative");
    let mut out = ds.clone();
    out.meta.model.noise_sigma = Some(sigma);
    if sigma == 0.0 {
        return out;
    }
    let s = cast::<F>(sigma);
    let denom = F::one() + s * s;
    let m1 = ds.data.nrows();
    for (j, &is_outlier) in ds.labels.iter().enumerate() {
        if is_outlier {
            continue;
        }
        let u = rng.unit_sphere_vector::<F>(m1);
        let mut col = out.data.column_mut(j);
        for (t, x) in col.iter_mut().enumerate() {
            *x = (*x + s * u[t]) / denom;
        }
    }
    out
}
