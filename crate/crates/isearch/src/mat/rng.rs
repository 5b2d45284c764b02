//! Deterministic random sampling.
//!
//! All randomness in the crate flows through [`RandomSource`], a seeded
//! ChaCha8 stream (a named, portable counter-based generator). Gaussian
//! variates come from `rand_distr`'s ziggurat sampler over that stream and
//! are always drawn in `f64` before being cast to the working scalar type,
//! so the draw sequence does not depend on the scalar type in use.

use ndarray::{Array1, Array2, NdFloat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::cast;

/// Seeded deterministic generator: same seed + same call sequence gives
/// bit-identical outputs.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn standard_normal<F: NdFloat>(&mut self) -> F {
        cast(self.rng.sample::<f64, _>(StandardNormal))
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    pub fn uniform_usize(&mut self, bound: usize) -> usize {
        self.rng.gen_range(0..bound)
    }

    /// Matrix of i.i.d. standard normals, filled in row-major order.
    pub fn gaussian_matrix<F: NdFloat>(&mut self, rows: usize, cols: usize) -> Array2<F> {
        Array2::from_shape_fn((rows, cols), |_| self.standard_normal())
    }

    /// One point drawn uniformly from the unit sphere in `dim` dimensions
    /// (normalized Gaussian vector; rotation invariance follows from the
    /// rotation invariance of the Gaussian).
    pub fn unit_sphere_vector<F: NdFloat>(&mut self, dim: usize) -> Array1<F> {
        loop {
            let v = Array1::from_shape_fn(dim, |_| self.standard_normal::<F>());
            let norm = v.dot(&v).sqrt();
            if norm > cast(1e-8) {
                return v / norm;
            }
            // Astronomically unlikely; redraw keeps the output well defined.
        }
    }

    /// `count` independent uniform sphere points as matrix columns, drawn
    /// column by column.
    pub fn unit_sphere_columns<F: NdFloat>(&mut self, dim: usize, count: usize) -> Array2<F> {
        let mut out = Array2::zeros((dim, count));
        for j in 0..count {
            out.column_mut(j).assign(&self.unit_sphere_vector(dim));
        }
        out
    }

    /// Basis of a subspace drawn uniformly at random: Gaussian matrix
    /// orthonormalized by modified Gram–Schmidt (redrawn on the measure-zero
    /// degenerate case).
    pub fn random_orthonormal<F: NdFloat>(&mut self, dim: usize, rank: usize) -> Array2<F> {
        assert!(rank <= dim, "rank {rank} exceeds ambient dimension {dim}");
        loop {
            let g = self.gaussian_matrix::<F>(dim, rank);
            let q = super::mgs_orthonormalize(&g.view(), cast(1e-8));
            if q.ncols() == rank {
                return q;
            }
        }
    }

    /// Fisher–Yates shuffle of `0..n`.
    pub fn shuffled_indices(&mut self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.rng.gen_range(0..=i);
            idx.swap(i, j);
        }
        idx
    }
}
