//! Innovation search: robust subspace recovery, outlier detection, and data
//! clustering built on per-column ℓ1 direction-search optimization.
//!
//! Every data column gets an optimal direction — closely aligned with the
//! column, minimally correlated with everything else — whose ℓ1 cost ranks
//! how much *innovation* the column carries. Columns of a shared
//! low-dimensional subspace score low; outliers score high. The crate
//! provides:
//!
//! * [`mat`] — dense linear algebra, seeded sampling, and matrix CSV I/O;
//! * [`solver`] — the ADMM direction-search solver and an exact
//!   enumeration oracle for verification;
//! * [`synth`] — generators for the synthetic data models used by the
//!   experiment suites;
//! * [`detect`] — the recovery pipeline: preprocessing, innovation values,
//!   basis construction, outlier scoring;
//! * [`cluster`] — innovation affinity, spectral clustering, and robust
//!   cluster error correction;
//! * [`baselines`] — coherence scoring and plain PCA for comparison;
//! * [`eval`] — metrics, Monte Carlo trials, and parameter sweeps.
//!
//! All numeric code is generic over the scalar type via [`ndarray::NdFloat`];
//! the aliases below fix `f64`, which is what the CLI and experiment harness
//! use.

pub mod baselines;
pub mod cluster;
pub mod detect;
pub mod error;
pub mod eval;
pub mod mat;
pub mod solver;
pub mod synth;

pub use error::{Error, Result};

/// Dense `f64` matrix (rows = dimensions, columns = data points).
pub type Matrix = ndarray::Array2<f64>;
/// Dense `f64` vector.
pub type Vector = ndarray::Array1<f64>;
/// `f64` orthonormal subspace basis.
pub type Basis = mat::SubspaceBasis<f64>;
/// `f64` direction-search solution set.
pub type Directions = solver::DirectionSet<f64>;
/// `f64` innovation profile.
pub type Profile = detect::InnovationProfile<f64>;
/// `f64` synthetic dataset.
pub type Dataset = synth::Dataset<f64>;
