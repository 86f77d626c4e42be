//! Magnitude of finite metric spaces and what it says about point clouds.
//!
//! The crate computes the magnitude and magnitude function of finite
//! subsets of Euclidean space, estimates intrinsic dimension three ways
//! (magnitude-function slope, degree-0 persistence via minimum spanning
//! trees, box counting), generates synthetic clouds with known dimension,
//! trains a small classifier while recording its full weight trajectory,
//! and evaluates a dimension-based generalisation bound. A CLI exposes
//! each stage; see the README for the file formats.

pub mod analyze;
pub mod bound;
pub mod cloud;
pub mod data;
pub mod dimension;
pub mod error;
pub mod fit;
pub mod io;
pub mod magnitude;
pub mod mlp;
pub mod mst;
pub mod rng;
pub mod solve;
pub mod stats;
pub mod synth;
pub mod train;

pub use cloud::{pairwise_distances, scale_distances, DistanceMatrix, PointCloud};
pub use dimension::{
    auto_interval, compare_dims, estimate_dim_box, estimate_dim_mag, estimate_dim_ph0,
    CompareConfig, DimComparison, DimensionEstimate, DimensionMethod,
};
pub use error::{Error, Result};
pub use fit::LogLogFit;
pub use magnitude::{
    magnitude, magnitude_function, similarity, MagnitudeCurve, MagnitudeResult,
    MagnitudeWeights, SimilarityMatrix,
};
pub use mst::mst_alpha_lifetime;
pub use synth::{gen_cantor, gen_levy, gen_segment, gen_square, LevyConfig};
