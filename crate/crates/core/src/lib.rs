//! Clustering for data drawn from a union of pointed polyhedral cones.
//!
//! The main pipeline normalizes every sample onto the unit sphere, links each
//! point to its `K` nearest neighbours (Gaussian or binary weights), symmetrizes
//! the graph and hands it to normalized spectral clustering:
//!
//! ```
//! use uopc::cone_model::{benchmark_cones_2d, sample_uopc};
//! use uopc::pipeline::{cluster, Method};
//! use uopc::metrics::clustering_error;
//! use uopc::rng::seeded;
//!
//! let mut rng = seeded(7);
//! let data = sample_uopc(&benchmark_cones_2d(), &[60, 60], &mut rng).unwrap();
//! let run = cluster(&data, &Method::KnnBinary { k: 8 }, 2, &mut rng).unwrap();
//! let truth = data.assignment().unwrap();
//! assert!(clustering_error(&run.assignment, &truth).unwrap() < 0.5);
//! ```
//!
//! Two coefficient-based baselines are included for comparison: the
//! non-negative lasso (`Method::Ncl`) and its unpenalized special case, the
//! non-negative least-squares affinity (`Method::Lsa`).

pub mod cone_model;
pub mod datasets;
mod error;
pub mod knn_graph;
pub mod metrics;
pub mod nn_regression;
pub mod pipeline;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
