//! End-to-end clustering: affinity construction followed by spectral
//! clustering.

use rand::Rng;

use crate::cone_model::DataSet;
use crate::knn_graph::{build_affinity, default_tau, knn_kdtree, symmetrize, AffinityMatrix, Kernel};
use crate::nn_regression::{coefficient_matrix, SolverParams};
use crate::spectral::{spectral_cluster, ClusterAssignment};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Gaussian-weighted KNN graph; `tau: None` picks the median K-th
    /// neighbour distance.
    KnnGaussian { k: usize, tau: Option<f64> },
    KnnBinary { k: usize },
    /// Non-negative lasso self-representation.
    Ncl { lambda: f64 },
    /// Non-negative least-squares self-representation.
    Lsa,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::KnnGaussian { .. } => "knn-gaussian",
            Method::KnnBinary { .. } => "knn-binary",
            Method::Ncl { .. } => "ncl",
            Method::Lsa => "lsa",
        }
    }

    pub fn k(&self) -> Option<usize> {
        match *self {
            Method::KnnGaussian { k, .. } | Method::KnnBinary { k } => Some(k),
            _ => None,
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        match *self {
            Method::Ncl { lambda } => Some(lambda),
            Method::Lsa => Some(0.0),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClusterRun {
    pub assignment: ClusterAssignment,
    /// The affinity before symmetrization.
    pub directed: AffinityMatrix,
    /// Gaussian bandwidth actually used.
    pub tau: Option<f64>,
}

/// The directed affinity for `method`, plus the Gaussian bandwidth used.
pub fn directed_affinity(data: &DataSet, method: &Method, solver: &SolverParams) -> Result<(AffinityMatrix, Option<f64>)> {
    match *method {
        Method::KnnGaussian { k, tau } => {
            let nl = knn_kdtree(data, k)?;
            let tau = tau.unwrap_or_else(|| default_tau(&nl));
            Ok((build_affinity(&nl, Kernel::Gaussian { tau })?, Some(tau)))
        }
        Method::KnnBinary { k } => Ok((build_affinity(&knn_kdtree(data, k)?, Kernel::Binary)?, None)),
        Method::Ncl { lambda } => Ok((coefficient_matrix(data, lambda, solver)?, None)),
        Method::Lsa => Ok((coefficient_matrix(data, 0.0, solver)?, None)),
    }
}

pub fn cluster<R: Rng + ?Sized>(data: &DataSet, method: &Method, l: usize, rng: &mut R) -> Result<ClusterRun> {
    cluster_with(data, method, l, &SolverParams::default(), rng)
}

pub fn cluster_with<R: Rng + ?Sized>(
    data: &DataSet,
    method: &Method,
    l: usize,
    solver: &SolverParams,
    rng: &mut R,
) -> Result<ClusterRun> {
    if l == 0 || l > data.len() {
        return Err(crate::Error::InvalidParameter(format!(
            "{l} clusters requested for {} points",
            data.len()
        )));
    }
    let (directed, tau) = directed_affinity(data, method, solver)?;
    let assignment = spectral_cluster(&symmetrize(&directed), l, rng)?;
    Ok(ClusterRun { assignment, directed, tau })
}
