use std::fs;
use std::io::Write;
use std::path::Path;

use uopc::cone_model::{benchmark_cones_2d, benchmark_cones_3d, measure_certificate, parse_cones, sample_uopc, DataSet, UopcCertificate};
use uopc::metrics::{clustering_error, count_discoveries, DiscoveryReport};
use uopc::nn_regression::SolverParams;
use uopc::pipeline::{cluster_with, Method};
use uopc::rng::split;
use uopc::spectral::ClusterAssignment;

use crate::config::check_method;
use crate::error::{CliError, CliResult};
use crate::table::read_dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    Planar,
    Spatial,
}

/// Labeled synthetic sample, `count` points per cone. `cones_file` replaces
/// the built-in cones.
pub fn generate(kind: SyntheticKind, cones_file: Option<&Path>, count: usize, seed: u64) -> CliResult<DataSet> {
    let cones = match cones_file {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let cones = parse_cones(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            if cones.is_empty() {
                return Err(CliError::Config(format!("{} holds no cones", path.display())));
            }
            cones
        }
        None if kind == SyntheticKind::Planar => benchmark_cones_2d(),
        None => benchmark_cones_3d(),
    };
    if count == 0 {
        return Err(CliError::Config("count must be at least 1".into()));
    }
    Ok(sample_uopc(&cones, &vec![count; cones.len()], &mut split(seed, 0))?)
}

pub fn load_dataset(path: &Path) -> CliResult<DataSet> {
    let file = fs::File::open(path).map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?;
    read_dataset(file)
}

#[derive(Debug, Clone)]
pub struct ClusterOutcome {
    pub assignment: ClusterAssignment,
    pub tau: Option<f64>,
    /// Present when the input carries labels.
    pub error: Option<f64>,
    pub discoveries: Option<DiscoveryReport>,
}

/// One clustering run; `clusters` defaults to the number of labels present.
pub fn cluster_once(data: &DataSet, method: &Method, clusters: Option<usize>, seed: u64, solver: &SolverParams) -> CliResult<ClusterOutcome> {
    check_method(method)?;
    let l = match (clusters, data.labels()) {
        (Some(l), _) => l,
        (None, Some(_)) => data.num_clusters(),
        (None, None) => return Err(CliError::Config("--clusters is required for unlabeled data".into())),
    };
    if l == 0 || l > data.len() {
        return Err(CliError::Config(format!("{l} clusters requested for {} points", data.len())));
    }
    if let Some(k) = method.k() {
        if k >= data.len() {
            return Err(CliError::Config(format!("k = {k} needs more than {k} points, found {}", data.len())));
        }
    }
    let run = cluster_with(data, method, l, solver, &mut split(seed, 1))?;
    let (error, discoveries) = match data.assignment() {
        Some(truth) => (
            Some(clustering_error(&run.assignment, &truth)?),
            Some(count_discoveries(&run.directed, data.labels())?),
        ),
        None => (None, None),
    };
    Ok(ClusterOutcome { assignment: run.assignment, tau: run.tau, error, discoveries })
}

pub fn certify(data: &DataSet, k: usize) -> CliResult<UopcCertificate> {
    if k == 0 {
        return Err(CliError::Config("k must be at least 1".into()));
    }
    Ok(measure_certificate(data, k)?)
}

pub fn write_certificate<W: Write>(cert: &UopcCertificate, out: W) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_star", "rho_star", "k", "dim", "holds", "k_max"])?;
    w.write_record([
        cert.t_star.to_string(),
        cert.rho_star.to_string(),
        cert.k.to_string(),
        cert.ambient_dim.to_string(),
        cert.holds.to_string(),
        cert.k_max.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> DataSet {
        let pts = vec![vec![1.0, 0.05], vec![1.0, 0.0], vec![0.0, 1.0], vec![0.05, 1.0]];
        DataSet::from_points(&pts, Some(vec![1, 1, 2, 2]), 2).unwrap()
    }

    #[test]
    fn toy_pairs_recovered() {
        for method in [Method::KnnBinary { k: 1 }, Method::Lsa] {
            let out = cluster_once(&toy(), &method, None, 0, &SolverParams::default()).unwrap();
            assert_eq!(out.error, Some(0.0), "{}", method.name());
            let l = out.assignment.labels();
            assert_eq!(l[0], l[1]);
            assert_eq!(l[2], l[3]);
        }
        let knn = cluster_once(&toy(), &Method::KnnBinary { k: 1 }, None, 0, &SolverParams::default()).unwrap();
        assert_eq!(knn.discoveries.unwrap().false_count, 0);
    }

    #[test]
    fn too_many_clusters() {
        let err = cluster_once(&toy(), &Method::KnnBinary { k: 1 }, Some(5), 0, &SolverParams::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn generated_sizes() {
        let d = generate(SyntheticKind::Spatial, None, 7, 3).unwrap();
        assert_eq!((d.len(), d.dim(), d.num_clusters()), (14, 3, 2));
        assert_eq!(generate(SyntheticKind::Spatial, None, 7, 3).unwrap().points(), d.points());
    }
}
