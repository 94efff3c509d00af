use ndarray::{Array2, ShapeBuilder};
use rand::Rng;

use crate::spectral::ClusterAssignment;
use crate::{Error, Result};

/// `N` points in `R^n` with their unit-normalized copies and optional
/// ground-truth labels in `1..=L`.
///
/// Both matrices are `n x N` in column-major order, so every point is a
/// contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    points: Array2<f64>,
    normalized: Array2<f64>,
    labels: Option<Vec<usize>>,
    num_clusters: usize,
}

impl DataSet {
    /// Builds a dataset from one `Vec` per point.
    pub fn from_points(points: &[Vec<f64>], labels: Option<Vec<usize>>, num_clusters: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidData("dataset is empty".into()));
        }
        let n = points[0].len();
        if n == 0 {
            return Err(Error::InvalidData("points must have at least one coordinate".into()));
        }
        let mut flat = Vec::with_capacity(n * points.len());
        for p in points {
            if p.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: p.len() });
            }
            flat.extend_from_slice(p);
        }
        Self::from_columns(n, flat, labels, num_clusters)
    }

    /// Builds a dataset from a flat buffer holding `N` consecutive points of
    /// dimension `n`.
    pub fn from_columns(n: usize, flat: Vec<f64>, labels: Option<Vec<usize>>, num_clusters: usize) -> Result<Self> {
        if n == 0 || flat.is_empty() || flat.len() % n != 0 {
            return Err(Error::InvalidData(format!(
                "buffer of {} values does not hold whole points of dimension {n}",
                flat.len()
            )));
        }
        let count = flat.len() / n;
        let mut unit = flat.clone();
        for (i, p) in unit.chunks_exact_mut(n).enumerate() {
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidData(format!("point {i} has a non-finite coordinate")));
            }
            let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::InvalidData(format!("point {i} is the zero vector")));
            }
            p.iter_mut().for_each(|v| *v /= norm);
        }
        if let Some(labels) = &labels {
            validate_labels(labels, count, num_clusters)?;
        } else if num_clusters == 0 {
            return Err(Error::InvalidParameter("number of clusters must be positive".into()));
        }
        let shape = (n, count).f();
        Ok(Self {
            points: Array2::from_shape_vec(shape, flat).expect("shape checked"),
            normalized: Array2::from_shape_vec(shape, unit).expect("shape checked"),
            labels,
            num_clusters,
        })
    }

    /// Number of points `N`.
    pub fn len(&self) -> usize {
        self.points.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Ambient dimension `n`.
    pub fn dim(&self) -> usize {
        self.points.nrows()
    }

    pub fn num_clusters(&self) -> usize {
        self.num_clusters
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn assignment(&self) -> Option<ClusterAssignment> {
        self.labels
            .as_ref()
            .map(|l| ClusterAssignment::new(l.clone(), self.num_clusters).expect("labels validated"))
    }

    /// Raw samples, `n x N`.
    pub fn points(&self) -> &Array2<f64> {
        &self.points
    }

    /// Unit-normalized samples, `n x N`.
    pub fn normalized(&self) -> &Array2<f64> {
        &self.normalized
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let n = self.dim();
        &self.points.as_slice_memory_order().expect("column-major")[i * n..(i + 1) * n]
    }

    pub fn unit(&self, i: usize) -> &[f64] {
        let n = self.dim();
        &self.normalized_flat()[i * n..(i + 1) * n]
    }

    /// Normalized points back to back, point `i` at `[i*n, (i+1)*n)`.
    pub fn normalized_flat(&self) -> &[f64] {
        self.normalized.as_slice_memory_order().expect("column-major")
    }

    /// Normalized points carrying `label`.
    pub fn members(&self, label: usize) -> Vec<&[f64]> {
        match &self.labels {
            Some(labels) => labels
                .iter()
                .enumerate()
                .filter(|(_, &l)| l == label)
                .map(|(i, _)| self.unit(i))
                .collect(),
            None if label == 1 => (0..self.len()).map(|i| self.unit(i)).collect(),
            None => Vec::new(),
        }
    }

    /// Dataset made of the listed points, in that order. The labels that
    /// remain are renumbered `1..` keeping their relative order.
    pub fn subset(&self, indices: &[usize]) -> Result<DataSet> {
        let n = self.dim();
        let mut flat = Vec::with_capacity(indices.len() * n);
        for &i in indices {
            if i >= self.len() {
                return Err(Error::InvalidParameter(format!("index {i} out of range")));
            }
            flat.extend_from_slice(self.point(i));
        }
        let labels = self.labels.as_ref().map(|l| indices.iter().map(|&i| l[i]).collect::<Vec<_>>());
        match labels {
            Some(labels) => {
                let mut present: Vec<usize> = labels.clone();
                present.sort_unstable();
                present.dedup();
                let remap = |l: usize| present.binary_search(&l).expect("present") + 1;
                let relabeled = labels.iter().map(|&l| remap(l)).collect();
                DataSet::from_columns(n, flat, Some(relabeled), present.len())
            }
            None => DataSet::from_columns(n, flat, None, self.num_clusters),
        }
    }

    /// Keeps every point of `count` clusters chosen uniformly at random,
    /// relabeled `1..=count` in increasing order of their original label.
    pub fn select_clusters<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Result<DataSet> {
        let labels = self.labels.as_ref().ok_or(Error::MissingLabels)?;
        if count == 0 || count > self.num_clusters {
            return Err(Error::InvalidParameter(format!(
                "cannot choose {count} of {} clusters",
                self.num_clusters
            )));
        }
        let mut chosen: Vec<usize> = rand::seq::index::sample(rng, self.num_clusters, count)
            .into_iter()
            .map(|c| c + 1)
            .collect();
        chosen.sort_unstable();
        let indices: Vec<usize> = (0..self.len()).filter(|&i| chosen.contains(&labels[i])).collect();
        self.subset(&indices)
    }
}

fn validate_labels(labels: &[usize], count: usize, num_clusters: usize) -> Result<()> {
    if labels.len() != count {
        return Err(Error::LengthMismatch { expected: count, found: labels.len() });
    }
    let mut seen = vec![false; num_clusters];
    for &l in labels {
        if l == 0 || l > num_clusters {
            return Err(Error::InvalidData(format!("label {l} outside 1..={num_clusters}")));
        }
        seen[l - 1] = true;
    }
    if let Some(missing) = seen.iter().position(|&s| !s) {
        return Err(Error::InvalidData(format!("cluster {} has no points", missing + 1)));
    }
    Ok(())
}
