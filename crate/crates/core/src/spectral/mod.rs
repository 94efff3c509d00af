//! Normalized spectral clustering (Ng–Jordan–Weiss).
//!
//! 1. `M = D^{-1/2} C D^{-1/2}` with `D` the degree matrix of `C`;
//! 2. the `L` leading eigenvectors of `M` as columns of `U`;
//! 3. every row of `U` rescaled to unit length;
//! 4. k-means on those rows.
//!
//! Nodes with zero degree embed at the origin. They are left out of k-means
//! and afterwards join the cluster whose centroid (in the raw eigenvector
//! coordinates) is nearest.

mod eigen;
mod kmeans;

use std::io::{self, BufRead, Write};

use ndarray::{Array2, Axis};
use rand::Rng;

use crate::knn_graph::{squared_distance, AffinityMatrix};
use crate::{Error, Result};

pub use eigen::symmetric_eigs;
pub use kmeans::{kmeans, KMeansFit};

pub const DEFAULT_RESTARTS: usize = 10;

/// Rows with a smaller eigenvector norm count as embedded at the origin.
const ZERO_ROW: f64 = 1e-12;

/// Labels in `1..=L`, one per point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    labels: Vec<usize>,
    num_clusters: usize,
}

impl ClusterAssignment {
    pub fn new(labels: Vec<usize>, num_clusters: usize) -> Result<Self> {
        if num_clusters == 0 {
            return Err(Error::InvalidParameter("number of clusters must be positive".into()));
        }
        if let Some(bad) = labels.iter().find(|&&l| l == 0 || l > num_clusters) {
            return Err(Error::InvalidData(format!("label {bad} outside 1..={num_clusters}")));
        }
        Ok(Self { labels, num_clusters })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_clusters(&self) -> usize {
        self.num_clusters
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// One label per line.
    pub fn write_to<W: Write>(&self, mut out: W) -> io::Result<()> {
        for l in &self.labels {
            writeln!(out, "{l}")?;
        }
        Ok(())
    }

    /// Reads one label per line; `L` is the largest label seen.
    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut labels = Vec::new();
        for line in input.lines() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            labels.push(t.parse().map_err(|_| Error::Parse(format!("bad label {t:?}")))?);
        }
        let l = labels.iter().copied().max().unwrap_or(1);
        Self::new(labels, l)
    }
}

/// `D^{-1/2} C D^{-1/2}`; rows and columns of zero-degree nodes stay zero.
pub fn normalized_operator(c: &AffinityMatrix) -> Array2<f64> {
    let w = c.weights();
    let scale: Vec<f64> = w
        .sum_axis(Axis(1))
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    Array2::from_shape_fn(w.dim(), |(i, j)| w[[i, j]] * (scale[i] * scale[j]))
}

#[derive(Debug, Clone)]
pub struct SpectralEmbedding {
    /// `N x L`, rows rescaled to unit norm (zero rows left at zero).
    pub coords: Array2<f64>,
    /// Leading eigenvalues of the normalized operator, descending.
    pub eigenvalues: Vec<f64>,
    /// The raw leading eigenvectors as columns.
    pub vectors: Array2<f64>,
    /// Rows embedded at the origin.
    pub zero_rows: Vec<bool>,
}

pub fn spectral_embedding(c: &AffinityMatrix, l: usize) -> Result<SpectralEmbedding> {
    let m = normalized_operator(c);
    let (eigenvalues, vectors) = symmetric_eigs(&m, l)?;
    let mut coords = vectors.clone();
    let mut zero_rows = vec![false; coords.nrows()];
    for (i, mut row) in coords.rows_mut().into_iter().enumerate() {
        let norm = row.dot(&row).sqrt();
        if norm > ZERO_ROW {
            row /= norm;
        } else {
            row.fill(0.0);
            zero_rows[i] = true;
        }
    }
    Ok(SpectralEmbedding { coords, eigenvalues, vectors, zero_rows })
}

/// Partitions the nodes of a symmetric affinity into `l` clusters.
pub fn spectral_cluster<R: Rng + ?Sized>(c: &AffinityMatrix, l: usize, rng: &mut R) -> Result<ClusterAssignment> {
    spectral_cluster_with(c, l, rng, DEFAULT_RESTARTS)
}

pub fn spectral_cluster_with<R: Rng + ?Sized>(
    c: &AffinityMatrix,
    l: usize,
    rng: &mut R,
    restarts: usize,
) -> Result<ClusterAssignment> {
    let n = c.len();
    if l == 0 || l > n {
        return Err(Error::InvalidParameter(format!("{l} clusters requested for {n} points")));
    }
    let emb = spectral_embedding(c, l)?;
    let live: Vec<usize> = (0..n).filter(|&i| !emb.zero_rows[i]).collect();
    if live.len() < l || live.len() == n {
        return kmeans(emb.coords.view(), l, rng, restarts).map(|f| f.assignment);
    }

    let live_coords = emb.coords.select(Axis(0), &live);
    let fit = kmeans(live_coords.view(), l, rng, restarts)?;
    let mut labels = vec![0; n];
    for (&i, &lab) in live.iter().zip(fit.assignment.labels()) {
        labels[i] = lab;
    }

    let dim = emb.vectors.ncols();
    let mut raw_centroids = vec![0.0; l * dim];
    let mut counts = vec![0usize; l];
    for &i in &live {
        let c = labels[i] - 1;
        counts[c] += 1;
        for k in 0..dim {
            raw_centroids[c * dim + k] += emb.vectors[[i, k]];
        }
    }
    for c in 0..l {
        if counts[c] > 0 {
            raw_centroids[c * dim..(c + 1) * dim].iter_mut().for_each(|v| *v /= counts[c] as f64);
        }
    }
    for i in (0..n).filter(|&i| emb.zero_rows[i]) {
        let row: Vec<f64> = emb.vectors.row(i).to_vec();
        let best = (0..l)
            .filter(|&c| counts[c] > 0)
            .min_by(|&a, &b| {
                let da = squared_distance(&row, &raw_centroids[a * dim..(a + 1) * dim]);
                let db = squared_distance(&row, &raw_centroids[b * dim..(b + 1) * dim]);
                da.total_cmp(&db).then(a.cmp(&b))
            })
            .unwrap_or(0);
        labels[i] = best + 1;
    }
    ClusterAssignment::new(labels, l)
}
