//! K-nearest-neighbour graphs on unit-normalized data and the affinity
//! matrices built from them.
//!
//! Neighbours are ordered by squared Euclidean distance and then by point
//! index, so exact search methods agree bit for bit. A point is never its
//! own neighbour.

mod kdtree;

use std::cmp::Ordering;
use std::io::{self, Write};

use ndarray::Array2;

use crate::cone_model::DataSet;
use crate::{Error, Result};

pub use kdtree::KdTree;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

/// For every point, its `K` nearest neighbours in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborList {
    k: usize,
    lists: Vec<Vec<Neighbor>>,
}

impl NeighborList {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    pub fn of(&self, i: usize) -> &[Neighbor] {
        &self.lists[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[Neighbor]> {
        self.lists.iter().map(Vec::as_slice)
    }
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s
}

/// Search candidate ordered by `(squared distance, index)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Candidate {
    pub sq: f64,
    pub index: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sq.total_cmp(&other.sq).then(self.index.cmp(&other.index))
    }
}

fn to_neighbors(cands: impl IntoIterator<Item = Candidate>) -> Vec<Neighbor> {
    cands.into_iter().map(|c| Neighbor { index: c.index, distance: c.sq.sqrt() }).collect()
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter("K must be positive".into()));
    }
    if k >= n {
        return Err(Error::InvalidParameter(format!("K = {k} must be smaller than N = {n}")));
    }
    Ok(())
}

/// Exact K nearest neighbours by exhaustive comparison.
pub fn knn_bruteforce(data: &DataSet, k: usize) -> Result<NeighborList> {
    knn_bruteforce_flat(data.normalized_flat(), data.dim(), k)
}

/// Brute force on `N` points of dimension `dim` stored back to back.
pub fn knn_bruteforce_flat(points: &[f64], dim: usize, k: usize) -> Result<NeighborList> {
    let n = points.len() / dim;
    check_k(k, n)?;
    let mut cands = Vec::with_capacity(n - 1);
    let lists = points
        .chunks_exact(dim)
        .enumerate()
        .map(|(i, q)| {
            cands.clear();
            cands.extend(
                points
                    .chunks_exact(dim)
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(j, p)| Candidate { sq: squared_distance(q, p), index: j }),
            );
            if k < cands.len() {
                cands.select_nth_unstable(k - 1);
                cands.truncate(k);
            }
            cands.sort_unstable();
            to_neighbors(cands.iter().copied())
        })
        .collect();
    Ok(NeighborList { k, lists })
}

/// Exact K nearest neighbours through a kd-tree; returns exactly what
/// [`knn_bruteforce`] returns.
pub fn knn_kdtree(data: &DataSet, k: usize) -> Result<NeighborList> {
    knn_kdtree_flat(data.normalized_flat(), data.dim(), k)
}

pub fn knn_kdtree_flat(points: &[f64], dim: usize, k: usize) -> Result<NeighborList> {
    let n = points.len() / dim;
    check_k(k, n)?;
    let tree = KdTree::build(points, dim);
    let lists = (0..n).map(|i| to_neighbors(tree.query_point(i, k))).collect();
    Ok(NeighborList { k, lists })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    /// `exp(-d^2 / (2 tau^2))` on neighbour pairs.
    Gaussian { tau: f64 },
    /// `1` on neighbour pairs.
    Binary,
}

/// Dense nonnegative `N x N` affinity with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    weights: Array2<f64>,
    symmetric: bool,
}

impl AffinityMatrix {
    /// Wraps a directed (not yet symmetrized) weight matrix.
    pub fn directed(weights: Array2<f64>) -> Result<Self> {
        validate_weights(&weights)?;
        Ok(Self { weights, symmetric: false })
    }

    /// Wraps an already symmetric weight matrix.
    pub fn symmetric(weights: Array2<f64>) -> Result<Self> {
        validate_weights(&weights)?;
        let max_diff = max_asymmetry(&weights);
        if max_diff > 1e-9 {
            return Err(Error::Asymmetric { max_diff });
        }
        Ok(Self { weights, symmetric: true })
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn into_weights(self) -> Array2<f64> {
        self.weights
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn len(&self) -> usize {
        self.weights.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes every nonzero entry as `i j weight`, 0-based, row-major.
    pub fn write_triplets<W: Write>(&self, mut out: W) -> io::Result<()> {
        for ((i, j), &w) in self.weights.indexed_iter() {
            if w != 0.0 {
                writeln!(out, "{i} {j} {w}")?;
            }
        }
        Ok(())
    }
}

pub(crate) fn max_asymmetry(m: &Array2<f64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max((m[[i, j]] - m[[j, i]]).abs());
        }
    }
    worst
}

fn validate_weights(w: &Array2<f64>) -> Result<()> {
    let (r, c) = w.dim();
    if r != c {
        return Err(Error::InvalidData(format!("affinity matrix is {r} x {c}, not square")));
    }
    if let Some(((i, j), v)) = w.indexed_iter().find(|(_, v)| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::InvalidData(format!("entry ({i}, {j}) = {v} is not a finite nonnegative weight")));
    }
    if let Some(i) = (0..r).find(|&i| w[[i, i]] != 0.0) {
        return Err(Error::InvalidData(format!("diagonal entry {i} is nonzero")));
    }
    Ok(())
}

/// Directed affinity: row `i` carries the kernel weight of each of its
/// neighbours, every other entry is zero.
pub fn build_affinity(neighbors: &NeighborList, kernel: Kernel) -> Result<AffinityMatrix> {
    if let Kernel::Gaussian { tau } = kernel {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau = {tau} must be positive")));
        }
    }
    let n = neighbors.len();
    let mut weights = Array2::zeros((n, n));
    for (i, list) in neighbors.iter().enumerate() {
        for nb in list {
            weights[[i, nb.index]] = match kernel {
                Kernel::Gaussian { tau } => (-(nb.distance * nb.distance) / (2.0 * tau * tau)).exp(),
                Kernel::Binary => 1.0,
            };
        }
    }
    Ok(AffinityMatrix { weights, symmetric: false })
}

/// `C = A^T + A`.
pub fn symmetrize(a: &AffinityMatrix) -> AffinityMatrix {
    let w = &a.weights;
    let weights = Array2::from_shape_fn(w.dim(), |(i, j)| w[[i, j]] + w[[j, i]]);
    AffinityMatrix { weights, symmetric: true }
}

/// Median over points of the distance to the `K`-th neighbour, with a
/// `1e-6` floor when that median is zero.
pub fn default_tau(neighbors: &NeighborList) -> f64 {
    let mut kth: Vec<f64> = neighbors.iter().filter_map(|l| l.last().map(|n| n.distance)).collect();
    if kth.is_empty() {
        return 1e-6;
    }
    kth.sort_unstable_by(f64::total_cmp);
    let m = kth.len();
    let median = if m % 2 == 1 { kth[m / 2] } else { 0.5 * (kth[m / 2 - 1] + kth[m / 2]) };
    if median > 0.0 { median } else { 1e-6 }
}
