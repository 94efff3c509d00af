use ndarray::{Array2, ArrayView2};
use rand::Rng;

use super::ClusterAssignment;
use crate::knn_graph::squared_distance;
use crate::rng::seeded;
use crate::{Error, Result};

const MAX_LLOYD_ITERS: usize = 300;

#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub assignment: ClusterAssignment,
    /// `L x dim`, one centroid per row.
    pub centroids: Array2<f64>,
    /// Within-cluster sum of squared distances.
    pub inertia: f64,
}

/// Lloyd's algorithm from k-means++ seeds on the rows of `coords`, keeping
/// the lowest-inertia run out of `restarts` (earliest run on ties).
///
/// Each restart draws its own seed from `rng` up front.
pub fn kmeans<R: Rng + ?Sized>(coords: ArrayView2<f64>, l: usize, rng: &mut R, restarts: usize) -> Result<KMeansFit> {
    let (n, dim) = coords.dim();
    if l == 0 {
        return Err(Error::InvalidParameter("number of clusters must be positive".into()));
    }
    if l > n {
        return Err(Error::InvalidParameter(format!("{l} clusters requested for {n} points")));
    }
    let flat: Vec<f64> = coords.iter().copied().collect();
    let seeds: Vec<u64> = (0..restarts.max(1)).map(|_| rng.random()).collect();
    let mut best: Option<(Vec<usize>, Vec<f64>, f64)> = None;
    for seed in seeds {
        let run = lloyd(&flat, dim, l, &mut seeded(seed));
        if best.as_ref().is_none_or(|b| run.2 < b.2) {
            best = Some(run);
        }
    }
    let (labels, centroids, inertia) = best.expect("at least one restart");
    Ok(KMeansFit {
        assignment: ClusterAssignment::new(labels.into_iter().map(|c| c + 1).collect(), l)?,
        centroids: Array2::from_shape_vec((l, dim), centroids).expect("l x dim"),
        inertia,
    })
}

fn plus_plus_seeds<R: Rng + ?Sized>(pts: &[f64], dim: usize, l: usize, rng: &mut R) -> Vec<f64> {
    let n = pts.len() / dim;
    let row = |i: usize| &pts[i * dim..(i + 1) * dim];
    let first = rng.random_range(0..n);
    let mut centroids = row(first).to_vec();
    let mut d2: Vec<f64> = (0..n).map(|i| squared_distance(row(i), row(first))).collect();
    for _ in 1..l {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > target && w > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = row(pick).to_vec();
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(squared_distance(row(i), &c));
        }
        centroids.extend(c);
    }
    centroids
}

fn nearest(p: &[f64], centroids: &[f64], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, cen) in centroids.chunks_exact(dim).enumerate() {
        let d = squared_distance(p, cen);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn lloyd<R: Rng + ?Sized>(pts: &[f64], dim: usize, l: usize, rng: &mut R) -> (Vec<usize>, Vec<f64>, f64) {
    let n = pts.len() / dim;
    let row = |i: usize| &pts[i * dim..(i + 1) * dim];
    let mut centroids = plus_plus_seeds(pts, dim, l, rng);
    let mut labels = vec![usize::MAX; n];
    let mut dist = vec![0.0; n];
    for _ in 0..MAX_LLOYD_ITERS {
        let mut changed = false;
        for i in 0..n {
            let (c, d) = nearest(row(i), &centroids, dim);
            if labels[i] != c {
                labels[i] = c;
                changed = true;
            }
            dist[i] = d;
        }
        let mut counts = vec![0usize; l];
        for &c in &labels {
            counts[c] += 1;
        }
        // Re-seed empty clusters with the point farthest from its centroid.
        for empty in 0..l {
            if counts[empty] > 0 {
                continue;
            }
            let donor = (0..n)
                .filter(|&i| counts[labels[i]] > 1)
                .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)));
            if let Some(i) = donor {
                counts[labels[i]] -= 1;
                labels[i] = empty;
                counts[empty] = 1;
                dist[i] = 0.0;
                changed = true;
            }
        }
        let mut sums = vec![0.0; l * dim];
        for i in 0..n {
            for (s, &x) in sums[labels[i] * dim..(labels[i] + 1) * dim].iter_mut().zip(row(i)) {
                *s += x;
            }
        }
        for c in 0..l {
            if counts[c] > 0 {
                for k in 0..dim {
                    centroids[c * dim + k] = sums[c * dim + k] / counts[c] as f64;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let inertia = (0..n)
        .map(|i| squared_distance(row(i), &centroids[labels[i] * dim..(labels[i] + 1) * dim]))
        .sum();
    (labels, centroids, inertia)
}
