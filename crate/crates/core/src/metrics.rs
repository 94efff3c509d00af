//! Clustering error under the best label matching, and true/false discovery
//! counts of a directed affinity matrix.

use crate::knn_graph::AffinityMatrix;
use crate::spectral::ClusterAssignment;
use crate::{Error, Result};

/// Fraction of points misclassified under the label bijection that agrees
/// best with `truth`.
pub fn clustering_error(predicted: &ClusterAssignment, truth: &ClusterAssignment) -> Result<f64> {
    let n = truth.len();
    if predicted.len() != n {
        return Err(Error::LengthMismatch { expected: n, found: predicted.len() });
    }
    if n == 0 {
        return Ok(0.0);
    }
    let l = predicted.num_clusters().max(truth.num_clusters());
    let mut confusion = vec![vec![0i64; l]; l];
    for (&p, &t) in predicted.labels().iter().zip(truth.labels()) {
        confusion[p - 1][t - 1] += 1;
    }
    let matched = max_weight_matching(&confusion);
    Ok(1.0 - matched as f64 / n as f64)
}

/// Largest total weight of a perfect matching in a square weight matrix.
///
/// Hungarian method with potentials, O(L^3), run as a minimization on the
/// negated weights.
pub fn max_weight_matching(weights: &[Vec<i64>]) -> i64 {
    let n = weights.len();
    if n == 0 {
        return 0;
    }
    let cost = |i: usize, j: usize| -weights[i - 1][j - 1];
    // 1-based arrays; column 0 is the virtual start.
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0;
        let mut minv = vec![i64::MAX; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=n).map(|j| weights[owner[j] - 1][j - 1]).sum()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscoveryReport {
    pub true_count: usize,
    pub false_count: usize,
    /// False discoveries in each row.
    pub per_point_false: Vec<usize>,
}

/// Classifies every nonzero off-diagonal entry `A(i, j)` as a true (same
/// label) or false (different labels) discovery.
pub fn count_discoveries(a: &AffinityMatrix, truth: Option<&[usize]>) -> Result<DiscoveryReport> {
    let truth = truth.ok_or(Error::MissingLabels)?;
    let n = a.len();
    if truth.len() != n {
        return Err(Error::LengthMismatch { expected: n, found: truth.len() });
    }
    let mut report = DiscoveryReport { true_count: 0, false_count: 0, per_point_false: vec![0; n] };
    for ((i, j), &w) in a.weights().indexed_iter() {
        if i == j || w == 0.0 {
            continue;
        }
        if truth[i] == truth[j] {
            report.true_count += 1;
        } else {
            report.false_count += 1;
            report.per_point_false[i] += 1;
        }
    }
    Ok(report)
}
