use std::f64::consts::PI;

use super::DataSet;
use crate::{Error, Result};

/// `ln Γ(n/2 + 1)`, exact recurrence for the integer and half-integer cases.
fn ln_gamma_half_plus_one(n: usize) -> f64 {
    if n % 2 == 0 {
        (1..=n / 2).map(|i| (i as f64).ln()).sum()
    } else {
        0.5 * PI.ln() + (0..=(n - 1) / 2).map(|i| (i as f64 + 0.5).ln()).sum::<f64>()
    }
}

/// Volume of the radius-`x` ball in `R^n`: `π^{n/2} x^n / Γ(n/2 + 1)`.
pub fn ball_volume(n: usize, x: f64) -> f64 {
    assert!(n >= 1, "dimension must be positive");
    assert!(x >= 0.0, "radius must be nonnegative");
    if x == 0.0 {
        return 0.0;
    }
    let nf = n as f64;
    (0.5 * nf * PI.ln() + nf * x.ln() - ln_gamma_half_plus_one(n)).exp()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Smallest Euclidean distance between a point of `a` and a point of `b`
/// (both sets unit-normalized), clamped to `[0, 2]`.
pub fn empirical_affinity(a: &[&[f64]], b: &[&[f64]]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyView);
    }
    let mut best = f64::INFINITY;
    for p in a {
        for q in b {
            best = best.min(distance(p, q));
        }
    }
    Ok(best.min(2.0))
}

/// `J / V_n(r)` at every point, where `r` is the distance to its `J`-th
/// nearest other point of the set. Coincident points give `+inf`.
pub fn pointwise_density(points: &[&[f64]], j: usize) -> Result<Vec<f64>> {
    if j == 0 {
        return Err(Error::InvalidParameter("J must be positive".into()));
    }
    if j >= points.len() {
        return Err(Error::InvalidParameter(format!(
            "J = {j} needs at least {} points, found {}",
            j + 1,
            points.len()
        )));
    }
    let n = points[0].len();
    let mut dists = Vec::with_capacity(points.len() - 1);
    Ok(points
        .iter()
        .enumerate()
        .map(|(v, p)| {
            dists.clear();
            dists.extend(points.iter().enumerate().filter(|&(u, _)| u != v).map(|(_, q)| distance(p, q)));
            let (_, &mut r, _) = dists.select_nth_unstable_by(j - 1, f64::total_cmp);
            let vol = ball_volume(n, r);
            if vol == 0.0 { f64::INFINITY } else { j as f64 / vol }
        })
        .collect())
}

/// Density of a cone with parameter `J`, estimated as the smallest pointwise
/// density over the sample points themselves.
///
/// Infinite pointwise values (duplicates) are skipped; if nothing finite is
/// left the estimate is undefined and an error is returned.
pub fn empirical_density(points: &[&[f64]], j: usize) -> Result<f64> {
    pointwise_density(points, j)?
        .into_iter()
        .filter(|d| d.is_finite())
        .min_by(f64::total_cmp)
        .ok_or(Error::DegenerateDensity)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UopcCertificate {
    pub t_star: f64,
    pub rho_star: f64,
    pub k: usize,
    pub ambient_dim: usize,
    /// `rho_star >= k / V_n(t_star)`: no false discovery with `k` neighbours.
    pub holds: bool,
    /// Largest `K` for which the bound holds.
    pub k_max: usize,
}

/// Evaluates the no-false-discovery condition `rho* >= K / V_n(t*)`.
pub fn check_certificate(t_star: f64, rho_star: f64, k: usize, n: usize) -> Result<UopcCertificate> {
    if !(0.0..=2.0).contains(&t_star) {
        return Err(Error::InvalidParameter(format!("t* = {t_star} outside [0, 2]")));
    }
    if rho_star.is_nan() || rho_star < 0.0 {
        return Err(Error::InvalidParameter(format!("rho* = {rho_star} must be nonnegative")));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("K must be positive".into()));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let volume = ball_volume(n, t_star);
    let admits = |kk: usize| rho_star >= kk as f64 / volume;

    // floor(rho * V) can sit one ulp off the threshold test, so settle k_max
    // against the same comparison used for `holds`.
    let product = rho_star * volume;
    let mut k_max = if product.is_finite() { product.floor().max(0.0) as usize } else { usize::MAX };
    while k_max < usize::MAX && admits(k_max + 1) {
        k_max += 1;
    }
    while k_max > 0 && !admits(k_max) {
        k_max -= 1;
    }
    Ok(UopcCertificate { t_star, rho_star, k, ambient_dim: n, holds: admits(k), k_max })
}

/// Certificate for a labeled dataset, measuring `t*` as the smallest
/// cross-cone affinity and `rho*` as the smallest per-cone density at `J = k`.
pub fn measure_certificate(data: &DataSet, k: usize) -> Result<UopcCertificate> {
    if data.labels().is_none() {
        return Err(Error::MissingLabels);
    }
    let l = data.num_clusters();
    if l < 2 {
        return Err(Error::InvalidData("the affinity condition needs at least two cones".into()));
    }
    let groups: Vec<Vec<&[f64]>> = (1..=l).map(|c| data.members(c)).collect();
    let mut t_star = f64::INFINITY;
    for a in 0..l {
        for b in a + 1..l {
            t_star = t_star.min(empirical_affinity(&groups[a], &groups[b])?);
        }
    }
    let mut rho_star = f64::INFINITY;
    for g in &groups {
        rho_star = rho_star.min(empirical_density(g, k)?);
    }
    check_certificate(t_star, rho_star, k, data.dim())
}
