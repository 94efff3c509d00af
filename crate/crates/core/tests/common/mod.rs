#![allow(dead_code)]

use ndarray::{Array1, Array2};

/// Least squares on the listed columns of `a`, by modified Gram-Schmidt QR.
fn least_squares(a: &Array2<f64>, cols: &[usize], b: &Array1<f64>) -> Vec<f64> {
    let k = cols.len();
    let mut q: Vec<Array1<f64>> = Vec::with_capacity(k);
    let mut r = vec![vec![0.0; k]; k];
    for (jj, &j) in cols.iter().enumerate() {
        let mut v = a.column(j).to_owned();
        for _ in 0..2 {
            for (ii, qi) in q.iter().enumerate() {
                let d = qi.dot(&v);
                r[ii][jj] += d;
                v.scaled_add(-d, qi);
            }
        }
        let norm = v.dot(&v).sqrt();
        r[jj][jj] = norm;
        q.push(v / norm);
    }
    let qtb: Vec<f64> = q.iter().map(|qi| qi.dot(b)).collect();
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|j| r[i][j] * x[j]).sum();
        x[i] = (qtb[i] - s) / r[i][i];
    }
    x
}

/// Lawson-Hanson active-set NNLS: `min ||a x - b||` subject to `x >= 0`.
pub fn lawson_hanson(a: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let m = a.ncols();
    let mut x = Array1::<f64>::zeros(m);
    let mut passive = vec![false; m];
    for _ in 0..3 * m + 10 {
        let w = a.t().dot(&(b - &a.dot(&x)));
        let next = (0..m).filter(|&j| !passive[j] && w[j] > 1e-13).max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = next else { break };
        passive[j] = true;
        loop {
            let cols: Vec<usize> = (0..m).filter(|&j| passive[j]).collect();
            let z = least_squares(a, &cols, b);
            if z.iter().all(|&v| v > 0.0) {
                x.fill(0.0);
                for (&j, &v) in cols.iter().zip(&z) {
                    x[j] = v;
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (&j, &v) in cols.iter().zip(&z) {
                if v <= 0.0 {
                    alpha = alpha.min(x[j] / (x[j] - v));
                }
            }
            for (&j, &v) in cols.iter().zip(&z) {
                x[j] += alpha * (v - x[j]);
                if x[j] <= 1e-15 {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }
    x
}

pub fn residual_norm(a: &Array2<f64>, x: &Array1<f64>, b: &Array1<f64>) -> f64 {
    let r = b - &a.dot(x);
    r.dot(&r).sqrt()
}

/// All eigenvalues of a symmetric matrix by cyclic Jacobi rotations,
/// ascending.
pub fn jacobi_eigenvalues(m: &Array2<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut a = m.clone();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[[i, j]].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[[p, q]].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * a[[p, q]]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[[k, p]], a[[k, q]]);
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[[p, k]], a[[q, k]]);
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut vals: Vec<f64> = (0..n).map(|i| a[[i, i]]).collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Every permutation of `0..n`.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}
