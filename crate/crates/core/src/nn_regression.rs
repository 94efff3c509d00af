//! Non-negative lasso self-representation baseline.
//!
//! Every normalized point `y` is regressed on all the others,
//!
//! ```text
//! min_c  1/2 ||y - Y c||^2 + lambda * sum(c)   subject to  c >= 0,
//! ```
//!
//! and the coefficient vectors become the columns of an affinity matrix.
//! `lambda = 0` is plain non-negative least squares (the LSA baseline).
//!
//! Two solvers are available:
//!
//! * [`SolverMethod::ActiveSet`] (default) works on the dual: the residual
//!   `r = y - Y c` is the projection of `y` onto `{u : Y_j^T u <= lambda}`,
//!   and the coefficients are the multipliers of the active constraints.
//!   Constraints are added one at a time (most violated first) while a thin
//!   QR factorization of the active atoms is kept up to date. It terminates
//!   once no constraint is violated by more than `tol / 1000`.
//! * [`SolverMethod::CoordinateDescent`] is cyclic coordinate descent on a
//!   maintained residual. It stops once a full sweep moves no coordinate by
//!   more than `tol` *and* the KKT conditions hold to within `tol`. On nearly
//!   collinear atoms it can need far more than `max_iter` sweeps.

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::cone_model::DataSet;
use crate::knn_graph::{squared_distance, symmetrize, AffinityMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverMethod {
    #[default]
    ActiveSet,
    CoordinateDescent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub tol: f64,
    /// Maximum number of sweeps (coordinate descent) or of constraint
    /// additions and removals (active set).
    pub max_iter: usize,
    pub method: SolverMethod,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 10_000, method: SolverMethod::ActiveSet }
    }
}

impl SolverParams {
    pub fn coordinate_descent() -> Self {
        Self { method: SolverMethod::CoordinateDescent, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NnlsSolution {
    pub coefficients: Vec<f64>,
    pub objective: f64,
    /// Sweeps (coordinate descent) or active-set changes performed.
    pub iterations: usize,
    pub converged: bool,
    /// Coordinate descent: the objective never rose between sweeps.
    /// Active set: the distance from `y` to the residual never shrank.
    /// Both allow for rounding.
    pub monotone: bool,
}

fn check_params(lambda: f64, params: &SolverParams) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} must be nonnegative")));
    }
    if !(params.tol > 0.0) || params.max_iter == 0 {
        return Err(Error::InvalidParameter("tol and max_iter must be positive".into()));
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves the non-negative lasso for `y` against the columns of
/// `dictionary` (`n x m`, every column unit-norm).
pub fn solve_ncl(y: ArrayView1<f64>, dictionary: ArrayView2<f64>, lambda: f64, params: &SolverParams) -> Result<NnlsSolution> {
    check_params(lambda, params)?;
    let (n, m) = dictionary.dim();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: y.len() });
    }
    let mut atoms = Vec::with_capacity(n * m);
    for (j, col) in dictionary.columns().into_iter().enumerate() {
        let norm = col.dot(&col).sqrt();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::NotNormalized { column: j, norm });
        }
        atoms.extend(col.iter().copied());
    }
    let y: Vec<f64> = y.to_vec();
    Ok(solve(&y, &atoms, n, None, lambda, params))
}

pub(crate) fn solve(y: &[f64], atoms: &[f64], n: usize, skip: Option<usize>, lambda: f64, params: &SolverParams) -> NnlsSolution {
    match params.method {
        SolverMethod::ActiveSet => active_set(y, atoms, n, skip, lambda, params),
        SolverMethod::CoordinateDescent => coordinate_descent(y, atoms, n, skip, lambda, params),
    }
}

/// Thin QR factorization `N = Q R` of the active atoms.
struct Factor {
    /// Orthonormal columns.
    q: Vec<Vec<f64>>,
    /// Columns of the upper triangular factor, each of length `q.len()`.
    r: Vec<Vec<f64>>,
}

impl Factor {
    fn new() -> Self {
        Self { q: Vec::new(), r: Vec::new() }
    }

    /// Splits `a` into `Q^T a` and the component orthogonal to `span(Q)`.
    fn project(&self, a: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut z = a.to_vec();
        let mut coef = vec![0.0; self.q.len()];
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for (qk, ck) in self.q.iter().zip(coef.iter_mut()) {
                let d = dot(qk, &z);
                *ck += d;
                for (zi, qi) in z.iter_mut().zip(qk) {
                    *zi -= d * qi;
                }
            }
        }
        (coef, z)
    }

    /// Solves `R x = b` by back substitution.
    fn solve_r(&self, b: &[f64]) -> Vec<f64> {
        let q = b.len();
        let mut x = b.to_vec();
        for i in (0..q).rev() {
            x[i] /= self.r[i][i];
            for k in 0..i {
                x[k] -= self.r[i][k] * x[i];
            }
        }
        x
    }

    fn push(&mut self, coef: Vec<f64>, z: &[f64], z_norm: f64) {
        for col in &mut self.r {
            col.push(0.0);
        }
        let mut col = coef;
        col.push(z_norm);
        self.r.push(col);
        self.q.push(z.iter().map(|v| v / z_norm).collect());
    }

    fn remove(&mut self, k: usize) {
        self.r.remove(k);
        let q = self.r.len();
        // restore triangularity with Givens rotations on rows (i, i + 1)
        for i in k..q {
            let (a, b) = (self.r[i][i], self.r[i][i + 1]);
            let h = a.hypot(b);
            let (cs, sn) = if h == 0.0 { (1.0, 0.0) } else { (a / h, b / h) };
            for col in &mut self.r[i..] {
                let (x, y) = (col[i], col[i + 1]);
                col[i] = cs * x + sn * y;
                col[i + 1] = -sn * x + cs * y;
            }
            let (left, right) = self.q.split_at_mut(i + 1);
            for (x, y) in left[i].iter_mut().zip(right[0].iter_mut()) {
                let (a, b) = (*x, *y);
                *x = cs * a + sn * b;
                *y = -sn * a + cs * b;
            }
        }
        for col in &mut self.r {
            col.pop();
        }
        self.q.pop();
    }
}

/// Dual active-set method (Goldfarb-Idnani with identity Hessian).
fn active_set(y: &[f64], atoms: &[f64], n: usize, skip: Option<usize>, lambda: f64, params: &SolverParams) -> NnlsSolution {
    let m = atoms.len() / n;
    let atom = |j: usize| &atoms[j * n..(j + 1) * n];
    let feas_tol = params.tol * 1e-3;
    let dep_tol = 1e-12;

    let mut active: Vec<usize> = Vec::new();
    let mut mu: Vec<f64> = Vec::new();
    let mut factor = Factor::new();
    let mut blocked = vec![false; m];
    let mut steps = 0;
    let mut converged = false;
    let mut monotone = true;
    let mut u;
    let mut dist = 0.0;

    let residual = |active: &[usize], mu: &[f64]| {
        let mut u = y.to_vec();
        for (&j, &w) in active.iter().zip(mu) {
            for (ui, ai) in u.iter_mut().zip(atom(j)) {
                *ui -= w * ai;
            }
        }
        u
    };

    'outer: while steps < params.max_iter {
        u = residual(&active, &mu);
        let d = squared_distance(&u, y);
        if d < dist * (1.0 - 1e-12) - 1e-15 {
            monotone = false;
        }
        dist = d;

        let mut pick = None;
        let mut worst = feas_tol;
        for j in (0..m).filter(|&j| Some(j) != skip && !blocked[j]) {
            let g = dot(atom(j), &u) - lambda;
            if g > worst {
                worst = g;
                pick = Some(j);
            }
        }
        let Some(p) = pick else {
            converged = blocked.iter().all(|&b| !b);
            break;
        };
        if active.contains(&p) {
            // rounding left an active constraint looking violated
            blocked[p] = true;
            continue;
        }

        let a = atom(p);
        let mut added = 0.0;
        loop {
            steps += 1;
            let (coef, z) = factor.project(a);
            let z_norm = dot(&z, &z).sqrt();
            let r = factor.solve_r(&coef);
            let independent = z_norm > dep_tol && active.len() < n;

            let mut partial = f64::INFINITY;
            let mut drop = None;
            for (k, (&rk, &mk)) in r.iter().zip(&mu).enumerate() {
                if rk > 0.0 && mk / rk < partial {
                    partial = mk / rk;
                    drop = Some(k);
                }
            }
            let g = dot(a, &u) - lambda;
            let full = if independent { (g / (z_norm * z_norm)).max(0.0) } else { f64::INFINITY };
            let t = partial.min(full);
            if !t.is_finite() {
                break 'outer;
            }

            if independent {
                for (ui, zi) in u.iter_mut().zip(&z) {
                    *ui -= t * zi;
                }
            }
            for (mk, rk) in mu.iter_mut().zip(&r) {
                *mk -= t * rk;
            }
            added += t;

            if t == full {
                factor.push(coef, &z, z_norm);
                active.push(p);
                mu.push(added);
                blocked.iter_mut().for_each(|b| *b = false);
                continue 'outer;
            }
            let k = drop.expect("finite partial step has a blocking constraint");
            factor.remove(k);
            active.remove(k);
            mu.remove(k);
            if steps >= params.max_iter {
                break 'outer;
            }
        }
    }

    let mut c = vec![0.0; m];
    for (&j, &w) in active.iter().zip(&mu) {
        c[j] = w.max(0.0);
    }
    let weights: Vec<f64> = active.iter().map(|&j| c[j]).collect();
    let u = residual(&active, &weights);
    let objective = 0.5 * dot(&u, &u) + lambda * c.iter().sum::<f64>();
    NnlsSolution { coefficients: c, objective, iterations: steps, converged, monotone }
}

/// Core solver over `atoms` stored back to back; coordinate `skip`, if any,
/// is pinned at zero.
pub(crate) fn coordinate_descent(
    y: &[f64],
    atoms: &[f64],
    n: usize,
    skip: Option<usize>,
    lambda: f64,
    params: &SolverParams,
) -> NnlsSolution {
    let m = atoms.len() / n;
    let atom = |j: usize| &atoms[j * n..(j + 1) * n];
    let sq_norms: Vec<f64> = (0..m).map(|j| dot(atom(j), atom(j))).collect();
    let mut c = vec![0.0; m];
    let mut r = y.to_vec();
    let objective = |r: &[f64], c: &[f64]| 0.5 * dot(r, r) + lambda * c.iter().sum::<f64>();

    let mut obj = objective(&r, &c);
    let mut monotone = true;
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < params.max_iter {
        sweeps += 1;
        let mut max_change: f64 = 0.0;
        for j in 0..m {
            if Some(j) == skip {
                continue;
            }
            let a = atom(j);
            let g = dot(a, &r) + sq_norms[j] * c[j];
            let next = ((g - lambda) / sq_norms[j]).max(0.0);
            let delta = next - c[j];
            if delta != 0.0 {
                for (ri, ai) in r.iter_mut().zip(a) {
                    *ri -= delta * ai;
                }
                c[j] = next;
                max_change = max_change.max(delta.abs());
            }
        }
        let next_obj = objective(&r, &c);
        if next_obj > obj + 1e-12 * obj.abs().max(1.0) {
            monotone = false;
        }
        obj = next_obj;
        if max_change < params.tol {
            // Refresh the residual before testing optimality.
            r.copy_from_slice(y);
            for (j, &cj) in c.iter().enumerate() {
                if cj != 0.0 {
                    for (ri, ai) in r.iter_mut().zip(atom(j)) {
                        *ri -= cj * ai;
                    }
                }
            }
            obj = objective(&r, &c);
            let violation = (0..m)
                .filter(|&j| Some(j) != skip)
                .map(|j| {
                    let corr = dot(atom(j), &r) - lambda;
                    if c[j] > 0.0 { corr.abs() } else { corr.max(0.0) }
                })
                .fold(0.0, f64::max);
            if violation < params.tol {
                converged = true;
                break;
            }
        }
    }
    NnlsSolution { coefficients: c, objective: obj, iterations: sweeps, converged, monotone }
}

/// Directed coefficient matrix: column `i` holds the coefficients that
/// represent point `i` by all the other points (entry `i` is zero).
pub fn coefficient_matrix(data: &DataSet, lambda: f64, params: &SolverParams) -> Result<AffinityMatrix> {
    check_params(lambda, params)?;
    let count = data.len();
    if count < 2 {
        return Err(Error::InvalidData("need at least two points".into()));
    }
    let n = data.dim();
    let atoms = data.normalized_flat();
    let mut c = Array2::zeros((count, count));
    for i in 0..count {
        let sol = solve(data.unit(i), atoms, n, Some(i), lambda, params);
        for (j, &v) in sol.coefficients.iter().enumerate() {
            c[[j, i]] = v;
        }
    }
    AffinityMatrix::directed(c)
}

/// `C + C^T` for the coefficient matrix. `lambda = 0` gives the LSA affinity.
pub fn build_coef_affinity(data: &DataSet, lambda: f64, params: &SolverParams) -> Result<AffinityMatrix> {
    Ok(symmetrize(&coefficient_matrix(data, lambda, params)?))
}
