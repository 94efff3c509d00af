//! Polyhedral-cone geometry: cone representation, samplers, and the
//! affinity/density quantities behind the no-false-discovery certificate.

mod dataset;
mod theory;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1};
use rand::Rng;

use crate::{Error, Result};

pub use dataset::DataSet;
pub use theory::{
    ball_volume, check_certificate, empirical_affinity, empirical_density, measure_certificate,
    pointwise_density, UopcCertificate,
};

/// A pointed polyhedral cone `{ D a : a >= 0 }` stored by its extreme rays.
///
/// `extreme_rays` is `n x d`; every column is one generator direction. The
/// number of rays may exceed the ambient dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeSpec {
    extreme_rays: Array2<f64>,
}

impl ConeSpec {
    pub fn new(extreme_rays: Array2<f64>) -> Result<Self> {
        let (n, d) = extreme_rays.dim();
        if n == 0 {
            return Err(Error::InvalidCone("ambient dimension must be at least 1".into()));
        }
        if d == 0 {
            return Err(Error::InvalidCone("a cone needs at least one extreme ray".into()));
        }
        for (j, col) in extreme_rays.columns().into_iter().enumerate() {
            let norm = col.dot(&col).sqrt();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(Error::InvalidCone(format!("extreme ray {j} has norm {norm}")));
            }
        }
        Ok(Self { extreme_rays })
    }

    /// Builds a cone from a list of rays, one `Vec` per ray.
    pub fn from_rays(rays: &[Vec<f64>]) -> Result<Self> {
        let n = rays.first().map(Vec::len).unwrap_or(0);
        if let Some(bad) = rays.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: bad.len() });
        }
        let d = rays.len();
        let m = Array2::from_shape_fn((n, d), |(i, j)| rays[j][i]);
        Self::new(m)
    }

    pub fn ambient_dim(&self) -> usize {
        self.extreme_rays.nrows()
    }

    pub fn num_rays(&self) -> usize {
        self.extreme_rays.ncols()
    }

    pub fn extreme_rays(&self) -> &Array2<f64> {
        &self.extreme_rays
    }

    pub fn ray(&self, j: usize) -> ArrayView1<'_, f64> {
        self.extreme_rays.column(j)
    }

    /// Same cone with every ray rescaled to unit length.
    pub fn normalized(&self) -> ConeSpec {
        let mut rays = self.extreme_rays.clone();
        for mut col in rays.columns_mut() {
            let norm = col.dot(&col).sqrt();
            col /= norm;
        }
        ConeSpec { extreme_rays: rays }
    }

    /// `D a` for a coefficient vector `a` of length `d`.
    pub fn combine(&self, coefficients: &[f64]) -> Vec<f64> {
        assert_eq!(coefficients.len(), self.num_rays(), "one coefficient per ray");
        let mut out = vec![0.0; self.ambient_dim()];
        for (col, &a) in self.extreme_rays.columns().into_iter().zip(coefficients) {
            for (o, &r) in out.iter_mut().zip(col.iter()) {
                *o += a * r;
            }
        }
        out
    }
}

/// Text form: the ambient dimension on the first line, then one ray per line
/// as comma-separated decimals. Lines starting with `#` are ignored.
impl fmt::Display for ConeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.ambient_dim())?;
        for col in self.extreme_rays.columns() {
            let row: Vec<String> = col.iter().map(|v| v.to_string()).collect();
            writeln!(f, "{}", row.join(","))?;
        }
        Ok(())
    }
}

impl FromStr for ConeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Parse("empty cone block".into()))?;
        let n: usize = header
            .parse()
            .map_err(|_| Error::Parse(format!("expected ambient dimension, found {header:?}")))?;
        let mut rays = Vec::new();
        for line in lines {
            let ray = line
                .split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad number {:?} in ray {line:?}", tok.trim())))
                })
                .collect::<Result<Vec<f64>>>()?;
            if ray.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: ray.len() });
            }
            rays.push(ray);
        }
        if rays.is_empty() {
            return Err(Error::InvalidCone("a cone needs at least one extreme ray".into()));
        }
        ConeSpec::from_rays(&rays)
    }
}

/// Parses several cone blocks separated by blank lines.
pub fn parse_cones(text: &str) -> Result<Vec<ConeSpec>> {
    let mut cones = Vec::new();
    let mut block = String::new();
    for line in text.lines().chain(std::iter::once("")) {
        if line.trim().is_empty() {
            let has_content = block
                .lines()
                .any(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
            if has_content {
                cones.push(block.parse()?);
            }
            block.clear();
        } else {
            block.push_str(line);
            block.push('\n');
        }
    }
    Ok(cones)
}

pub fn format_cones(cones: &[ConeSpec]) -> String {
    cones.iter().map(ConeSpec::to_string).collect::<Vec<_>>().join("\n")
}

/// Physics convention: `theta` is the azimuth in the xy-plane and `phi` the
/// inclination from the z-axis.
pub fn spherical_to_cartesian(r: f64, theta: f64, phi: f64) -> [f64; 3] {
    [r * phi.sin() * theta.cos(), r * phi.sin() * theta.sin(), r * phi.cos()]
}

/// The two planar cones of the 2-D benchmark.
pub fn benchmark_cones_2d() -> Vec<ConeSpec> {
    let ray = |angle: f64| vec![angle.cos(), angle.sin()];
    vec![
        ConeSpec::from_rays(&[ray(-PI / 2.0), ray(2.0 * PI / 9.0)]).expect("valid cone"),
        ConeSpec::from_rays(&[ray(PI), ray(5.0 * PI / 18.0)]).expect("valid cone"),
    ]
}

/// The two three-ray cones of the 3-D benchmark, given in spherical
/// coordinates `[r, theta, phi]`.
pub fn benchmark_cones_3d() -> Vec<ConeSpec> {
    let ray = |r: f64, theta: f64, phi: f64| spherical_to_cartesian(r, theta, phi).to_vec();
    vec![
        ConeSpec::from_rays(&[
            ray(1.0, 2.0 * PI / 9.0, PI / 4.0),
            ray(1.0, PI / 2.0, PI / 4.0),
            ray(1.0, 0.0, 0.0),
        ])
        .expect("valid cone"),
        ConeSpec::from_rays(&[
            ray(1.0, 5.0 * PI / 18.0, PI / 4.0),
            ray(1.0, PI / 2.0, PI / 2.0),
            ray(1.0, PI / 4.0, PI / 2.0),
        ])
        .expect("valid cone"),
    ]
}

fn require_positive(count: usize) -> Result<()> {
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    Ok(())
}

fn check_shape(cone: &ConeSpec, n: usize, d: usize) -> Result<()> {
    if cone.ambient_dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: cone.ambient_dim() });
    }
    if cone.num_rays() != d {
        return Err(Error::InvalidCone(format!(
            "expected {d} extreme rays, found {}",
            cone.num_rays()
        )));
    }
    Ok(())
}

fn draw_2d<R: Rng + ?Sized>(unit: &ConeSpec, rng: &mut R) -> Vec<f64> {
    let a: f64 = rng.random();
    unit.combine(&[a, 1.0 - a])
}

fn draw_3d<R: Rng + ?Sized>(cone: &ConeSpec, rng: &mut R) -> Vec<f64> {
    loop {
        let u: [f64; 3] = [rng.random(), rng.random(), rng.random()];
        let s = u[0] + u[1] + u[2];
        if s > 0.0 {
            return cone.combine(&[u[0] / s, u[1] / s, u[2] / s]);
        }
    }
}

fn draw_general<R: Rng + ?Sized>(cone: &ConeSpec, rng: &mut R) -> Vec<f64> {
    loop {
        let a: Vec<f64> = (0..cone.num_rays()).map(|_| rng.random()).collect();
        if a.iter().any(|&v| v > 0.0) {
            return cone.combine(&a);
        }
    }
}

/// Points `a e1 + (1 - a) e2` between the two unit-normalized rays of a
/// planar cone, with `a ~ U(0, 1)` drawn per point.
pub fn sample_cone_2d<R: Rng + ?Sized>(cone: &ConeSpec, count: usize, rng: &mut R) -> Result<DataSet> {
    check_shape(cone, 2, 2)?;
    require_positive(count)?;
    let unit = cone.normalized();
    let pts: Vec<Vec<f64>> = (0..count).map(|_| draw_2d(&unit, rng)).collect();
    DataSet::from_points(&pts, None, 1)
}

/// Points `sum c_i r_i` with `c = u / sum(u)`, `u_i ~ U(0, 1)`.
pub fn sample_cone_3d<R: Rng + ?Sized>(cone: &ConeSpec, count: usize, rng: &mut R) -> Result<DataSet> {
    check_shape(cone, 3, 3)?;
    require_positive(count)?;
    let pts: Vec<Vec<f64>> = (0..count).map(|_| draw_3d(cone, rng)).collect();
    DataSet::from_points(&pts, None, 1)
}

/// Labeled sample from a union of cones: `counts[l]` points from `cones[l]`,
/// labeled `l + 1`.
///
/// Planar two-ray cones use the convex-combination sampler, three-ray cones
/// in 3-D the simplex-weight sampler, and every other cone draws `D a` with
/// entrywise uniform `a`.
pub fn sample_uopc<R: Rng + ?Sized>(cones: &[ConeSpec], counts: &[usize], rng: &mut R) -> Result<DataSet> {
    if cones.is_empty() {
        return Err(Error::InvalidParameter("at least one cone is required".into()));
    }
    if counts.len() != cones.len() {
        return Err(Error::LengthMismatch { expected: cones.len(), found: counts.len() });
    }
    let n = cones[0].ambient_dim();
    for cone in cones {
        if cone.ambient_dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: cone.ambient_dim() });
        }
    }
    let total: usize = counts.iter().sum();
    let mut pts = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    for (l, (cone, &count)) in cones.iter().zip(counts).enumerate() {
        require_positive(count)?;
        match (cone.ambient_dim(), cone.num_rays()) {
            (2, 2) => {
                let unit = cone.normalized();
                pts.extend((0..count).map(|_| draw_2d(&unit, rng)));
            }
            (3, 3) => pts.extend((0..count).map(|_| draw_3d(cone, rng))),
            _ => pts.extend((0..count).map(|_| draw_general(cone, rng))),
        }
        labels.extend(std::iter::repeat_n(l + 1, count));
    }
    DataSet::from_points(&pts, Some(labels), cones.len())
}
