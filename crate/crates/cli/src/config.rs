//! TOML experiment description.
//!
//! ```toml
//! [source]
//! kind = "synthetic-2d"        # synthetic-3d | idx | image-folder
//! per_cone = 200
//!
//! [[method]]
//! kind = "knn-binary"
//! k = 16
//!
//! [experiment]
//! trials = 100
//! seed = 0
//! sweep = "per-class"
//! grid = [20, 60, 100, 140]
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use uopc::cone_model::{benchmark_cones_2d, benchmark_cones_3d, parse_cones, ConeSpec};
use uopc::nn_regression::{SolverMethod, SolverParams};
use uopc::pipeline::Method;

use crate::error::{CliError, CliResult};

pub const DEFAULT_PER_CONE: usize = 200;
pub const DEFAULT_PER_DIGIT: usize = 600;
pub const DEFAULT_TRIALS: usize = 100;
pub const DEFAULT_FACE_TRIALS: usize = 20;

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum SourceConfig {
    #[serde(rename = "synthetic-2d")]
    Synthetic2d {
        per_cone: Option<usize>,
        /// Cone file replacing the built-in pair of cones.
        cones: Option<PathBuf>,
    },
    #[serde(rename = "synthetic-3d")]
    Synthetic3d { per_cone: Option<usize>, cones: Option<PathBuf> },
    #[serde(rename = "idx")]
    Idx { images: PathBuf, labels: PathBuf, digits: Vec<u8>, per_class: Option<usize> },
    #[serde(rename = "image-folder")]
    ImageFolder {
        root: PathBuf,
        height: Option<usize>,
        width: Option<usize>,
        /// Subjects drawn per trial; all of them when absent.
        persons: Option<usize>,
    },
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum TauSetting {
    Value(f64),
    Word(String),
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum MethodConfig {
    #[serde(rename = "knn-gaussian")]
    KnnGaussian { k: usize, tau: Option<TauSetting> },
    #[serde(rename = "knn-binary")]
    KnnBinary { k: usize },
    #[serde(rename = "ncl")]
    Ncl { lambda: f64 },
    #[serde(rename = "lsa")]
    Lsa {},
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Sweep {
    /// Points per cone, or per digit.
    PerClass,
    K,
    Lambda,
    Tau,
    /// Subjects drawn from an image folder.
    Persons,
}

impl Sweep {
    pub fn name(self) -> &'static str {
        match self {
            Sweep::PerClass => "per-class",
            Sweep::K => "k",
            Sweep::Lambda => "lambda",
            Sweep::Tau => "tau",
            Sweep::Persons => "persons",
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    ActiveSet,
    CoordinateDescent,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub trials: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    pub clusters: Option<usize>,
    pub sweep: Option<Sweep>,
    pub grid: Option<Vec<f64>>,
    #[serde(default)]
    pub timing: bool,
    pub solver: Option<SolverKind>,
    pub solver_tol: Option<f64>,
    pub solver_max_iter: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub source: SourceConfig,
    #[serde(rename = "method")]
    pub methods: Vec<MethodConfig>,
    #[serde(default)]
    pub experiment: RunSection,
}

/// Where each trial's data comes from, after validation.
#[derive(Debug, Clone)]
pub enum Source {
    Synthetic { cones: Vec<ConeSpec>, per_cone: usize },
    Idx { images: PathBuf, labels: PathBuf, digits: Vec<u8>, per_class: usize },
    ImageFolder { root: PathBuf, size: (usize, usize), persons: Option<usize> },
}

/// A validated experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub source: Source,
    pub methods: Vec<Method>,
    pub trials: usize,
    pub base_seed: u64,
    /// Cluster count handed to spectral clustering; `None` means the
    /// number of classes in each trial's data.
    pub clusters: Option<usize>,
    pub sweep: Option<(Sweep, Vec<f64>)>,
    pub timing: bool,
    pub solver: SolverParams,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn require_file(path: &Path, what: &str) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(config_err(format!("{what} {} does not exist", path.display())))
    }
}

fn load_cones(path: &Path, dim: usize) -> CliResult<Vec<ConeSpec>> {
    let text = fs::read_to_string(path).map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    let cones = parse_cones(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    if cones.is_empty() {
        return Err(config_err(format!("{} holds no cones", path.display())));
    }
    if let Some(c) = cones.iter().find(|c| c.ambient_dim() != dim) {
        return Err(config_err(format!("cone of dimension {} in a {dim}-dimensional source", c.ambient_dim())));
    }
    Ok(cones)
}

fn method_from(cfg: &MethodConfig) -> CliResult<Method> {
    let m = match cfg {
        MethodConfig::KnnGaussian { k, tau } => {
            let tau = match tau {
                None => None,
                Some(TauSetting::Word(w)) if w == "auto" => None,
                Some(TauSetting::Word(w)) => return Err(config_err(format!("tau must be a number or \"auto\", got {w:?}"))),
                Some(TauSetting::Value(t)) => Some(*t),
            };
            Method::KnnGaussian { k: *k, tau }
        }
        MethodConfig::KnnBinary { k } => Method::KnnBinary { k: *k },
        MethodConfig::Ncl { lambda } => Method::Ncl { lambda: *lambda },
        MethodConfig::Lsa {} => Method::Lsa,
    };
    check_method(&m)?;
    Ok(m)
}

/// Range checks on method parameters.
pub fn check_method(m: &Method) -> CliResult<()> {
    match *m {
        Method::KnnGaussian { k, tau } => {
            if k == 0 {
                return Err(config_err("k must be at least 1"));
            }
            if let Some(t) = tau {
                if !(t > 0.0 && t.is_finite()) {
                    return Err(config_err(format!("tau = {t} must be positive")));
                }
            }
        }
        Method::KnnBinary { k } if k == 0 => return Err(config_err("k must be at least 1")),
        Method::Ncl { lambda } if !(lambda >= 0.0 && lambda.is_finite()) => {
            return Err(config_err(format!("lambda = {lambda} must be nonnegative")))
        }
        _ => {}
    }
    Ok(())
}

fn positive_integer(v: f64, what: &str) -> CliResult<usize> {
    if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(config_err(format!("{what} grid value {v} is not a positive integer")))
    }
}

/// `method` with the swept parameter replaced by `value`.
pub fn apply_sweep(method: &Method, sweep: Sweep, value: f64) -> Method {
    match (sweep, *method) {
        (Sweep::K, Method::KnnGaussian { tau, .. }) => Method::KnnGaussian { k: value as usize, tau },
        (Sweep::K, Method::KnnBinary { .. }) => Method::KnnBinary { k: value as usize },
        (Sweep::Tau, Method::KnnGaussian { k, .. }) => Method::KnnGaussian { k, tau: Some(value) },
        (Sweep::Lambda, Method::Ncl { .. }) => Method::Ncl { lambda: value },
        (_, m) => m,
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Parses and validates; relative paths resolve against `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> CliResult<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        Self::validate(raw, base_dir)
    }

    pub fn validate(raw: RawConfig, base_dir: &Path) -> CliResult<Self> {
        let resolve = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base_dir.join(p) };
        let run = raw.experiment;

        let (source, default_trials) = match &raw.source {
            SourceConfig::Synthetic2d { per_cone, cones } | SourceConfig::Synthetic3d { per_cone, cones } => {
                let dim = if matches!(raw.source, SourceConfig::Synthetic2d { .. }) { 2 } else { 3 };
                let cones = match cones {
                    Some(p) => load_cones(&resolve(p), dim)?,
                    None if dim == 2 => benchmark_cones_2d(),
                    None => benchmark_cones_3d(),
                };
                let per_cone = per_cone.unwrap_or(DEFAULT_PER_CONE);
                if per_cone == 0 {
                    return Err(config_err("per_cone must be at least 1"));
                }
                (Source::Synthetic { cones, per_cone }, DEFAULT_TRIALS)
            }
            SourceConfig::Idx { images, labels, digits, per_class } => {
                let (images, labels) = (resolve(images), resolve(labels));
                require_file(&images, "image file")?;
                require_file(&labels, "label file")?;
                if digits.is_empty() {
                    return Err(config_err("digits must not be empty"));
                }
                let mut seen = digits.clone();
                seen.sort_unstable();
                seen.dedup();
                if seen.len() != digits.len() {
                    return Err(config_err("digits must be distinct"));
                }
                let per_class = per_class.unwrap_or(DEFAULT_PER_DIGIT);
                if per_class == 0 {
                    return Err(config_err("per_class must be at least 1"));
                }
                (Source::Idx { images, labels, digits: digits.clone(), per_class }, DEFAULT_TRIALS)
            }
            SourceConfig::ImageFolder { root, height, width, persons } => {
                let root = resolve(root);
                if !root.is_dir() {
                    return Err(config_err(format!("image folder {} does not exist", root.display())));
                }
                let size = (height.unwrap_or(uopc::datasets::FACE_SIZE.0), width.unwrap_or(uopc::datasets::FACE_SIZE.1));
                if size.0 == 0 || size.1 == 0 || *persons == Some(0) {
                    return Err(config_err("image size and persons must be positive"));
                }
                (Source::ImageFolder { root, size, persons: *persons }, DEFAULT_FACE_TRIALS)
            }
        };

        if raw.methods.is_empty() {
            return Err(config_err("at least one [[method]] is required"));
        }
        let methods = raw.methods.iter().map(method_from).collect::<CliResult<Vec<_>>>()?;

        let trials = run.trials.unwrap_or(default_trials);
        if trials == 0 {
            return Err(config_err("trials must be at least 1"));
        }
        if run.clusters == Some(0) {
            return Err(config_err("clusters must be at least 1"));
        }

        let sweep = match (run.sweep, run.grid) {
            (None, None) => None,
            (None, Some(_)) => return Err(config_err("grid given without a sweep variable")),
            (Some(s), None) => return Err(config_err(format!("sweep over {} needs a grid", s.name()))),
            (Some(s), Some(grid)) => {
                if grid.is_empty() {
                    return Err(config_err("grid must not be empty"));
                }
                match s {
                    Sweep::PerClass => {
                        if matches!(source, Source::ImageFolder { .. }) {
                            return Err(config_err("per-class sweeps need a synthetic or idx source"));
                        }
                        for &v in &grid {
                            positive_integer(v, "per-class")?;
                        }
                    }
                    Sweep::Persons => {
                        if !matches!(source, Source::ImageFolder { .. }) {
                            return Err(config_err("persons sweeps need an image-folder source"));
                        }
                        for &v in &grid {
                            positive_integer(v, "persons")?;
                        }
                    }
                    Sweep::K => {
                        if methods.iter().any(|m| m.k().is_none()) {
                            return Err(config_err("k sweeps apply to knn methods only"));
                        }
                        for &v in &grid {
                            positive_integer(v, "k")?;
                        }
                    }
                    Sweep::Tau => {
                        if methods.iter().any(|m| !matches!(m, Method::KnnGaussian { .. })) {
                            return Err(config_err("tau sweeps apply to knn-gaussian only"));
                        }
                        if let Some(t) = grid.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
                            return Err(config_err(format!("tau grid value {t} must be positive")));
                        }
                    }
                    Sweep::Lambda => {
                        if methods.iter().any(|m| !matches!(m, Method::Ncl { .. })) {
                            return Err(config_err("lambda sweeps apply to ncl only"));
                        }
                        if let Some(l) = grid.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
                            return Err(config_err(format!("lambda grid value {l} must be nonnegative")));
                        }
                    }
                }
                Some((s, grid))
            }
        };

        let mut solver = SolverParams::default();
        if let Some(kind) = run.solver {
            solver.method = match kind {
                SolverKind::ActiveSet => SolverMethod::ActiveSet,
                SolverKind::CoordinateDescent => SolverMethod::CoordinateDescent,
            };
        }
        if let Some(tol) = run.solver_tol {
            if !(tol > 0.0) {
                return Err(config_err("solver_tol must be positive"));
            }
            solver.tol = tol;
        }
        if let Some(it) = run.solver_max_iter {
            if it == 0 {
                return Err(config_err("solver_max_iter must be positive"));
            }
            solver.max_iter = it;
        }

        Ok(ExperimentConfig {
            source,
            methods,
            trials,
            base_seed: run.seed,
            clusters: run.clusters,
            sweep,
            timing: run.timing,
            solver,
        })
    }
}
