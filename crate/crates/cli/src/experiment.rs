//! Seeded multi-trial sweeps.
//!
//! Trial `t` uses seed `base_seed + t`. Its data comes from stream 0 of that
//! seed and every method clusters it with stream 1, so methods and sweep
//! values are compared on paired data.

use std::io::Write;
use std::time::Instant;

use uopc::cone_model::{sample_uopc, DataSet};
use uopc::datasets::{load_idx, load_image_folder, select_digits, IdxImages};
use uopc::metrics::{clustering_error, count_discoveries};
use uopc::pipeline::{cluster_with, Method};
use uopc::rng::split;

use crate::config::{apply_sweep, ExperimentConfig, Source, Sweep};
use crate::error::{CliError, CliResult};

const DATA_STREAM: u64 = 0;
const CLUSTER_STREAM: u64 = 1;

pub const ROW_HEADER: [&str; 12] = [
    "method",
    "sweep_value",
    "k",
    "tau",
    "lambda",
    "seed",
    "trial",
    "error",
    "false_discoveries",
    "true_discoveries",
    "wall_time_s",
    "status",
];

pub const SUMMARY_HEADER: [&str; 9] = ["method", "sweep", "sweep_value", "k", "tau", "lambda", "trials", "failed", "mean_error"];

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: &'static str,
    pub sweep_value: Option<f64>,
    pub k: Option<usize>,
    /// Bandwidth actually used (resolved when automatic).
    pub tau: Option<f64>,
    pub lambda: Option<f64>,
    pub seed: u64,
    pub trial: usize,
    pub error: Option<f64>,
    pub false_discoveries: Option<usize>,
    pub true_discoveries: Option<usize>,
    /// Zero unless timing was requested.
    pub wall_time_s: f64,
    /// `ok`, or the reason the trial failed.
    pub status: String,
}

/// Mean error of one method at one sweep value.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub sweep_value: Option<f64>,
    pub trials: usize,
    pub failed: usize,
    /// Over the trials that succeeded; `None` if none did.
    pub mean_error: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub sweep: Option<Sweep>,
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentReport {
    /// Mean error of the first summary row matching `method` and `sweep_value`.
    pub fn mean_error(&self, method: &Method, sweep_value: Option<f64>) -> Option<f64> {
        self.summary
            .iter()
            .find(|s| s.method == *method && s.sweep_value == sweep_value)
            .and_then(|s| s.mean_error)
    }
}

enum Loaded {
    None,
    Idx(IdxImages),
    Faces(DataSet),
}

fn load(source: &Source) -> CliResult<Loaded> {
    Ok(match source {
        Source::Synthetic { .. } => Loaded::None,
        Source::Idx { images, labels, .. } => Loaded::Idx(load_idx(images, labels).map_err(|e| CliError::Data(e.to_string()))?),
        Source::ImageFolder { root, size, .. } => {
            Loaded::Faces(load_image_folder(root, *size).map_err(|e| CliError::Data(e.to_string()))?)
        }
    })
}

fn trial_data(cfg: &ExperimentConfig, loaded: &Loaded, value: Option<f64>, seed: u64) -> uopc::Result<DataSet> {
    let mut rng = split(seed, DATA_STREAM);
    let swept = |s: Sweep| match (cfg.sweep.as_ref(), value) {
        (Some((sweep, _)), Some(v)) if *sweep == s => Some(v as usize),
        _ => None,
    };
    match (&cfg.source, loaded) {
        (Source::Synthetic { cones, per_cone }, _) => {
            let per = swept(Sweep::PerClass).unwrap_or(*per_cone);
            sample_uopc(cones, &vec![per; cones.len()], &mut rng)
        }
        (Source::Idx { digits, per_class, .. }, Loaded::Idx(idx)) => {
            select_digits(idx, digits, swept(Sweep::PerClass).unwrap_or(*per_class), &mut rng)
        }
        (Source::ImageFolder { persons, .. }, Loaded::Faces(all)) => match swept(Sweep::Persons).or(*persons) {
            Some(u) => all.select_clusters(u, &mut rng),
            None => Ok(all.clone()),
        },
        _ => unreachable!("source loaded as a different kind"),
    }
}

fn failed_row(method: &Method, value: Option<f64>, seed: u64, trial: usize, reason: String) -> ResultRow {
    ResultRow {
        method: method.name(),
        sweep_value: value,
        k: method.k(),
        tau: match method {
            Method::KnnGaussian { tau, .. } => *tau,
            _ => None,
        },
        lambda: method.lambda(),
        seed,
        trial,
        error: None,
        false_discoveries: None,
        true_discoveries: None,
        wall_time_s: 0.0,
        status: format!("error: {reason}"),
    }
}

fn run_method(cfg: &ExperimentConfig, data: &DataSet, method: &Method, value: Option<f64>, seed: u64, trial: usize) -> ResultRow {
    let l = cfg.clusters.unwrap_or(data.num_clusters());
    let mut rng = split(seed, CLUSTER_STREAM);
    let start = Instant::now();
    let outcome = cluster_with(data, method, l, &cfg.solver, &mut rng).and_then(|run| {
        let truth = data.assignment().ok_or(uopc::Error::MissingLabels)?;
        let error = clustering_error(&run.assignment, &truth)?;
        let report = count_discoveries(&run.directed, data.labels())?;
        Ok((run.tau, error, report))
    });
    let elapsed = start.elapsed().as_secs_f64();
    match outcome {
        Ok((tau, error, report)) => ResultRow {
            method: method.name(),
            sweep_value: value,
            k: method.k(),
            tau,
            lambda: method.lambda(),
            seed,
            trial,
            error: Some(error),
            false_discoveries: Some(report.false_count),
            true_discoveries: Some(report.true_count),
            wall_time_s: if cfg.timing { elapsed } else { 0.0 },
            status: "ok".into(),
        },
        Err(e) => failed_row(method, value, seed, trial, e.to_string()),
    }
}

/// Runs every (sweep value, trial, method) combination in that order.
pub fn run_experiment(cfg: &ExperimentConfig) -> CliResult<ExperimentReport> {
    let loaded = load(&cfg.source)?;
    let values: Vec<Option<f64>> = match &cfg.sweep {
        Some((_, grid)) => grid.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let sweep = cfg.sweep.as_ref().map(|(s, _)| *s);

    let mut rows = Vec::with_capacity(values.len() * cfg.trials * cfg.methods.len());
    let mut summary = Vec::with_capacity(values.len() * cfg.methods.len());
    for &value in &values {
        let methods: Vec<Method> = cfg
            .methods
            .iter()
            .map(|m| match (sweep, value) {
                (Some(s), Some(v)) => apply_sweep(m, s, v),
                _ => *m,
            })
            .collect();
        let mut errors: Vec<Vec<f64>> = vec![Vec::with_capacity(cfg.trials); methods.len()];
        for trial in 0..cfg.trials {
            let seed = cfg.base_seed.wrapping_add(trial as u64);
            match trial_data(cfg, &loaded, value, seed) {
                Ok(data) => {
                    for (mi, method) in methods.iter().enumerate() {
                        let row = run_method(cfg, &data, method, value, seed, trial);
                        if let Some(e) = row.error {
                            errors[mi].push(e);
                        }
                        rows.push(row);
                    }
                }
                Err(e) => {
                    for method in &methods {
                        rows.push(failed_row(method, value, seed, trial, e.to_string()));
                    }
                }
            }
        }
        for (method, errs) in methods.iter().zip(&errors) {
            summary.push(SummaryRow {
                method: *method,
                sweep_value: value,
                trials: cfg.trials,
                failed: cfg.trials - errs.len(),
                mean_error: (!errs.is_empty()).then(|| errs.iter().sum::<f64>() / errs.len() as f64),
            });
        }
    }
    Ok(ExperimentReport { sweep, rows, summary })
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Per-trial rows, a blank line, a `# summary` marker and the per-method means.
pub fn write_csv<W: Write>(report: &ExperimentReport, mut out: W) -> CliResult<()> {
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(ROW_HEADER)?;
        for r in &report.rows {
            w.write_record([
                r.method.to_string(),
                opt(r.sweep_value),
                opt(r.k),
                opt(r.tau),
                opt(r.lambda),
                r.seed.to_string(),
                r.trial.to_string(),
                opt(r.error),
                opt(r.false_discoveries),
                opt(r.true_discoveries),
                if r.wall_time_s == 0.0 { "0".to_string() } else { format!("{:.6}", r.wall_time_s) },
                r.status.clone(),
            ])?;
        }
        w.flush()?;
    }
    out.write_all(b"\n# summary\n")?;
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(SUMMARY_HEADER)?;
    let sweep = report.sweep.map(Sweep::name).unwrap_or("");
    for s in &report.summary {
        let tau = match s.method {
            Method::KnnGaussian { tau: None, .. } => "auto".to_string(),
            Method::KnnGaussian { tau: Some(t), .. } => t.to_string(),
            _ => String::new(),
        };
        w.write_record([
            s.method.name().to_string(),
            sweep.to_string(),
            opt(s.sweep_value),
            opt(s.method.k()),
            tau,
            opt(s.method.lambda()),
            s.trials.to_string(),
            s.failed.to_string(),
            s.mean_error.map(|e| format!("{e:.6}")).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
