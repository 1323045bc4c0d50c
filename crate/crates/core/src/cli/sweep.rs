//! Config-driven parameter sweeps.
//!
//! `sweep.csv` columns, in order: `point, seed, n, m, c, k, D, p, eta,
//! verdict, rank, alpha, impliedDLower, witnessL1, witnessL2,
//! witnessImageL2, witnessDelta12, opNormB, t, iKer, lpImpliedDLower,
//! lpSlack, inputDigest`. Missing values are empty. Runtimes go to a
//! separate `timings.csv` (`point, seed, seconds`) so that `sweep.csv` and
//! the per-run reports are byte-identical across reruns.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Deserialize;
use serde_json::Value;

use super::audit::{AuditParams, AuditRegistry};
use super::report::{AuditReport, Parameters};
use crate::ensembles::{generate, EnsembleSpec};
use crate::error::{Result, RipError};
use crate::matcore::io::read_matrix_file;
use crate::matcore::DenseMatrix;

pub const SWEEP_COLUMNS: [&str; 23] = [
    "point",
    "seed",
    "n",
    "m",
    "c",
    "k",
    "D",
    "p",
    "eta",
    "verdict",
    "rank",
    "alpha",
    "impliedDLower",
    "witnessL1",
    "witnessL2",
    "witnessImageL2",
    "witnessDelta12",
    "opNormB",
    "t",
    "iKer",
    "lpImpliedDLower",
    "lpSlack",
    "inputDigest",
];

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SweepPoint {
    pub n: Option<usize>,
    pub m: Option<usize>,
    /// Overrides the ensemble sparsity.
    pub c: Option<usize>,
    pub k: usize,
    #[serde(rename = "D")]
    pub d: Option<f64>,
    pub p: Option<f64>,
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Template for generated matrices; `m`, `n` and `sparsity` may be
    /// overridden per point.
    pub ensemble: Option<EnsembleSpec>,
    /// A fixed input matrix instead of an ensemble.
    pub matrix: Option<PathBuf>,
    pub sweep: Vec<SweepPoint>,
    /// Audit name from the registry.
    #[serde(default = "default_audit")]
    pub audit: String,
    #[serde(default)]
    pub trials: usize,
    /// Ensemble seeds; defaults to the template's seed.
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_audit() -> String {
    "l2".into()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("riplab-out")
}

impl ExperimentConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| RipError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweep.is_empty() {
            return Err(RipError::Config("sweep must list at least one point".into()));
        }
        match (&self.ensemble, &self.matrix) {
            (Some(_), Some(_)) => Err(RipError::Config("give either ensemble or matrix, not both".into())),
            (None, None) => Err(RipError::Config("give an ensemble or a matrix".into())),
            _ => AuditRegistry::default().get(&self.audit).map(|_| ()),
        }
    }

    fn seeds(&self) -> Vec<u64> {
        match (&self.ensemble, self.seeds.is_empty()) {
            (Some(e), true) => vec![e.seed],
            (None, true) => vec![0],
            _ => self.seeds.clone(),
        }
    }
}

pub struct SweepOutput {
    pub csv_path: PathBuf,
    pub timings_path: PathBuf,
    pub reports: Vec<PathBuf>,
}

struct RunResult {
    row: Vec<String>,
    report: String,
    seconds: f64,
}

fn num(v: &Value) -> String {
    match v {
        Value::Number(n) => n.to_string(),
        _ => String::new(),
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn run_point(
    cfg: &ExperimentConfig,
    fixed: Option<&DenseMatrix>,
    index: usize,
    point: &SweepPoint,
    seed: u64,
) -> Result<RunResult> {
    let start = Instant::now();
    let (a, c) = match (fixed, &cfg.ensemble) {
        (Some(a), _) => (a.clone(), None),
        (None, Some(template)) => {
            let spec = EnsembleSpec {
                kind: template.kind.clone(),
                m: point.m.unwrap_or(template.m),
                n: point.n.unwrap_or(template.n),
                sparsity: point.c.or(template.sparsity),
                seed,
            };
            (generate(&spec)?, spec.sparsity)
        }
        (None, None) => unreachable!("validated"),
    };
    let params = AuditParams {
        k: point.k,
        d: point.d,
        p: point.p,
        eta: point.eta,
        trials: cfg.trials,
        seed,
    };
    let outcome = AuditRegistry::default().get(&cfg.audit)?.run(&a, &params)?;
    let parameters = Parameters {
        k: Some(point.k),
        d: point.d,
        p: point.p,
        eta: point.eta,
        trials: Some(cfg.trials),
        seed: Some(seed),
    };
    let report = AuditReport::new(&format!("sweep:{}", cfg.audit), &a, parameters, outcome.results.clone(), outcome.verdict);
    let w = &outcome.results["witness"];
    let lp = &outcome.results["rowNorms"];
    let verdict = serde_json::to_value(outcome.verdict)?.as_str().unwrap_or_default().to_string();
    let row = vec![
        index.to_string(),
        seed.to_string(),
        a.cols().to_string(),
        a.rows().to_string(),
        opt(c),
        point.k.to_string(),
        opt(point.d),
        opt(point.p),
        opt(point.eta),
        verdict,
        num(&w["rank"]),
        num(&w["alpha"]),
        num(&w["impliedDLower"]),
        num(&w["l1"]),
        num(&w["l2"]),
        num(&w["imageL2"]),
        num(&w["delta12"]),
        num(&w["opNormB"]),
        num(&w["t"]),
        num(&w["iKer"]),
        num(&lp["impliedDLower"]),
        num(&lp["slack"]),
        report.input_digest.clone(),
    ];
    Ok(RunResult {
        row,
        report: report.to_json()?,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs every `(point, seed)` pair in parallel and writes the tables and
/// per-run reports under `out_dir` (or the config's `outputDir`).
pub fn run_sweep(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<SweepOutput> {
    cfg.validate()?;
    let fixed = cfg.matrix.as_ref().map(read_matrix_file).transpose()?;
    let seeds = cfg.seeds();
    let jobs: Vec<(usize, &SweepPoint, u64)> = cfg
        .sweep
        .iter()
        .enumerate()
        .flat_map(|(i, p)| seeds.iter().map(move |&s| (i, p, s)))
        .collect();
    let results: Vec<RunResult> = jobs
        .par_iter()
        .map(|&(i, p, s)| run_point(cfg, fixed.as_ref(), i, p, s))
        .collect::<Result<_>>()?;

    let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_dir.clone());
    let report_dir = dir.join("reports");
    fs::create_dir_all(&report_dir)?;

    let csv_path = dir.join("sweep.csv");
    let mut table = csv::Writer::from_path(&csv_path)?;
    table.write_record(SWEEP_COLUMNS)?;
    let timings_path = dir.join("timings.csv");
    let mut timings = csv::Writer::from_path(&timings_path)?;
    timings.write_record(["point", "seed", "seconds"])?;
    let mut reports = Vec::with_capacity(results.len());
    for (&(i, _, s), r) in jobs.iter().zip(&results) {
        table.write_record(&r.row)?;
        timings.write_record([i.to_string(), s.to_string(), format!("{:.6}", r.seconds)])?;
        let path = report_dir.join(format!("point{i:03}_seed{s}.json"));
        fs::write(&path, &r.report)?;
        reports.push(path);
    }
    table.flush()?;
    timings.flush()?;
    Ok(SweepOutput {
        csv_path,
        timings_path,
        reports,
    })
}
