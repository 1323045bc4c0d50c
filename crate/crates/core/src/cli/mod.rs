//! The `riplab` command line.
//!
//! Exit codes: 0 pass or heuristic, 1 refuted, 2 usage or config error,
//! 3 numeric or degenerate error (including inapplicable audits).

pub mod audit;
pub mod report;
pub mod sweep;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::ensembles::{EnsembleRegistry, EnsembleSpec};
use crate::error::{Result, RipError};
use crate::matcore::io::{read_matrix_file, write_matrix_market, write_matrix_market_coordinate, write_vector_market};
use audit::{AuditParams, AuditRegistry};
use report::{error_exit_code, AuditReport, Parameters, Verdict};
use sweep::{run_sweep, ExperimentConfig};

#[derive(Debug, Parser)]
#[command(name = "riplab", version, about = "Restricted isometry audits and witnesses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded random matrix in Matrix Market format.
    Gen(GenArgs),
    /// l2 ARIP audit: basic bounds, exponential witness, dense core.
    AuditL2(AuditArgs),
    /// lp RIP row-norm audit.
    AuditLp(AuditArgs),
    /// Run a config-driven sweep.
    Sweep(SweepArgs),
    /// List registered ensembles and audits.
    List,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Ensemble name, see `riplab list`.
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Nonzeros per column (columnRegular) or row (rowRegular).
    #[arg(long)]
    pub sparsity: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON file holding an ensemble spec; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output matrix file. A sidecar report is written next to it.
    #[arg(long)]
    pub out: PathBuf,
    /// Write coordinate (sparse) Matrix Market instead of array format.
    #[arg(long)]
    pub coordinate: bool,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long = "D")]
    pub d: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the witness vector as a Matrix Market column.
    #[arg(long)]
    pub witness_out: Option<PathBuf>,
    /// Include wall-clock timings in the report.
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's outputDir.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Sizes the global thread pool from `RIPLAB_THREADS`, if set.
pub fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("RIPLAB_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| RipError::Config(format!("RIPLAB_THREADS must be a positive integer, got '{v}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| RipError::Config(e.to_string()))?;
    }
    Ok(())
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let outcome = init_threads().and_then(|_| match cli.command {
        Command::Gen(args) => cmd_gen(&args),
        Command::AuditL2(args) => cmd_audit("l2", &args),
        Command::AuditLp(args) => cmd_audit("lp", &args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::List => cmd_list(),
    });
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            error_exit_code(&e)
        }
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_gen(args: &GenArgs) -> Result<i32> {
    let mut spec = match &args.config {
        Some(path) => serde_json::from_str::<EnsembleSpec>(&fs::read_to_string(path)?)
            .map_err(|e| RipError::Config(e.to_string()))?,
        None => EnsembleSpec::new("", 0, 0, None, args.seed),
    };
    if let Some(kind) = &args.kind {
        spec.kind = kind.clone();
    }
    if let Some(m) = args.m {
        spec.m = m;
    }
    if let Some(n) = args.n {
        spec.n = n;
    }
    if args.sparsity.is_some() {
        spec.sparsity = args.sparsity;
    }
    if args.config.is_none() || args.seed != 0 {
        spec.seed = args.seed;
    }
    let a = EnsembleRegistry::default().generate(&spec)?;

    let mut buf = Vec::new();
    if args.coordinate {
        write_matrix_market_coordinate(&a, &mut buf)?;
    } else {
        write_matrix_market(&a, &mut buf)?;
    }
    write_output(Some(&args.out), std::str::from_utf8(&buf).expect("ascii"))?;

    let nnz = a.as_slice().iter().filter(|v| **v != 0.0).count();
    let results = json!({ "spec": spec, "rows": a.rows(), "cols": a.cols(), "nnz": nnz });
    let parameters = Parameters {
        seed: Some(spec.seed),
        ..Default::default()
    };
    let report = AuditReport::new("gen", &a, parameters, results, Verdict::Pass);
    let mut sidecar = args.out.clone().into_os_string();
    sidecar.push(".json");
    write_output(Some(Path::new(&sidecar)), &report.to_json()?)?;
    Ok(0)
}

fn cmd_audit(name: &str, args: &AuditArgs) -> Result<i32> {
    let t0 = Instant::now();
    let a = read_matrix_file(&args.matrix)?;
    let load = t0.elapsed().as_secs_f64();
    let params = AuditParams {
        k: args.k,
        d: args.d,
        p: args.p,
        eta: args.eta,
        trials: args.trials,
        seed: args.seed,
    };
    let t1 = Instant::now();
    let outcome = AuditRegistry::default().get(name)?.run(&a, &params)?;
    let audit_secs = t1.elapsed().as_secs_f64();

    if let Some(path) = &args.witness_out {
        match &outcome.witness {
            Some(w) => {
                let mut buf = Vec::new();
                write_vector_market(&w.x, &mut buf)?;
                write_output(Some(path), std::str::from_utf8(&buf).expect("ascii"))?;
            }
            None => log::warn!("no witness was built; {} not written", path.display()),
        }
    }

    let parameters = Parameters {
        k: Some(args.k),
        d: args.d,
        p: args.p,
        eta: args.eta,
        trials: (args.trials > 0).then_some(args.trials),
        seed: (args.trials > 0).then_some(args.seed),
    };
    let mut report = AuditReport::new(&format!("audit-{name}"), &a, parameters, outcome.results, outcome.verdict);
    if args.timings {
        report.timings = Some(BTreeMap::from([("load".to_string(), load), ("audit".to_string(), audit_secs)]));
    }
    write_output(args.out.as_deref(), &report.to_json()?)?;
    Ok(outcome.verdict.exit_code())
}

fn cmd_sweep(args: &SweepArgs) -> Result<i32> {
    let cfg = ExperimentConfig::from_file(&args.config)?;
    let out = run_sweep(&cfg, args.out.as_deref())?;
    println!("{}", out.csv_path.display());
    Ok(0)
}

fn cmd_list() -> Result<i32> {
    println!("ensembles:");
    for (name, desc) in EnsembleRegistry::default().list() {
        println!("  {name:<16} {desc}");
    }
    println!("audits:");
    for (name, desc) in AuditRegistry::default().list() {
        println!("  {name:<16} {desc}");
    }
    Ok(0)
}
