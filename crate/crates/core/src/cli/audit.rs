//! Audits runnable from the command line, looked up by name.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use serde::Serialize;
use serde_json::{json, Value};

use super::report::Verdict;
use crate::error::{Result, RipError};
use crate::lpaudit::{gaussian_probe, row_norm_audit, GaussianProbe, Regime};
use crate::matcore::{DenseMatrix, IndexSet};
use crate::ripcert::basic_bounds_audit;
use crate::rng::{splitmix64, substream};
use crate::witness::{arip_witness, dense_core_extract, DenseCoreVerdict, WitnessOptions, WitnessReport};

/// Supports probed by the `lp` audit when trials are requested.
pub const LP_PROBE_SUPPORTS: usize = 4;

#[derive(Debug, Clone, Default)]
pub struct AuditParams {
    pub k: usize,
    pub d: Option<f64>,
    pub p: Option<f64>,
    pub eta: Option<f64>,
    pub trials: usize,
    pub seed: u64,
}

pub struct AuditOutcome {
    pub results: Value,
    pub verdict: Verdict,
    /// The witness vector, when the audit built one.
    pub witness: Option<WitnessReport>,
}

pub trait Audit: Send + Sync {
    fn name(&self) -> &'static str;

    fn description(&self) -> &'static str;

    fn run(&self, a: &DenseMatrix, params: &AuditParams) -> Result<AuditOutcome>;
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

/// Basic bounds, the exponential witness and (with `eta`) the dense core.
pub struct L2Audit;

impl Audit for L2Audit {
    fn name(&self) -> &'static str {
        "l2"
    }

    fn description(&self) -> &'static str {
        "l2 ARIP: row/column bounds, exponential witness, dense core"
    }

    fn run(&self, a: &DenseMatrix, params: &AuditParams) -> Result<AuditOutcome> {
        let k = params.k;
        let mut results = serde_json::Map::new();
        let mut refuted = false;
        let mut heuristic = params.d.is_none();

        if let Some(d) = params.d {
            let basic = basic_bounds_audit(a, k, d)?;
            refuted |= !basic.passed;
            results.insert("basicBounds".into(), to_value(&basic)?);
        }

        let witness = match arip_witness(a, k, &WitnessOptions::default()) {
            Ok(w) => Some(w),
            Err(e @ (RipError::NoKernel { .. } | RipError::Vacuous(_))) => {
                results.insert("witnessNote".into(), Value::String(e.to_string()));
                None
            }
            Err(e) => return Err(e),
        };
        let mut failed = false;
        if let Some(w) = &witness {
            let checks = w.check_invariants();
            failed = !checks.iter().all(|c| c.holds);
            let mut v = to_value(w)?;
            v["invariants"] = to_value(&checks)?;
            v["provedImageBoundHolds"] = Value::Bool(w.proved_image_bound_holds());
            results.insert("witness".into(), v);
            if let Some(d) = params.d {
                refuted |= w.implied_d_lower > d;
            }
        }

        if let (Some(eta), Some(d)) = (params.eta, params.d) {
            let core = dense_core_extract(a, k, d, eta, None)?;
            match core.verdict {
                DenseCoreVerdict::Refuted => refuted = true,
                DenseCoreVerdict::RefutationEvidence => heuristic = true,
                DenseCoreVerdict::Consistent => {}
            }
            results.insert("denseCore".into(), to_value(&core)?);
        }

        let verdict = if failed {
            Verdict::Fail
        } else if refuted {
            Verdict::Refuted
        } else if witness.is_none() {
            Verdict::Inapplicable
        } else if heuristic {
            Verdict::Heuristic
        } else {
            Verdict::Pass
        };
        Ok(AuditOutcome {
            results: Value::Object(results),
            verdict,
            witness,
        })
    }
}

/// Row-norm inequality for `lp`-RIP plus optional Gaussian support probes.
pub struct LpAudit;

impl LpAudit {
    fn probes(a: &DenseMatrix, params: &AuditParams, p: f64) -> Result<Vec<(Vec<usize>, GaussianProbe)>> {
        let n = a.cols();
        let mut rng = substream(splitmix64(params.seed), 0);
        (0..LP_PROBE_SUPPORTS)
            .map(|i| {
                let mut idx = sample(&mut rng, n, params.k).into_vec();
                idx.sort_unstable();
                let s = IndexSet::new(idx.clone(), n)?;
                let probe = gaussian_probe(a, &s, p, params.trials, params.seed.wrapping_add(i as u64))?;
                Ok((idx, probe))
            })
            .collect()
    }
}

impl Audit for LpAudit {
    fn name(&self) -> &'static str {
        "lp"
    }

    fn description(&self) -> &'static str {
        "lp RIP row-norm inequality with Gaussian support probes"
    }

    fn run(&self, a: &DenseMatrix, params: &AuditParams) -> Result<AuditOutcome> {
        let p = params.p.ok_or_else(|| RipError::Config("the lp audit needs --p".into()))?;
        let d = params.d.ok_or_else(|| RipError::Config("the lp audit needs --D".into()))?;
        let audit = row_norm_audit(a, p, params.k, d)?;
        let mut results = json!({ "rowNorms": to_value(&audit)? });
        if audit.regime == Regime::Trivial {
            results["note"] = Value::String("p = 2: both sides equal ||A||_F^2".into());
        }
        if params.trials > 0 {
            let probes: Vec<Value> = Self::probes(a, params, p)?
                .into_iter()
                .map(|(support, probe)| json!({ "support": support, "probe": probe }))
                .collect();
            results["probes"] = Value::Array(probes);
        }
        let verdict = if audit.violated() { Verdict::Refuted } else { Verdict::Pass };
        Ok(AuditOutcome {
            results,
            verdict,
            witness: None,
        })
    }
}

pub struct AuditRegistry {
    audits: BTreeMap<&'static str, Box<dyn Audit>>,
}

impl Default for AuditRegistry {
    fn default() -> Self {
        let mut reg = Self { audits: BTreeMap::new() };
        reg.register(Box::new(L2Audit));
        reg.register(Box::new(LpAudit));
        reg
    }
}

impl AuditRegistry {
    pub fn register(&mut self, audit: Box<dyn Audit>) {
        self.audits.insert(audit.name(), audit);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Audit> {
        self.audits
            .get(name)
            .map(|a| a.as_ref())
            .ok_or_else(|| RipError::Config(format!("unknown audit '{name}'")))
    }

    pub fn list(&self) -> Vec<(&'static str, &'static str)> {
        self.audits.values().map(|a| (a.name(), a.description())).collect()
    }
}
