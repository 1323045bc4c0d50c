use std::collections::BTreeMap;
use std::hash::Hasher;

use fnv::FnvHasher;
use serde::Serialize;

use crate::error::RipError;
use crate::matcore::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    /// A proved inequality failed inside the tool.
    Fail,
    Refuted,
    /// Nothing refuted, but the evidence rests on sampled or estimated quantities.
    Heuristic,
    /// The audit's preconditions do not hold (for example a trivial kernel).
    Inapplicable,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass | Verdict::Heuristic => 0,
            Verdict::Refuted => 1,
            Verdict::Fail | Verdict::Inapplicable => 3,
        }
    }
}

/// Exit code for an error escaping a command.
pub fn error_exit_code(e: &RipError) -> i32 {
    match e {
        RipError::Domain(_)
        | RipError::Index { .. }
        | RipError::Shape(_)
        | RipError::Parse { .. }
        | RipError::Config(_)
        | RipError::Io(_)
        | RipError::Csv(_)
        | RipError::Json(_) => 2,
        RipError::Degenerate(_)
        | RipError::Spectral { .. }
        | RipError::NotRip { .. }
        | RipError::Budget { .. }
        | RipError::NoKernel { .. }
        | RipError::Vacuous(_)
        | RipError::TheoremViolation(_) => 3,
    }
}

/// FNV-1a 64 over [`DenseMatrix::canonical_bytes`], as 16 hex digits.
pub fn input_digest(a: &DenseMatrix) -> String {
    let mut h = FnvHasher::default();
    h.write(&a.canonical_bytes());
    format!("fnv1a64:{:016x}", h.finish())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Parameters {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(rename = "D", skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AuditReport {
    pub tool_version: &'static str,
    pub command: String,
    pub input_digest: String,
    pub parameters: Parameters,
    pub results: serde_json::Value,
    pub verdict: Verdict,
    /// Wall-clock seconds per phase. Only present when requested, so that
    /// reports stay byte-identical across reruns.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<BTreeMap<String, f64>>,
}

impl AuditReport {
    pub fn new(command: &str, a: &DenseMatrix, parameters: Parameters, results: serde_json::Value, verdict: Verdict) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            input_digest: input_digest(a),
            parameters,
            results,
            verdict,
            timings: None,
        }
    }

    pub fn to_json(&self) -> crate::Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_stable_and_shape_aware() {
        let a = DenseMatrix::identity(3);
        assert_eq!(input_digest(&a), input_digest(&DenseMatrix::identity(3)));
        let flat = DenseMatrix::new(1, 9, a.as_slice().to_vec()).unwrap();
        assert_ne!(input_digest(&a), input_digest(&flat));
        assert!(input_digest(&a).starts_with("fnv1a64:"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(Verdict::Pass.exit_code(), 0);
        assert_eq!(Verdict::Refuted.exit_code(), 1);
        assert_eq!(error_exit_code(&RipError::Config("x".into())), 2);
        assert_eq!(error_exit_code(&RipError::NoKernel { rank: 3 }), 3);
    }
}
