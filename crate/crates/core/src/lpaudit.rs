//! Row-norm audits for `lp`-RIP with `p != 2`.
//!
//! If `A` is `(k, D)`-`lp`-RIP and `1 <= p < 2` then
//! `D^p (n/k)^{1 - p/2} sum_i ||A_i||_2^p >= sum_i ||A_i||_p^p`, with the
//! inequality reversed (and the exponent `p/2 - 1`) for `p > 2`. Since
//! `||row||_p^p / ||row||_2^p` grows with the row's support for `p < 2`,
//! this forces the rows of an RIP matrix to be sparse.

use rand_distr::StandardNormal;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Result, RipError};
use crate::matcore::{lp_norm_pow, DenseMatrix, IndexSet};
use crate::rng::substream;

/// Trials per work unit in [`gaussian_probe`]. Chunk `c` draws from
/// substream `c`, so results do not depend on the thread count.
pub const PROBE_CHUNK: usize = 1024;

/// Minimum trial count accepted by [`gaussian_probe`].
pub const MIN_PROBE_TRIALS: usize = 100;

/// Slack below which a negative audit slack counts as a violation.
pub const AUDIT_SLACK: f64 = 1e-9;

/// `E|g|^p = 2^{p/2} Gamma((1+p)/2) / sqrt(pi)` for a standard Gaussian `g`.
pub fn gaussian_moment(p: f64) -> Result<f64> {
    if !(p >= 0.0) || !p.is_finite() {
        return Err(RipError::domain(format!("gaussian_moment needs finite p >= 0, got {p}")));
    }
    let ln = 0.5 * p * std::f64::consts::LN_2 + ln_gamma(0.5 * (1.0 + p)) - 0.5 * std::f64::consts::PI.ln();
    Ok(ln.exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Regime {
    /// `p < 2`: `lhs = D^p (n/k)^{1-p/2} sumL2p`, `rhs = sumLpp`.
    BelowTwo,
    /// `p = 2`: both sides equal `||A||_F^2`.
    Trivial,
    /// `p > 2`: `lhs = D^p (n/k)^{p/2-1} sumLpp`, `rhs = sumL2p`.
    AboveTwo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RowNormAudit {
    pub p: f64,
    pub k: usize,
    pub d: f64,
    pub regime: Regime,
    /// `sum_i ||A_i||_2^p`.
    pub sum_l2p: f64,
    /// `sum_i ||A_i||_p^p`.
    pub sum_lpp: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    /// Smallest `D` for which the inequality holds. Values below 1 mean the
    /// audit is satisfied by every admissible `D`.
    pub implied_d_lower: f64,
}

impl RowNormAudit {
    /// `slack < -1e-9`: `A` is not `(k, D)`-`lp`-RIP, provided `D` was certified.
    pub fn violated(&self) -> bool {
        self.slack < -AUDIT_SLACK
    }
}

pub fn row_norm_audit(a: &DenseMatrix, p: f64, k: usize, d: f64) -> Result<RowNormAudit> {
    let n = a.cols();
    if !(p >= 1.0) || !p.is_finite() {
        return Err(RipError::domain(format!("need finite p >= 1, got {p}")));
    }
    if k == 0 || k > n {
        return Err(RipError::domain(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    if !(d >= 1.0) {
        return Err(RipError::domain(format!("need D >= 1, got {d}")));
    }
    let regime = if p < 2.0 {
        Regime::BelowTwo
    } else if p > 2.0 {
        Regime::AboveTwo
    } else {
        Regime::Trivial
    };
    let (mut sum_l2p, mut sum_lpp) = (0.0, 0.0);
    for i in 0..a.rows() {
        let row = a.row(i);
        let sq: f64 = row.iter().map(|v| v * v).sum();
        if regime == Regime::Trivial {
            sum_l2p += sq;
            sum_lpp += sq;
        } else {
            sum_l2p += sq.powf(0.5 * p);
            sum_lpp += lp_norm_pow(row, p);
        }
    }
    let ratio = n as f64 / k as f64;
    let (lhs, rhs, implied) = match regime {
        Regime::Trivial => (sum_l2p, sum_lpp, 1.0),
        Regime::BelowTwo => {
            let factor = ratio.powf(1.0 - 0.5 * p);
            let implied = (sum_lpp / (factor * sum_l2p)).powf(1.0 / p);
            (d.powf(p) * factor * sum_l2p, sum_lpp, implied)
        }
        Regime::AboveTwo => {
            let factor = ratio.powf(0.5 * p - 1.0);
            let implied = (sum_l2p / (factor * sum_lpp)).powf(1.0 / p);
            (d.powf(p) * factor * sum_lpp, sum_l2p, implied)
        }
    };
    Ok(RowNormAudit {
        p,
        k,
        d,
        regime,
        sum_l2p,
        sum_lpp,
        lhs,
        rhs,
        slack: lhs - rhs,
        implied_d_lower: implied,
    })
}

/// `sum_i ||A_{i,S}||_2^p`.
pub fn support_norm_sum(a: &DenseMatrix, s: &IndexSet, p: f64) -> Result<f64> {
    if s.range() != a.cols() {
        return Err(RipError::Shape(format!(
            "support ranges over {} but A has {} columns",
            s.range(),
            a.cols()
        )));
    }
    Ok((0..a.rows())
        .map(|i| {
            let row = a.row(i);
            let sq: f64 = s.as_slice().iter().map(|&j| row[j] * row[j]).sum();
            sq.powf(0.5 * p)
        })
        .sum())
}

/// One Gaussian draw on the support, with `X = ||Ax||_p^p` and `Y = ||x||_p^p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ProbeSample {
    pub trial: usize,
    pub ratio: f64,
    /// Values on the support, in support order.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GaussianProbe {
    pub p: f64,
    pub trials: usize,
    pub seed: u64,
    /// `mean X / mean Y`.
    pub empirical_ratio: f64,
    /// `support_norm_sum(A, S, p) / |S|`.
    pub predicted_ratio: f64,
    pub stderr: f64,
    /// A draw with `X/Y <= empiricalRatio` and the smallest such ratio.
    pub low: Option<ProbeSample>,
    /// A draw with `X/Y >= empiricalRatio` and the largest such ratio.
    pub high: Option<ProbeSample>,
}

struct Chunk {
    xs: Vec<f64>,
    ys: Vec<f64>,
    low: (usize, f64, Vec<f64>),
    high: (usize, f64, Vec<f64>),
}

/// Compares `E||Ax||_p^p / E||x||_p^p` for Gaussian `x` supported on `S`
/// with its closed form `sum_i ||A_{i,S}||_2^p / |S|`. The standard error
/// is the delta-method error of a ratio of means.
pub fn gaussian_probe(a: &DenseMatrix, s: &IndexSet, p: f64, trials: usize, seed: u64) -> Result<GaussianProbe> {
    if trials < MIN_PROBE_TRIALS {
        return Err(RipError::domain(format!("need at least {MIN_PROBE_TRIALS} trials, got {trials}")));
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(RipError::domain(format!("need finite p >= 1, got {p}")));
    }
    if s.is_empty() {
        return Err(RipError::degenerate("gaussian_probe needs a non-empty support"));
    }
    let predicted_ratio = support_norm_sum(a, s, p)? / s.len() as f64;
    let support = s.as_slice();

    let chunks: Vec<Chunk> = (0..trials.div_ceil(PROBE_CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, c as u64);
            let start = c * PROBE_CHUNK;
            let end = (start + PROBE_CHUNK).min(trials);
            let mut chunk = Chunk {
                xs: Vec::with_capacity(end - start),
                ys: Vec::with_capacity(end - start),
                low: (usize::MAX, f64::INFINITY, Vec::new()),
                high: (usize::MAX, f64::NEG_INFINITY, Vec::new()),
            };
            for trial in start..end {
                let values: Vec<f64> = support.iter().map(|_| rng.sample(StandardNormal)).collect();
                let x = lp_norm_pow(&a.matvec_sparse(support, &values), p);
                let y = lp_norm_pow(&values, p);
                let r = x / y;
                if r < chunk.low.1 {
                    chunk.low = (trial, r, values.clone());
                }
                if r > chunk.high.1 {
                    chunk.high = (trial, r, values);
                }
                chunk.xs.push(x);
                chunk.ys.push(y);
            }
            chunk
        })
        .collect();

    let nf = trials as f64;
    let mean_x = chunks.iter().flat_map(|c| &c.xs).sum::<f64>() / nf;
    let mean_y = chunks.iter().flat_map(|c| &c.ys).sum::<f64>() / nf;
    let empirical_ratio = mean_x / mean_y;
    let residuals = chunks
        .iter()
        .flat_map(|c| c.xs.iter().zip(&c.ys))
        .map(|(x, y)| (x - empirical_ratio * y) / mean_y);
    let var = residuals.map(|r| r * r).sum::<f64>() / (nf - 1.0);
    let stderr = (var / nf).sqrt();

    // Chunks are in trial order, so strict comparisons keep the earliest trial.
    let mut low: Option<ProbeSample> = None;
    let mut high: Option<ProbeSample> = None;
    for c in &chunks {
        if c.low.1 <= empirical_ratio && low.as_ref().is_none_or(|l| c.low.1 < l.ratio) {
            low = Some(ProbeSample {
                trial: c.low.0,
                ratio: c.low.1,
                values: c.low.2.clone(),
            });
        }
        if c.high.1 >= empirical_ratio && high.as_ref().is_none_or(|h| c.high.1 > h.ratio) {
            high = Some(ProbeSample {
                trial: c.high.0,
                ratio: c.high.1,
                values: c.high.2.clone(),
            });
        }
    }

    Ok(GaussianProbe {
        p,
        trials,
        seed,
        empirical_ratio,
        predicted_ratio,
        stderr,
        low,
        high,
    })
}
