//! Restricted isometry constants.
//!
//! For `p = 2` the per-support extremes are singular values, so enumerating
//! every support gives the exact `D`. For other `p` only sampled brackets are
//! available and every reported `D` is a lower bound on the true constant.

use itertools::Itertools;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::distortion::delta12;
use crate::error::{Result, RipError};
use crate::matcore::{lp_norm_unchecked, normalize_sqrt_n, scale, DenseMatrix};
use crate::rng::substream;
use crate::spectral::{gram, sym_eigenvalues, RANK_ABS_TOL, RANK_REL_TOL};
use crate::witness::{arip_witness, WitnessOptions};

/// Default cap on the number of supports [`rip_exact_l2`] will enumerate.
pub const DEFAULT_SUPPORT_CAP: u128 = 2_000_000;

/// Relative slack on the analytic-sparsity threshold `Delta_{1,2} >= sqrt(n/k)`,
/// so exactly k-sparse vectors are never rejected by rounding.
pub const ANALYTIC_THRESHOLD_SLACK: f64 = 1e-12;

/// Slack used when checking row and column norm bounds.
pub const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateMode {
    Exact,
    Sampled,
}

/// Observed bracket `[min_ratio, max_ratio]` of `||Ax||_p / ||x||_p` over
/// k-sparse probes. `min_ratio` plays the role of the scale `K` and
/// `ratio_bound = max_ratio / min_ratio` the role of `D`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RipEstimate {
    pub p: f64,
    pub k: usize,
    pub mode: EstimateMode,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub ratio_bound: f64,
    pub probes: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Support attaining `min_ratio` (exact mode only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_support: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_support: Option<Vec<usize>>,
}

impl RipEstimate {
    /// `A / min_ratio`, so the observed lower scale becomes `K = 1`.
    pub fn normalize_unit_k(&self, a: &DenseMatrix) -> DenseMatrix {
        scale(a, 1.0 / self.min_ratio)
    }
}

/// `C(n, k)`, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

#[derive(Clone)]
struct Extreme {
    value: f64,
    support: Vec<usize>,
}

impl Extreme {
    /// Ties resolve to the lexicographically smaller support so the parallel
    /// reduction is order independent.
    fn pick(a: Extreme, b: Extreme, want_max: bool) -> Extreme {
        let better = if want_max { b.value > a.value } else { b.value < a.value };
        if better || (b.value == a.value && b.support < a.support) {
            b
        } else {
            a
        }
    }
}

/// Exact `(k, D)`-`l2`-RIP bracket by enumerating all `C(n, k)` supports
/// in lexicographic order.
pub fn rip_exact_l2(a: &DenseMatrix, k: usize, cap: u128) -> Result<RipEstimate> {
    let n = a.cols();
    if k == 0 || k > n {
        return Err(RipError::domain(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    let needed = binomial(n, k);
    if needed > cap {
        return Err(RipError::Budget { needed, cap });
    }
    let b = gram(a);
    let (lo, hi) = (0..n)
        .combinations(k)
        .par_bridge()
        .map(|support| {
            let sub = b
                .select_rows(&support)
                .and_then(|m| m.select_cols(&support))
                .expect("support in range");
            let eig = sym_eigenvalues(&sub).expect("small symmetric eigenproblem");
            let hi = Extreme {
                value: eig[0],
                support: support.clone(),
            };
            let lo = Extreme {
                value: eig[k - 1],
                support,
            };
            (lo, hi)
        })
        .reduce_with(|(l1, h1), (l2, h2)| (Extreme::pick(l1, l2, false), Extreme::pick(h1, h2, true)))
        .expect("at least one support");

    let tol = (RANK_REL_TOL * hi.value).max(RANK_ABS_TOL);
    if lo.value <= tol {
        return Err(RipError::NotRip {
            what: "smallest restricted Gram eigenvalue",
            value: lo.value,
            tol,
            support: lo.support,
        });
    }
    let min_ratio = lo.value.sqrt();
    let max_ratio = hi.value.sqrt();
    Ok(RipEstimate {
        p: 2.0,
        k,
        mode: EstimateMode::Exact,
        min_ratio,
        max_ratio,
        ratio_bound: max_ratio / min_ratio,
        probes: needed as u64,
        seed: None,
        min_support: Some(lo.support),
        max_support: Some(hi.support),
    })
}

/// Draws a uniformly random k-subset and standard Gaussian values on it.
pub(crate) fn random_sparse_probe<R: Rng>(rng: &mut R, n: usize, k: usize) -> (Vec<usize>, Vec<f64>) {
    let mut support = sample(rng, n, k.min(n)).into_vec();
    support.sort_unstable();
    let values = support.iter().map(|_| rng.sample(StandardNormal)).collect();
    (support, values)
}

/// Sampled lower bound on the `(k, D)`-`lp`-RIP constant. Probes are all
/// `n` coordinate vectors plus `trials` random k-sparse Gaussian vectors;
/// trial `t` uses substream `t` of `seed`.
pub fn rip_sampled(a: &DenseMatrix, k: usize, p: f64, trials: usize, seed: u64) -> Result<RipEstimate> {
    let n = a.cols();
    if !(p >= 1.0) {
        return Err(RipError::domain(format!("need p >= 1, got {p}")));
    }
    if k == 0 || k > n {
        return Err(RipError::domain(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    if trials == 0 {
        return Err(RipError::domain("rip_sampled needs at least one trial"));
    }
    let coord = (0..n).map(|j| lp_norm_unchecked(&a.column(j), p));
    let (cmin, cmax) = coord.fold((f64::INFINITY, 0.0_f64), |(lo, hi), r| (lo.min(r), hi.max(r)));

    let (smin, smax) = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(seed, t as u64);
            let (support, values) = random_sparse_probe(&mut rng, n, k);
            let image = a.matvec_sparse(&support, &values);
            let r = lp_norm_unchecked(&image, p) / lp_norm_unchecked(&values, p);
            (r, r)
        })
        .reduce(|| (f64::INFINITY, 0.0), |(a, b), (c, d)| (a.min(c), b.max(d)));

    let min_ratio = cmin.min(smin);
    let max_ratio = cmax.max(smax);
    let tol = (RANK_REL_TOL.sqrt() * max_ratio).max(RANK_ABS_TOL.sqrt());
    if !(min_ratio > tol) {
        return Err(RipError::NotRip {
            what: "smallest sampled ratio",
            value: min_ratio,
            tol,
            support: Vec::new(),
        });
    }
    Ok(RipEstimate {
        p,
        k,
        mode: EstimateMode::Sampled,
        min_ratio,
        max_ratio,
        ratio_bound: max_ratio / min_ratio,
        probes: (n + trials) as u64,
        seed: Some(seed),
        min_support: None,
        max_support: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AripParams {
    pub kprime: f64,
    /// `kprime < 1`: the conversion certifies nothing.
    pub vacuous: bool,
}

/// Sparsity `k' = (D'-D)^2 k^3 / ((D'D + D' + D)^2 n^2)` at which a
/// `(k, D)`-RIP matrix is `(k', D')`-ARIP.
pub fn rip_to_arip_params(k: usize, d: f64, d_prime: f64, n: usize) -> Result<AripParams> {
    if !(d >= 1.0) {
        return Err(RipError::domain(format!("need D >= 1, got {d}")));
    }
    if !(d_prime > d) {
        return Err(RipError::domain(format!("need D' > D, got D={d}, D'={d_prime}")));
    }
    if n == 0 {
        return Err(RipError::domain("n must be positive"));
    }
    let (k, n) = (k as f64, n as f64);
    let denom = d_prime * d + d_prime + d;
    let kprime = (d_prime - d).powi(2) * k.powi(3) / (denom * denom * n * n);
    Ok(AripParams {
        kprime,
        vacuous: kprime < 1.0,
    })
}

/// Whether `x` is analytically k-sparse: `Delta_{1,2}(x) >= sqrt(n/k)`.
pub fn qualifies_analytic_sparsity(x: &[f64], k: usize) -> bool {
    let threshold = (x.len() as f64 / k as f64).sqrt();
    delta12(x).is_some_and(|d| d >= threshold * (1.0 - ANALYTIC_THRESHOLD_SLACK))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase", tag = "kind", content = "index")]
pub enum ProbeSource {
    Coordinate(usize),
    Random(usize),
    Witness,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AripProbe {
    pub source: ProbeSource,
    pub ratio: f64,
    #[serde(skip)]
    pub x: Vec<f64>,
}

/// Two analytically k-sparse vectors whose `||Ax||_2/||x||_2` ratios differ
/// by more than `D`, so no scale `K` satisfies the ARIP bracket.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AripRefutation {
    pub low: AripProbe,
    pub high: AripProbe,
    pub observed_d: f64,
}

/// Searches coordinate vectors, `trials` random k-sparse Gaussians and the
/// matrix-exponential witness for a pair refuting `(k, D)`-`l2`-ARIP.
/// `None` is not a certificate of ARIP.
pub fn arip_falsify(a: &DenseMatrix, k: usize, d: f64, trials: usize, seed: u64) -> Result<Option<AripRefutation>> {
    let n = a.cols();
    if k == 0 || k > n {
        return Err(RipError::domain(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    let ratio = |x: &[f64]| {
        let image = a.matvec(x).expect("dimension");
        lp_norm_unchecked(&image, 2.0) / lp_norm_unchecked(x, 2.0)
    };

    let mut probes: Vec<AripProbe> = (0..n)
        .map(|j| {
            let mut x = vec![0.0; n];
            x[j] = 1.0;
            AripProbe {
                source: ProbeSource::Coordinate(j),
                ratio: lp_norm_unchecked(&a.column(j), 2.0),
                x,
            }
        })
        .collect();

    probes.extend((0..trials).into_par_iter().map(|t| {
        let mut rng = substream(seed, t as u64);
        let (support, values) = random_sparse_probe(&mut rng, n, k);
        let mut x = vec![0.0; n];
        for (j, v) in support.iter().zip(&values) {
            x[*j] = *v;
        }
        AripProbe {
            source: ProbeSource::Random(t),
            ratio: ratio(&x),
            x,
        }
    }).collect::<Vec<_>>());

    if let Ok(w) = arip_witness(a, k, &WitnessOptions::default()) {
        if qualifies_analytic_sparsity(&w.x, k) {
            let r = ratio(&w.x);
            probes.push(AripProbe {
                source: ProbeSource::Witness,
                ratio: r,
                x: w.x,
            });
        }
    }

    let qualified = probes.into_iter().filter(|pr| qualifies_analytic_sparsity(&pr.x, k));
    let mut low: Option<AripProbe> = None;
    let mut high: Option<AripProbe> = None;
    for pr in qualified {
        if low.as_ref().is_none_or(|l| pr.ratio < l.ratio) {
            low = Some(pr.clone());
        }
        if high.as_ref().is_none_or(|h| pr.ratio > h.ratio) {
            high = Some(pr);
        }
    }
    let (Some(low), Some(high)) = (low, high) else {
        return Ok(None);
    };
    let observed_d = high.ratio / low.ratio;
    if observed_d > d {
        Ok(Some(AripRefutation { low, high, observed_d }))
    } else {
        Ok(None)
    }
}

/// Necessary conditions for `(k, D)`-`l2`-ARIP after normalizing to
/// `||A||_F = sqrt(n)`: every row norm is at most `D sqrt(n/k)` and every
/// column norm at most `D`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BasicBoundsAudit {
    pub k: usize,
    pub d: f64,
    pub normalization_factor: f64,
    pub row_bound: f64,
    pub col_bound: f64,
    pub max_row_norm: f64,
    pub max_col_norm: f64,
    pub violating_rows: Vec<usize>,
    pub violating_cols: Vec<usize>,
    /// No violations. A failure disproves `(k, D)`-ARIP.
    pub passed: bool,
}

pub fn basic_bounds_audit(a: &DenseMatrix, k: usize, d: f64) -> Result<BasicBoundsAudit> {
    let n = a.cols();
    if k == 0 || k > n {
        return Err(RipError::domain(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    let (an, factor) = normalize_sqrt_n(a)?;
    let row_bound = d * (n as f64 / k as f64).sqrt();
    let col_bound = d;
    let rows = an.row_norms(2.0)?;
    let cols = an.column_norms(2.0)?;
    let violating_rows: Vec<usize> = (0..rows.len()).filter(|&i| rows[i] > row_bound + BOUND_SLACK).collect();
    let violating_cols: Vec<usize> = (0..cols.len()).filter(|&j| cols[j] > col_bound + BOUND_SLACK).collect();
    Ok(BasicBoundsAudit {
        k,
        d,
        normalization_factor: factor,
        row_bound,
        col_bound,
        max_row_norm: rows.iter().copied().fold(0.0, f64::max),
        max_col_norm: cols.iter().copied().fold(0.0, f64::max),
        passed: violating_rows.is_empty() && violating_cols.is_empty(),
        violating_rows,
        violating_cols,
    })
}
