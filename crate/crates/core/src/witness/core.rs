use serde::Serialize;

use super::implied_d_lower_real;
use super::strip::row_removal;
use crate::distortion::delta12;
use crate::error::{Result, RipError};
use crate::matcore::{frobenius_sq, normalize_sqrt_n, DenseMatrix, IndexSet};
use crate::ripcert::rip_sampled;
use crate::spectral::{eigh, gram, numeric_rank};

/// Random probes used for the default `Kest`.
pub const KEST_TRIALS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct HypothesisWindow {
    /// `64 D^8 / (1 - alpha)^4`.
    pub lower: f64,
    /// `n^eta`.
    pub value: f64,
    /// `k / D^2`.
    pub upper: f64,
    pub holds: bool,
}

/// The row-removal step and what follows it.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CoreTail {
    /// `(1 - alpha) n^eta / (8 D^4)` before rounding down.
    pub kprime_real: f64,
    pub kprime: usize,
    pub delta: f64,
    pub d_prime: f64,
    pub removed_cols: IndexSet,
    pub removed_cols_bound: f64,
    pub s_rows: usize,
    pub s_cols: usize,
    pub s_frob_sq: f64,
    /// `sum_i ||S_i||_1^2 / ||S||_F^2`.
    pub chain_value: f64,
    /// `4n / Delta_{1,2}(A_{t+1})^2`; `None` when `T` is all of `A`.
    pub chain_upper: Option<f64>,
    /// Only meaningful inside the hypothesis window.
    pub chain_ok: Option<bool>,
    /// Lower bound on the ARIP constant of `S` at sparsity `k'`.
    pub s_implied_d_lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum DenseCoreVerdict {
    /// Nothing observed contradicts `(k, D)`-ARIP.
    Consistent,
    /// Too few rows in `T`: a row exceeds `D sqrt(n/k)`, which rigorously
    /// rules out `(k, D)`-ARIP.
    Refuted,
    /// `S` violates what row removal promises. Depends on `Kest` standing in
    /// for the unknown scale `K`.
    RefutationEvidence,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DenseCore {
    pub k: usize,
    pub d: f64,
    pub eta: f64,
    pub m: usize,
    pub n: usize,
    pub rank: usize,
    pub alpha: f64,
    pub normalization_factor: f64,
    /// Rows of `A` in non-decreasing `Delta_{1,2}` order.
    pub row_order: Vec<usize>,
    /// Rows of `T` in the original numbering.
    pub row_indices: IndexSet,
    /// The rows of `T` in sorted order, normalized.
    #[serde(skip)]
    pub t: DenseMatrix,
    pub frob_fraction: f64,
    pub row_count: usize,
    pub max_row_delta12: f64,
    pub window: HypothesisWindow,
    /// `frobFraction >= n^{-eta}`.
    pub property1: bool,
    /// `rowCount >= k / (D^2 n^eta) - 1`.
    pub property2: bool,
    pub kest: f64,
    pub tail: Option<CoreTail>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_note: Option<String>,
    pub verdict: DenseCoreVerdict,
}

/// Extracts the densest rows `T` carrying an `n^{-eta}` share of the
/// Frobenius mass, removes them together with the columns they load
/// heavily, and inspects the remainder `S`.
///
/// `kest` defaults to the sampled `l2` minRatio of the normalized matrix,
/// clamped into `[1/D, 1]`.
pub fn dense_core_extract(a: &DenseMatrix, k: usize, d: f64, eta: f64, kest: Option<f64>) -> Result<DenseCore> {
    let (m, n) = (a.rows(), a.cols());
    if k == 0 || k > n {
        return Err(RipError::domain(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    if !(d >= 1.0) {
        return Err(RipError::domain(format!("need D >= 1, got {d}")));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(RipError::domain(format!("need eta > 0, got {eta}")));
    }
    let (an, factor) = normalize_sqrt_n(a)?;
    let nf = n as f64;

    let row_deltas: Vec<f64> = (0..m).map(|i| delta12(an.row(i)).unwrap_or(f64::INFINITY)).collect();
    let mut row_order: Vec<usize> = (0..m).collect();
    row_order.sort_by(|&x, &y| row_deltas[x].total_cmp(&row_deltas[y]));

    let target = nf.powf(1.0 - eta);
    let mut mass = 0.0;
    let mut t = m;
    for (pos, &i) in row_order.iter().enumerate() {
        mass += an.row(i).iter().map(|v| v * v).sum::<f64>();
        if mass >= target * (1.0 - 1e-12) {
            t = pos + 1;
            break;
        }
    }
    let t_rows = &row_order[..t];
    let t_matrix = an.select_rows(t_rows)?;
    let frob_fraction = frobenius_sq(&t_matrix) / frobenius_sq(&an);
    let max_row_delta12 = t_rows.iter().map(|&i| row_deltas[i]).fold(0.0, f64::max);
    let row_indices = IndexSet::new(t_rows.to_vec(), m)?;

    let eig = eigh(&gram(&an))?;
    let rank = numeric_rank(&eig);
    let alpha = eig.alpha();
    let n_eta = nf.powf(eta);
    let lower = 64.0 * d.powi(8) / (1.0 - alpha).powi(4);
    let upper = k as f64 / (d * d);
    let window = HypothesisWindow {
        lower,
        value: n_eta,
        upper,
        holds: lower <= n_eta && n_eta <= upper,
    };
    if !window.holds {
        log::warn!("hypothesis window fails: need {lower:.3e} <= n^eta = {n_eta:.3e} <= {upper:.3e}");
    }
    let property1 = frob_fraction >= nf.powf(-eta) - 1e-9;
    let property2 = t as f64 >= k as f64 / (d * d * n_eta) - 1.0;

    let kest = match kest {
        Some(v) => v,
        None => rip_sampled(&an, k, 2.0, KEST_TRIALS, 0)
            .map(|e| e.min_ratio)
            .unwrap_or(1.0 / d),
    }
    .clamp(1.0 / d, 1.0);

    let next_delta = row_order.get(t).map(|&i| row_deltas[i]);
    let (tail, tail_note) = match core_tail(&an, &row_indices, k, d, n_eta, alpha, kest, next_delta, window.holds) {
        Ok(tail) => (Some(tail), None),
        Err(e) => (None, Some(e.to_string())),
    };

    let evidence = tail.as_ref().is_some_and(|tl| {
        tl.chain_ok == Some(false) || tl.s_implied_d_lower.is_some_and(|v| v > tl.d_prime)
    });
    let verdict = if !property2 {
        DenseCoreVerdict::Refuted
    } else if evidence {
        DenseCoreVerdict::RefutationEvidence
    } else {
        DenseCoreVerdict::Consistent
    };

    Ok(DenseCore {
        k,
        d,
        eta,
        m,
        n,
        rank,
        alpha,
        normalization_factor: factor,
        row_order,
        row_indices,
        t: t_matrix,
        frob_fraction,
        row_count: t,
        max_row_delta12,
        window,
        property1,
        property2,
        kest,
        tail,
        tail_note,
        verdict,
    })
}

#[allow(clippy::too_many_arguments)]
fn core_tail(
    an: &DenseMatrix,
    rows: &IndexSet,
    k: usize,
    d: f64,
    n_eta: f64,
    alpha: f64,
    kest: f64,
    next_delta: Option<f64>,
    window_holds: bool,
) -> Result<CoreTail> {
    let n = an.cols() as f64;
    let kprime_real = (1.0 - alpha) * n_eta / (8.0 * d.powi(4));
    if !(kprime_real >= 1.0) {
        return Err(RipError::Vacuous(format!("k' = {kprime_real} is below 1")));
    }
    let kprime = kprime_real.floor() as usize;
    let delta = (1.0 / (2.0 * kprime_real)).sqrt();
    let (s, report) = row_removal(an, rows, kprime, delta, k, kest, d)?;

    let s_frob_sq = frobenius_sq(&s);
    let chain_value = if s_frob_sq > 0.0 {
        (0..s.rows())
            .map(|i| s.row(i).iter().map(|v| v.abs()).sum::<f64>().powi(2))
            .sum::<f64>()
            / s_frob_sq
    } else {
        f64::NAN
    };
    let chain_upper = next_delta.filter(|v| v.is_finite()).map(|v| 4.0 * n / (v * v));
    let chain_ok = match (window_holds, chain_upper) {
        (true, Some(up)) if s_frob_sq > 0.0 => Some(chain_value <= up * (1.0 + 1e-9)),
        _ => None,
    };
    let (s_implied_d_lower, s_note) = if s.cols() == 0 || s.is_zero() {
        (None, Some("S is empty or zero".to_string()))
    } else if kprime > s.cols() {
        (None, Some(format!("k' = {kprime} exceeds the {} columns of S", s.cols())))
    } else {
        match implied_d_lower_real(&s, kprime as f64) {
            Ok(v) => (Some(v), None),
            Err(e) => (None, Some(e.to_string())),
        }
    };

    Ok(CoreTail {
        kprime_real,
        kprime,
        delta,
        d_prime: report.d_prime,
        removed_cols_bound: report.lemma_bound,
        removed_cols: report.removed_cols,
        s_rows: s.rows(),
        s_cols: s.cols(),
        s_frob_sq,
        chain_value,
        chain_upper,
        chain_ok,
        s_implied_d_lower,
        s_note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{generate, EnsembleSpec};

    #[test]
    fn identity_rows_all_equal() {
        let n = 16;
        let core = dense_core_extract(&DenseMatrix::identity(n), n, 1.0, 0.5, None).unwrap();
        assert_eq!(core.row_count, 4);
        assert_eq!(core.row_indices.as_slice(), &[0, 1, 2, 3]);
        assert!((core.frob_fraction - 0.25).abs() < 1e-15);
        assert!(core.property1 && core.property2);
        // Full rank leaves k' = 0, so no tail.
        assert!(core.tail.is_none() && core.tail_note.is_some());
        assert_eq!(core.verdict, DenseCoreVerdict::Consistent);
    }

    #[test]
    fn one_huge_row_is_the_core() {
        let n = 16;
        let mut rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        rows[5] = vec![100.0; n];
        let a = DenseMatrix::from_rows(&rows).unwrap();
        let core = dense_core_extract(&a, n, 1.0, 0.5, None).unwrap();
        assert_eq!(core.row_count, 1);
        assert_eq!(core.row_indices.as_slice(), &[5]);
    }

    #[test]
    fn row_order_is_a_permutation() {
        let a = generate(&EnsembleSpec::new("denseGaussian", 20, 40, None, 3)).unwrap();
        let core = dense_core_extract(&a, 20, 1.5, 0.5, None).unwrap();
        let mut order = core.row_order.clone();
        order.sort_unstable();
        assert_eq!(order, (0..20).collect::<Vec<_>>());
        assert!(core.property1);
    }

    #[test]
    fn sparse_pipeline_runs() {
        let a = generate(&EnsembleSpec::new("columnRegular", 64, 128, Some(4), 1)).unwrap();
        let core = dense_core_extract(&a, 64, 1.0, 0.9, Some(1.0)).unwrap();
        assert!(core.property1);
        let tail = core.tail.expect("k' >= 1 here");
        assert!(tail.removed_cols.len() as f64 <= tail.removed_cols_bound + 1.0);
    }
}
