use serde::Serialize;

use crate::error::{Result, RipError};
use crate::matcore::{frobenius_sq, normalize_sqrt_n, remove_rows_cols, DenseMatrix, IndexSet};
use crate::ripcert::BOUND_SLACK;
use crate::spectral::gram;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct HeavyColumnReport {
    pub d: f64,
    pub normalization_factor: f64,
    /// `W = sum_i ||A_i||_1^2`.
    pub w: f64,
    /// `H = 2 W D^2 / n`.
    pub h: f64,
    pub removed: IndexSet,
    /// `n / (2 D^2)`.
    pub cardinality_bound: f64,
    pub cardinality_ok: bool,
    /// `||A'||_F^2` after removing the heavy columns.
    pub remaining_frob_sq: f64,
    /// Every column norm is at most `D`. When false, `A` is already not
    /// `(k, D)`-ARIP for any `k` and the Frobenius bound is not asserted.
    pub column_premise: bool,
    /// `||A'||_F^2 >= n/2`; `None` when the column premise fails.
    pub frob_ok: Option<bool>,
}

/// Removes the columns `j` of the normalized `A` with `||B_{*j}||_1 >= H`.
/// Returns the stripped normalized matrix.
pub fn heavy_column_strip(a: &DenseMatrix, d: f64) -> Result<(DenseMatrix, HeavyColumnReport)> {
    if !(d >= 1.0) {
        return Err(RipError::domain(format!("need D >= 1, got {d}")));
    }
    let n = a.cols();
    let (an, factor) = normalize_sqrt_n(a)?;
    let w: f64 = (0..an.rows())
        .map(|i| an.row(i).iter().map(|v| v.abs()).sum::<f64>().powi(2))
        .sum();
    let h = 2.0 * w * d * d / n as f64;
    let b = gram(&an);
    let heavy: Vec<usize> = b
        .column_norms(1.0)?
        .iter()
        .enumerate()
        .filter(|(_, s)| **s >= h)
        .map(|(j, _)| j)
        .collect();
    let removed = IndexSet::new(heavy, n)?;
    let stripped = remove_rows_cols(&an, &IndexSet::empty(an.rows()), &removed)?;
    let remaining_frob_sq = frobenius_sq(&stripped);
    let cardinality_bound = n as f64 / (2.0 * d * d);
    let column_premise = an.column_norms(2.0)?.iter().all(|c| *c <= d + BOUND_SLACK);
    let frob_ok = column_premise.then(|| remaining_frob_sq >= n as f64 / 2.0 - 1e-6);
    let report = HeavyColumnReport {
        d,
        normalization_factor: factor,
        w,
        h,
        cardinality_ok: (removed.len() as f64) <= cardinality_bound + 1.0,
        removed,
        cardinality_bound,
        remaining_frob_sq,
        column_premise,
        frob_ok,
    };
    Ok((stripped, report))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RowRemovalReport {
    pub rows: IndexSet,
    pub removed_cols: IndexSet,
    pub kprime: usize,
    pub delta: f64,
    pub kest: f64,
    pub d: f64,
    /// Claimed ARIP constant of the result, `D / sqrt(1 - k' delta^2)`.
    pub d_prime: f64,
    pub normalization_factor: f64,
    pub removed_rows_frob_sq: f64,
    /// `||A_I||_F^2 / (Kest^2 delta^2)`, the count bound for this `Kest`.
    pub count_bound: f64,
    /// `n D^2 ||A_I||_F^2 / (delta^2 ||A||_F^2)`, valid whenever `Kest >= 1/D`.
    pub lemma_bound: f64,
    pub count_ok: bool,
    /// `k' > k`: the lemma's hypothesis `k' <= k` fails.
    pub kprime_exceeds_k: bool,
}

/// Drops the rows `I` of the normalized `A` together with every column
/// whose restriction to `I` has `l2` norm above `Kest * delta`. Row indices
/// range over the `m` rows of `A`.
pub fn row_removal(
    a: &DenseMatrix,
    rows: &IndexSet,
    kprime: usize,
    delta: f64,
    k: usize,
    kest: f64,
    d: f64,
) -> Result<(DenseMatrix, RowRemovalReport)> {
    if rows.range() != a.rows() {
        return Err(RipError::Shape(format!(
            "row set ranges over {} but A has {} rows",
            rows.range(),
            a.rows()
        )));
    }
    if !(delta > 0.0) {
        return Err(RipError::domain(format!("need delta > 0, got {delta}")));
    }
    if !(kest > 0.0 && kest <= 1.0) {
        return Err(RipError::domain(format!("need Kest in (0, 1], got {kest}")));
    }
    if !(d >= 1.0) {
        return Err(RipError::domain(format!("need D >= 1, got {d}")));
    }
    let shrink = kprime as f64 * delta * delta;
    if shrink >= 1.0 {
        return Err(RipError::domain(format!("k' delta^2 = {shrink} must be below 1")));
    }
    let n = a.cols();
    let (an, factor) = normalize_sqrt_n(a)?;
    let a_i = an.select_rows(rows.as_slice())?;
    let threshold = kest * delta;
    let cols: Vec<usize> = a_i
        .column_norms(2.0)?
        .iter()
        .enumerate()
        .filter(|(_, c)| **c > threshold)
        .map(|(j, _)| j)
        .collect();
    let removed_cols = IndexSet::new(cols, n)?;
    let result = remove_rows_cols(&an, rows, &removed_cols)?;
    let removed_rows_frob_sq = frobenius_sq(&a_i);
    let count_bound = removed_rows_frob_sq / (threshold * threshold);
    let lemma_bound = n as f64 * d * d * removed_rows_frob_sq / (delta * delta * frobenius_sq(&an));
    let report = RowRemovalReport {
        count_ok: (removed_cols.len() as f64) <= count_bound + 1.0,
        rows: rows.clone(),
        removed_cols,
        kprime,
        delta,
        kest,
        d,
        d_prime: d / (1.0 - shrink).sqrt(),
        normalization_factor: factor,
        removed_rows_frob_sq,
        count_bound,
        lemma_bound,
        kprime_exceeds_k: kprime > k,
    };
    Ok((result, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_no_heavy_columns() {
        let (stripped, r) = heavy_column_strip(&DenseMatrix::identity(6), 1.0).unwrap();
        assert_eq!(r.w, 6.0);
        assert_eq!(r.h, 2.0);
        assert!(r.removed.is_empty());
        assert_eq!(stripped, DenseMatrix::identity(6));
        assert_eq!(r.frob_ok, Some(true));
    }

    #[test]
    fn duplicated_dense_column_is_heavy() {
        let n = 8;
        let mut rows = vec![vec![0.0; n]; n];
        for (i, row) in rows.iter_mut().enumerate() {
            row[i] = 0.1;
            row[0] = 1.0;
            row[1] = 1.0;
        }
        let a = DenseMatrix::from_rows(&rows).unwrap();
        let (_, r) = heavy_column_strip(&a, 1.0).unwrap();
        assert!(r.removed.contains(0) && r.removed.contains(1), "{r:?}");
        assert!(r.cardinality_ok);
    }

    #[test]
    fn row_removal_by_hand() {
        let rows = IndexSet::new(vec![0], 2).unwrap();
        let (out, r) = row_removal(&DenseMatrix::identity(2), &rows, 1, 0.5, 2, 1.0, 1.0).unwrap();
        assert_eq!(r.removed_cols.as_slice(), &[0]);
        assert_eq!(out, DenseMatrix::identity(1));
        assert!((r.d_prime - 1.0 / 0.75f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn row_removal_trivial_cases() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0, 0.0], vec![0.0, 1.0, 1.0]]).unwrap();
        let (out, r) = row_removal(&a, &IndexSet::empty(2), 1, 0.5, 3, 1.0, 1.0).unwrap();
        assert!(r.removed_cols.is_empty());
        assert_eq!(out, normalize_sqrt_n(&a).unwrap().0);

        let (_, r) = row_removal(&a, &IndexSet::new(vec![1], 2).unwrap(), 1, 0.9, 3, 1.0, 1.0).unwrap();
        assert!(r.removed_cols.is_empty());
    }

    #[test]
    fn divergent_d_prime_rejected() {
        let rows = IndexSet::new(vec![0], 2).unwrap();
        assert!(row_removal(&DenseMatrix::identity(2), &rows, 4, 0.5, 4, 1.0, 1.0).is_err());
    }
}
