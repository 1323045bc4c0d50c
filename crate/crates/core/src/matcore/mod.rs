//! Dense matrices, index sets and the norms used throughout the crate.
//!
//! Everything is held dense and row-major. Indices are 0-based.

pub mod io;

use std::fmt;

use crate::error::{Result, RipError};

/// Passed as `p` to [`lp_norm`] to request the max-norm.
pub const INF_NORM: f64 = f64::INFINITY;

/// Real `rows x cols` matrix stored row-major. All entries are finite.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            write!(f, "\n  {:?}", &self.row(i)[..self.cols.min(8)])?;
        }
        write!(f, "\n]")
    }
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(RipError::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(RipError::domain(format!(
                "non-finite entry at ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        let n = values.len();
        let mut data = vec![0.0; n * n];
        for (i, v) in values.iter().enumerate() {
            data[i * n + i] = *v;
        }
        Self::new(n, n, data)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(RipError::Shape("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Row-major entries.
    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut data = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[j * self.rows + i] = self.get(i, j);
            }
        }
        DenseMatrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    /// `A x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(RipError::Shape(format!(
                "vector of length {} against {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `A x` restricted to the columns in `support`, with `values[t]` the
    /// coefficient of column `support[t]`.
    pub fn matvec_sparse(&self, support: &[usize], values: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| {
                let row = self.row(i);
                support.iter().zip(values).map(|(&j, v)| row[j] * v).sum()
            })
            .collect()
    }

    pub fn row_norms(&self, p: f64) -> Result<Vec<f64>> {
        (0..self.rows).map(|i| lp_norm(self.row(i), p)).collect()
    }

    pub fn column_norms(&self, p: f64) -> Result<Vec<f64>> {
        (0..self.cols).map(|j| lp_norm(&self.column(j), p)).collect()
    }

    pub fn frobenius(&self) -> f64 {
        frobenius_sq(self).sqrt()
    }

    /// Keeps the listed rows, in the listed order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<DenseMatrix> {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &i in rows {
            if i >= self.rows {
                return Err(RipError::Index {
                    index: i,
                    range: self.rows,
                });
            }
            data.extend_from_slice(self.row(i));
        }
        Ok(DenseMatrix {
            rows: rows.len(),
            cols: self.cols,
            data,
        })
    }

    /// Keeps the listed columns, in the listed order.
    pub fn select_cols(&self, cols: &[usize]) -> Result<DenseMatrix> {
        if let Some(&j) = cols.iter().find(|&&j| j >= self.cols) {
            return Err(RipError::Index {
                index: j,
                range: self.cols,
            });
        }
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for i in 0..self.rows {
            let row = self.row(i);
            data.extend(cols.iter().map(|&j| row[j]));
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols: cols.len(),
            data,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    /// Bytes hashed by the report digest: rows and cols as little-endian
    /// u64, then every entry's IEEE-754 bit pattern, little-endian, row-major.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 8 * self.data.len());
        out.extend_from_slice(&(self.rows as u64).to_le_bytes());
        out.extend_from_slice(&(self.cols as u64).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_bits().to_le_bytes());
        }
        out
    }
}

/// Strictly increasing set of 0-based indices below `range`.
#[derive(Debug, Clone, PartialEq, Eq, Default, serde::Serialize)]
pub struct IndexSet {
    indices: Vec<usize>,
    range: usize,
}

impl IndexSet {
    /// Sorts and deduplicates; rejects indices `>= range`.
    pub fn new(mut indices: Vec<usize>, range: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if let Some(&last) = indices.last() {
            if last >= range {
                return Err(RipError::Index { index: last, range });
            }
        }
        Ok(Self { indices, range })
    }

    pub fn empty(range: usize) -> Self {
        Self {
            indices: Vec::new(),
            range,
        }
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// Indices in `0..range` not in the set.
    pub fn complement(&self) -> Vec<usize> {
        (0..self.range).filter(|i| !self.contains(*i)).collect()
    }
}

/// `(sum |x_i|^p)^(1/p)`, or `max |x_i|` when `p` is [`INF_NORM`].
pub fn lp_norm(x: &[f64], p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(RipError::domain(format!("lp norm needs p >= 1, got {p}")));
    }
    Ok(lp_norm_unchecked(x, p))
}

pub(crate) fn lp_norm_unchecked(x: &[f64], p: f64) -> f64 {
    if p == INF_NORM {
        x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    } else if p == 1.0 {
        x.iter().map(|v| v.abs()).sum()
    } else if p == 2.0 {
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    } else {
        // Scaling by the max keeps 1-sparse vectors exact and avoids overflow.
        let m = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if m == 0.0 {
            return 0.0;
        }
        m * x.iter().map(|v| (v.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// `sum |x_i|^p` without the outer root.
pub(crate) fn lp_norm_pow(x: &[f64], p: f64) -> f64 {
    if p == 2.0 {
        x.iter().map(|v| v * v).sum()
    } else if p == 1.0 {
        x.iter().map(|v| v.abs()).sum()
    } else {
        x.iter().map(|v| v.abs().powf(p)).sum()
    }
}

pub fn frobenius_sq(a: &DenseMatrix) -> f64 {
    a.data.iter().map(|v| v * v).sum()
}

/// Exact `l1 -> l1` operator norm: the largest column absolute sum.
pub fn op_norm_l1(b: &DenseMatrix) -> f64 {
    let mut sums = vec![0.0; b.cols];
    for i in 0..b.rows {
        for (s, v) in sums.iter_mut().zip(b.row(i)) {
            *s += v.abs();
        }
    }
    sums.into_iter().fold(0.0, f64::max)
}

/// `A` without the rows in `remove_rows` and the columns in `remove_cols`.
/// Surviving rows and columns keep their relative order.
pub fn remove_rows_cols(
    a: &DenseMatrix,
    remove_rows: &IndexSet,
    remove_cols: &IndexSet,
) -> Result<DenseMatrix> {
    for (set, range) in [(remove_rows, a.rows), (remove_cols, a.cols)] {
        if let Some(&last) = set.as_slice().last() {
            if last >= range {
                return Err(RipError::Index { index: last, range });
            }
        }
    }
    let keep_rows: Vec<usize> = (0..a.rows).filter(|i| !remove_rows.contains(*i)).collect();
    let keep_cols: Vec<usize> = (0..a.cols).filter(|j| !remove_cols.contains(*j)).collect();
    a.select_rows(&keep_rows)?.select_cols(&keep_cols)
}

pub fn scale(a: &DenseMatrix, c: f64) -> DenseMatrix {
    DenseMatrix {
        rows: a.rows,
        cols: a.cols,
        data: a.data.iter().map(|v| v * c).collect(),
    }
}

/// Rescales `a` so that its Frobenius norm equals `target`; returns the
/// rescaled matrix and the factor applied.
pub fn normalize_frobenius(a: &DenseMatrix, target: f64) -> Result<(DenseMatrix, f64)> {
    let fro = a.frobenius();
    if fro == 0.0 {
        return Err(RipError::degenerate("cannot normalize the zero matrix"));
    }
    let factor = target / fro;
    if factor == 1.0 {
        return Ok((a.clone(), 1.0));
    }
    Ok((scale(a, factor), factor))
}

/// Rescales to `||A||_F = sqrt(n)`, the normalization every ARIP bound assumes.
pub fn normalize_sqrt_n(a: &DenseMatrix) -> Result<(DenseMatrix, f64)> {
    normalize_frobenius(a, (a.cols as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn lp_norm_examples() {
        assert_eq!(lp_norm(&[3.0, 4.0], 2.0).unwrap(), 5.0);
        assert_eq!(lp_norm(&[1.0; 4], 1.0).unwrap(), 4.0);
        assert_relative_eq!(
            lp_norm(&[1.0, -1.0, 2.0], 3.0).unwrap(),
            2.154434690031884,
            max_relative = 1e-12
        );
        assert_eq!(lp_norm(&[1.0, -7.0, 2.0], INF_NORM).unwrap(), 7.0);
        assert!(matches!(lp_norm(&[1.0], 0.5), Err(RipError::Domain(_))));
    }

    #[test]
    fn frobenius_examples() {
        assert_eq!(frobenius_sq(&DenseMatrix::identity(2)), 2.0);
        assert_eq!(frobenius_sq(&m(&[&[1.0, 1.0], &[0.0, 1.0]])), 3.0);
        let ones = DenseMatrix::new(3, 4, vec![1.0; 12]).unwrap();
        assert_eq!(frobenius_sq(&ones), 12.0);
    }

    #[test]
    fn op_norm_l1_examples() {
        assert_eq!(op_norm_l1(&DenseMatrix::identity(5)), 1.0);
        assert_eq!(op_norm_l1(&m(&[&[1.0, 2.0], &[3.0, 4.0]])), 6.0);
        assert_eq!(op_norm_l1(&DenseMatrix::new(4, 4, vec![1.0; 16]).unwrap()), 4.0);
    }

    #[test]
    fn op_norm_l1_matches_signed_basis_probe() {
        // max over basis vectors e_j and their negatives of ||B x||_1 / ||x||_1
        let b = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let mut best = 0.0_f64;
        for j in 0..2 {
            for s in [-1.0, 1.0] {
                let mut x = vec![0.0; 2];
                x[j] = s;
                best = best.max(lp_norm(&b.matvec(&x).unwrap(), 1.0).unwrap());
            }
        }
        assert_eq!(best, 6.0);
    }

    #[test]
    fn remove_rows_cols_examples() {
        let i3 = DenseMatrix::identity(3);
        let r = remove_rows_cols(&i3, &IndexSet::new(vec![0], 3).unwrap(), &IndexSet::empty(3)).unwrap();
        assert_eq!(r, m(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]));

        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(
            remove_rows_cols(&a, &IndexSet::empty(2), &IndexSet::empty(2)).unwrap(),
            a
        );
        let r = remove_rows_cols(
            &a,
            &IndexSet::new(vec![1], 2).unwrap(),
            &IndexSet::new(vec![0], 2).unwrap(),
        )
        .unwrap();
        assert_eq!(r, m(&[&[2.0]]));
    }

    #[test]
    fn remove_out_of_range_is_index_error() {
        let a = DenseMatrix::identity(2);
        let bad = IndexSet::new(vec![4], 5).unwrap();
        assert!(matches!(
            remove_rows_cols(&a, &bad, &IndexSet::empty(2)),
            Err(RipError::Index { index: 4, range: 2 })
        ));
        assert!(IndexSet::new(vec![0, 3], 3).is_err());
    }

    #[test]
    fn normalize_examples() {
        let (n, f) = normalize_frobenius(&DenseMatrix::identity(2), 2f64.sqrt()).unwrap();
        assert_relative_eq!(f, 1.0, max_relative = 1e-15);
        assert_eq!(n, DenseMatrix::identity(2));

        let (n, f) = normalize_frobenius(&scale(&DenseMatrix::identity(2), 2.0), 2f64.sqrt()).unwrap();
        assert_relative_eq!(f, 0.5, max_relative = 1e-15);
        assert_relative_eq!(n.get(0, 0), 1.0, max_relative = 1e-15);

        let (_, f) = normalize_frobenius(&m(&[&[1.0, 1.0], &[0.0, 1.0]]), 2f64.sqrt()).unwrap();
        assert_relative_eq!(f, (2.0f64 / 3.0).sqrt(), max_relative = 1e-15);

        assert!(matches!(
            normalize_frobenius(&DenseMatrix::zeros(2, 2), 1.0),
            Err(RipError::Degenerate(_))
        ));
    }

    #[test]
    fn rejects_non_finite_and_bad_shape() {
        assert!(DenseMatrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(DenseMatrix::new(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn row_and_column_views_agree() {
        let a = DenseMatrix::from_fn(3, 4, |i, j| (i * 10 + j) as f64).unwrap();
        for i in 0..3 {
            for j in 0..4 {
                assert_eq!(a.row(i)[j], a.get(i, j));
                assert_eq!(a.column(j)[i], a.get(i, j));
            }
        }
        assert_eq!(a.transpose().transpose(), a);
    }
}
