//! Spectral machinery for the Gram matrix `B = A^T A`.
//!
//! `e^{-tB}` is only ever applied to basis vectors through the
//! eigendecomposition; it is never formed as a matrix.

use faer::{Mat, Side};

use crate::error::{Result, RipError};
use crate::matcore::{frobenius_sq, DenseMatrix};

/// Relative rank threshold on Gram eigenvalues.
pub const RANK_REL_TOL: f64 = 1e-10;
/// Absolute floor for the rank threshold, so the zero matrix has rank 0.
pub const RANK_ABS_TOL: f64 = 1e-12;

/// Decompositions whose reconstruction residual exceeds this (relative to
/// `max(1, ||B||_F)`) are rejected.
pub const RECONSTRUCTION_TOL: f64 = 1e-8;

/// `A^T A`, accumulated row by row as outer products over the nonzeros of
/// each row, so sparse inputs cost `sum_i nnz(row_i)^2`.
pub fn gram(a: &DenseMatrix) -> DenseMatrix {
    let n = a.cols();
    let mut data = vec![0.0; n * n];
    let mut nz: Vec<(usize, f64)> = Vec::with_capacity(n);
    for i in 0..a.rows() {
        nz.clear();
        nz.extend(
            a.row(i)
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(j, v)| (j, *v)),
        );
        for &(j, vj) in &nz {
            let out = &mut data[j * n..(j + 1) * n];
            for &(l, vl) in &nz {
                out[l] += vj * vl;
            }
        }
    }
    DenseMatrix::new(n, n, data).expect("gram of finite matrix is finite")
}

/// Sorted eigendecomposition of a symmetric positive semi-definite matrix.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    /// Non-increasing, clamped to be non-negative.
    eigenvalues: Vec<f64>,
    /// Column `j` is the unit eigenvector for `eigenvalues[j]`.
    eigenvectors: DenseMatrix,
    rank: usize,
    rank_tolerance: f64,
    residual: f64,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `n x n` matrix whose columns are the eigenvectors.
    pub fn eigenvectors(&self) -> &DenseMatrix {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, j: usize) -> Vec<f64> {
        self.eigenvectors.column(j)
    }

    pub fn rank_tolerance(&self) -> f64 {
        self.rank_tolerance
    }

    /// `||V diag(lambda) V^T - B||_F` measured at construction.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// `r / n`.
    pub fn alpha(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        self.rank as f64 / self.dim() as f64
    }

    /// Diagonal of the kernel projector, `Pi_ii = sum_{j >= r} V_ij^2`,
    /// without forming the projector.
    pub fn kernel_diagonal(&self) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                self.eigenvectors.row(i)[self.rank..]
                    .iter()
                    .map(|v| v * v)
                    .sum()
            })
            .collect()
    }
}

/// Symmetric eigendecomposition. The input is symmetrized as `(B + B^T)/2`
/// before solving.
pub fn eigh(b: &DenseMatrix) -> Result<EigenSystem> {
    let n = b.rows();
    if b.cols() != n {
        return Err(RipError::Shape(format!("eigh needs a square matrix, got {}x{}", n, b.cols())));
    }
    if n == 0 {
        return Ok(EigenSystem {
            eigenvalues: Vec::new(),
            eigenvectors: DenseMatrix::zeros(0, 0),
            rank: 0,
            rank_tolerance: RANK_ABS_TOL,
            residual: 0.0,
        });
    }
    let sym = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (b.get(i, j) + b.get(j, i)));
    let evd = sym
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| RipError::Spectral {
            reason: format!("{e:?}"),
            residual: f64::NAN,
        })?;
    let s = evd.S().column_vector();
    let u = evd.U();

    // faer returns ascending order; flip to non-increasing.
    let order: Vec<usize> = (0..n).rev().collect();
    let eigenvalues: Vec<f64> = order.iter().map(|&j| s[j].max(0.0)).collect();
    let eigenvectors = DenseMatrix::from_fn(n, n, |i, j| u[(i, order[j])])?;

    let scaled = Mat::<f64>::from_fn(n, n, |i, j| u[(i, order[j])] * eigenvalues[j]);
    let vecs = Mat::<f64>::from_fn(n, n, |i, j| u[(i, order[j])]);
    let recon = &scaled * vecs.transpose();
    let mut residual_sq = 0.0;
    for i in 0..n {
        for j in 0..n {
            let d = recon[(i, j)] - sym[(i, j)];
            residual_sq += d * d;
        }
    }
    let residual = residual_sq.sqrt();
    let scale = frobenius_sq(b).sqrt().max(1.0);
    if !(residual <= RECONSTRUCTION_TOL * scale) {
        return Err(RipError::Spectral {
            reason: "reconstruction residual above tolerance".into(),
            residual,
        });
    }

    let lambda_max = eigenvalues[0];
    let rank_tolerance = (RANK_REL_TOL * lambda_max).max(RANK_ABS_TOL);
    let rank = eigenvalues.iter().filter(|&&l| l > rank_tolerance).count();
    Ok(EigenSystem {
        eigenvalues,
        eigenvectors,
        rank,
        rank_tolerance,
        residual,
    })
}

/// Number of eigenvalues strictly above `max(1e-10 lambda_1, 1e-12)`.
pub fn numeric_rank(e: &EigenSystem) -> usize {
    e.rank
}

/// Non-increasing eigenvalues of a small symmetric matrix, no vectors.
pub fn sym_eigenvalues(b: &DenseMatrix) -> Result<Vec<f64>> {
    let n = b.rows();
    match n {
        0 => Ok(Vec::new()),
        1 => Ok(vec![b.get(0, 0)]),
        2 => {
            let (p, q, r) = (b.get(0, 0), 0.5 * (b.get(0, 1) + b.get(1, 0)), b.get(1, 1));
            let mean = 0.5 * (p + r);
            let rad = (0.25 * (p - r) * (p - r) + q * q).sqrt();
            Ok(vec![mean + rad, mean - rad])
        }
        _ => {
            let sym = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (b.get(i, j) + b.get(j, i)));
            let mut vals = sym
                .self_adjoint_eigenvalues(Side::Lower)
                .map_err(|e| RipError::Spectral {
                    reason: format!("{e:?}"),
                    residual: f64::NAN,
                })?;
            vals.reverse();
            Ok(vals)
        }
    }
}

/// Orthogonal projection onto `ker(B)`, kept in factored form
/// `Pi = K K^T` with `K` the trailing `n - r` eigenvectors.
#[derive(Debug, Clone)]
pub struct KernelProjector {
    dim: usize,
    basis: DenseMatrix,
}

impl KernelProjector {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kernel_dim(&self) -> usize {
        self.basis.cols()
    }

    /// Full rank input: the projector is zero.
    pub fn is_degenerate(&self) -> bool {
        self.basis.cols() == 0
    }

    /// The dense `n x n` projector.
    pub fn matrix(&self) -> DenseMatrix {
        let n = self.dim;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            let ri = self.basis.row(i);
            for l in i..n {
                let v: f64 = ri.iter().zip(self.basis.row(l)).map(|(a, b)| a * b).sum();
                data[i * n + l] = v;
                data[l * n + i] = v;
            }
        }
        DenseMatrix::new(n, n, data).expect("finite")
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|i| self.basis.row(i).iter().map(|v| v * v).sum())
            .collect()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let coeffs = self.basis.transpose().matvec(x).expect("dimension checked by caller");
        self.basis.matvec(&coeffs).expect("dimension")
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }
}

pub fn kernel_projector(e: &EigenSystem) -> KernelProjector {
    let n = e.dim();
    let cols: Vec<usize> = (e.rank..n).collect();
    KernelProjector {
        dim: n,
        basis: e.eigenvectors.select_cols(&cols).expect("in range"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct KernelCoordinate {
    pub index: usize,
    /// `||Pi e_index||_2`.
    pub value: f64,
    pub degenerate: bool,
}

/// The coordinate with the heaviest kernel component, smallest index on ties.
pub fn max_kernel_coordinate(p: &KernelProjector) -> KernelCoordinate {
    argmax_kernel_diagonal(&p.diagonal(), p.is_degenerate())
}

/// Entries within this relative distance of the maximum count as tied.
const TIE_TOL: f64 = 1e-12;

pub(crate) fn argmax_kernel_diagonal(diag: &[f64], degenerate: bool) -> KernelCoordinate {
    let best = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cutoff = best - TIE_TOL * best.abs().max(1.0);
    let index = diag.iter().position(|&d| d >= cutoff).unwrap_or(0);
    KernelCoordinate {
        index,
        value: diag.get(index).copied().unwrap_or(0.0).max(0.0).sqrt(),
        degenerate,
    }
}

/// `e^{-tB} e_i = sum_j e^{-t lambda_j} <e_i, v_j> v_j`.
pub fn exp_action(e: &EigenSystem, t: f64, i: usize) -> Result<Vec<f64>> {
    if t.is_nan() || t < 0.0 {
        return Err(RipError::domain(format!("exp_action needs t >= 0, got {t}")));
    }
    let n = e.dim();
    if i >= n {
        return Err(RipError::Index { index: i, range: n });
    }
    let weights: Vec<f64> = e
        .eigenvectors
        .row(i)
        .iter()
        .zip(&e.eigenvalues)
        .map(|(a, l)| (-t * l).exp() * a)
        .collect();
    e.eigenvectors.matvec(&weights)
}
