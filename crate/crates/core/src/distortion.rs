//! `(l_q, l_p)`-distortion, best k-term approximation, and the two
//! conversions between compressibility and distortion.

use serde::Serialize;

use crate::error::{Result, RipError};
use crate::matcore::lp_norm_unchecked;

/// Vectors with `||x||_p` below this are treated as zero.
pub const DEGENERATE_NORM: f64 = 1e-300;

/// Slack allowed when asserting the proved compressibility bound.
pub const THEOREM_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistortionProfile {
    pub q: f64,
    pub p: f64,
    pub delta: f64,
    pub dim: usize,
    pub support_size: usize,
}

impl DistortionProfile {
    /// `n^{1/q - 1/p}`, the largest possible distortion.
    pub fn upper_bound(&self) -> f64 {
        (self.dim as f64).powf(exponent(self.q, self.p))
    }

    /// `(n / |supp x|)^{1/q - 1/p}`, the floor implied by the support size.
    pub fn support_lower_bound(&self) -> f64 {
        (self.dim as f64 / self.support_size as f64).powf(exponent(self.q, self.p))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompressibilityWitness {
    pub k: usize,
    pub epsilon: f64,
    /// The k-sparse approximant.
    pub y: Vec<f64>,
    pub p: f64,
}

fn exponent(q: f64, p: f64) -> f64 {
    1.0 / q - 1.0 / p
}

fn check_qp(q: f64, p: f64) -> Result<()> {
    if !(q >= 1.0) || !(q < p) {
        return Err(RipError::domain(format!("distortion needs 1 <= q < p, got q={q}, p={p}")));
    }
    Ok(())
}

/// `Delta_{q,p}(x) = ||x||_p n^{1/q-1/p} / ||x||_q`.
pub fn distortion(x: &[f64], q: f64, p: f64) -> Result<DistortionProfile> {
    check_qp(q, p)?;
    let np = lp_norm_unchecked(x, p);
    if !(np >= DEGENERATE_NORM) {
        return Err(RipError::degenerate("distortion of the zero vector"));
    }
    let nq = lp_norm_unchecked(x, q);
    let n = x.len();
    Ok(DistortionProfile {
        q,
        p,
        delta: np * (n as f64).powf(exponent(q, p)) / nq,
        dim: n,
        support_size: x.iter().filter(|v| **v != 0.0).count(),
    })
}

/// `Delta_{1,2}(x) = sqrt(n) ||x||_2 / ||x||_1`; `None` for the zero vector.
pub fn delta12(x: &[f64]) -> Option<f64> {
    let l1: f64 = x.iter().map(|v| v.abs()).sum();
    if l1 == 0.0 {
        return None;
    }
    let l2 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    Some((x.len() as f64).sqrt() * l2 / l1)
}

/// Indices of the `k` largest-magnitude entries, ties to the smallest index.
pub fn top_k_support(x: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    // Stable sort keeps the smaller index first among equal magnitudes.
    order.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()));
    order.truncate(k.min(x.len()));
    order.sort_unstable();
    order
}

/// Keeps the `k` largest-magnitude entries and zeroes the rest; `epsilon`
/// is the relative `l_p` error, which is optimal over all k-sparse vectors.
pub fn best_k_approx(x: &[f64], k: usize, p: f64) -> Result<CompressibilityWitness> {
    if p.is_nan() || p < 1.0 {
        return Err(RipError::domain(format!("best_k_approx needs p >= 1, got {p}")));
    }
    let norm = lp_norm_unchecked(x, p);
    if !(norm >= DEGENERATE_NORM) {
        return Err(RipError::degenerate("best_k_approx of the zero vector"));
    }
    let mut y = vec![0.0; x.len()];
    for i in top_k_support(x, k) {
        y[i] = x[i];
    }
    let tail: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
    Ok(CompressibilityWitness {
        k,
        epsilon: lp_norm_unchecked(&tail, p) / norm,
        y,
        p,
    })
}

/// Lower bound `1 / ((k/n)^{1/q-1/p} + epsilon)` on the distortion of any
/// `(k, epsilon)`-compressible vector.
pub fn compressible_to_distortion_bound(k: usize, n: usize, epsilon: f64, q: f64, p: f64) -> Result<f64> {
    check_qp(q, p)?;
    if k == 0 || k > n {
        return Err(RipError::domain(format!("need 0 < k <= n, got k={k}, n={n}")));
    }
    if !(epsilon >= 0.0) {
        return Err(RipError::domain(format!("need epsilon >= 0, got {epsilon}")));
    }
    Ok(1.0 / ((k as f64 / n as f64).powf(exponent(q, p)) + epsilon))
}

/// The best k-term approximation of `x`, checked against the proved bound
/// `epsilon <= (n/k)^{1/q} / Delta_{q,p}(x)`.
pub fn distortion_to_compressibility(x: &[f64], k: usize, q: f64, p: f64) -> Result<CompressibilityWitness> {
    check_qp(q, p)?;
    let n = x.len();
    if k == 0 || k > n {
        return Err(RipError::domain(format!("need 0 < k <= n, got k={k}, n={n}")));
    }
    let profile = distortion(x, q, p)?;
    let witness = best_k_approx(x, k, p)?;
    let bound = (n as f64 / k as f64).powf(1.0 / q) / profile.delta;
    if witness.epsilon > bound + THEOREM_SLACK {
        return Err(RipError::TheoremViolation(format!(
            "best {k}-term error {} exceeds (n/k)^(1/q)/Delta = {bound}",
            witness.epsilon
        )));
    }
    Ok(witness)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn distortion_examples() {
        let d = distortion(&[1.0, 0.0, 0.0, 0.0], 1.0, 2.0).unwrap();
        assert_relative_eq!(d.delta, 2.0, max_relative = 1e-15);
        assert_relative_eq!(d.delta, d.upper_bound(), max_relative = 1e-15);
        assert_eq!(d.support_size, 1);

        let d = distortion(&[1.0; 4], 1.0, 2.0).unwrap();
        assert_relative_eq!(d.delta, 1.0, max_relative = 1e-15);

        let d = distortion(&[2.0, 1.0, 1.0, 0.0], 1.0, 2.0).unwrap();
        assert_relative_eq!(d.delta, 6f64.sqrt() * 2.0 / 4.0, max_relative = 1e-14);
        assert_relative_eq!(d.delta, 1.224744871391589, max_relative = 1e-12);
    }

    #[test]
    fn distortion_errors() {
        assert!(matches!(distortion(&[0.0; 3], 1.0, 2.0), Err(RipError::Degenerate(_))));
        assert!(matches!(distortion(&[1.0], 2.0, 2.0), Err(RipError::Domain(_))));
        assert!(matches!(distortion(&[1.0], 2.0, 1.5), Err(RipError::Domain(_))));
    }

    #[test]
    fn best_k_examples() {
        let w = best_k_approx(&[3.0, -2.0, 1.0], 1, 2.0).unwrap();
        assert_eq!(w.y, vec![3.0, 0.0, 0.0]);
        assert_relative_eq!(w.epsilon, (5.0f64 / 14.0).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(w.epsilon, 0.597614304667197, max_relative = 1e-12);

        let w = best_k_approx(&[3.0, -2.0, 1.0], 5, 2.0).unwrap();
        assert_eq!(w.epsilon, 0.0);

        for n in [4usize, 9, 16] {
            for k in 0..=n {
                let w = best_k_approx(&vec![1.0; n], k, 2.0).unwrap();
                assert_relative_eq!(
                    w.epsilon,
                    ((n - k) as f64 / n as f64).sqrt(),
                    max_relative = 1e-14,
                    epsilon = 1e-15
                );
            }
        }
    }

    #[test]
    fn ties_go_to_smallest_index() {
        assert_eq!(top_k_support(&[1.0, -1.0, 1.0, 0.5], 2), vec![0, 1]);
        let w = best_k_approx(&[2.0, -2.0, 2.0], 1, 1.0).unwrap();
        assert_eq!(w.y, vec![2.0, 0.0, 0.0]);
    }

    #[test]
    fn compressible_bound_examples() {
        assert_relative_eq!(compressible_to_distortion_bound(8, 8, 0.0, 1.0, 2.0).unwrap(), 1.0);
        assert_relative_eq!(
            compressible_to_distortion_bound(4, 16, 0.0, 1.0, 2.0).unwrap(),
            2.0,
            max_relative = 1e-15
        );
        assert!(compressible_to_distortion_bound(4, 16, 1e12, 1.0, 2.0).unwrap() < 1e-11);
    }

    #[test]
    fn distortion_to_compressibility_examples() {
        let mut e1 = vec![0.0; 16];
        e1[0] = 1.0;
        let w = distortion_to_compressibility(&e1, 1, 1.0, 2.0).unwrap();
        assert_eq!(w.epsilon, 0.0);

        let w = distortion_to_compressibility(&[1.0; 16], 16, 1.0, 2.0).unwrap();
        assert_eq!(w.epsilon, 0.0);
    }

    #[test]
    fn k_sparse_vectors_meet_the_analytic_threshold() {
        let x = [0.0, 3.0, 0.0, -1.0, 0.0, 0.0, 2.0, 0.0];
        let d = delta12(&x).unwrap();
        assert!(d >= (8.0f64 / 3.0).sqrt());
    }
}
