//! Seeded random matrix ensembles.
//!
//! Each kind implements [`Ensemble`] and is looked up by name in an
//! [`EnsembleRegistry`], so configs and the CLI select generators by string.
//! Entries are unnormalized (`+-1` or standard Gaussian); callers rescale with
//! [`normalize_frobenius`](crate::matcore::normalize_frobenius).

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RipError};
use crate::matcore::DenseMatrix;
use crate::rng::substream;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EnsembleSpec {
    /// Registered ensemble name, e.g. `columnRegular`.
    pub kind: String,
    pub m: usize,
    pub n: usize,
    /// Nonzeros per column (`columnRegular`) or per row (`rowRegular`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sparsity: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(kind: &str, m: usize, n: usize, sparsity: Option<usize>, seed: u64) -> Self {
        Self {
            kind: kind.to_string(),
            m,
            n,
            sparsity,
            seed,
        }
    }
}

pub trait Ensemble: Send + Sync {
    fn name(&self) -> &'static str;

    fn description(&self) -> &'static str;

    fn validate(&self, spec: &EnsembleSpec) -> Result<()> {
        check_dims(spec)
    }

    /// Must be a pure function of `spec`.
    fn sample(&self, spec: &EnsembleSpec) -> DenseMatrix;
}

fn check_dims(spec: &EnsembleSpec) -> Result<()> {
    if spec.m == 0 || spec.n == 0 {
        return Err(RipError::domain(format!("dimensions must be positive, got {}x{}", spec.m, spec.n)));
    }
    Ok(())
}

fn random_sign<R: Rng>(rng: &mut R) -> f64 {
    if rng.random_bool(0.5) {
        1.0
    } else {
        -1.0
    }
}

/// Builds an `m x n` matrix column by column, column `j` drawn from
/// substream `j`.
fn by_columns(spec: &EnsembleSpec, fill: impl Fn(&mut rand_chacha::ChaCha8Rng, &mut [f64]) + Sync) -> DenseMatrix {
    let columns: Vec<Vec<f64>> = (0..spec.n)
        .into_par_iter()
        .map(|j| {
            let mut rng = substream(spec.seed, j as u64);
            let mut col = vec![0.0; spec.m];
            fill(&mut rng, &mut col);
            col
        })
        .collect();
    DenseMatrix::from_fn(spec.m, spec.n, |i, j| columns[j][i]).expect("finite entries")
}

pub struct DenseRademacher;

impl Ensemble for DenseRademacher {
    fn name(&self) -> &'static str {
        "denseRademacher"
    }

    fn description(&self) -> &'static str {
        "i.i.d. +-1 entries"
    }

    fn sample(&self, spec: &EnsembleSpec) -> DenseMatrix {
        by_columns(spec, |rng, col| col.iter_mut().for_each(|v| *v = random_sign(rng)))
    }
}

pub struct DenseGaussian;

impl Ensemble for DenseGaussian {
    fn name(&self) -> &'static str {
        "denseGaussian"
    }

    fn description(&self) -> &'static str {
        "i.i.d. standard Gaussian entries"
    }

    fn sample(&self, spec: &EnsembleSpec) -> DenseMatrix {
        by_columns(spec, |rng, col| {
            col.iter_mut().for_each(|v| *v = rng.sample(StandardNormal))
        })
    }
}

pub struct ColumnRegular;

impl Ensemble for ColumnRegular {
    fn name(&self) -> &'static str {
        "columnRegular"
    }

    fn description(&self) -> &'static str {
        "exactly c random +-1 entries per column"
    }

    fn validate(&self, spec: &EnsembleSpec) -> Result<()> {
        check_dims(spec)?;
        match spec.sparsity {
            Some(c) if c >= 1 && c <= spec.m => Ok(()),
            Some(c) => Err(RipError::domain(format!("column sparsity c={c} must lie in 1..={}", spec.m))),
            None => Err(RipError::domain("columnRegular needs a sparsity")),
        }
    }

    fn sample(&self, spec: &EnsembleSpec) -> DenseMatrix {
        let c = spec.sparsity.unwrap_or(1);
        by_columns(spec, |rng, col| {
            for i in sample(rng, spec.m, c).into_vec() {
                col[i] = random_sign(rng);
            }
        })
    }
}

pub struct RowRegular;

impl Ensemble for RowRegular {
    fn name(&self) -> &'static str {
        "rowRegular"
    }

    fn description(&self) -> &'static str {
        "exactly s random +-1 entries per row"
    }

    fn validate(&self, spec: &EnsembleSpec) -> Result<()> {
        check_dims(spec)?;
        match spec.sparsity {
            Some(s) if s >= 1 && s <= spec.n => Ok(()),
            Some(s) => Err(RipError::domain(format!("row sparsity s={s} must lie in 1..={}", spec.n))),
            None => Err(RipError::domain("rowRegular needs a sparsity")),
        }
    }

    fn sample(&self, spec: &EnsembleSpec) -> DenseMatrix {
        let s = spec.sparsity.unwrap_or(1);
        let rows: Vec<Vec<f64>> = (0..spec.m)
            .into_par_iter()
            .map(|i| {
                let mut rng = substream(spec.seed, i as u64);
                let mut row = vec![0.0; spec.n];
                for j in sample(&mut rng, spec.n, s).into_vec() {
                    row[j] = random_sign(&mut rng);
                }
                row
            })
            .collect();
        DenseMatrix::from_rows(&rows).expect("finite entries")
    }
}

pub struct EnsembleRegistry {
    ensembles: BTreeMap<&'static str, Box<dyn Ensemble>>,
}

impl Default for EnsembleRegistry {
    fn default() -> Self {
        let mut reg = Self {
            ensembles: BTreeMap::new(),
        };
        reg.register(Box::new(DenseRademacher));
        reg.register(Box::new(DenseGaussian));
        reg.register(Box::new(ColumnRegular));
        reg.register(Box::new(RowRegular));
        reg
    }
}

impl EnsembleRegistry {
    pub fn register(&mut self, ensemble: Box<dyn Ensemble>) {
        self.ensembles.insert(ensemble.name(), ensemble);
    }

    pub fn get(&self, name: &str) -> Option<&dyn Ensemble> {
        self.ensembles.get(name).map(|e| e.as_ref())
    }

    /// `(name, description)` pairs in name order.
    pub fn list(&self) -> Vec<(&'static str, &'static str)> {
        self.ensembles.values().map(|e| (e.name(), e.description())).collect()
    }

    pub fn generate(&self, spec: &EnsembleSpec) -> Result<DenseMatrix> {
        let ensemble = self.get(&spec.kind).ok_or_else(|| {
            let known: Vec<_> = self.ensembles.keys().collect();
            RipError::domain(format!("unknown ensemble '{}', known: {known:?}", spec.kind))
        })?;
        ensemble.validate(spec)?;
        Ok(ensemble.sample(spec))
    }
}

/// Generates with the default registry.
pub fn generate(spec: &EnsembleSpec) -> Result<DenseMatrix> {
    EnsembleRegistry::default().generate(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::frobenius_sq;

    fn nnz_col(a: &DenseMatrix, j: usize) -> usize {
        a.column(j).iter().filter(|v| **v != 0.0).count()
    }

    #[test]
    fn full_column_sparsity_is_dense_signs() {
        let a = generate(&EnsembleSpec::new("columnRegular", 8, 8, Some(8), 1)).unwrap();
        assert!(a.as_slice().iter().all(|v| v.abs() == 1.0));
    }

    #[test]
    fn column_counts_exact_for_many_seeds() {
        for seed in 0..100 {
            let a = generate(&EnsembleSpec::new("columnRegular", 12, 20, Some(3), seed)).unwrap();
            for j in 0..20 {
                assert_eq!(nnz_col(&a, j), 3);
            }
            assert!(a.as_slice().iter().all(|v| *v == 0.0 || v.abs() == 1.0));
        }
    }

    #[test]
    fn row_counts_exact() {
        for seed in 0..20 {
            let a = generate(&EnsembleSpec::new("rowRegular", 10, 30, Some(4), seed)).unwrap();
            for i in 0..10 {
                assert_eq!(a.row(i).iter().filter(|v| **v != 0.0).count(), 4);
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        for kind in ["denseRademacher", "denseGaussian", "columnRegular", "rowRegular"] {
            let spec = EnsembleSpec::new(kind, 9, 13, Some(3), 42);
            let a = generate(&spec).unwrap();
            let b = generate(&spec).unwrap();
            assert_eq!(a.canonical_bytes(), b.canonical_bytes());
            let c = generate(&EnsembleSpec { seed: 43, ..spec }).unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn gaussian_frobenius_concentrates() {
        for seed in 0..20 {
            let a = generate(&EnsembleSpec::new("denseGaussian", 64, 128, None, seed)).unwrap();
            let f = frobenius_sq(&a);
            assert!((f / (64.0 * 128.0) - 1.0).abs() < 0.05, "seed {seed}: {f}");
        }
    }

    #[test]
    fn rademacher_mean_near_zero() {
        let a = generate(&EnsembleSpec::new("denseRademacher", 64, 64, None, 5)).unwrap();
        let mean: f64 = a.as_slice().iter().sum::<f64>() / 4096.0;
        assert!(mean.abs() <= 4.0 / 64.0);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(generate(&EnsembleSpec::new("columnRegular", 4, 8, Some(5), 0)).is_err());
        assert!(generate(&EnsembleSpec::new("columnRegular", 4, 8, None, 0)).is_err());
        assert!(generate(&EnsembleSpec::new("rowRegular", 4, 8, Some(9), 0)).is_err());
        assert!(generate(&EnsembleSpec::new("nope", 4, 8, None, 0)).is_err());
        assert!(generate(&EnsembleSpec::new("denseGaussian", 0, 8, None, 0)).is_err());
    }

    #[test]
    fn registry_lists_all_kinds() {
        let names: Vec<_> = EnsembleRegistry::default().list().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names, vec!["columnRegular", "denseGaussian", "denseRademacher", "rowRegular"]);
    }
}
