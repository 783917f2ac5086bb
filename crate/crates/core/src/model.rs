//! Regression data model: evaluated dictionaries, responses, coefficient
//! vectors, empirical norms and Gram matrices.
//!
//! Design points never appear here. Every quantity is expressed through the
//! evaluations `values[i][j] = phi_j(x_i)`, which is all the estimators and
//! bounds consume.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `n x M` matrix of evaluations of `M` functions at `n` design points.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatedDictionary {
    values: Array2<f64>,
}

impl EvaluatedDictionary {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let (n, m) = values.dim();
        if n == 0 || m == 0 {
            return Err(Error::invalid(format!(
                "dictionary must have at least one row and one column, got {n}x{m}"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("dictionary entries must be finite"));
        }
        Ok(Self { values })
    }

    /// Builds a dictionary from row-major nested vectors (one inner vector per design point).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::invalid("dictionary rows have unequal lengths"));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let values = Array2::from_shape_vec((n, m), flat)
            .map_err(|e| Error::invalid(format!("bad dictionary shape: {e}")))?;
        Self::new(values)
    }

    /// Builds a dictionary whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let m = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::invalid("dictionary columns have unequal lengths"));
        }
        let values = Array2::from_shape_fn((n, m), |(i, j)| columns[j][i]);
        Self::new(values)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn m(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, f64> {
        self.values.column(j)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.values.outer_iter().map(|r| r.to_vec()).collect()
    }

    /// Copy with column `j` negated.
    pub fn with_negated_column(&self, j: usize) -> Self {
        let mut values = self.values.clone();
        values.column_mut(j).mapv_inplace(|v| -v);
        Self { values }
    }
}

fn check_finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} entries must be finite")))
    }
}

/// Observation (or truth) vector of length `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResponseVector(Vec<f64>);

impl ResponseVector {
    pub fn new(y: Vec<f64>) -> Result<Self> {
        check_finite(&y, "response")?;
        Ok(Self(y))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn view(&self) -> ArrayView1<'_, f64> {
        ArrayView1::from(&self.0[..])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Coefficient vector `lambda` of length `M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoefVector(Vec<f64>);

impl CoefVector {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        check_finite(&lambda, "coefficient")?;
        Ok(Self(lambda))
    }

    pub fn zeros(m: usize) -> Self {
        Self(vec![0.0; m])
    }

    pub fn unit(m: usize, j: usize) -> Self {
        let mut v = vec![0.0; m];
        v[j] = 1.0;
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn view(&self) -> ArrayView1<'_, f64> {
        ArrayView1::from(&self.0[..])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn l2_norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Empirical Gram matrix `Phi = X^T X / n` of a dictionary.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub phi: Array2<f64>,
    pub trace: f64,
}

impl GramMatrix {
    /// Largest squared empirical column norm, `max_j Phi_jj`.
    pub fn max_diag(&self) -> f64 {
        self.phi.diag().iter().copied().fold(0.0, f64::max)
    }
}

/// Support, sparsity index and l1 norm of a coefficient vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsityStats {
    /// Zero-based indices of the nonzero coefficients.
    pub support: Vec<usize>,
    pub m_lambda: usize,
    pub l1: f64,
}

/// `(1/n) * sum v_i^2`.
pub fn empirical_norm_sq(v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::invalid("empirical norm of an empty vector"));
    }
    check_finite(v, "vector")?;
    Ok(v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64)
}

/// Squared empirical distance `||a - b||_n^2`.
pub fn empirical_dist_sq(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            context: "empirical distance",
            expected: a.len(),
            got: b.len(),
        });
    }
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    empirical_norm_sq(&diff)
}

/// `f_lambda = X lambda` evaluated at the design points.
pub fn predict(dict: &EvaluatedDictionary, lambda: &CoefVector) -> Result<Array1<f64>> {
    if lambda.len() != dict.m() {
        return Err(Error::DimensionMismatch {
            context: "predict",
            expected: dict.m(),
            got: lambda.len(),
        });
    }
    Ok(dict.values().dot(&lambda.view()))
}

pub fn gram(dict: &EvaluatedDictionary) -> GramMatrix {
    let x = dict.values();
    let n = dict.n() as f64;
    let mut phi = x.t().dot(x) / n;
    // Enforce exact symmetry; the BLAS-free product is already symmetric up to rounding.
    let m = dict.m();
    for j in 0..m {
        for k in (j + 1)..m {
            let avg = 0.5 * (phi[[j, k]] + phi[[k, j]]);
            phi[[j, k]] = avg;
            phi[[k, j]] = avg;
        }
    }
    let trace = phi.diag().sum();
    GramMatrix { phi, trace }
}

/// Exact-zero support test: `lambda_j` is in the support iff it is not `0.0`.
pub fn sparsity_stats(lambda: &CoefVector) -> SparsityStats {
    let support: Vec<usize> = lambda
        .as_slice()
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(j, _)| j)
        .collect();
    let l1 = lambda.as_slice().iter().map(|v| v.abs()).sum();
    SparsityStats {
        m_lambda: support.len(),
        support,
        l1,
    }
}

/// Squared empirical norms of each column, `||phi_j||_n^2`.
pub fn column_norms_sq(dict: &EvaluatedDictionary) -> Vec<f64> {
    let n = dict.n() as f64;
    dict.values()
        .axis_iter(Axis(1))
        .map(|c| c.iter().map(|v| v * v).sum::<f64>() / n)
        .collect()
}
