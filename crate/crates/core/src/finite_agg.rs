//! Exact exponentially weighted aggregation over a finite candidate set.
//!
//! Candidates are the columns of an [`EvaluatedDictionary`]. The weight of
//! candidate `j` is proportional to `pi_j * exp(-n * loss_j / beta)` with
//! `loss_j = ||y - f_j||_n^2`; the aggregate is the weighted average of the
//! columns.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{empirical_norm_sq, EvaluatedDictionary, ResponseVector};

/// Probability vector over a finite candidate set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    /// Validates nonnegativity and `sum == 1` within `1e-12`.
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::invalid("weight vector must be non-empty"));
        }
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("weights must be finite and nonnegative"));
        }
        let total: f64 = w.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("weights sum to {total}, not 1")));
        }
        Ok(Self(w))
    }

    pub fn uniform(m: usize) -> Self {
        Self(vec![1.0 / m as f64; m])
    }

    pub fn dirac(m: usize, j: usize) -> Self {
        let mut w = vec![0.0; m];
        w[j] = 1.0;
        Self(w)
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

    pub fn argmax(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (j, &w)| if w > best.1 { (j, w) } else { best })
            .0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregationConfig {
    pub beta: f64,
    pub prior: WeightVector,
}

impl AggregationConfig {
    /// Uniform prior over `m` candidates.
    pub fn uniform(beta: f64, m: usize) -> Result<Self> {
        Self::new(beta, WeightVector::uniform(m))
    }

    pub fn new(beta: f64, prior: WeightVector) -> Result<Self> {
        if !(beta > 0.0) || beta.is_nan() {
            return Err(Error::invalid(format!("temperature must be positive, got {beta}")));
        }
        Ok(Self { beta, prior })
    }
}

/// `loss_j = ||y - column_j||_n^2` for each candidate.
pub fn losses(dict: &EvaluatedDictionary, y: &ResponseVector) -> Result<Vec<f64>> {
    if y.len() != dict.n() {
        return Err(Error::DimensionMismatch {
            context: "losses",
            expected: dict.n(),
            got: y.len(),
        });
    }
    let ys = y.as_slice();
    (0..dict.m())
        .map(|j| {
            let resid: Vec<f64> = dict.column(j).iter().zip(ys).map(|(f, y)| y - f).collect();
            empirical_norm_sq(&resid)
        })
        .collect()
}

/// Exponential weights, computed in the log domain with max subtraction.
///
/// Candidates with zero prior mass or infinite loss get weight zero; if no
/// candidate is left the input is degenerate.
pub fn exp_weights(losses: &[f64], cfg: &AggregationConfig, n: usize) -> Result<WeightVector> {
    if losses.len() != cfg.prior.len() {
        return Err(Error::DimensionMismatch {
            context: "exp_weights",
            expected: cfg.prior.len(),
            got: losses.len(),
        });
    }
    if losses.iter().any(|l| l.is_nan()) {
        return Err(Error::invalid("losses must not be NaN"));
    }
    let scale = n as f64 / cfg.beta;
    let log_w: Vec<f64> = losses
        .iter()
        .zip(cfg.prior.as_slice())
        .map(|(&loss, &p)| {
            if p == 0.0 || loss == f64::INFINITY {
                f64::NEG_INFINITY
            } else {
                p.ln() - scale * loss
            }
        })
        .collect();
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::Degenerate(
            "all prior mass sits on candidates with infinite loss".into(),
        ));
    }
    let mut w: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    Ok(WeightVector(w))
}

/// Convex combination `values * w` of the candidate columns.
pub fn aggregate(dict: &EvaluatedDictionary, w: &WeightVector) -> Result<Array1<f64>> {
    if w.len() != dict.m() {
        return Err(Error::DimensionMismatch {
            context: "aggregate",
            expected: dict.m(),
            got: w.len(),
        });
    }
    Ok(dict.values().dot(&Array1::from(w.0.clone())))
}

/// Losses, weights and aggregate in one pass; `n` is taken from the dictionary.
pub fn run_ewa(
    dict: &EvaluatedDictionary,
    y: &ResponseVector,
    cfg: &AggregationConfig,
) -> Result<(Array1<f64>, WeightVector)> {
    let l = losses(dict, y)?;
    let w = exp_weights(&l, cfg, dict.n())?;
    let pred = aggregate(dict, &w)?;
    Ok((pred, w))
}
