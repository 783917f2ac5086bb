use crate::error::{Error, Result};
use crate::model::{empirical_norm_sq, predict, CoefVector, EvaluatedDictionary, ResponseVector};

const MAX_SWEEPS: usize = 10_000;
const COEF_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub coef: CoefVector,
    pub sweeps: usize,
    /// Objective at the start and after each sweep.
    pub objective_trace: Vec<f64>,
}

/// `||y - X lambda||_n^2 + 2 penalty |lambda|_1`.
pub fn lasso_objective(dict: &EvaluatedDictionary, y: &ResponseVector, lambda: &CoefVector, penalty: f64) -> Result<f64> {
    let fit = predict(dict, lambda)?;
    let resid: Vec<f64> = y.as_slice().iter().zip(fit.iter()).map(|(a, b)| a - b).collect();
    let l1: f64 = lambda.as_slice().iter().map(|v| v.abs()).sum();
    Ok(empirical_norm_sq(&resid)? + 2.0 * penalty * l1)
}

fn soft_threshold(x: f64, level: f64) -> f64 {
    if x > level {
        x - level
    } else if x < -level {
        x + level
    } else {
        0.0
    }
}

/// Cyclic coordinate descent from zero; stops when no coordinate moves by
/// more than `1e-10` in a sweep, or after `10^4` sweeps.
pub fn lasso_fit(dict: &EvaluatedDictionary, y: &ResponseVector, penalty: f64) -> Result<LassoFit> {
    if !(penalty >= 0.0 && penalty.is_finite()) {
        return Err(Error::invalid(format!("penalty must be nonnegative, got {penalty}")));
    }
    if y.len() != dict.n() {
        return Err(Error::DimensionMismatch {
            context: "lasso response",
            expected: dict.n(),
            got: y.len(),
        });
    }
    let (n, m) = (dict.n() as f64, dict.m());
    let x = dict.values();
    let a: Vec<f64> = (0..m).map(|j| x.column(j).iter().map(|v| v * v).sum::<f64>() / n).collect();
    let mut lambda = vec![0.0; m];
    let mut resid = y.view().to_owned();
    let mut trace = vec![lasso_objective(dict, y, &CoefVector::zeros(m), penalty)?];
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        let mut max_change: f64 = 0.0;
        for j in 0..m {
            if a[j] == 0.0 {
                continue;
            }
            let col = x.column(j);
            let old = lambda[j];
            let c = col.dot(&resid) / n + a[j] * old;
            let new = soft_threshold(c, penalty) / a[j];
            if new != old {
                resid.scaled_add(old - new, &col);
                lambda[j] = new;
                max_change = max_change.max((new - old).abs());
            }
        }
        sweeps += 1;
        trace.push(lasso_objective(dict, y, &CoefVector::new(lambda.clone())?, penalty)?);
        if max_change < COEF_TOL {
            break;
        }
    }
    Ok(LassoFit {
        coef: CoefVector::new(lambda)?,
        sweeps,
        objective_trace: trace,
    })
}

pub fn lasso_baseline(dict: &EvaluatedDictionary, y: &ResponseVector, penalty: f64) -> Result<CoefVector> {
    Ok(lasso_fit(dict, y, penalty)?.coef)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::truth::trig_dictionary;

    fn orthonormal() -> (EvaluatedDictionary, ResponseVector) {
        let d = trig_dictionary(32, 5).unwrap();
        let y = ResponseVector::new((0..32).map(|i| ((i * 7 % 11) as f64 - 5.0) / 3.0).collect()).unwrap();
        (d, y)
    }

    fn scaled_xty(d: &EvaluatedDictionary, y: &ResponseVector) -> Vec<f64> {
        let n = d.n() as f64;
        d.values().t().dot(&y.view()).iter().map(|v| v / n).collect()
    }

    #[test]
    fn zero_penalty_is_least_squares() {
        let (d, y) = orthonormal();
        let fit = lasso_baseline(&d, &y, 0.0).unwrap();
        for (a, b) in fit.as_slice().iter().zip(scaled_xty(&d, &y)) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn large_penalty_gives_zero() {
        let (d, y) = orthonormal();
        let max = scaled_xty(&d, &y).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert_eq!(lasso_baseline(&d, &y, max).unwrap(), CoefVector::zeros(5));
    }

    #[test]
    fn orthonormal_soft_threshold() {
        let (d, y) = orthonormal();
        let pen = 0.1;
        let fit = lasso_baseline(&d, &y, pen).unwrap();
        for (a, b) in fit.as_slice().iter().zip(scaled_xty(&d, &y)) {
            assert!((a - soft_threshold(b, pen)).abs() < 1e-10);
        }
    }

    #[test]
    fn objective_nonincreasing() {
        let d = EvaluatedDictionary::from_columns(&[
            vec![1.0, 0.9, 0.1, 0.3],
            vec![0.8, 1.0, 0.2, 0.1],
            vec![0.1, 0.3, 1.0, 0.9],
        ])
        .unwrap();
        let y = ResponseVector::new(vec![1.0, 0.5, -0.3, 0.2]).unwrap();
        let fit = lasso_fit(&d, &y, 0.05).unwrap();
        for w in fit.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
    }
}
