use std::f64::consts::PI;

use ndarray::{Array1, Array2};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{predict, CoefVector, EvaluatedDictionary, ResponseVector};
use crate::seed;

use super::config::TruthSpec;

/// Design, noiseless regression vector, and the generating coefficients when
/// the truth lies in the span of the dictionary.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub dict: EvaluatedDictionary,
    pub f: ResponseVector,
    pub lambda_star: Option<CoefVector>,
}

pub fn generate_truth(spec: &TruthSpec, n: usize, m: usize, rng_seed: u64) -> Result<Truth> {
    if n == 0 || m == 0 {
        return Err(Error::invalid("n and M must be positive"));
    }
    let mut rng = seed::rng(rng_seed);
    match spec {
        TruthSpec::SparseLinear { sparsity } => sparse_linear(n, m, *sparsity, &mut rng),
        TruthSpec::FiniteFamily { distances } => {
            let d = match distances {
                Some(d) => d.clone(),
                None => (0..m).map(|j| 0.2 + 0.1 * j as f64).collect(),
            };
            finite_family(n, &d, &mut rng)
        }
        TruthSpec::TrigBasis { coefficients } => trig_basis(n, m, coefficients.as_deref()),
    }
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Rescales `v` in place to `||v||_n = target`.
fn set_empirical_norm(v: &mut [f64], target: f64) -> Result<()> {
    let norm = (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
    if norm == 0.0 {
        return Err(Error::Degenerate("cannot rescale a zero vector".into()));
    }
    v.iter_mut().for_each(|x| *x *= target / norm);
    Ok(())
}

fn sparse_linear<R: Rng>(n: usize, m: usize, sparsity: usize, rng: &mut R) -> Result<Truth> {
    if sparsity > m {
        return Err(Error::invalid(format!("sparsity {sparsity} exceeds M = {m}")));
    }
    let mut cols = Vec::with_capacity(m);
    for _ in 0..m {
        let mut c: Vec<f64> = (0..n).map(|_| standard_normal(rng)).collect();
        set_empirical_norm(&mut c, 1.0)?;
        cols.push(c);
    }
    let dict = EvaluatedDictionary::from_columns(&cols)?;
    let mut lambda = vec![0.0; m];
    for j in sample(rng, m, sparsity).into_iter() {
        let mag = rng.random_range(0.5..=2.0);
        lambda[j] = if rng.random::<bool>() { mag } else { -mag };
    }
    let lambda = CoefVector::new(lambda)?;
    let f = ResponseVector::new(predict(&dict, &lambda)?.to_vec())?;
    Ok(Truth {
        dict,
        f,
        lambda_star: Some(lambda),
    })
}

fn grid(n: usize) -> impl Iterator<Item = f64> {
    (1..=n).map(move |i| i as f64 / n as f64)
}

fn finite_family<R: Rng>(n: usize, distances: &[f64], rng: &mut R) -> Result<Truth> {
    let f: Vec<f64> = grid(n).map(|x| (2.0 * PI * x).sin()).collect();
    let mut cols = Vec::with_capacity(distances.len());
    for &d in distances {
        let mut u: Vec<f64> = (0..n).map(|_| standard_normal(rng)).collect();
        set_empirical_norm(&mut u, 1.0)?;
        cols.push(f.iter().zip(&u).map(|(a, b)| a + d * b).collect::<Vec<f64>>());
    }
    Ok(Truth {
        dict: EvaluatedDictionary::from_columns(&cols)?,
        f: ResponseVector::new(f)?,
        lambda_star: None,
    })
}

/// `phi_0 = 1`, then `sqrt(2) cos(2 pi k x)`, `sqrt(2) sin(2 pi k x)` for `k = 1, 2, ...`.
pub fn trig_dictionary(n: usize, m: usize) -> Result<EvaluatedDictionary> {
    let xs: Vec<f64> = grid(n).collect();
    let values = Array2::from_shape_fn((n, m), |(i, j)| {
        let x = xs[i];
        if j == 0 {
            1.0
        } else {
            let k = j.div_ceil(2) as f64;
            if j % 2 == 1 {
                2f64.sqrt() * (2.0 * PI * k * x).cos()
            } else {
                2f64.sqrt() * (2.0 * PI * k * x).sin()
            }
        }
    });
    EvaluatedDictionary::new(values)
}

fn trig_basis(n: usize, m: usize, coefficients: Option<&[f64]>) -> Result<Truth> {
    let dict = trig_dictionary(n, m)?;
    match coefficients {
        Some(c) => {
            let lambda = CoefVector::new(c.to_vec())?;
            let f = ResponseVector::new(predict(&dict, &lambda)?.to_vec())?;
            Ok(Truth {
                dict,
                f,
                lambda_star: Some(lambda),
            })
        }
        None => {
            let f: Array1<f64> = grid(n).map(|x| (-(x - 0.5).powi(2) / 0.02).exp()).collect();
            Ok(Truth {
                dict,
                f: ResponseVector::new(f.to_vec())?,
                lambda_star: None,
            })
        }
    }
}
