use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::CoefVector;
use crate::seed;

use super::PosteriorSpec;

const BATCHES_PER_CHAIN: usize = 20;
const LOW_ACCEPTANCE: f64 = 0.01;
const HIGH_ACCEPTANCE: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "RWMH", alias = "rwmh")]
    Rwmh,
    #[serde(rename = "MALA", alias = "mala")]
    Mala,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub algorithm: Algorithm,
    pub step_size: f64,
    pub n_steps: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub n_chains: usize,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::invalid(format!("step_size must be positive, got {}", self.step_size)));
        }
        if self.n_steps == 0 || self.n_chains == 0 || self.thinning == 0 {
            return Err(Error::invalid("n_steps, n_chains and thinning must be positive"));
        }
        if self.burn_in >= self.n_steps {
            return Err(Error::invalid(format!(
                "burn_in={} must be smaller than n_steps={}",
                self.burn_in, self.n_steps
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    pub seed: u64,
    pub acceptance_rate: f64,
    pub burn_in_acceptance_rate: Option<f64>,
    pub mean: Vec<f64>,
    pub kept: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerDiagnostics {
    pub chains: Vec<ChainDiagnostics>,
    pub acceptance_rate: f64,
    /// Largest per-coordinate range of the chain means.
    pub mean_spread: f64,
    /// Batch-means standard error of each coordinate of the pooled mean.
    pub mc_std_error: Vec<f64>,
    pub warnings: Vec<String>,
}

struct ChainOutput {
    diag: ChainDiagnostics,
    sum: Vec<f64>,
    batch_means: Vec<Vec<f64>>,
}

/// Posterior mean by Metropolis-Hastings, pooled over independent chains.
///
/// Chain `c` uses seed `cfg.seed + c` and starts at `init` (zero if absent).
pub fn sample_posterior_mean(
    spec: &PosteriorSpec,
    cfg: &SamplerConfig,
    init: Option<&CoefVector>,
) -> Result<(CoefVector, SamplerDiagnostics)> {
    cfg.validate()?;
    let m = spec.m();
    let start = match init {
        Some(l) if l.len() != m => {
            return Err(Error::DimensionMismatch {
                context: "sampler initial point",
                expected: m,
                got: l.len(),
            })
        }
        Some(l) => l.as_slice().to_vec(),
        None => vec![0.0; m],
    };
    let mut scratch = vec![0.0; m];
    let lp0 = spec.log_target(&start, &mut scratch);
    if !lp0.is_finite() {
        return Err(Error::Initialization(format!(
            "log posterior at the initial point is {lp0}"
        )));
    }

    let outputs: Vec<ChainOutput> = (0..cfg.n_chains)
        .into_par_iter()
        .map(|c| run_chain(spec, cfg, &start, cfg.seed.wrapping_add(c as u64)))
        .collect();

    let total_kept: usize = outputs.iter().map(|o| o.diag.kept).sum();
    let mut mean = vec![0.0; m];
    for o in &outputs {
        for j in 0..m {
            mean[j] += o.sum[j];
        }
    }
    mean.iter_mut().for_each(|v| *v /= total_kept as f64);

    let batches: Vec<&Vec<f64>> = outputs.iter().flat_map(|o| o.batch_means.iter()).collect();
    let mc_std_error = (0..m)
        .map(|j| {
            let k = batches.len();
            if k < 2 {
                return f64::NAN;
            }
            let bm = batches.iter().map(|b| b[j]).sum::<f64>() / k as f64;
            let var = batches.iter().map(|b| (b[j] - bm).powi(2)).sum::<f64>() / (k - 1) as f64;
            (var / k as f64).sqrt()
        })
        .collect();

    let mean_spread = (0..m)
        .map(|j| {
            let (lo, hi) = outputs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), o| {
                (lo.min(o.diag.mean[j]), hi.max(o.diag.mean[j]))
            });
            hi - lo
        })
        .fold(0.0, f64::max);

    let acceptance_rate =
        outputs.iter().map(|o| o.diag.acceptance_rate).sum::<f64>() / outputs.len() as f64;
    let mut warnings = Vec::new();
    for o in &outputs {
        let rate = o.diag.burn_in_acceptance_rate.unwrap_or(o.diag.acceptance_rate);
        if !(LOW_ACCEPTANCE..=HIGH_ACCEPTANCE).contains(&rate) {
            warnings.push(format!(
                "chain with seed {} accepted {:.4} of proposals during burn-in; retune step_size",
                o.diag.seed, rate
            ));
        }
    }

    let diagnostics = SamplerDiagnostics {
        chains: outputs.into_iter().map(|o| o.diag).collect(),
        acceptance_rate,
        mean_spread,
        mc_std_error,
        warnings,
    };
    Ok((CoefVector::new(mean)?, diagnostics))
}

fn run_chain(spec: &PosteriorSpec, cfg: &SamplerConfig, start: &[f64], chain_seed: u64) -> ChainOutput {
    let m = start.len();
    let mut rng = seed::rng(chain_seed);
    let h = cfg.step_size;
    let mala = cfg.algorithm == Algorithm::Mala;

    let mut cur = start.to_vec();
    let mut cur_xtx = vec![0.0; m];
    let mut cur_lp = spec.log_target(&cur, &mut cur_xtx);
    let mut cur_grad = vec![0.0; m];
    if mala {
        spec.grad_from(&cur, &cur_xtx, &mut cur_grad);
    }

    let mut prop = vec![0.0; m];
    let mut prop_xtx = vec![0.0; m];
    let mut prop_grad = vec![0.0; m];

    let kept_total = (cfg.n_steps - cfg.burn_in).div_ceil(cfg.thinning);
    let batch_len = (kept_total / BATCHES_PER_CHAIN).max(1);
    let mut batch_sum = vec![0.0; m];
    let mut batch_count = 0usize;
    let mut batch_means = Vec::new();

    let mut sum = vec![0.0; m];
    let mut kept = 0usize;
    let mut accepted = 0usize;
    let mut accepted_burn = 0usize;

    for step in 0..cfg.n_steps {
        for j in 0..m {
            let z: f64 = rng.sample(StandardNormal);
            prop[j] = if mala {
                cur[j] + 0.5 * h * h * cur_grad[j] + h * z
            } else {
                cur[j] + h * z
            };
        }
        let prop_lp = spec.log_target(&prop, &mut prop_xtx);
        let accept = if prop_lp == f64::NEG_INFINITY {
            false
        } else {
            let mut log_ratio = prop_lp - cur_lp;
            if mala {
                spec.grad_from(&prop, &prop_xtx, &mut prop_grad);
                log_ratio += log_q(&cur, &prop, &prop_grad, h) - log_q(&prop, &cur, &cur_grad, h);
            }
            let u: f64 = rng.random();
            u.ln() < log_ratio
        };
        if accept {
            std::mem::swap(&mut cur, &mut prop);
            std::mem::swap(&mut cur_xtx, &mut prop_xtx);
            std::mem::swap(&mut cur_grad, &mut prop_grad);
            cur_lp = prop_lp;
            accepted += 1;
            if step < cfg.burn_in {
                accepted_burn += 1;
            }
        }
        if step >= cfg.burn_in && (step - cfg.burn_in).is_multiple_of(cfg.thinning) {
            for j in 0..m {
                sum[j] += cur[j];
                batch_sum[j] += cur[j];
            }
            kept += 1;
            batch_count += 1;
            if batch_count == batch_len {
                batch_means.push(batch_sum.iter().map(|s| s / batch_len as f64).collect());
                batch_sum.iter_mut().for_each(|s| *s = 0.0);
                batch_count = 0;
            }
        }
    }

    let mean = sum.iter().map(|s| s / kept as f64).collect();
    ChainOutput {
        diag: ChainDiagnostics {
            seed: chain_seed,
            acceptance_rate: accepted as f64 / cfg.n_steps as f64,
            burn_in_acceptance_rate: (cfg.burn_in > 0).then(|| accepted_burn as f64 / cfg.burn_in as f64),
            mean,
            kept,
        },
        sum,
        batch_means,
    }
}

/// `log N(to; from + h^2/2 grad(from), h^2 I)` without the normalizing constant.
fn log_q(to: &[f64], from: &[f64], grad_from: &[f64], h: f64) -> f64 {
    let mut s = 0.0;
    for j in 0..to.len() {
        let d = to[j] - from[j] - 0.5 * h * h * grad_from[j];
        s += d * d;
    }
    -s / (2.0 * h * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EvaluatedDictionary, ResponseVector};
    use crate::sparse_ewa::SparsityPrior;
    use ndarray::Array2;

    fn cfg(algorithm: Algorithm, step_size: f64, n_steps: usize, seed: u64) -> SamplerConfig {
        SamplerConfig {
            algorithm,
            step_size,
            n_steps,
            burn_in: n_steps / 5,
            thinning: 1,
            n_chains: 2,
            seed,
        }
    }

    #[test]
    fn config_validation() {
        let mut c = cfg(Algorithm::Rwmh, 0.1, 100, 0);
        assert!(c.validate().is_ok());
        c.burn_in = 100;
        assert!(c.validate().is_err());
        c.burn_in = 0;
        c.thinning = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn symmetric_posterior_centered_at_zero() {
        let col: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 0.5 } else { -0.5 }).collect();
        let dict = EvaluatedDictionary::from_columns(&[col]).unwrap();
        let spec = PosteriorSpec::new(dict, ResponseVector::zeros(10), 1.0, SparsityPrior::unbounded(0.2).unwrap()).unwrap();
        for alg in [Algorithm::Rwmh, Algorithm::Mala] {
            let (mean, diag) = sample_posterior_mean(&spec, &cfg(alg, 0.3, 40_000, 11), None).unwrap();
            let se = diag.mc_std_error[0];
            assert!(mean.as_slice()[0].abs() <= 3.0 * se + 1e-3, "{alg:?}: {} vs se {se}", mean.as_slice()[0]);
        }
    }

    #[test]
    fn chain_states_stay_in_ball() {
        let dict = EvaluatedDictionary::new(Array2::from_elem((4, 2), 1.0)).unwrap();
        let y = ResponseVector::new(vec![5.0; 4]).unwrap();
        let prior = SparsityPrior::truncated(0.1, 1.0, 2).unwrap();
        let spec = PosteriorSpec::new(dict, y, 1.0, prior).unwrap();
        let c = SamplerConfig {
            burn_in: 0,
            ..cfg(Algorithm::Rwmh, 0.5, 5_000, 3)
        };
        let (mean, _) = sample_posterior_mean(&spec, &c, None).unwrap();
        // The mean of points in a convex ball is in the ball.
        assert!(mean.l2_norm() <= 1.0);
    }

    #[test]
    fn infeasible_start_is_an_initialization_error() {
        let dict = EvaluatedDictionary::new(Array2::from_elem((2, 1), 1.0)).unwrap();
        let prior = SparsityPrior::truncated(0.1, 1.0, 1).unwrap();
        let spec = PosteriorSpec::new(dict, ResponseVector::zeros(2), 1.0, prior).unwrap();
        let init = CoefVector::new(vec![2.0]).unwrap();
        assert!(matches!(
            sample_posterior_mean(&spec, &cfg(Algorithm::Rwmh, 0.1, 10, 0), Some(&init)),
            Err(Error::Initialization(_))
        ));
    }

    #[test]
    fn poor_tuning_is_reported_not_fatal() {
        let dict = EvaluatedDictionary::new(Array2::from_elem((50, 1), 1.0)).unwrap();
        let spec = PosteriorSpec::new(dict, ResponseVector::zeros(50), 0.01, SparsityPrior::unbounded(0.1).unwrap()).unwrap();
        let (_, diag) = sample_posterior_mean(&spec, &cfg(Algorithm::Rwmh, 100.0, 500, 0), None).unwrap();
        assert!(!diag.warnings.is_empty());
    }

    #[test]
    fn deterministic_given_seed() {
        let dict = EvaluatedDictionary::new(Array2::from_shape_fn((6, 2), |(i, j)| (i + 2 * j) as f64 / 6.0)).unwrap();
        let y = ResponseVector::new(vec![0.1, 0.5, -0.2, 0.3, 0.9, 1.0]).unwrap();
        let spec = PosteriorSpec::new(dict, y, 0.5, SparsityPrior::unbounded(0.1).unwrap()).unwrap();
        let c = cfg(Algorithm::Mala, 0.2, 2_000, 9);
        let a = sample_posterior_mean(&spec, &c, None).unwrap();
        let b = sample_posterior_mean(&spec, &c, None).unwrap();
        assert_eq!(a.0, b.0);
    }
}
