//! Exponentially weighted aggregation over `R^M` with the sparsity prior.
//!
//! The prior is a product of scaled heavy-tailed densities
//! `q0(t) = 3 / (2 (1 + |t|)^4)`, optionally truncated to a Euclidean ball of
//! radius `L0`. With that prior the aggregate is `f_{lambda_hat}` where
//! `lambda_hat` is the mean of the density proportional to
//! `exp(-||y - X lambda||^2 / beta) q(lambda)`.
//!
//! The posterior mean is estimated by MCMC ([`sample_posterior_mean`]) and,
//! for `M <= 3`, by nested adaptive quadrature ([`quadrature_posterior_mean`]),
//! which serves as the reference the sampler is checked against.

mod map;
mod mcmc;
mod quadrature_mean;

pub use map::{map_estimate, map_objective, MapEstimate};
pub use mcmc::{sample_posterior_mean, Algorithm, ChainDiagnostics, SamplerConfig, SamplerDiagnostics};
pub use quadrature_mean::{quadrature_posterior_mean, quadrature_posterior_mean_with, QuadratureMeanOptions};

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{empirical_norm_sq, predict, CoefVector, EvaluatedDictionary, ResponseVector};
use crate::seed;

/// Number of prior draws used to estimate the truncation constant.
pub const C0_DRAWS: usize = 1_000_000;
const C0_SEED: u64 = 0x5eed_c0c0;

/// `log q0(0) = log(3/2)`.
pub const LOG_Q0_AT_ZERO: f64 = 0.405_465_108_108_164_4;

/// Monte Carlo estimate of the prior mass inside the truncation ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct C0Estimate {
    pub value: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparsityPrior {
    tau: f64,
    l0: Option<f64>,
    dim: Option<usize>,
    c0: C0Estimate,
}

impl SparsityPrior {
    /// Untruncated prior (`L0 = inf`, `C0 = 1`).
    pub fn unbounded(tau: f64) -> Result<Self> {
        check_tau(tau)?;
        Ok(Self {
            tau,
            l0: None,
            dim: None,
            c0: C0Estimate {
                value: 1.0,
                std_error: 0.0,
            },
        })
    }

    /// Prior truncated to `||lambda|| <= l0` in dimension `dim`; `C0` is
    /// estimated from [`C0_DRAWS`] draws of the untruncated prior.
    pub fn truncated(tau: f64, l0: f64, dim: usize) -> Result<Self> {
        check_tau(tau)?;
        if !(l0 > 0.0 && l0.is_finite()) {
            return Err(Error::invalid(format!("L0 must be positive, got {l0}")));
        }
        if tau > l0 {
            return Err(Error::invalid(format!("tau={tau} exceeds L0={l0}")));
        }
        if dim == 0 {
            return Err(Error::invalid("prior dimension must be positive"));
        }
        let c0 = estimate_c0(tau, l0, dim, C0_DRAWS, C0_SEED);
        if c0.value <= 0.0 {
            return Err(Error::Degenerate(
                "no prior draw landed inside the truncation ball".into(),
            ));
        }
        Ok(Self {
            tau,
            l0: Some(l0),
            dim: Some(dim),
            c0,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `None` for an untruncated prior.
    pub fn l0(&self) -> Option<f64> {
        self.l0
    }

    pub fn c0(&self) -> C0Estimate {
        self.c0
    }

    pub fn contains(&self, lambda: &[f64]) -> bool {
        match self.l0 {
            None => true,
            Some(l0) => lambda.iter().map(|v| v * v).sum::<f64>() <= l0 * l0,
        }
    }

    /// Unnormalized part `-4 sum log(1 + |lambda_j| / tau)`.
    fn log_kernel(&self, lambda: &[f64]) -> f64 {
        -4.0 * lambda.iter().map(|v| (v.abs() / self.tau).ln_1p()).sum::<f64>()
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("tau must be positive and finite, got {tau}")))
    }
}

/// One draw from `q0`: `|T| = U^{-1/3} - 1` with a random sign.
pub(crate) fn draw_q0<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = 1.0 - rng.random::<f64>();
    let mag = u.powf(-1.0 / 3.0) - 1.0;
    if rng.random::<bool>() {
        mag
    } else {
        -mag
    }
}

/// Fraction of untruncated prior draws inside the ball, with its binomial standard error.
pub fn estimate_c0(tau: f64, l0: f64, dim: usize, draws: usize, rng_seed: u64) -> C0Estimate {
    let mut rng = seed::rng(rng_seed);
    let r2 = l0 * l0;
    let mut inside = 0usize;
    for _ in 0..draws {
        let mut s = 0.0;
        for _ in 0..dim {
            let v = tau * draw_q0(&mut rng);
            s += v * v;
        }
        if s <= r2 {
            inside += 1;
        }
    }
    let p = inside as f64 / draws as f64;
    C0Estimate {
        value: p,
        std_error: (p * (1.0 - p) / draws as f64).sqrt(),
    }
}

/// `log q(lambda)`; `-inf` outside the truncation ball.
pub fn log_prior_density(prior: &SparsityPrior, lambda: &CoefVector) -> f64 {
    let l = lambda.as_slice();
    if !prior.contains(l) {
        return f64::NEG_INFINITY;
    }
    l.len() as f64 * (LOG_Q0_AT_ZERO - prior.tau.ln()) + prior.log_kernel(l) - prior.c0.value.ln()
}

/// Everything that defines the posterior: data, temperature, prior.
///
/// Cross products `X^T X`, `X^T y` and `y^T y` are cached so that the
/// unnormalized log density costs `O(M^2)` per evaluation.
#[derive(Debug, Clone)]
pub struct PosteriorSpec {
    dict: EvaluatedDictionary,
    y: ResponseVector,
    beta: f64,
    prior: SparsityPrior,
    xtx: Array2<f64>,
    xty: Array1<f64>,
    yty: f64,
}

impl PosteriorSpec {
    pub fn new(dict: EvaluatedDictionary, y: ResponseVector, beta: f64, prior: SparsityPrior) -> Result<Self> {
        if y.len() != dict.n() {
            return Err(Error::DimensionMismatch {
                context: "posterior response",
                expected: dict.n(),
                got: y.len(),
            });
        }
        if let Some(dim) = prior.dim {
            if dim != dict.m() {
                return Err(Error::DimensionMismatch {
                    context: "posterior prior dimension",
                    expected: dict.m(),
                    got: dim,
                });
            }
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::invalid(format!("beta must be positive, got {beta}")));
        }
        let x = dict.values();
        let xtx = x.t().dot(x);
        let xty = x.t().dot(&y.view());
        let yty = y.as_slice().iter().map(|v| v * v).sum();
        Ok(Self {
            dict,
            y,
            beta,
            prior,
            xtx,
            xty,
            yty,
        })
    }

    pub fn dict(&self) -> &EvaluatedDictionary {
        &self.dict
    }

    pub fn y(&self) -> &ResponseVector {
        &self.y
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn prior(&self) -> &SparsityPrior {
        &self.prior
    }

    pub fn m(&self) -> usize {
        self.dict.m()
    }

    /// `||y - X lambda||_2^2` from the cached cross products, given `X^T X lambda`.
    fn rss_from(&self, lambda: &[f64], xtx_lambda: &[f64]) -> f64 {
        let mut quad = 0.0;
        let mut lin = 0.0;
        for j in 0..lambda.len() {
            quad += lambda[j] * xtx_lambda[j];
            lin += lambda[j] * self.xty[j];
        }
        (self.yty - 2.0 * lin + quad).max(0.0)
    }

    fn xtx_times(&self, lambda: &[f64], out: &mut [f64]) {
        let m = lambda.len();
        for j in 0..m {
            let row = self.xtx.row(j);
            let mut acc = 0.0;
            for k in 0..m {
                acc += row[k] * lambda[k];
            }
            out[j] = acc;
        }
    }

    /// Unnormalized log posterior (constants dropped), and `X^T X lambda` in `scratch`.
    pub(crate) fn log_target(&self, lambda: &[f64], scratch: &mut [f64]) -> f64 {
        if !self.prior.contains(lambda) {
            return f64::NEG_INFINITY;
        }
        self.xtx_times(lambda, scratch);
        -self.rss_from(lambda, scratch) / self.beta + self.prior.log_kernel(lambda)
    }

    /// Gradient of [`log_target`](Self::log_target) given `X^T X lambda`.
    pub(crate) fn grad_from(&self, lambda: &[f64], xtx_lambda: &[f64], out: &mut [f64]) {
        let tau = self.prior.tau;
        for j in 0..lambda.len() {
            let data = 2.0 / self.beta * (self.xty[j] - xtx_lambda[j]);
            out[j] = data - 4.0 * sign0(lambda[j]) / (tau + lambda[j].abs());
        }
    }
}

/// Sign with `sign(0) = 0`.
pub(crate) fn sign0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `-n ||y - f_lambda||_n^2 / beta + log q(lambda)`, dropping constants independent of `lambda`.
pub fn log_posterior(spec: &PosteriorSpec, lambda: &CoefVector) -> Result<f64> {
    let fit = predict(&spec.dict, lambda)?;
    let resid: Vec<f64> = spec.y.as_slice().iter().zip(fit.iter()).map(|(y, f)| y - f).collect();
    let n = spec.dict.n() as f64;
    let lp = log_prior_density(&spec.prior, lambda);
    if lp == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(-n * empirical_norm_sq(&resid)? / spec.beta + lp)
}

/// `(2/beta) X^T (y - X lambda) - 4 sign(lambda_j) / (tau + |lambda_j|)`, with `sign(0) = 0`.
pub fn grad_log_posterior(spec: &PosteriorSpec, lambda: &CoefVector) -> Result<Vec<f64>> {
    let fit = predict(&spec.dict, lambda)?;
    let resid = &spec.y.view() - &fit;
    let data = spec.dict.values().t().dot(&resid);
    let tau = spec.prior.tau;
    Ok(lambda
        .as_slice()
        .iter()
        .zip(data.iter())
        .map(|(&l, &d)| 2.0 / spec.beta * d - 4.0 * sign0(l) / (tau + l.abs()))
        .collect())
}
