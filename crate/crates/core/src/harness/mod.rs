//! Monte Carlo experiments that check the oracle inequalities empirically.
//!
//! An experiment fixes a design and a regression vector, then repeats
//! "draw noise, fit the aggregate, record `||f_hat - f||_n^2`" over seeded
//! replications and compares the mean risk with the matching bound.

mod config;
mod lasso;
mod output;
mod truth;
pub mod verify;

pub use config::{AutoOr, ExperimentConfig, SamplerSpec, Scenario, TruthSpec};
pub use lasso::{lasso_baseline, lasso_fit, lasso_objective, LassoFit};
pub use output::{emit_results, summary_path, OutputFormat};
pub use truth::{generate_truth, trig_dictionary, Truth};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    beta_min, cor1_2_bound, cor1_bound, ms_bound, soi_bound_thm6path, BoundParams, BoundReport, Regime,
};
use crate::error::{Error, Result};
use crate::finite_agg::{losses, run_ewa, AggregationConfig};
use crate::model::{empirical_dist_sq, gram, predict, CoefVector, EvaluatedDictionary, ResponseVector};
use crate::noise::{sample, NoiseModel};
use crate::seed;
use crate::sparse_ewa::{draw_q0, sample_posterior_mean, PosteriorSpec, SamplerConfig, SparsityPrior};

/// Seed index reserved for the design and truth, distinct from every replication index.
const TRUTH_STREAM: u64 = u64::MAX;
/// Offset mixed into a replication seed to obtain its sampler seed.
const SAMPLER_STREAM: u64 = 1;
const INIT_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub mean_risk: f64,
    pub std_error: f64,
    pub replications: usize,
    pub bound_rhs: f64,
    /// `(mean_risk - bound_rhs) / std_error`; `None` when the standard error is zero.
    pub bound_satisfied_within: Option<f64>,
    /// `mean_risk <= bound_rhs + 3 std_error`.
    pub bound_satisfied: bool,
}

impl RiskEstimate {
    /// Reduces the risks in the given order; callers pass them sorted by replication.
    pub fn from_risks(risks: &[f64], bound_rhs: f64) -> Self {
        let r = risks.len();
        let mean = risks.iter().sum::<f64>() / r as f64;
        let std_error = if r > 1 {
            let var = risks.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1) as f64;
            (var / r as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean_risk: mean,
            std_error,
            replications: r,
            bound_rhs,
            bound_satisfied_within: (std_error > 0.0).then(|| (mean - bound_rhs) / std_error),
            bound_satisfied: mean <= bound_rhs + 3.0 * std_error,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    /// 1-based replication index.
    pub replication: u64,
    pub seed: u64,
    pub risk: f64,
    pub bound_rhs: f64,
    pub beta: f64,
    pub method: String,
}

/// Values that were `"auto"` in the config, after resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedSettings {
    pub beta: f64,
    pub beta_min: Option<f64>,
    pub regime: Regime,
    pub tau: Option<f64>,
    pub step_size: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSummary {
    pub method: String,
    pub penalty: f64,
    pub mean_risk: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerSummary {
    pub mean_acceptance: f64,
    pub min_acceptance: f64,
    pub max_acceptance: f64,
    pub largest_mc_std_error: f64,
    pub tuning_warnings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub resolved: ResolvedSettings,
    pub report: BoundReport,
    pub estimate: RiskEstimate,
    pub records: Vec<ReplicationRecord>,
    pub baseline: Option<BaselineSummary>,
    pub sampler: Option<SamplerSummary>,
}

/// Design and truth of an experiment (fixed across replications).
pub fn experiment_truth(cfg: &ExperimentConfig) -> Result<Truth> {
    generate_truth(&cfg.truth, cfg.n, cfg.m, seed::derive(cfg.seed, TRUTH_STREAM))
}

/// Seed of replication `r` (1-based).
pub fn replication_seed(master: u64, r: u64) -> u64 {
    seed::derive(master, r)
}

fn noisy_response(truth: &Truth, noise: &NoiseModel, rep_seed: u64) -> Result<ResponseVector> {
    let xi = sample(noise, truth.f.len(), rep_seed)?;
    ResponseVector::new(truth.f.as_slice().iter().zip(&xi).map(|(f, e)| f + e).collect())
}

fn risk_of(pred: &[f64], truth: &Truth, replication: u64) -> Result<f64> {
    let r = empirical_dist_sq(pred, truth.f.as_slice())?;
    if r.is_finite() {
        Ok(r)
    } else {
        Err(Error::NonFiniteRisk { replication })
    }
}

fn threshold_params(cfg: &ExperimentConfig, truth: &Truth) -> BoundParams {
    let n = cfg.n;
    let f = truth.f.as_slice();
    let mut l: f64 = 0.0;
    let mut l_bar: f64 = 0.0;
    for j in 0..truth.dict.m() {
        let col = truth.dict.column(j);
        let d: f64 = col.iter().zip(f).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n as f64;
        l = l.max(d.sqrt());
        l_bar = col.iter().fold(l_bar, |m, v| m.max(v.abs()));
    }
    let extra = cfg.bound_params.clone().unwrap_or_default();
    BoundParams {
        n: Some(n),
        l: extra.l.or(Some(l)),
        l_bar: extra.l_bar.or(Some(l_bar)),
        ..extra
    }
}

fn resolve_beta(cfg: &ExperimentConfig, params: &BoundParams) -> Result<(f64, Option<f64>)> {
    let regime = cfg.effective_regime();
    let bmin = beta_min(&cfg.noise, regime, params);
    match (cfg.beta, bmin) {
        (AutoOr::Value(b), Ok(min)) => Ok((b, Some(min))),
        (AutoOr::Value(_), Err(e)) => Err(e),
        (AutoOr::Auto, Ok(min)) if min > 0.0 => Ok((min, Some(min))),
        (AutoOr::Auto, Ok(_)) => Err(Error::Config(
            "beta = \"auto\" resolves to 0 for this noise model; give beta explicitly".into(),
        )),
        (AutoOr::Auto, Err(e)) => Err(e),
    }
}

/// Runs every replication of a `finite_ms` or `sparse_soi` experiment.
pub fn run_replications(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    match cfg.scenario {
        Scenario::FiniteMs => run_finite(cfg),
        Scenario::SparseSoi => run_sparse(cfg),
        other => Err(Error::Config(format!(
            "scenario {other:?} is a verification suite; run it with `verify`"
        ))),
    }
}

fn run_finite(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let truth = experiment_truth(cfg)?;
    let params = threshold_params(cfg, &truth);
    let (beta, bmin) = resolve_beta(cfg, &params)?;
    let regime = cfg.effective_regime();
    let true_losses = losses(&truth.dict, &truth.f)?;
    let report = match regime {
        Regime::ExponentialMoments => cor1_bound(&true_losses, beta, &params)?,
        Regime::PowerMoments => {
            let b = params.b.or_else(|| cfg.noise.moment_bound());
            cor1_2_bound(&true_losses, beta, &BoundParams { b, ..params.clone() })?
        }
        _ => ms_bound(&true_losses, beta, cfg.n)?,
    };
    let report = match bmin {
        Some(min) => report.with_beta_min(min),
        None => report,
    };
    let agg = AggregationConfig::uniform(beta, cfg.m)?;

    let records = (1..=cfg.replications as u64)
        .into_par_iter()
        .map(|r| {
            let rep_seed = replication_seed(cfg.seed, r);
            let y = noisy_response(&truth, &cfg.noise, rep_seed)?;
            let (pred, _) = run_ewa(&truth.dict, &y, &agg)?;
            Ok(ReplicationRecord {
                replication: r,
                seed: rep_seed,
                risk: risk_of(pred.as_slice().expect("contiguous"), &truth, r)?,
                bound_rhs: report.rhs,
                beta,
                method: "ewa".into(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let risks: Vec<f64> = records.iter().map(|r| r.risk).collect();
    Ok(ExperimentResult {
        config: cfg.clone(),
        resolved: ResolvedSettings {
            beta,
            beta_min: bmin,
            regime,
            tau: None,
            step_size: None,
        },
        estimate: RiskEstimate::from_risks(&risks, report.rhs),
        report,
        records,
        baseline: None,
        sampler: None,
    })
}

/// `min(tau, w) / sqrt(M)` with `w = sqrt(beta / (2 n max_j Phi_jj))` the
/// narrowest per-coordinate likelihood width. Near the origin the prior has a
/// cusp of slope `4 / tau`, which limits the step to the prior scale.
pub fn auto_step_size(dict: &EvaluatedDictionary, beta: f64, tau: f64) -> f64 {
    let g = gram(dict);
    let width = (beta / (2.0 * dict.n() as f64 * g.max_diag())).sqrt();
    tau.min(width) / (dict.m() as f64).sqrt()
}

/// Lasso penalty used for the chain start: `sigma sqrt(2 ln M / n)`.
pub fn lasso_penalty(sigma2: f64, n: usize, m: usize) -> f64 {
    (sigma2 * 2.0 * (m.max(2) as f64).ln() / n as f64).sqrt()
}

/// Coefficients used on the right-hand side of the sparse bound: the
/// generating vector if there is one, else the better of zero and the
/// least-squares projection of the truth.
fn bound_coefficients(truth: &Truth) -> Result<Vec<CoefVector>> {
    match &truth.lambda_star {
        Some(l) => Ok(vec![l.clone()]),
        None => Ok(vec![CoefVector::zeros(truth.dict.m()), lasso_baseline(&truth.dict, &truth.f, 0.0)?]),
    }
}

/// Lasso solution with its zero coordinates moved to prior draws, so the
/// chains do not start on the cusp of the prior at the origin.
fn chain_start(lasso: &CoefVector, tau: f64, rng_seed: u64) -> Result<CoefVector> {
    let mut rng = seed::rng(rng_seed);
    CoefVector::new(
        lasso
            .as_slice()
            .iter()
            .map(|&v| if v == 0.0 { tau * draw_q0(&mut rng) } else { v })
            .collect(),
    )
}

struct SparseRep {
    record: ReplicationRecord,
    lasso_risk: f64,
    acceptance: f64,
    mc_se: f64,
    warnings: usize,
}

fn run_sparse(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let truth = experiment_truth(cfg)?;
    let params = threshold_params(cfg, &truth);
    let (beta, bmin) = resolve_beta(cfg, &params)?;
    let sigma2 = cfg.noise.variance()?;
    let trace = gram(&truth.dict).trace;
    let tau = match cfg.tau {
        AutoOr::Value(t) => t,
        AutoOr::Auto if sigma2 > 0.0 && trace > 0.0 => (sigma2 / (cfg.n as f64 * trace)).sqrt(),
        AutoOr::Auto => {
            return Err(Error::Config("tau = \"auto\" needs positive noise variance and Tr(Phi)".into()))
        }
    };
    if !(sigma2 > 0.0) {
        return Err(Error::Config("the sparse bound needs a positive noise variance".into()));
    }
    let mut report: Option<BoundReport> = None;
    for l in bound_coefficients(&truth)? {
        let r = soi_bound_thm6path(&l, &truth.f, &truth.dict, sigma2, beta, cfg.complexity_form)?;
        if report.as_ref().is_none_or(|best| r.rhs < best.rhs) {
            report = Some(r);
        }
    }
    let mut report = report.expect("at least one candidate coefficient vector");
    if let Some(min) = bmin {
        report = report.with_beta_min(min);
    }

    let sampler = cfg.sampler.clone().unwrap_or_default();
    let step_size = match sampler.step_size {
        AutoOr::Value(h) => h,
        AutoOr::Auto => auto_step_size(&truth.dict, beta, tau),
    };
    let prior = SparsityPrior::unbounded(tau)?;
    let penalty = lasso_penalty(sigma2, cfg.n, cfg.m);

    let reps = (1..=cfg.replications as u64)
        .into_par_iter()
        .map(|r| {
            let rep_seed = replication_seed(cfg.seed, r);
            let y = noisy_response(&truth, &cfg.noise, rep_seed)?;
            let lasso = lasso_baseline(&truth.dict, &y, penalty)?;
            let lasso_pred = predict(&truth.dict, &lasso)?;
            let init = chain_start(&lasso, tau, seed::derive(rep_seed, INIT_STREAM))?;
            let lasso_risk = risk_of(lasso_pred.as_slice().expect("contiguous"), &truth, r)?;
            let spec = PosteriorSpec::new(truth.dict.clone(), y, beta, prior.clone())?;
            let scfg = SamplerConfig {
                algorithm: sampler.algorithm,
                step_size,
                n_steps: sampler.n_steps,
                burn_in: sampler.burn_in,
                thinning: sampler.thinning,
                n_chains: sampler.n_chains,
                seed: seed::derive(rep_seed, SAMPLER_STREAM),
            };
            let (lambda_hat, diag) = sample_posterior_mean(&spec, &scfg, Some(&init))?;
            let pred = predict(&truth.dict, &lambda_hat)?;
            Ok(SparseRep {
                record: ReplicationRecord {
                    replication: r,
                    seed: rep_seed,
                    risk: risk_of(pred.as_slice().expect("contiguous"), &truth, r)?,
                    bound_rhs: report.rhs,
                    beta,
                    method: "ewa_mcmc".into(),
                },
                lasso_risk,
                acceptance: diag.acceptance_rate,
                mc_se: diag.mc_std_error.iter().copied().fold(0.0, f64::max),
                warnings: diag.warnings.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let risks: Vec<f64> = reps.iter().map(|r| r.record.risk).collect();
    let lasso_risks: Vec<f64> = reps.iter().map(|r| r.lasso_risk).collect();
    let lasso_est = RiskEstimate::from_risks(&lasso_risks, report.rhs);
    let acc: Vec<f64> = reps.iter().map(|r| r.acceptance).collect();
    let sampler_summary = SamplerSummary {
        mean_acceptance: acc.iter().sum::<f64>() / acc.len() as f64,
        min_acceptance: acc.iter().copied().fold(f64::INFINITY, f64::min),
        max_acceptance: acc.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        largest_mc_std_error: reps.iter().map(|r| r.mc_se).fold(0.0, f64::max),
        tuning_warnings: reps.iter().map(|r| r.warnings).sum(),
    };
    Ok(ExperimentResult {
        config: cfg.clone(),
        resolved: ResolvedSettings {
            beta,
            beta_min: bmin,
            regime: cfg.effective_regime(),
            tau: Some(tau),
            step_size: Some(step_size),
        },
        estimate: RiskEstimate::from_risks(&risks, report.rhs),
        report,
        records: reps.into_iter().map(|r| r.record).collect(),
        baseline: Some(BaselineSummary {
            method: "lasso".into(),
            penalty,
            mean_risk: lasso_est.mean_risk,
            std_error: lasso_est.std_error,
        }),
        sampler: Some(sampler_summary),
    })
}
