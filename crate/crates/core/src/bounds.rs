//! Temperature thresholds and right-hand sides of the oracle inequalities.
//!
//! Every calculator returns a [`BoundReport`] whose `rhs` is the sum of an
//! approximation term, a complexity term and a remainder. All logarithms are
//! natural and `log+ x = max(ln x, 0)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite_agg::WeightVector;
use crate::model::{empirical_dist_sq, gram, predict, sparsity_stats, CoefVector, EvaluatedDictionary, ResponseVector};
use crate::noise::{admissibility, NoiseModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    #[serde(rename = "ms")]
    ModelSelection,
    #[serde(rename = "thm4")]
    GeneralSparse,
    #[serde(rename = "soi")]
    Sparse,
    #[serde(rename = "soip")]
    SparseBoundedColumns,
    #[serde(rename = "cor1")]
    ExponentialMoments,
    #[serde(rename = "cor1_2")]
    PowerMoments,
}

/// Which expression is used for the complexity term of the sparse bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ComplexityForm {
    /// `M* (1 + log+(|lambda*|_1 / (tau M*)))`, the stated form.
    #[default]
    Jensen,
    /// `sum_{j in support} log(1 + |lambda*_j| / tau)`, never larger.
    ExactSupport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub theorem: Theorem,
    pub approx_term: f64,
    pub complexity_term: f64,
    pub remainder: f64,
    pub rhs: f64,
    pub beta_used: f64,
    /// `None` when the calculator has no noise information.
    pub beta_min: Option<f64>,
    pub beta_admissible: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub complexity_form: Option<ComplexityForm>,
}

impl BoundReport {
    fn new(theorem: Theorem, approx_term: f64, complexity_term: f64, remainder: f64, beta_used: f64) -> Self {
        Self {
            theorem,
            approx_term,
            complexity_term,
            remainder,
            rhs: approx_term + complexity_term + remainder,
            beta_used,
            beta_min: None,
            beta_admissible: None,
            complexity_form: None,
        }
    }

    /// Records the threshold and whether `beta_used` clears it.
    pub fn with_beta_min(mut self, beta_min: f64) -> Self {
        self.beta_min = Some(beta_min);
        self.beta_admissible = Some(self.beta_used >= beta_min);
        self
    }

    /// `approx + complexity + remainder`, evaluated in the same order as `rhs`.
    pub fn recomposed(&self) -> f64 {
        self.approx_term + self.complexity_term + self.remainder
    }
}

/// Family of temperature thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `4 sup g`.
    #[serde(rename = "thm6")]
    Gaussian,
    /// Double-exponential errors.
    #[serde(rename = "prop2")]
    DoubleExponential,
    /// Bounded errors `|xi| <= B`.
    #[serde(rename = "cor0")]
    Bounded,
    /// `E exp(t |xi|^kappa) <= B`.
    #[serde(rename = "cor1")]
    ExponentialMoments,
    /// `E |xi|^s <= B`.
    #[serde(rename = "cor1_2")]
    PowerMoments,
}

/// Scalar inputs of the threshold and remainder formulas. `l` is
/// `sup ||f - f_lambda||_n` and `l_bar` is `sup |f_lambda(x_i)|`, both
/// supplied by the caller.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundParams {
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default, rename = "L")]
    pub l: Option<f64>,
    #[serde(default, rename = "L_bar")]
    pub l_bar: Option<f64>,
    #[serde(default, rename = "B")]
    pub b: Option<f64>,
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub s: Option<f64>,
    #[serde(default)]
    pub alpha0: Option<f64>,
}

fn need<T: Copy>(v: Option<T>, name: &str, regime: &str) -> Result<T> {
    v.ok_or_else(|| Error::invalid(format!("{regime} requires parameter {name}")))
}

fn need_pos(v: Option<f64>, name: &str, regime: &str) -> Result<f64> {
    let x = need(v, name, regime)?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::invalid(format!("{name} must be positive, got {x}")))
    }
}

fn need_nonneg(v: Option<f64>, name: &str, regime: &str) -> Result<f64> {
    let x = need(v, name, regime)?;
    if x >= 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::invalid(format!("{name} must be nonnegative, got {x}")))
    }
}

fn need_n(params: &BoundParams, regime: &str) -> Result<f64> {
    match need(params.n, "n", regime)? {
        0 => Err(Error::invalid("n must be positive")),
        n => Ok(n as f64),
    }
}

fn check_kappa_precondition(n: f64, kappa: f64) -> Result<()> {
    if n.ln() * kappa < 1.0 {
        return Err(Error::Precondition(format!(
            "requires n >= exp(1/kappa) = {:.6}, got n = {n}",
            (1.0 / kappa).exp()
        )));
    }
    Ok(())
}

/// Smallest temperature covered by the bound of the given regime.
///
/// The model must be of the kind the regime assumes; the scalar formula is
/// then [`beta_min_formula`].
pub fn beta_min(model: &NoiseModel, regime: Regime, params: &BoundParams) -> Result<f64> {
    model.validate()?;
    let mismatch = |why: &str| Err(Error::Inadmissible(format!("{regime:?} threshold: {why}")));
    match regime {
        Regime::Gaussian => match admissibility(model, params.n.unwrap_or(1)).g_sup.finite() {
            Some(g) => Ok(4.0 * g),
            None => mismatch("sup g is not finite for this noise model"),
        },
        Regime::DoubleExponential => match model {
            NoiseModel::DoubleExponential { sigma2 } => beta_min_formula(regime, params, Some(*sigma2)),
            _ => mismatch("noise model is not double exponential"),
        },
        Regime::Bounded => {
            let Some(support) = model.support_bound() else {
                return mismatch("noise is not bounded");
            };
            let b = params.b.unwrap_or(support);
            if b < support {
                return mismatch(&format!("B = {b} is below the support bound {support}"));
            }
            beta_min_formula(regime, &BoundParams { b: Some(b), ..params.clone() }, None)
        }
        Regime::ExponentialMoments => {
            let kappa = need_pos(params.kappa, "kappa", "cor1")?;
            let light = match model {
                NoiseModel::Gaussian { .. } => kappa <= 2.0,
                NoiseModel::DoubleExponential { .. } => kappa <= 1.0,
                NoiseModel::PowerMoment { .. } => false,
                _ => true,
            };
            if !light {
                return mismatch(&format!("noise has no exponential moment of order kappa = {kappa}"));
            }
            beta_min_formula(regime, params, None)
        }
        Regime::PowerMoments => {
            let s = match (params.s, model) {
                (Some(s), _) => s,
                (None, NoiseModel::PowerMoment { s, .. }) => *s,
                (None, _) => return Err(Error::invalid("cor1_2 requires parameter s")),
            };
            if let NoiseModel::PowerMoment { s: s_model, .. } = model {
                if s > *s_model {
                    return mismatch(&format!("moment of order {s} exceeds the model order {s_model}"));
                }
            }
            beta_min_formula(regime, &BoundParams { s: Some(s), ..params.clone() }, None)
        }
    }
}

/// The threshold formulas. `sigma2` is needed by the double-exponential
/// regime only; the `thm6` regime needs `sup g` and is not available here.
pub fn beta_min_formula(regime: Regime, params: &BoundParams, sigma2: Option<f64>) -> Result<f64> {
    match regime {
        Regime::Gaussian => Err(Error::invalid("thm6 threshold needs a noise model")),
        Regime::DoubleExponential => {
            let n = need_n(params, "prop2")?;
            let sigma2 = need_pos(sigma2, "sigma2", "prop2")?;
            let l = need_nonneg(params.l, "L", "prop2")?;
            let l_bar = need_nonneg(params.l_bar, "L_bar", "prop2")?;
            let sigma = sigma2.sqrt();
            Ok(((8.0 + 4.0 / n) * sigma2 + 2.0 * l * l).max(4.0 * sigma * (1.0 + 1.0 / n) * l_bar))
        }
        Regime::Bounded => {
            let n = need_n(params, "cor0")?;
            let b = need_nonneg(params.b, "B", "cor0")?;
            let l = need_nonneg(params.l, "L", "cor0")?;
            Ok(4.0 * b * b * (1.0 + 1.0 / n) + 2.0 * l * l)
        }
        Regime::ExponentialMoments => {
            let n = need_n(params, "cor1")?;
            let t = need_pos(params.t, "t", "cor1")?;
            let kappa = need_pos(params.kappa, "kappa", "cor1")?;
            let l = need_nonneg(params.l, "L", "cor1")?;
            check_kappa_precondition(n, kappa)?;
            Ok(4.0 * (1.0 + 1.0 / n) * (2.0 * n.ln() / t).powf(2.0 / kappa) + 2.0 * l * l)
        }
        Regime::PowerMoments => {
            let n = need_n(params, "cor1_2")?;
            let s = need_pos(params.s, "s", "cor1_2")?;
            let alpha0 = need_pos(params.alpha0, "alpha0", "cor1_2")?;
            let l = need_nonneg(params.l, "L", "cor1_2")?;
            if s < 2.0 {
                return Err(Error::Precondition(format!("requires s >= 2, got s = {s}")));
            }
            Ok(4.0 * (1.0 + 1.0 / n) * alpha0 * n.powf(2.0 / (s + 2.0)) + 2.0 * l * l)
        }
    }
}

/// `sum p_j log(p_j / pi_j)` with `0 log 0 = 0`; infinite if `p` charges a null atom of `pi`.
pub fn kl_discrete(p: &WeightVector, pi: &WeightVector) -> Result<f64> {
    if p.len() != pi.len() {
        return Err(Error::DimensionMismatch {
            context: "kl_discrete",
            expected: pi.len(),
            got: p.len(),
        });
    }
    let mut kl = 0.0;
    for (&a, &b) in p.as_slice().iter().zip(pi.as_slice()) {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return Ok(f64::INFINITY);
        }
        kl += a * (a / b).ln();
    }
    Ok(kl.max(0.0))
}

pub fn log_plus(x: f64) -> f64 {
    if x > 1.0 {
        x.ln()
    } else {
        0.0
    }
}

fn check_temperature(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("beta must be positive, got {beta}")))
    }
}

/// `min_j loss_j + beta ln M / n` for a uniform prior over `M = losses.len()` candidates.
pub fn ms_bound(model_losses: &[f64], beta: f64, n: usize) -> Result<BoundReport> {
    check_temperature(beta)?;
    if model_losses.is_empty() || n == 0 {
        return Err(Error::invalid("ms bound needs at least one candidate and n > 0"));
    }
    let min = model_losses.iter().copied().fold(f64::INFINITY, f64::min);
    let m = model_losses.len() as f64;
    Ok(BoundReport::new(Theorem::ModelSelection, min, beta * m.ln() / n as f64, 0.0, beta))
}

fn approx_term(lambda_star: &CoefVector, truth: &ResponseVector, dict: &EvaluatedDictionary) -> Result<f64> {
    if truth.len() != dict.n() {
        return Err(Error::DimensionMismatch {
            context: "truth vector",
            expected: dict.n(),
            got: truth.len(),
        });
    }
    let fit = predict(dict, lambda_star)?;
    empirical_dist_sq(fit.as_slice().expect("owned array is contiguous"), truth.as_slice())
}

/// Complexity term of the sparse bound with `tau = sigma / sqrt(n * scale)`,
/// where `scale` is `Tr(Phi)` or `phi0 * M`.
fn sparse_complexity(lambda_star: &CoefVector, beta: f64, n: f64, sigma: f64, scale: f64, form: ComplexityForm) -> f64 {
    let stats = sparsity_stats(lambda_star);
    if stats.m_lambda == 0 {
        return 0.0;
    }
    let ms = stats.m_lambda as f64;
    let inv_tau = (n * scale).sqrt() / sigma;
    let sum = match form {
        ComplexityForm::Jensen => ms * (1.0 + log_plus(stats.l1 * inv_tau / ms)),
        ComplexityForm::ExactSupport => lambda_star
            .as_slice()
            .iter()
            .filter(|v| **v != 0.0)
            .map(|v| (v.abs() * inv_tau).ln_1p())
            .sum(),
    };
    4.0 * beta / n * sum
}

/// Sparse bound with `tau = sigma / sqrt(n Tr(Phi))` and no truncation.
///
/// `beta_min = 4 sigma2` is attached (Gaussian errors).
pub fn soi_bound_thm6path(
    lambda_star: &CoefVector,
    truth: &ResponseVector,
    dict: &EvaluatedDictionary,
    sigma2: f64,
    beta: f64,
    form: ComplexityForm,
) -> Result<BoundReport> {
    check_temperature(beta)?;
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::invalid(format!("sigma2 must be positive, got {sigma2}")));
    }
    let trace = gram(dict).trace;
    if trace <= 0.0 {
        return Err(Error::invalid("dictionary has Tr(Phi) = 0"));
    }
    let n = dict.n() as f64;
    let approx = approx_term(lambda_star, truth, dict)?;
    let complexity = sparse_complexity(lambda_star, beta, n, sigma2.sqrt(), trace, form);
    let mut r = BoundReport::new(Theorem::Sparse, approx, complexity, sigma2 / n, beta).with_beta_min(4.0 * sigma2);
    r.complexity_form = Some(form);
    Ok(r)
}

/// Variant for dictionaries with `||phi_j||_n^2 <= phi0`: `Tr(Phi)` is replaced
/// by `phi0 * M` and `tau = sigma / sqrt(phi0 n M)`.
pub fn soip_bound(
    lambda_star: &CoefVector,
    truth: &ResponseVector,
    dict: &EvaluatedDictionary,
    sigma2: f64,
    beta: f64,
    phi0: f64,
    form: ComplexityForm,
) -> Result<BoundReport> {
    check_temperature(beta)?;
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::invalid(format!("sigma2 must be positive, got {sigma2}")));
    }
    if !(phi0 > 0.0 && phi0.is_finite()) {
        return Err(Error::invalid(format!("phi0 must be positive, got {phi0}")));
    }
    let max_diag = gram(dict).max_diag();
    if max_diag > phi0 * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "max_j ||phi_j||_n^2 = {max_diag} exceeds phi0 = {phi0}"
        )));
    }
    let n = dict.n() as f64;
    let approx = approx_term(lambda_star, truth, dict)?;
    let complexity = sparse_complexity(lambda_star, beta, n, sigma2.sqrt(), phi0 * dict.m() as f64, form);
    let mut r = BoundReport::new(Theorem::SparseBoundedColumns, approx, complexity, sigma2 / n, beta)
        .with_beta_min(4.0 * sigma2);
    r.complexity_form = Some(form);
    Ok(r)
}

/// `R(M, tau, L0, delta)`; with `l0 = None` this is `tau^2 Tr(Phi)`.
pub fn thm4_remainder(m: usize, tau: f64, l0: Option<f64>, delta: f64, trace: f64, beta: f64, n: usize) -> f64 {
    match l0 {
        None => tau * tau * trace,
        Some(l0) => {
            let t3m = tau.powi(3) * (m as f64).powf(2.5);
            let dl3 = (delta * l0).powi(3);
            tau * tau * (2.0 * t3m / dl3).exp() * trace + 2.0 * beta * t3m / (n as f64 * dl3)
        }
    }
}

/// Sparse bound for a general prior scale `tau` and truncation radius `l0`
/// (`None` for no truncation).
#[allow(clippy::too_many_arguments)]
pub fn thm4_general_soi(
    lambda_star: &CoefVector,
    truth: &ResponseVector,
    dict: &EvaluatedDictionary,
    beta: f64,
    tau: f64,
    l0: Option<f64>,
    delta: f64,
) -> Result<BoundReport> {
    check_temperature(beta)?;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::invalid(format!("tau must be positive, got {tau}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Precondition(format!("requires 0 < delta < 1, got delta = {delta}")));
    }
    let m = dict.m();
    if let Some(l0) = l0 {
        if !(l0 > 0.0) {
            return Err(Error::invalid(format!("L0 must be positive, got {l0}")));
        }
        let cap = delta * l0 / (m as f64).sqrt();
        if tau > cap {
            return Err(Error::Precondition(format!(
                "requires tau <= delta L0 / sqrt(M) = {cap}, got tau = {tau}"
            )));
        }
        let norm = lambda_star.l2_norm();
        if norm > (1.0 - delta) * l0 {
            return Err(Error::Precondition(format!(
                "requires ||lambda*|| <= (1 - delta) L0 = {}, got {norm}",
                (1.0 - delta) * l0
            )));
        }
    }
    let n = dict.n();
    let approx = approx_term(lambda_star, truth, dict)?;
    let sum: f64 = lambda_star
        .as_slice()
        .iter()
        .filter(|v| **v != 0.0)
        .map(|v| (v.abs() / tau).ln_1p())
        .sum();
    let complexity = 4.0 * beta / n as f64 * sum;
    let remainder = thm4_remainder(m, tau, l0, delta, gram(dict).trace, beta, n);
    let mut r = BoundReport::new(Theorem::GeneralSparse, approx, complexity, remainder, beta);
    r.complexity_form = Some(ComplexityForm::ExactSupport);
    Ok(r)
}

/// `16 B L^2 (n+1) (2 ln n)^{2/kappa} / (n^2 beta t^{2/kappa})`.
pub fn remainder_cor1(b: f64, l: f64, n: usize, beta: f64, t: f64, kappa: f64) -> Result<f64> {
    check_temperature(beta)?;
    if !(t > 0.0 && kappa > 0.0) {
        return Err(Error::invalid("t and kappa must be positive"));
    }
    let nf = n as f64;
    check_kappa_precondition(nf, kappa)?;
    let e = 2.0 / kappa;
    Ok(16.0 * b * l * l * (nf + 1.0) * (2.0 * nf.ln()).powf(e) / (nf * nf * beta * t.powf(e)))
}

/// `4 L^2 B alpha0^{-s/2} n^{-s/(s+2)}`; the constant comes from bounding
/// `E(xi^2 - alpha)_+` by `B alpha^{1 - s/2}`.
pub fn remainder_cor1_2(b: f64, l: f64, s: f64, alpha0: f64, n: usize) -> Result<f64> {
    if s < 2.0 {
        return Err(Error::Precondition(format!("requires s >= 2, got s = {s}")));
    }
    if !(alpha0 > 0.0) {
        return Err(Error::invalid("alpha0 must be positive"));
    }
    Ok(4.0 * l * l * b * alpha0.powf(-s / 2.0) * (n as f64).powf(-s / (s + 2.0)))
}

/// Finite-family bound under exponential moments: `min loss + beta ln M / n + remainder_cor1`.
pub fn cor1_bound(model_losses: &[f64], beta: f64, params: &BoundParams) -> Result<BoundReport> {
    let n = need(params.n, "n", "cor1")?;
    let ms = ms_bound(model_losses, beta, n)?;
    let rem = remainder_cor1(
        need_nonneg(params.b, "B", "cor1")?,
        need_nonneg(params.l, "L", "cor1")?,
        n,
        beta,
        need_pos(params.t, "t", "cor1")?,
        need_pos(params.kappa, "kappa", "cor1")?,
    )?;
    let bmin = beta_min_formula(Regime::ExponentialMoments, params, None)?;
    Ok(BoundReport::new(Theorem::ExponentialMoments, ms.approx_term, ms.complexity_term, rem, beta).with_beta_min(bmin))
}

/// Finite-family bound under power moments: `min loss + beta ln M / n + remainder_cor1_2`.
pub fn cor1_2_bound(model_losses: &[f64], beta: f64, params: &BoundParams) -> Result<BoundReport> {
    let n = need(params.n, "n", "cor1_2")?;
    let ms = ms_bound(model_losses, beta, n)?;
    let rem = remainder_cor1_2(
        need_nonneg(params.b, "B", "cor1_2")?,
        need_nonneg(params.l, "L", "cor1_2")?,
        need_pos(params.s, "s", "cor1_2")?,
        need_pos(params.alpha0, "alpha0", "cor1_2")?,
        n,
    )?;
    let bmin = beta_min_formula(Regime::PowerMoments, params, None)?;
    Ok(BoundReport::new(Theorem::PowerMoments, ms.approx_term, ms.complexity_term, rem, beta).with_beta_min(bmin))
}

/// `exp((||f - p'||^2 - ||f - p||^2) / beta + 4 sigma2 (2n+1) ||p - p'||^2 / (n beta^2))`,
/// all norms empirical, for prediction vectors `p = mu_pred` and `p' = mu_prime_pred`.
pub fn psi_double_exp(
    mu_pred: &[f64],
    mu_prime_pred: &[f64],
    truth: &[f64],
    beta: f64,
    sigma2: f64,
) -> Result<f64> {
    check_temperature(beta)?;
    let n = truth.len() as f64;
    let a = empirical_dist_sq(truth, mu_prime_pred)?;
    let b = empirical_dist_sq(truth, mu_pred)?;
    let c = empirical_dist_sq(mu_pred, mu_prime_pred)?;
    Ok(((a - b) / beta + 4.0 * sigma2 * (2.0 * n + 1.0) * c / (n * beta * beta)).exp())
}

/// Temperature above which `mu -> Psi(mu, mu')` is concave on a family of
/// prediction vectors: `(8 + 4/n) sigma2 + 2 max_p ||f - p||_n^2`.
pub fn psi_concavity_beta(family: &[&[f64]], truth: &[f64], sigma2: f64) -> Result<f64> {
    let n = truth.len() as f64;
    let mut sup = 0.0f64;
    for p in family {
        sup = sup.max(empirical_dist_sq(truth, p)?);
    }
    Ok((8.0 + 4.0 / n) * sigma2 + 2.0 * sup)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lem2Result {
    /// `max (LHS - RHS)` over the evaluable grid points.
    pub max_violation: f64,
    pub evaluated: usize,
    /// Points where `1 + (exp(-x alpha0) - 1) / alpha0 <= 0`, so the left side is undefined.
    pub skipped: usize,
}

/// `x + ln(1 + (exp(-x alpha0) - 1) / alpha0) - x^2 alpha0 / 2` on each grid point.
pub fn lem2_check(grid: &[(f64, f64)]) -> Result<Lem2Result> {
    let mut out = Lem2Result {
        max_violation: f64::NEG_INFINITY,
        evaluated: 0,
        skipped: 0,
    };
    for &(x, a) in grid {
        if !(a > 0.0) {
            return Err(Error::invalid(format!("alpha0 must be positive, got {a}")));
        }
        let arg = (-x * a).exp_m1() / a;
        if arg <= -1.0 {
            out.skipped += 1;
            continue;
        }
        let lhs = x + arg.ln_1p();
        out.max_violation = out.max_violation.max(lhs - x * x * a / 2.0);
        out.evaluated += 1;
    }
    Ok(out)
}

/// `x` in `[-5, 5]` with step `0.01`, `alpha0` in `{0.1, 1, 2, 10}`.
pub fn lem2_default_grid() -> Vec<(f64, f64)> {
    let mut g = Vec::with_capacity(1001 * 4);
    for &a in &[0.1, 1.0, 2.0, 10.0] {
        for i in -500..=500 {
            g.push((i as f64 / 100.0, a));
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> BoundParams {
        BoundParams::default()
    }

    #[test]
    fn beta_min_examples() {
        let g = NoiseModel::gaussian(1.0).unwrap();
        assert_eq!(beta_min(&g, Regime::Gaussian, &params()).unwrap(), 4.0);
        let u = NoiseModel::uniform(1.0).unwrap();
        assert_eq!(beta_min(&u, Regime::Gaussian, &params()).unwrap(), 2.0);
        let d = NoiseModel::double_exponential(1.0).unwrap();
        let p = BoundParams {
            n: Some(100),
            l: Some(1.0),
            l_bar: Some(2.0),
            ..params()
        };
        let v = beta_min(&d, Regime::DoubleExponential, &p).unwrap();
        assert!((v - 10.04).abs() < 1e-12);
    }

    #[test]
    fn beta_min_errors() {
        assert!(matches!(
            beta_min(&NoiseModel::Rademacher, Regime::Gaussian, &params()),
            Err(Error::Inadmissible(_))
        ));
        let d = NoiseModel::double_exponential(1.0).unwrap();
        assert!(matches!(beta_min(&d, Regime::Gaussian, &params()), Err(Error::Inadmissible(_))));
        let g = NoiseModel::gaussian(1.0).unwrap();
        let p = BoundParams {
            n: Some(2),
            l: Some(1.0),
            t: Some(1.0),
            kappa: Some(1.0),
            ..params()
        };
        assert!(matches!(beta_min(&g, Regime::ExponentialMoments, &p), Err(Error::Precondition(_))));
        let p = BoundParams { n: Some(3), ..p };
        assert!(beta_min(&g, Regime::ExponentialMoments, &p).is_ok());
        assert!(matches!(
            beta_min(&g, Regime::DoubleExponential, &p),
            Err(Error::Inadmissible(_))
        ));
        assert!(matches!(beta_min(&g, Regime::Bounded, &p), Err(Error::Inadmissible(_))));
    }

    #[test]
    fn other_thresholds() {
        let p = BoundParams {
            n: Some(100),
            l: Some(1.0),
            b: Some(1.0),
            t: Some(1.0),
            kappa: Some(1.0),
            s: Some(2.0),
            alpha0: Some(1.0),
            ..params()
        };
        let u = NoiseModel::uniform(1.0).unwrap();
        assert!((beta_min(&u, Regime::Bounded, &p).unwrap() - (4.0 * 1.01 + 2.0)).abs() < 1e-12);
        let c1 = 4.0 * 1.01 * (2.0 * 100f64.ln()).powi(2) + 2.0;
        assert!((beta_min(&u, Regime::ExponentialMoments, &p).unwrap() - c1).abs() < 1e-9);
        let c2 = 4.0 * 1.01 * 10.0 + 2.0;
        assert!((beta_min(&u, Regime::PowerMoments, &p).unwrap() - c2).abs() < 1e-12);
    }

    #[test]
    fn kl_examples() {
        let u = WeightVector::uniform(4);
        assert_eq!(kl_discrete(&u, &u).unwrap(), 0.0);
        assert!((kl_discrete(&WeightVector::dirac(4, 2), &u).unwrap() - 4f64.ln()).abs() < 1e-15);
        let p = WeightVector::new(vec![0.5, 0.5]).unwrap();
        let pi = WeightVector::new(vec![0.9, 0.1]).unwrap();
        let exact = 0.5 * (5.0f64 / 9.0).ln() + 0.5 * 5f64.ln();
        assert!((kl_discrete(&p, &pi).unwrap() - exact).abs() < 1e-15);
        assert!((exact - 0.5108).abs() < 1e-4);
        assert_eq!(kl_discrete(&p, &WeightVector::dirac(2, 0)).unwrap(), f64::INFINITY);
        assert!(kl_discrete(&p, &u).is_err());
    }

    #[test]
    fn ms_examples() {
        assert_eq!(ms_bound(&[0.7], 3.0, 10).unwrap().rhs, 0.7);
        let r = ms_bound(&[0.9, 0.5, 2.0, 0.6, 0.8, 1.0, 1.1, 3.0, 0.55, 0.7], 4.0, 100).unwrap();
        assert!((r.rhs - (0.5 + 4.0 * 10f64.ln() / 100.0)).abs() < 1e-15);
        assert!((r.rhs - 0.59210).abs() < 1e-5);
        let r2 = ms_bound(&[0.9, 0.5, 2.0, 0.6, 0.8, 1.0, 1.1, 3.0, 0.55, 0.7], 8.0, 100).unwrap();
        assert_eq!(r2.approx_term, r.approx_term);
        assert_eq!(r2.complexity_term, 2.0 * r.complexity_term);
    }

    #[test]
    fn remainder_examples() {
        let v = remainder_cor1(1.0, 1.0, 100, 10.0, 1.0, 1.0).unwrap();
        let by_hand = 16.0 * 101.0 * (2.0 * 100f64.ln()).powi(2) / (1e4 * 10.0);
        assert!((v - by_hand).abs() < 1e-12);
        assert!((v - 1.3709).abs() < 1e-4);
        assert!(remainder_cor1(1.0, 1.0, 10_000, 10.0, 1.0, 1.0).unwrap() < v);
        let k2 = remainder_cor1(1.0, 1.0, 100, 10.0, 1.0, 2.0).unwrap();
        assert!((k2 - 16.0 * 101.0 * 2.0 * 100f64.ln() / (1e4 * 10.0)).abs() < 1e-12);
        assert!(matches!(remainder_cor1(1.0, 1.0, 2, 10.0, 1.0, 1.0), Err(Error::Precondition(_))));

        assert!((remainder_cor1_2(1.0, 1.0, 2.0, 1.0, 16).unwrap() - 1.0).abs() < 1e-15);
        let base = remainder_cor1_2(1.0, 1.0, 3.0, 1.0, 50).unwrap();
        assert!((remainder_cor1_2(1.0, 2.0, 3.0, 1.0, 50).unwrap() - 4.0 * base).abs() < 1e-14);
        assert!(remainder_cor1_2(1.0, 1.0, 4.0, 1.0, 50).unwrap() < base);
    }

    #[test]
    fn psi_identities() {
        let f = [0.3, -0.2, 1.0];
        let p = [0.1, 0.0, 0.8];
        let q = [0.5, -0.4, 1.3];
        assert_eq!(psi_double_exp(&p, &p, &f, 10.0, 1.0).unwrap(), 1.0);
        let a = psi_double_exp(&p, &q, &f, 10.0, 1.0).unwrap().ln();
        let b = psi_double_exp(&q, &p, &f, 10.0, 1.0).unwrap().ln();
        let second = 4.0 * (2.0 * 3.0 + 1.0) * empirical_dist_sq(&p, &q).unwrap() / (3.0 * 100.0);
        assert!(((a - second) + (b - second)).abs() < 1e-14);
    }

    #[test]
    fn lem2_examples() {
        let r = lem2_check(&[(0.0, 1.0), (0.0, 0.1)]).unwrap();
        assert_eq!(r.max_violation, 0.0);
        let grid = lem2_default_grid();
        assert_eq!(grid.len(), 4004);
        let small: Vec<_> = grid.iter().copied().filter(|p| p.1 <= 2.0).collect();
        let r = lem2_check(&small).unwrap();
        assert!(r.max_violation <= 1e-12, "{r:?}");
        assert_eq!(r.skipped, 395);
        // For alpha0 = 10 the inequality fails near x = -(alpha0 - 1) / alpha0.
        let r = lem2_check(&[(-0.9, 10.0)]).unwrap();
        assert!((r.max_violation - 1.748_524_978_884_899).abs() < 1e-9);
        let near = lem2_check(&[(-1.0, 1.0)]).unwrap().max_violation;
        let far = lem2_check(&[(-4.0, 1.0)]).unwrap().max_violation;
        assert!(far < near);
    }
}
