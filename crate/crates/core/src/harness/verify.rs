//! Numeric self-checks, grouped into suites that the CLI can run.
//!
//! Each check reports the measured quantity next to the threshold it is
//! compared with, so a failing check carries its own evidence.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::bounds::{
    lem2_check, lem2_default_grid, ms_bound, psi_concavity_beta, psi_double_exp, soi_bound_thm6path, soip_bound,
    thm4_general_soi, ComplexityForm,
};
use crate::error::{Error, Result};
use crate::model::{CoefVector, EvaluatedDictionary, ResponseVector};
use crate::noise::{
    g_xi, m_xi, n_divisible_zeta_sample, sample, skorokhod_dummy, skorokhod_log_mgf, skorokhod_log_mgf_envelope,
    zeta_mgf, NoiseModel,
};
use crate::quadrature::{integrate_to_infinity, integrate_vec, QuadOptions};
use crate::seed;
use crate::sparse_ewa::{estimate_c0, grad_log_posterior, log_posterior, PosteriorSpec, SparsityPrior};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Noise,
    Skorokhod,
    Bounds,
    Prior,
    Appendix,
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: value <= threshold,
            value,
            threshold,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

pub fn run_suite(suite: Suite, rng_seed: u64) -> Result<SuiteReport> {
    let checks = match suite {
        Suite::Noise => noise_suite(rng_seed)?,
        Suite::Skorokhod => skorokhod_suite(rng_seed)?,
        Suite::Bounds => bounds_suite(rng_seed)?,
        Suite::Prior => prior_suite(rng_seed)?,
        Suite::Appendix => appendix_suite(rng_seed)?,
    };
    Ok(SuiteReport {
        suite,
        seed: rng_seed,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

fn tight() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-12,
        max_subdivisions: 4000,
    }
}

/// Models with an absolutely continuous `m(z) dz`, with a plotting range.
pub fn continuous_models() -> Result<Vec<(String, NoiseModel, f64)>> {
    Ok(vec![
        ("gaussian".into(), NoiseModel::gaussian(1.0)?, 5.0),
        ("uniform".into(), NoiseModel::uniform(1.0)?, 1.0),
        (
            "bounded_density".into(),
            NoiseModel::bounded_density_normalized(1.5, vec![0.2, 0.6, 1.0, 0.6, 0.2])?,
            1.5,
        ),
        ("double_exponential".into(), NoiseModel::double_exponential(1.0)?, 6.0),
        ("student_t".into(), NoiseModel::student_t(3.0, 5.0)?, 6.0),
    ])
}

/// `m(x) = int_{|x|}^inf z dF(z)` by quadrature of the density, using the
/// symmetry of the law. Independent of the closed forms in [`crate::noise::m_xi`].
pub fn tail_mean_by_quadrature(model: &NoiseModel, x: f64) -> f64 {
    let ax = x.abs();
    let dens = |z: f64| z * model.density(z).unwrap_or(f64::NAN);
    let opts = tight();
    match model {
        NoiseModel::Uniform { b } | NoiseModel::BoundedDensity { b, .. } => {
            if ax >= *b {
                0.0
            } else {
                crate::quadrature::integrate(dens, ax, *b, opts).value[0]
            }
        }
        _ => integrate_to_infinity(dens, ax, opts).value[0],
    }
}

/// `max_k |int_{I_k} m dz - int_{I_k} g dF|` over `count` random intervals in
/// `[-range, range]`, with `m` taken from its tail-mean definition.
pub fn assumption_a_discrepancy(model: &NoiseModel, range: f64, count: usize, rng_seed: u64) -> Result<f64> {
    let mut rng = seed::rng(rng_seed);
    let mut worst: f64 = 0.0;
    let opts = QuadOptions {
        abs_tol: 1e-11,
        rel_tol: 1e-10,
        max_subdivisions: 4000,
    };
    for _ in 0..count {
        let u: f64 = rng.random_range(-range..range);
        let v: f64 = rng.random_range(-range..range);
        let (a, b) = (u.min(v), u.max(v));
        let mut pts = vec![a, b];
        if a < 0.0 && b > 0.0 {
            pts.push(0.0);
        }
        pts.sort_by(f64::total_cmp);
        let mut err = None;
        let res = integrate_vec(
            |x, out: &mut [f64]| {
                let dens = model.density(x).unwrap_or(f64::NAN);
                out[0] = tail_mean_by_quadrature(model, x);
                out[1] = match g_xi(model, x) {
                    Ok(g) => g * dens,
                    Err(e) => {
                        err.get_or_insert(e);
                        0.0
                    }
                };
            },
            &pts,
            2,
            opts,
        );
        if let Some(e) = err {
            return Err(e);
        }
        worst = worst.max((res.value[0] - res.value[1]).abs());
    }
    Ok(worst)
}

fn noise_suite(rng_seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (k, (name, model, range)) in continuous_models()?.into_iter().enumerate() {
        let d = assumption_a_discrepancy(&model, range, 100, seed::derive(rng_seed, k as u64))?;
        checks.push(Check::at_most(
            format!("{name}: int m dz = int g dF on 100 intervals"),
            d,
            1e-6,
            "largest absolute discrepancy",
        ));
    }
    let mut closed_vs_quad: f64 = 0.0;
    let mut rng = seed::rng(seed::derive(rng_seed, 99));
    for (_, model, range) in continuous_models()? {
        for _ in 0..200 {
            let x: f64 = rng.random_range(-1.2 * range..1.2 * range);
            closed_vs_quad = closed_vs_quad.max((m_xi(&model, x)? - tail_mean_by_quadrature(&model, x)).abs());
        }
    }
    checks.push(Check::at_most(
        "closed-form m matches its tail-mean definition",
        closed_vs_quad,
        1e-8,
        "largest absolute difference over 200 points per model",
    ));
    let mut rng = seed::rng(seed::derive(rng_seed, 100));
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let x: f64 = rng.random_range(-4.0..4.0);
        let s2 = 0.7;
        let cases = [
            (NoiseModel::gaussian(s2)?, s2),
            (NoiseModel::uniform(1.3)?, ((1.3f64 * 1.3 - x * x).max(0.0)) / 2.0),
            (
                NoiseModel::double_exponential(s2)?,
                (s2 + (2.0 * s2).sqrt() * x.abs()) / 2.0,
            ),
        ];
        for (model, want) in cases {
            worst = worst.max((g_xi(&model, x)? - want).abs());
        }
    }
    checks.push(Check::at_most(
        "closed-form g for gaussian, uniform, double exponential",
        worst,
        0.0,
        "largest absolute difference over 1000 points",
    ));
    let rad = g_xi(&NoiseModel::Rademacher, 0.3);
    checks.push(Check {
        name: "rademacher g is reported as nonexistent".into(),
        passed: matches!(rad, Err(Error::AssumptionViolated(_))),
        value: 0.0,
        threshold: 0.0,
        detail: format!("{rad:?}"),
    });
    Ok(checks)
}

/// Largest KS distance, between `xi + zeta` over batches of size `n` and
/// the exact law of `(1 + 1/n) xi` for standard Gaussian `xi`.
pub fn skorokhod_ks(n: usize, total: usize, rng_seed: u64) -> Result<f64> {
    let gauss = NoiseModel::gaussian(1.0)?;
    let mut sums = Vec::with_capacity(total);
    let mut b = 0u64;
    while sums.len() < total {
        let xi = sample(&gauss, n, seed::derive(rng_seed, 2 * b))?;
        let zeta = skorokhod_dummy(&xi, seed::derive(rng_seed, 2 * b + 1))?;
        sums.extend(xi.iter().zip(&zeta).map(|(a, c)| a + c));
        b += 1;
    }
    sums.truncate(total);
    sums.sort_by(f64::total_cmp);
    let law = Normal::new(0.0, 1.0 + 1.0 / n as f64).expect("valid normal");
    let m = sums.len() as f64;
    Ok(sums
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = law.cdf(x);
            (c - i as f64 / m).abs().max(((i + 1) as f64 / m - c).abs())
        })
        .fold(0.0, f64::max))
}

/// Largest `|mean| / SE` of `zeta` over `bins` equal-count bins of `xi`.
pub fn skorokhod_conditional_mean(n: usize, total: usize, bins: usize, rng_seed: u64) -> Result<f64> {
    let gauss = NoiseModel::gaussian(1.0)?;
    let mut pairs = Vec::with_capacity(total);
    let mut b = 0u64;
    while pairs.len() < total {
        let xi = sample(&gauss, n, seed::derive(rng_seed, 2 * b))?;
        let zeta = skorokhod_dummy(&xi, seed::derive(rng_seed, 2 * b + 1))?;
        pairs.extend(xi.into_iter().zip(zeta));
        b += 1;
    }
    pairs.truncate(total);
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let per = total / bins;
    let mut worst: f64 = 0.0;
    for chunk in pairs.chunks(per) {
        let k = chunk.len() as f64;
        let mean = chunk.iter().map(|p| p.1).sum::<f64>() / k;
        let var = chunk.iter().map(|p| (p.1 - mean).powi(2)).sum::<f64>() / (k - 1.0);
        worst = worst.max(mean.abs() / (var / k).sqrt());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginGrid {
    pub min_margin: f64,
    pub argmin_n: usize,
    pub argmin_lambda_xi: f64,
    pub negative: usize,
    pub points: usize,
}

/// `envelope - log MGF` on `n = 1..=n_max` times `lambda xi` in `linspace(-range, range, k)`.
pub fn skorokhod_margin_grid(n_max: usize, k: usize, range: f64) -> MarginGrid {
    let mut g = MarginGrid {
        min_margin: f64::INFINITY,
        argmin_n: 0,
        argmin_lambda_xi: 0.0,
        negative: 0,
        points: 0,
    };
    for n in 1..=n_max {
        for i in 0..k {
            let u = -range + 2.0 * range * i as f64 / (k - 1) as f64;
            let margin = skorokhod_log_mgf_envelope(n, u) - skorokhod_log_mgf(n, u);
            g.points += 1;
            if margin < 0.0 {
                g.negative += 1;
            }
            if margin < g.min_margin {
                g.min_margin = margin;
                g.argmin_n = n;
                g.argmin_lambda_xi = u;
            }
        }
    }
    g
}

/// Largest `|empirical MGF - L(t)| / SE` of the double-exponential companion at the given `t`.
pub fn zeta_mgf_discrepancy(n: usize, sigma2: f64, ts: &[f64], count: usize, rng_seed: u64) -> Result<f64> {
    let zeta = n_divisible_zeta_sample(&NoiseModel::double_exponential(sigma2)?, n, count, rng_seed)?;
    let mut worst: f64 = 0.0;
    for &t in ts {
        let vals: Vec<f64> = zeta.iter().map(|z| (t * z).exp()).collect();
        let k = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / k;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
        worst = worst.max((mean - zeta_mgf(n, sigma2, t)).abs() / (var / k).sqrt());
    }
    Ok(worst)
}

fn skorokhod_suite(rng_seed: u64) -> Result<Vec<Check>> {
    let ks = skorokhod_ks(10, 100_000, seed::derive(rng_seed, 1))?;
    let cm = skorokhod_conditional_mean(10, 100_000, 20, seed::derive(rng_seed, 2))?;
    let grid = skorokhod_margin_grid(100, 100, 5.0);
    let ts: Vec<f64> = (0..10).map(|i| -0.5 + i as f64 / 9.0).collect();
    let mgf = zeta_mgf_discrepancy(10, 1.0, &ts, 1_000_000, seed::derive(rng_seed, 3))?;
    Ok(vec![
        Check::at_most("xi + zeta ~ (1 + 1/n) xi (KS, n = 10)", ks, 0.01, "1e5 draws against the exact CDF"),
        Check::at_most("E(zeta | xi) = 0 on 20 bins", cm, 4.0, "largest |mean| in SE units"),
        Check {
            name: "conditional MGF below envelope on n = 1..100, lambda xi in [-5, 5]".into(),
            passed: grid.min_margin >= 0.0,
            value: grid.min_margin,
            threshold: 0.0,
            detail: format!(
                "{} of {} grid points negative; minimum at n = {}, lambda xi = {:.4}",
                grid.negative, grid.points, grid.argmin_n, grid.argmin_lambda_xi
            ),
        },
        Check::at_most(
            "double-exponential companion MGF (n = 10, 10 values of t)",
            mgf,
            3.0,
            "largest deviation in SE units, 1e6 draws",
        ),
    ])
}

fn equal_norm_dictionary(n: usize, m: usize, phi0: f64, rng_seed: u64) -> Result<EvaluatedDictionary> {
    let mut rng = seed::rng(rng_seed);
    let mut cols = Vec::with_capacity(m);
    for _ in 0..m {
        let mut c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = (c.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
        c.iter_mut().for_each(|v| *v *= phi0.sqrt() / norm);
        cols.push(c);
    }
    EvaluatedDictionary::from_columns(&cols)
}

/// Largest `|rhs_soi - rhs_soip|` over random sparse `lambda*` on dictionaries
/// whose columns all have `||phi_j||_n^2 = phi0`.
pub fn thm6_vs_soip_gap(trials: usize, rng_seed: u64) -> Result<f64> {
    let mut rng = seed::rng(rng_seed);
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let (n, m) = (rng.random_range(5..40), rng.random_range(1..12));
        let phi0: f64 = rng.random_range(0.2..3.0);
        let dict = equal_norm_dictionary(n, m, phi0, seed::derive(rng_seed, t as u64))?;
        let lam: Vec<f64> = (0..m)
            .map(|_| if rng.random::<f64>() < 0.4 { rng.random_range(-2.0..2.0) } else { 0.0 })
            .collect();
        let truth = ResponseVector::new((0..n).map(|_| rng.random_range(-1.0..1.0)).collect())?;
        let (s2, beta) = (rng.random_range(0.1..2.0), rng.random_range(0.5..10.0));
        let lam = CoefVector::new(lam)?;
        for form in [ComplexityForm::Jensen, ComplexityForm::ExactSupport] {
            let a = soi_bound_thm6path(&lam, &truth, &dict, s2, beta, form)?;
            let b = soip_bound(&lam, &truth, &dict, s2, beta, phi0 * (1.0 + 1e-14), form)?;
            worst = worst.max((a.rhs - b.rhs).abs());
        }
    }
    Ok(worst)
}

fn bounds_suite(rng_seed: u64) -> Result<Vec<Check>> {
    let gap = thm6_vs_soip_gap(200, seed::derive(rng_seed, 1))?;
    let mut rng = seed::rng(seed::derive(rng_seed, 2));
    let mut recomposition: f64 = 0.0;
    for t in 0..200u64 {
        let (n, m) = (rng.random_range(3..30), rng.random_range(1..8));
        let dict = equal_norm_dictionary(n, m, 1.0, seed::derive(rng_seed, 1000 + t))?;
        let lam = CoefVector::new((0..m).map(|_| rng.random_range(-1.0..1.0)).collect())?;
        let truth = ResponseVector::new((0..n).map(|_| rng.random_range(-1.0..1.0)).collect())?;
        let losses: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..2.0)).collect();
        let reports = [
            ms_bound(&losses, 2.0, n)?,
            soi_bound_thm6path(&lam, &truth, &dict, 1.0, 4.0, ComplexityForm::Jensen)?,
            thm4_general_soi(&lam, &truth, &dict, 4.0, 0.05, None, 0.5)?,
        ];
        for r in reports {
            recomposition = recomposition.max((r.rhs - (r.approx_term + r.complexity_term + r.remainder)).abs());
        }
    }
    let ms = ms_bound(&[0.9, 0.5, 2.0, 0.6, 0.8, 1.0, 1.1, 3.0, 0.55, 0.7], 4.0, 100)?;
    Ok(vec![
        Check::at_most("sparse bound with Tr(Phi) = phi0 M equals the bounded-column variant", gap, 1e-12, "largest |rhs difference| over 200 random cases"),
        Check::at_most("rhs = approx + complexity + remainder", recomposition, 0.0, "largest recomposition error"),
        Check::at_most("ms example 0.5 + 4 ln 10 / 100", (ms.rhs - 0.592_103_403_719_761_8).abs(), 1e-12, "absolute error"),
    ])
}

/// Largest relative error `|grad - fd| / max(|fd|, 1)` with central differences
/// of step `1e-6 (1 + |lambda_j|)`, over `points` random off-axis points.
pub fn gradient_fd_error(points: usize, rng_seed: u64) -> Result<f64> {
    let mut rng = seed::rng(rng_seed);
    let (n, m) = (30, 6);
    let dict = EvaluatedDictionary::new(ndarray::Array2::from_shape_fn((n, m), |_| rng.random_range(-1.0..1.0)))?;
    let y = ResponseVector::new((0..n).map(|_| rng.random_range(-2.0..2.0)).collect())?;
    let spec = PosteriorSpec::new(dict, y, 2.0, SparsityPrior::unbounded(0.3)?)?;
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let lam: Vec<f64> = (0..m)
            .map(|_| {
                let mag = rng.random_range(0.01..2.0);
                if rng.random::<bool>() { mag + 1e-3 } else { -mag - 1e-3 }
            })
            .collect();
        let g = grad_log_posterior(&spec, &CoefVector::new(lam.clone())?)?;
        for j in 0..m {
            let h = 1e-6 * (1.0 + lam[j].abs());
            let mut up = lam.clone();
            let mut down = lam.clone();
            up[j] += h;
            down[j] -= h;
            let fd = (log_posterior(&spec, &CoefVector::new(up)?)? - log_posterior(&spec, &CoefVector::new(down)?)?)
                / (2.0 * h);
            worst = worst.max((g[j] - fd).abs() / fd.abs().max(1.0));
        }
    }
    Ok(worst)
}

fn prior_suite(rng_seed: u64) -> Result<Vec<Check>> {
    let q0 = |t: f64| 1.5 / (1.0 + t).powi(4);
    let opts = tight();
    let mass = 2.0 * integrate_to_infinity(q0, 0.0, opts).value[0];
    let second = 2.0 * integrate_to_infinity(|t| t * t * q0(t), 0.0, opts).value[0];
    let c0 = estimate_c0(0.5, 1.0, 1, 1_000_000, seed::derive(rng_seed, 1));
    let exact = 1.0 - 3f64.powi(-3);
    let grad = gradient_fd_error(100, seed::derive(rng_seed, 2))?;
    Ok(vec![
        Check::at_most("int q0 = 1", (mass - 1.0).abs(), 1e-8, "absolute error"),
        Check::at_most("int t^2 q0 = 1", (second - 1.0).abs(), 1e-8, "absolute error"),
        Check::at_most(
            "C0 estimate in one dimension",
            (c0.value - exact).abs() / c0.std_error,
            4.0,
            "deviation from 1 - (1 + L0/tau)^-3 in SE units",
        ),
        Check::at_most("gradient matches finite differences", grad, 1e-4, "largest relative error over 100 points"),
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcavityTrials {
    pub trials: usize,
    pub concave: usize,
    pub worst_gap: f64,
    pub max_self_deviation: f64,
}

/// Midpoint concavity of `mu -> Psi(mu, mu')` at the admissible temperature
/// for random triples of prediction vectors, and `|Psi(mu, mu) - 1|`.
pub fn psi_concavity_trials(trials: usize, rng_seed: u64) -> Result<ConcavityTrials> {
    let mut rng = seed::rng(rng_seed);
    let mut out = ConcavityTrials {
        trials,
        concave: 0,
        worst_gap: f64::INFINITY,
        max_self_deviation: 0.0,
    };
    for _ in 0..trials {
        let n = rng.random_range(2..30);
        let sigma2 = rng.random_range(0.1..3.0);
        let spread = rng.random_range(0.1..2.0);
        let f: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut near = || -> Vec<f64> { f.iter().map(|v| v + spread * rng.random_range(-1.0..1.0)).collect() };
        let (p1, p2, pp) = (near(), near(), near());
        let beta = psi_concavity_beta(&[&p1, &p2, &pp], &f, sigma2)? * (1.0 + rng.random_range(0.0..1.0));
        let mid: Vec<f64> = p1.iter().zip(&p2).map(|(a, b)| 0.5 * (a + b)).collect();
        let at_mid = psi_double_exp(&mid, &pp, &f, beta, sigma2)?;
        let chord =
            0.5 * (psi_double_exp(&p1, &pp, &f, beta, sigma2)? + psi_double_exp(&p2, &pp, &f, beta, sigma2)?);
        let gap = at_mid - chord;
        if gap >= -1e-12 * chord {
            out.concave += 1;
        }
        out.worst_gap = out.worst_gap.min(gap);
        let selfv = psi_double_exp(&p1, &p1, &f, beta, sigma2)?;
        out.max_self_deviation = out.max_self_deviation.max((selfv - 1.0).abs());
    }
    Ok(out)
}

fn appendix_suite(rng_seed: u64) -> Result<Vec<Check>> {
    let lem2 = lem2_check(&lem2_default_grid())?;
    let psi = psi_concavity_trials(200, seed::derive(rng_seed, 1))?;
    Ok(vec![
        Check::at_most(
            "x + log(1 + (exp(-x a) - 1)/a) <= x^2 a / 2 on the default grid",
            lem2.max_violation,
            1e-12,
            format!(
                "{} points evaluated, {} skipped where the logarithm is undefined",
                lem2.evaluated, lem2.skipped
            ),
        ),
        Check {
            name: "Psi midpoint concavity at admissible beta".into(),
            passed: psi.concave == psi.trials,
            value: psi.concave as f64,
            threshold: psi.trials as f64,
            detail: format!("smallest midpoint gap {:.3e}", psi.worst_gap),
        },
        Check::at_most("Psi(mu, mu) = 1", psi.max_self_deviation, 1e-12, "largest deviation"),
    ])
}
