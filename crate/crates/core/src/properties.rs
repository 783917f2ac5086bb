//! Randomized invariants over the public API.

use proptest::collection::vec;
use proptest::prelude::*;

use crate::bounds::{beta_min, ms_bound, soi_bound_thm6path, soip_bound, BoundParams, ComplexityForm, Regime};
use crate::finite_agg::{exp_weights, AggregationConfig, WeightVector};
use crate::harness::{lasso_fit, run_replications, ExperimentConfig};
use crate::model::{empirical_norm_sq, gram, predict, sparsity_stats, CoefVector, EvaluatedDictionary, ResponseVector};
use crate::noise::{m_xi, NoiseModel};
use crate::sparse_ewa::{
    grad_log_posterior, log_posterior, log_prior_density, map_estimate, map_objective, quadrature_posterior_mean,
    PosteriorSpec, SparsityPrior,
};

fn dictionary(n: usize, m: usize) -> impl Strategy<Value = EvaluatedDictionary> {
    vec(vec(-2.0..2.0f64, n), m).prop_map(|cols| EvaluatedDictionary::from_columns(&cols).unwrap())
}

fn sized_dictionary() -> impl Strategy<Value = EvaluatedDictionary> {
    (2usize..20, 1usize..6).prop_flat_map(|(n, m)| dictionary(n, m))
}

fn coefs(m: usize) -> impl Strategy<Value = CoefVector> {
    vec(-3.0..3.0f64, m).prop_map(|v| CoefVector::new(v).unwrap())
}

fn off_axis(m: usize) -> impl Strategy<Value = Vec<f64>> {
    vec((0.02..2.0f64, any::<bool>()).prop_map(|(v, s)| if s { v } else { -v }), m)
}

fn noise_models() -> Vec<NoiseModel> {
    vec![
        NoiseModel::gaussian(1.0).unwrap(),
        NoiseModel::uniform(1.5).unwrap(),
        NoiseModel::bounded_density_normalized(1.0, vec![0.5, 1.0, 1.5, 1.0, 0.5]).unwrap(),
        NoiseModel::double_exponential(2.0).unwrap(),
        NoiseModel::student_t(3.0, 5.0).unwrap(),
    ]
}

fn posterior(dict: EvaluatedDictionary, y: Vec<f64>, beta: f64, tau: f64) -> PosteriorSpec {
    PosteriorSpec::new(dict, ResponseVector::new(y).unwrap(), beta, SparsityPrior::unbounded(tau).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prediction_norm_matches_gram_form(
        (dict, a, b) in sized_dictionary().prop_flat_map(|d| { let m = d.m(); (Just(d), coefs(m), coefs(m)) })
    ) {
        let diff: Vec<f64> = predict(&dict, &a).unwrap().iter()
            .zip(predict(&dict, &b).unwrap().iter()).map(|(x, y)| x - y).collect();
        let lhs = empirical_norm_sq(&diff).unwrap();
        let phi = gram(&dict).phi;
        let d: Vec<f64> = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x - y).collect();
        let mut rhs = 0.0;
        for i in 0..d.len() {
            for j in 0..d.len() {
                rhs += d[i] * phi[[i, j]] * d[j];
            }
        }
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1e-12));
    }

    #[test]
    fn gram_trace_is_sum_of_column_norms(dict in sized_dictionary()) {
        let sum: f64 = (0..dict.m()).map(|j| empirical_norm_sq(&dict.column(j).to_vec()).unwrap()).sum();
        prop_assert!((gram(&dict).trace - sum).abs() <= 1e-12 * sum.max(1.0));
    }

    #[test]
    fn l1_triangle_inequality(a in coefs(7), b in coefs(7)) {
        let s = CoefVector::new(a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x + y).collect()).unwrap();
        prop_assert!(sparsity_stats(&s).l1 <= sparsity_stats(&a).l1 + sparsity_stats(&b).l1 + 1e-12);
    }

    #[test]
    fn tail_mean_shape(x in 0.0..4.0f64, dx in 0.001..1.0f64) {
        for model in noise_models() {
            let (m0, m1, m2) = (m_xi(&model, x).unwrap(), m_xi(&model, x + dx).unwrap(), m_xi(&model, -x).unwrap());
            prop_assert!(m1 >= 0.0);
            prop_assert!(m1 <= m0 + 1e-12);
            prop_assert!((m2 - m0).abs() <= 1e-12);
            prop_assert!((m_xi(&model, 0.0).unwrap() - model.mean_abs().unwrap() / 2.0).abs() <= 1e-6);
        }
    }

    #[test]
    fn weights_normalized_and_shift_invariant(
        losses in vec(0.0..5.0f64, 1..12), beta in 0.01..50.0f64, c in -10.0..10.0f64, n in 1usize..200
    ) {
        let cfg = AggregationConfig::uniform(beta, losses.len()).unwrap();
        let w = exp_weights(&losses, &cfg, n).unwrap();
        prop_assert!((w.as_slice().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(w.as_slice().iter().all(|v| *v >= 0.0));
        let shifted: Vec<f64> = losses.iter().map(|l| l + c).collect();
        let ws = exp_weights(&shifted, &cfg, n).unwrap();
        for (a, b) in w.as_slice().iter().zip(ws.as_slice()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn weights_temperature_limits(raw in vec(0.0..5.0f64, 2..10), n in 1usize..100) {
        // Distinct losses keep the minimizer unique.
        let losses: Vec<f64> = raw.iter().enumerate().map(|(j, l)| l + j as f64 * 1e-3).collect();
        let m = losses.len();
        let prior: Vec<f64> = (1..=m).map(|j| j as f64).collect();
        let total: f64 = prior.iter().sum();
        let prior = WeightVector::new(prior.iter().map(|p| p / total).collect()).unwrap();
        let max = losses.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(1e-3);
        let hot = exp_weights(&losses, &AggregationConfig::new(1e9 * max, prior.clone()).unwrap(), n).unwrap();
        for (a, b) in hot.as_slice().iter().zip(prior.as_slice()) {
            prop_assert!((a - b).abs() <= 1e-6);
        }
        let cold = exp_weights(&losses, &AggregationConfig::new(1e-9, prior).unwrap(), n).unwrap();
        let argmin = losses.iter().enumerate().fold((0, f64::INFINITY), |b, (j, &l)| if l < b.1 { (j, l) } else { b }).0;
        prop_assert_eq!(cold.argmax(), argmin);
    }

    #[test]
    fn lowering_a_loss_raises_its_weight(
        losses in vec(0.0..1.0f64, 2..8), j in 0usize..8, delta in 0.01..0.5f64, beta in 0.5..5.0f64
    ) {
        let j = j % losses.len();
        let cfg = AggregationConfig::uniform(beta, losses.len()).unwrap();
        let before = exp_weights(&losses, &cfg, 10).unwrap().as_slice()[j];
        let mut lower = losses.clone();
        lower[j] -= delta;
        prop_assert!(exp_weights(&lower, &cfg, 10).unwrap().as_slice()[j] > before);
    }

    #[test]
    fn prior_is_separable(a in -5.0..5.0f64, b in -5.0..5.0f64, tau in 0.01..3.0f64) {
        let p2 = SparsityPrior::unbounded(tau).unwrap();
        let joint = log_prior_density(&p2, &CoefVector::new(vec![a, b]).unwrap());
        let single = |v: f64| log_prior_density(&p2, &CoefVector::new(vec![v]).unwrap());
        prop_assert!((joint - single(a) - single(b)).abs() <= 1e-12 * joint.abs().max(1.0));
    }

    #[test]
    fn gradient_matches_finite_differences(
        dict in dictionary(12, 3), y in vec(-2.0..2.0f64, 12), lam in off_axis(3),
        beta in 0.5..5.0f64, tau in 0.05..2.0f64
    ) {
        let spec = posterior(dict, y, beta, tau);
        let g = grad_log_posterior(&spec, &CoefVector::new(lam.clone()).unwrap()).unwrap();
        for j in 0..3 {
            let h = 1e-6 * (1.0 + lam[j].abs());
            let (mut up, mut down) = (lam.clone(), lam.clone());
            up[j] += h;
            down[j] -= h;
            let fd = (log_posterior(&spec, &CoefVector::new(up).unwrap()).unwrap()
                - log_posterior(&spec, &CoefVector::new(down).unwrap()).unwrap()) / (2.0 * h);
            prop_assert!((g[j] - fd).abs() <= 1e-4 * fd.abs().max(1.0));
        }
    }

    #[test]
    fn map_descends(
        dict in dictionary(15, 4), y in vec(-2.0..2.0f64, 15), init in coefs(4),
        beta in 0.5..5.0f64, tau in 0.01..1.0f64
    ) {
        let spec = posterior(dict, y, beta, tau);
        let est = map_estimate(&spec, &init).unwrap();
        prop_assert!(est.objective <= map_objective(&spec, &init).unwrap() + 1e-12);
        for w in est.objective_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
        }
    }

    #[test]
    fn lasso_objective_nonincreasing(dict in dictionary(15, 4), y in vec(-2.0..2.0f64, 15), pen in 0.0..1.0f64) {
        let fit = lasso_fit(&dict, &ResponseVector::new(y).unwrap(), pen).unwrap();
        for w in fit.objective_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
        }
    }

    #[test]
    fn ms_bound_monotone(losses in vec(0.0..3.0f64, 1..10), b1 in 0.1..10.0f64, b2 in 0.1..10.0f64, extra in 0.0..3.0f64) {
        let (lo, hi) = (b1.min(b2), b1.max(b2));
        prop_assert!(ms_bound(&losses, lo, 50).unwrap().rhs <= ms_bound(&losses, hi, 50).unwrap().rhs);
        let mut more = losses.clone();
        more.push(losses.iter().copied().fold(f64::INFINITY, f64::min) + extra);
        prop_assert!(ms_bound(&losses, lo, 50).unwrap().rhs <= ms_bound(&more, lo, 50).unwrap().rhs);
    }

    #[test]
    fn sparse_bound_monotone_in_l1(
        dict in dictionary(10, 5), truth in vec(-1.0..1.0f64, 10), lam in off_axis(2), scale in 1.0..3.0f64
    ) {
        let truth = ResponseVector::new(truth).unwrap();
        let small = CoefVector::new(vec![lam[0], 0.0, lam[1], 0.0, 0.0]).unwrap();
        let big = CoefVector::new(vec![lam[0] * scale, 0.0, lam[1] * scale, 0.0, 0.0]).unwrap();
        for form in [ComplexityForm::Jensen, ComplexityForm::ExactSupport] {
            let a = soi_bound_thm6path(&small, &truth, &dict, 1.0, 4.0, form).unwrap();
            let b = soi_bound_thm6path(&big, &truth, &dict, 1.0, 4.0, form).unwrap();
            prop_assert!(a.complexity_term <= b.complexity_term);
            prop_assert!(a.rhs == a.approx_term + a.complexity_term + a.remainder);
        }
    }

    #[test]
    fn trace_and_bounded_column_forms_agree(
        raw in vec(vec(-1.0..1.0f64, 8), 4), truth in vec(-1.0..1.0f64, 8), lam in coefs(4), phi0 in 0.2..3.0f64
    ) {
        let cols: Vec<Vec<f64>> = raw.iter().map(|c| {
            let norm = (c.iter().map(|v| v * v).sum::<f64>() / 8.0).sqrt().max(1e-3);
            c.iter().map(|v| v * phi0.sqrt() / norm).collect()
        }).collect();
        let dict = EvaluatedDictionary::from_columns(&cols).unwrap();
        let truth = ResponseVector::new(truth).unwrap();
        let a = soi_bound_thm6path(&lam, &truth, &dict, 0.7, 3.0, ComplexityForm::Jensen).unwrap();
        let b = soip_bound(&lam, &truth, &dict, 0.7, 3.0, gram(&dict).max_diag(), ComplexityForm::Jensen).unwrap();
        prop_assert!((a.rhs - b.rhs).abs() <= 1e-12 * a.rhs.max(1.0));
    }

    #[test]
    fn gaussian_threshold_is_four_sigma2(s2 in 1e-3..100.0f64) {
        let b = beta_min(&NoiseModel::gaussian(s2).unwrap(), Regime::Gaussian, &BoundParams::default()).unwrap();
        prop_assert!((b - 4.0 * s2).abs() <= 1e-12 * s2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn quadrature_mean_sign_flip(
        dict in dictionary(10, 2), y in vec(-1.0..1.0f64, 10), j in 0usize..2, tau in 0.1..1.0f64
    ) {
        let flipped = posterior(dict.with_negated_column(j), y.clone(), 2.0, tau);
        let base = quadrature_posterior_mean(&posterior(dict, y, 2.0, tau)).unwrap();
        let other = quadrature_posterior_mean(&flipped).unwrap();
        for k in 0..2 {
            let want = if k == j { -base.as_slice()[k] } else { base.as_slice()[k] };
            prop_assert!((other.as_slice()[k] - want).abs() <= 1e-8);
        }
    }

    #[test]
    fn replication_risks_uncorrelated(master in any::<u64>()) {
        let mut cfg = ExperimentConfig::default_finite_ms();
        cfg.seed = master;
        cfg.replications = 400;
        let risks: Vec<f64> = run_replications(&cfg).unwrap().records.iter().map(|r| r.risk).collect();
        let r = risks.len() as f64;
        let mean = risks.iter().sum::<f64>() / r;
        let var: f64 = risks.iter().map(|v| (v - mean).powi(2)).sum();
        let lag: f64 = risks.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
        prop_assert!((lag / var).abs() <= 4.0 / r.sqrt());
    }
}
