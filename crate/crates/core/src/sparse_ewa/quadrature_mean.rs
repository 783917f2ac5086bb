use crate::error::{Error, Result};
use crate::model::CoefVector;
use crate::quadrature::{integrate_vec, QuadOptions};

use super::{map_estimate, PosteriorSpec};

/// Largest dimension handled by nested quadrature.
pub const MAX_DIM: usize = 3;
/// Prior mass allowed outside the integration box.
const TAIL_MASS: f64 = 1e-10;

#[derive(Debug, Clone, Copy)]
pub struct QuadratureMeanOptions {
    /// Relative tolerance of the outermost integral.
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureMeanOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            max_subdivisions: 4000,
        }
    }
}

/// Posterior mean by nested adaptive Gauss-Kronrod quadrature (`M <= 3`).
pub fn quadrature_posterior_mean(spec: &PosteriorSpec) -> Result<CoefVector> {
    quadrature_posterior_mean_with(spec, QuadratureMeanOptions::default())
}

pub fn quadrature_posterior_mean_with(spec: &PosteriorSpec, opts: QuadratureMeanOptions) -> Result<CoefVector> {
    let m = spec.m();
    if m > MAX_DIM {
        return Err(Error::Unsupported(format!(
            "quadrature posterior mean supports M <= {MAX_DIM}, got M = {m}"
        )));
    }
    let ctx = Context::new(spec, opts)?;
    let mut lambda = vec![0.0; m];
    let (value, converged) = ctx.level(0, &mut lambda);
    if !converged {
        return Err(Error::Degenerate(
            "nested quadrature did not reach the requested tolerance".into(),
        ));
    }
    let z = value[0];
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::Degenerate(format!("posterior normalizer evaluated to {z}")));
    }
    CoefVector::new(value[1..].iter().map(|v| v / z).collect())
}

struct Context<'a> {
    spec: &'a PosteriorSpec,
    opts: QuadratureMeanOptions,
    /// Log-density offset so the integrand peaks near 1.
    shift: f64,
    /// Approximate mode, used to place breakpoints for inner coordinates.
    mode: Vec<f64>,
    /// Conditional standard deviations of the Gaussian part.
    width: Vec<f64>,
    radius: f64,
}

impl<'a> Context<'a> {
    fn new(spec: &'a PosteriorSpec, opts: QuadratureMeanOptions) -> Result<Self> {
        let m = spec.m();
        let tau = spec.prior().tau();
        let mut scratch = vec![0.0; m];
        let mut shift = spec.log_target(&vec![0.0; m], &mut scratch);
        let mut mode = vec![0.0; m];
        let ls_start: Vec<f64> = (0..m)
            .map(|j| if spec.xtx[[j, j]] > 0.0 { spec.xty[j] / spec.xtx[[j, j]] } else { 0.0 })
            .collect();
        for start in [vec![0.0; m], ls_start] {
            let est = map_estimate(spec, &CoefVector::new(start)?)?;
            let lp = spec.log_target(est.coef.as_slice(), &mut scratch);
            if lp.is_finite() && lp > shift {
                shift = lp;
                mode = est.coef.into_inner();
            }
        }
        if !shift.is_finite() {
            return Err(Error::Degenerate("log posterior is not finite at any start point".into()));
        }
        let width: Vec<f64> = (0..m)
            .map(|j| {
                let g = spec.xtx[[j, j]];
                if g > 0.0 {
                    (spec.beta() / (2.0 * g)).sqrt()
                } else {
                    tau
                }
            })
            .collect();
        let prior_radius = tau * ((m.max(1) as f64 / TAIL_MASS).cbrt() - 1.0);
        let data_radius = (0..m).map(|j| mode[j].abs() + 40.0 * width[j]).fold(0.0, f64::max);
        Ok(Self {
            spec,
            opts,
            shift,
            mode,
            width,
            radius: prior_radius.max(data_radius),
        })
    }

    /// Integral over coordinates `j..M` of `theta * [1, lambda_1, ..., lambda_M]`,
    /// with coordinates `< j` fixed at the values in `lambda`.
    fn level(&self, j: usize, lambda: &mut Vec<f64>) -> (Vec<f64>, bool) {
        let m = lambda.len();
        let dim = m + 1;
        if m == 0 {
            let mut scratch = Vec::new();
            return (vec![(self.spec.log_target(&[], &mut scratch) - self.shift).exp()], true);
        }
        let mut r = self.radius;
        if let Some(l0) = self.spec.prior().l0() {
            let used: f64 = lambda[..j].iter().map(|v| v * v).sum();
            let left = l0 * l0 - used;
            if left <= 0.0 {
                return (vec![0.0; dim], true);
            }
            r = r.min(left.sqrt());
        }
        let points = self.breakpoints(j, lambda, r);
        let innermost = j + 1 == m;
        let mut inner_ok = true;
        let mut scratch = vec![0.0; m];
        let rel_tol = self.opts.rel_tol * 0.01f64.powi(j as i32);
        let res = integrate_vec(
            |t, out: &mut [f64]| {
                lambda[j] = t;
                if innermost {
                    let w = (self.spec.log_target(lambda, &mut scratch) - self.shift).exp();
                    out[0] = w;
                    for k in 0..m {
                        out[k + 1] = w * lambda[k];
                    }
                } else {
                    let (v, ok) = self.level(j + 1, lambda);
                    inner_ok &= ok;
                    out.copy_from_slice(&v);
                }
            },
            &points,
            dim,
            QuadOptions {
                abs_tol: 0.0,
                rel_tol,
                max_subdivisions: self.opts.max_subdivisions,
            },
        );
        for v in lambda[j..].iter_mut() {
            *v = 0.0;
        }
        (res.value, res.converged && inner_ok)
    }

    fn breakpoints(&self, j: usize, lambda: &[f64], r: f64) -> Vec<f64> {
        let spec = self.spec;
        let m = lambda.len();
        let tau = spec.prior().tau();
        let g = spec.xtx[[j, j]];
        let center = if g > 0.0 {
            let mut c = spec.xty[j];
            for k in 0..m {
                if k != j {
                    let other = if k < j { lambda[k] } else { self.mode[k] };
                    c -= spec.xtx[[j, k]] * other;
                }
            }
            c / g
        } else {
            0.0
        };
        let mut pts = vec![-r, 0.0, r];
        let mut s = tau;
        while s < r {
            pts.push(s);
            pts.push(-s);
            s *= 4.0;
        }
        let w = self.width[j];
        for k in -1..=6 {
            let d = w * 2f64.powi(k);
            pts.push(center - d);
            pts.push(center + d);
        }
        pts.push(center);
        pts.retain(|p| p.abs() <= r);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }
}
