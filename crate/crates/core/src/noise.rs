//! Noise models for the regression errors.
//!
//! Each model exposes sampling together with the tail-mean function
//! `m(x) = E[xi 1(xi > x)]` and, when it exists, the derivative
//! `g = dm / dF` of the measure `m(z) dz` against the noise law. `sup g`
//! drives the smallest admissible temperature for Gaussian-type bounds.
//!
//! Two dummy-randomization constructions are also here: the two-point
//! conditional law used for general symmetric errors, and the explicit
//! companion variable for double-exponential errors.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;
use crate::seed;

/// Absolute tolerance of the numeric tail-mean integral for tabulated densities.
pub const TAIL_MEAN_TOL: f64 = 1e-9;

/// Generator backing a power-moment noise model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PowerGenerator {
    /// Student-t with `nu` degrees of freedom rescaled to unit variance.
    StudentT { nu: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseModel {
    Gaussian {
        sigma2: f64,
    },
    Uniform {
        b: f64,
    },
    /// Symmetric piecewise-linear density on `[-b, b]` given by its values
    /// at equally spaced knots (first knot at `-b`, last at `b`).
    BoundedDensity {
        b: f64,
        density: Vec<f64>,
    },
    DoubleExponential {
        sigma2: f64,
    },
    Rademacher,
    /// Symmetric errors with a finite moment of order `s`; the constant
    /// `B >= E|xi|^s` comes from the generator, see [`NoiseModel::moment_bound`].
    PowerMoment {
        s: f64,
        generator: Option<PowerGenerator>,
    },
    /// Point mass at zero (noiseless limit).
    Degenerate,
}

/// `sup_x g(x)` as reported by [`admissibility`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GSup {
    Finite(f64),
    Infinite,
    /// `g` does not exist (measure not absolutely continuous).
    Undefined,
}

impl GSup {
    pub fn finite(self) -> Option<f64> {
        match self {
            GSup::Finite(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub assumption_a_holds: bool,
    pub g_sup: GSup,
    pub n_divisible: bool,
    pub symmetric: bool,
    pub notes: String,
}

impl NoiseModel {
    pub fn gaussian(sigma2: f64) -> Result<Self> {
        let m = NoiseModel::Gaussian { sigma2 };
        m.validate()?;
        Ok(m)
    }

    pub fn uniform(b: f64) -> Result<Self> {
        let m = NoiseModel::Uniform { b };
        m.validate()?;
        Ok(m)
    }

    pub fn double_exponential(sigma2: f64) -> Result<Self> {
        let m = NoiseModel::DoubleExponential { sigma2 };
        m.validate()?;
        Ok(m)
    }

    /// Tabulated density rescaled so that it integrates to one.
    pub fn bounded_density_normalized(b: f64, density: Vec<f64>) -> Result<Self> {
        if density.len() < 2 {
            return Err(Error::invalid("bounded density needs at least two knots"));
        }
        let h = 2.0 * b / (density.len() - 1) as f64;
        let mass: f64 = density.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).sum();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::invalid("bounded density has no mass"));
        }
        let m = NoiseModel::BoundedDensity {
            b,
            density: density.into_iter().map(|v| v / mass).collect(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn student_t(s: f64, nu: f64) -> Result<Self> {
        let m = NoiseModel::PowerMoment {
            s,
            generator: Some(PowerGenerator::StudentT { nu }),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{what} must be positive and finite, got {v}")))
            }
        };
        match self {
            NoiseModel::Gaussian { sigma2 } | NoiseModel::DoubleExponential { sigma2 } => {
                positive(*sigma2, "sigma2")
            }
            NoiseModel::Uniform { b } => positive(*b, "b"),
            NoiseModel::BoundedDensity { b, density } => {
                positive(*b, "b")?;
                if density.len() < 2 {
                    return Err(Error::invalid("bounded density needs at least two knots"));
                }
                if density.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                    return Err(Error::invalid(
                        "bounded density must be strictly positive on [-b, b]",
                    ));
                }
                let k = density.len();
                for i in 0..k / 2 {
                    let (l, r) = (density[i], density[k - 1 - i]);
                    if (l - r).abs() > 1e-12 * l.max(r) {
                        return Err(Error::invalid("bounded density must be symmetric"));
                    }
                }
                let h = 2.0 * b / (k - 1) as f64;
                let mass: f64 = density.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).sum();
                if (mass - 1.0).abs() > 1e-8 {
                    return Err(Error::invalid(format!(
                        "bounded density integrates to {mass}, not 1"
                    )));
                }
                Ok(())
            }
            NoiseModel::PowerMoment { s, generator } => {
                if !(*s >= 2.0 && s.is_finite()) {
                    return Err(Error::invalid(format!("power moment order s must be >= 2, got {s}")));
                }
                match generator {
                    Some(PowerGenerator::StudentT { nu }) if !(*nu > *s && nu.is_finite()) => Err(
                        Error::invalid(format!("student-t generator needs nu > s, got nu={nu}, s={s}")),
                    ),
                    _ => Ok(()),
                }
            }
            NoiseModel::Rademacher | NoiseModel::Degenerate => Ok(()),
        }
    }

    /// `E xi^2`.
    pub fn variance(&self) -> Result<f64> {
        Ok(match self {
            NoiseModel::Gaussian { sigma2 } | NoiseModel::DoubleExponential { sigma2 } => *sigma2,
            NoiseModel::Uniform { b } => b * b / 3.0,
            NoiseModel::BoundedDensity { b, density } => {
                let table = Table::new(*b, density);
                table.integrate_moment(|z| z * z, -b, *b)
            }
            NoiseModel::Rademacher => 1.0,
            NoiseModel::PowerMoment {
                generator: Some(PowerGenerator::StudentT { .. }),
                ..
            } => 1.0,
            NoiseModel::PowerMoment { generator: None, .. } => {
                return Err(Error::Unsupported(
                    "power-moment model without a generator has no fixed variance".into(),
                ))
            }
            NoiseModel::Degenerate => 0.0,
        })
    }

    /// `E|xi|`.
    pub fn mean_abs(&self) -> Result<f64> {
        Ok(match self {
            NoiseModel::Gaussian { sigma2 } => (2.0 * sigma2 / std::f64::consts::PI).sqrt(),
            NoiseModel::Uniform { b } => b / 2.0,
            NoiseModel::BoundedDensity { b, density } => {
                let table = Table::new(*b, density);
                2.0 * table.integrate_moment(|z| z, 0.0, *b)
            }
            NoiseModel::DoubleExponential { sigma2 } => (sigma2 / 2.0).sqrt(),
            NoiseModel::Rademacher => 1.0,
            NoiseModel::PowerMoment {
                generator: Some(PowerGenerator::StudentT { nu }),
                ..
            } => {
                let c = ((nu - 2.0) / nu).sqrt();
                let ln = 0.5 * nu.ln() + ln_gamma(0.5 * (nu + 1.0))
                    - 0.5 * std::f64::consts::PI.ln()
                    - (nu - 1.0).ln()
                    - ln_gamma(0.5 * nu);
                2.0 * c * ln.exp()
            }
            NoiseModel::PowerMoment { generator: None, .. } => {
                return Err(Error::Unsupported("power-moment model without a generator".into()))
            }
            NoiseModel::Degenerate => 0.0,
        })
    }

    /// Lebesgue density, `None` when the law has atoms.
    pub fn density(&self, x: f64) -> Option<f64> {
        match self {
            NoiseModel::Gaussian { sigma2 } => {
                Some((-x * x / (2.0 * sigma2)).exp() / (2.0 * std::f64::consts::PI * sigma2).sqrt())
            }
            NoiseModel::Uniform { b } => Some(if x.abs() <= *b { 0.5 / b } else { 0.0 }),
            NoiseModel::BoundedDensity { b, density } => Some(Table::new(*b, density).density(x)),
            NoiseModel::DoubleExponential { sigma2 } => {
                let scale = (sigma2 / 2.0).sqrt();
                Some((-x.abs() / scale).exp() / (2.0 * scale))
            }
            NoiseModel::PowerMoment {
                generator: Some(PowerGenerator::StudentT { nu }),
                ..
            } => {
                let c = ((nu - 2.0) / nu).sqrt();
                Some(student_t_density(*nu, x / c) / c)
            }
            _ => None,
        }
    }

    /// Almost-sure bound on `|xi|`, if any.
    pub fn support_bound(&self) -> Option<f64> {
        match self {
            NoiseModel::Uniform { b } | NoiseModel::BoundedDensity { b, .. } => Some(*b),
            NoiseModel::Rademacher => Some(1.0),
            NoiseModel::Degenerate => Some(0.0),
            _ => None,
        }
    }

    /// `E|xi|^s` for power-moment models (the constant `B`).
    pub fn moment_bound(&self) -> Option<f64> {
        match self {
            NoiseModel::PowerMoment {
                s,
                generator: Some(PowerGenerator::StudentT { nu }),
            } => Some(student_t_abs_moment(*s, *nu)),
            _ => None,
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseModel::Gaussian { sigma2 } => {
                let z: f64 = rng.sample(StandardNormal);
                sigma2.sqrt() * z
            }
            NoiseModel::Uniform { b } => rng.random_range(-*b..=*b),
            NoiseModel::BoundedDensity { b, density } => Table::new(*b, density).inverse_cdf(rng.random()),
            NoiseModel::DoubleExponential { sigma2 } => {
                let e: f64 = rng.sample(Exp1);
                let scale = (sigma2 / 2.0).sqrt();
                if rng.random::<bool>() {
                    scale * e
                } else {
                    -scale * e
                }
            }
            NoiseModel::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            NoiseModel::PowerMoment {
                generator: Some(PowerGenerator::StudentT { nu }),
                ..
            } => {
                let t = StudentT::new(*nu).expect("validated degrees of freedom");
                ((nu - 2.0) / nu).sqrt() * t.sample(rng)
            }
            NoiseModel::PowerMoment { generator: None, .. } => unreachable!("checked by sample"),
            NoiseModel::Degenerate => 0.0,
        }
    }
}

fn student_t_density(nu: f64, t: f64) -> f64 {
    let ln_norm = ln_gamma(0.5 * (nu + 1.0)) - 0.5 * (nu * std::f64::consts::PI).ln() - ln_gamma(0.5 * nu);
    (ln_norm - 0.5 * (nu + 1.0) * (t * t / nu).ln_1p()).exp()
}

/// `E|c T|^s` for `T ~ t_nu` and `c = sqrt((nu - 2) / nu)`.
fn student_t_abs_moment(s: f64, nu: f64) -> f64 {
    let ln = 0.5 * s * (nu - 2.0).ln() + ln_gamma(0.5 * (s + 1.0)) + ln_gamma(0.5 * (nu - s))
        - 0.5 * std::f64::consts::PI.ln()
        - ln_gamma(0.5 * nu);
    ln.exp()
}

/// Piecewise-linear density on an equally spaced grid.
struct Table<'a> {
    b: f64,
    h: f64,
    values: &'a [f64],
}

impl<'a> Table<'a> {
    fn new(b: f64, values: &'a [f64]) -> Self {
        Self {
            b,
            h: 2.0 * b / (values.len() - 1) as f64,
            values,
        }
    }

    fn knot(&self, k: usize) -> f64 {
        -self.b + k as f64 * self.h
    }

    fn density(&self, x: f64) -> f64 {
        if x < -self.b || x > self.b {
            return 0.0;
        }
        let pos = ((x + self.b) / self.h).min((self.values.len() - 1) as f64);
        let k = (pos.floor() as usize).min(self.values.len() - 2);
        let frac = pos - k as f64;
        self.values[k] * (1.0 - frac) + self.values[k + 1] * frac
    }

    /// `int_lo^hi w(z) f(z) dz`, split at the knots.
    fn integrate_moment<W: Fn(f64) -> f64>(&self, w: W, lo: f64, hi: f64) -> f64 {
        let lo = lo.max(-self.b);
        let hi = hi.min(self.b);
        if lo >= hi {
            return 0.0;
        }
        let mut edges = vec![lo];
        for k in 1..self.values.len() - 1 {
            let x = self.knot(k);
            if x > lo && x < hi {
                edges.push(x);
            }
        }
        edges.push(hi);
        let integrand = |z: f64| w(z) * self.density(z);
        edges
            .windows(2)
            .map(|e| adaptive_simpson(&integrand, e[0], e[1], TAIL_MEAN_TOL / edges.len() as f64))
            .sum()
    }

    fn inverse_cdf(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        let last = self.values.len() - 2;
        for k in 0..=last {
            let (f0, f1) = (self.values[k], self.values[k + 1]);
            let mass = 0.5 * self.h * (f0 + f1);
            if u <= acc + mass || k == last {
                let r = (u - acc).clamp(0.0, mass);
                let slope = (f1 - f0) / self.h;
                // Root of f0 s + slope s^2 / 2 = r in its cancellation-free form.
                let s = 2.0 * r / (f0 + (f0 * f0 + 2.0 * slope * r).max(0.0).sqrt());
                return (self.knot(k) + s).min(self.b);
            }
            acc += mass;
        }
        self.b
    }
}

/// `n` i.i.d. draws from `model`, deterministic given `rng_seed`.
pub fn sample(model: &NoiseModel, n: usize, rng_seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("sample size must be positive"));
    }
    if let NoiseModel::PowerMoment { generator: None, .. } = model {
        return Err(Error::Unsupported(
            "power-moment noise needs a generator to be sampled".into(),
        ));
    }
    model.validate()?;
    let mut rng = seed::rng(rng_seed);
    Ok((0..n).map(|_| model.draw(&mut rng)).collect())
}

/// Tail mean `m(x) = -E[xi 1(xi <= x)] = int_x^inf z dF(z)`.
pub fn m_xi(model: &NoiseModel, x: f64) -> Result<f64> {
    Ok(match model {
        NoiseModel::Gaussian { sigma2 } => {
            let sigma = sigma2.sqrt();
            sigma * (-x * x / (2.0 * sigma2)).exp() / (2.0 * std::f64::consts::PI).sqrt()
        }
        NoiseModel::Uniform { b } => (b * b - x * x).max(0.0) / (4.0 * b),
        NoiseModel::BoundedDensity { b, density } => {
            if x >= *b {
                0.0
            } else {
                let table = Table::new(*b, density);
                // Symmetry gives m(-x) = m(x); integrate the shorter tail.
                let ax = x.abs();
                table.integrate_moment(|z| z, ax, *b).max(0.0)
            }
        }
        NoiseModel::DoubleExponential { sigma2 } => {
            let scale = (sigma2 / 2.0).sqrt();
            0.5 * (x.abs() + scale) * (-x.abs() / scale).exp()
        }
        NoiseModel::Rademacher => {
            if x.abs() <= 1.0 {
                0.5
            } else {
                0.0
            }
        }
        NoiseModel::PowerMoment {
            generator: Some(PowerGenerator::StudentT { nu }),
            ..
        } => {
            let c = ((nu - 2.0) / nu).sqrt();
            let t = x.abs() / c;
            c * (nu + t * t) / (nu - 1.0) * student_t_density(*nu, t)
        }
        NoiseModel::PowerMoment { generator: None, .. } => {
            return Err(Error::Unsupported(
                "tail mean of a power-moment model without a generator".into(),
            ))
        }
        NoiseModel::Degenerate => 0.0,
    })
}

/// Derivative `g` of `m(z) dz` with respect to the noise law.
pub fn g_xi(model: &NoiseModel, x: f64) -> Result<f64> {
    Ok(match model {
        NoiseModel::Gaussian { sigma2 } => *sigma2,
        NoiseModel::Uniform { b } => (b * b - x * x).max(0.0) / 2.0,
        NoiseModel::BoundedDensity { b, density } => {
            if x.abs() > *b {
                0.0
            } else {
                m_xi(model, x)? / Table::new(*b, density).density(x)
            }
        }
        NoiseModel::DoubleExponential { sigma2 } => (sigma2 + (2.0 * sigma2).sqrt() * x.abs()) / 2.0,
        NoiseModel::Rademacher => {
            return Err(Error::AssumptionViolated(
                "Rademacher law is not absolutely continuous; m(z)dz has no density against it".into(),
            ))
        }
        NoiseModel::PowerMoment {
            generator: Some(PowerGenerator::StudentT { nu }),
            ..
        } => (nu - 2.0 + x * x) / (nu - 1.0),
        NoiseModel::PowerMoment { generator: None, .. } => {
            return Err(Error::Unsupported(
                "g of a power-moment model without a generator".into(),
            ))
        }
        NoiseModel::Degenerate => 0.0,
    })
}

/// The sample size does not change any of the reported properties for the
/// supported models; it is accepted for interface stability.
pub fn admissibility(model: &NoiseModel, _n: usize) -> AdmissibilityReport {
    let (assumption_a_holds, g_sup, n_divisible, notes) = match model {
        NoiseModel::Gaussian { sigma2 } => (
            true,
            GSup::Finite(*sigma2),
            true,
            "g is constant and equal to sigma2".to_string(),
        ),
        NoiseModel::Uniform { b } => (
            true,
            GSup::Finite(b * b / 2.0),
            false,
            "ratio of characteristic functions blows up at zeros of sin, so no companion exists".to_string(),
        ),
        NoiseModel::BoundedDensity { .. } => {
            let bound = model.mean_abs().unwrap_or(f64::INFINITY)
                / (2.0 * bounded_min(model));
            (
                true,
                GSup::Finite(bound),
                false,
                "g_sup reported as E|xi| / (2 f_min), an upper bound on sup g; n-divisibility not established".to_string(),
            )
        }
        NoiseModel::DoubleExponential { .. } => (
            false,
            GSup::Infinite,
            true,
            "g grows linearly in |x|; use the companion-variable route".to_string(),
        ),
        NoiseModel::Rademacher => (
            false,
            GSup::Undefined,
            false,
            "law has atoms; m(z)dz is not absolutely continuous with respect to it".to_string(),
        ),
        NoiseModel::PowerMoment { generator, .. } => (
            false,
            if generator.is_some() { GSup::Infinite } else { GSup::Undefined },
            generator.is_some(),
            "g grows quadratically for the student-t generator; the student-t law is self-decomposable. \
             Stable laws are n-divisible but have no usable temperature and are not modelled"
                .to_string(),
        ),
        NoiseModel::Degenerate => (true, GSup::Finite(0.0), true, "noiseless".to_string()),
    };
    AdmissibilityReport {
        assumption_a_holds,
        g_sup,
        n_divisible,
        symmetric: true,
        notes,
    }
}

fn bounded_min(model: &NoiseModel) -> f64 {
    match model {
        NoiseModel::BoundedDensity { density, .. } => density.iter().copied().fold(f64::INFINITY, f64::min),
        _ => f64::NAN,
    }
}

/// Two-point dummy randomization: given `xi_i`, `zeta_i` equals `xi_i / n`
/// with probability `(2n+1)/(2n+2)` and `-2 xi_i - xi_i / n` otherwise,
/// where `n = xi.len()`. One uniform variate is consumed per coordinate.
pub fn skorokhod_dummy(xi: &[f64], rng_seed: u64) -> Result<Vec<f64>> {
    if xi.is_empty() {
        return Err(Error::invalid("skorokhod_dummy needs n >= 1"));
    }
    if xi.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("xi entries must be finite"));
    }
    let n = xi.len() as f64;
    let p_small = (2.0 * n + 1.0) / (2.0 * n + 2.0);
    let mut rng = seed::rng(rng_seed);
    Ok(xi
        .iter()
        .map(|&x| {
            let u: f64 = rng.random();
            if u < p_small {
                x / n
            } else {
                -2.0 * x - x / n
            }
        })
        .collect())
}

/// Exact `log E(exp(lambda zeta_i) | xi_i)` for the two-point construction,
/// written as `x + log(1 + (exp(-a x) - 1)/a)` with `x = lambda xi_i / n`, `a = 2n + 2`.
pub fn skorokhod_log_mgf(n: usize, lambda_xi: f64) -> f64 {
    let n = n as f64;
    let x = lambda_xi / n;
    let a = 2.0 * n + 2.0;
    x + ((-a * x).exp_m1() / a).ln_1p()
}

/// Log of the sub-Gaussian envelope `(lambda xi)^2 (n+1) / n^2`.
pub fn skorokhod_log_mgf_envelope(n: usize, lambda_xi: f64) -> f64 {
    let n = n as f64;
    lambda_xi * lambda_xi * (n + 1.0) / (n * n)
}

/// Probability that the double-exponential companion variable is exactly zero.
pub fn zeta_atom_weight(n: usize) -> f64 {
    let n = n as f64;
    (n / (n + 1.0)).powi(2)
}

/// Moment generating function of the double-exponential companion variable,
/// `1 + (2n+1) s2 t^2 / (2n^2 - (n+1)^2 s2 t^2)`; `+inf` outside its domain.
pub fn zeta_mgf(n: usize, sigma2: f64, t: f64) -> f64 {
    let n = n as f64;
    let denom = 2.0 * n * n - (n + 1.0).powi(2) * sigma2 * t * t;
    if denom <= 0.0 {
        return f64::INFINITY;
    }
    1.0 + (2.0 * n + 1.0) * sigma2 * t * t / denom
}

/// Draws of `zeta` with `xi + zeta ~ (1 + 1/n) xi` for double-exponential `xi`.
///
/// The companion law is a mixture: an atom at zero with weight
/// `n^2/(n+1)^2`, otherwise a centred double exponential with variance
/// `(1 + 1/n)^2 sigma2`.
pub fn n_divisible_zeta_sample(model: &NoiseModel, n: usize, count: usize, rng_seed: u64) -> Result<Vec<f64>> {
    let NoiseModel::DoubleExponential { sigma2 } = model else {
        return Err(Error::Unsupported(
            "explicit companion sampler exists only for double-exponential noise".into(),
        ));
    };
    if n == 0 || count == 0 {
        return Err(Error::invalid("n and count must be positive"));
    }
    let atom = zeta_atom_weight(n);
    let scale = (1.0 + 1.0 / n as f64) * (sigma2 / 2.0).sqrt();
    let mut rng = seed::rng(rng_seed);
    Ok((0..count)
        .map(|_| {
            let u: f64 = rng.random();
            let e: f64 = rng.sample(Exp1);
            let positive: bool = rng.random();
            if u < atom {
                0.0
            } else if positive {
                scale * e
            } else {
                -scale * e
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, QuadOptions};

    fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
        while i < a.len() && j < b.len() {
            let x = a[i].min(b[j]);
            while i < a.len() && a[i] <= x {
                i += 1;
            }
            while j < b.len() && b[j] <= x {
                j += 1;
            }
            d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
        }
        d
    }

    #[test]
    fn gaussian_sample_moments() {
        let n = 100_000;
        let xs = sample(&NoiseModel::gaussian(1.0).unwrap(), n, 11).unwrap();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt());
        assert!((var - 1.0).abs() < 0.05);
    }

    #[test]
    fn uniform_support_and_determinism() {
        let m = NoiseModel::uniform(1.0).unwrap();
        let a = sample(&m, 10_000, 3).unwrap();
        assert!(a.iter().all(|x| (-1.0..=1.0).contains(x)));
        assert_eq!(a, sample(&m, 10_000, 3).unwrap());
    }

    #[test]
    fn power_moment_without_generator_is_unsupported() {
        let m = NoiseModel::PowerMoment { s: 3.0, generator: None };
        assert!(matches!(sample(&m, 5, 0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn tail_mean_closed_forms() {
        let u = NoiseModel::uniform(1.0).unwrap();
        assert_eq!(m_xi(&u, 0.0).unwrap(), 0.25);
        assert_eq!(m_xi(&NoiseModel::Rademacher, 0.5).unwrap(), 0.5);
        for model in [
            NoiseModel::gaussian(2.0).unwrap(),
            u.clone(),
            NoiseModel::double_exponential(1.0).unwrap(),
            NoiseModel::student_t(3.0, 6.0).unwrap(),
        ] {
            assert!(m_xi(&model, 1e6).unwrap() < 1e-12);
        }
    }

    #[test]
    fn g_closed_forms() {
        assert_eq!(g_xi(&NoiseModel::gaussian(2.0).unwrap(), 0.7).unwrap(), 2.0);
        assert_eq!(g_xi(&NoiseModel::uniform(1.0).unwrap(), 0.0).unwrap(), 0.5);
        let de = g_xi(&NoiseModel::double_exponential(1.0).unwrap(), 1.0).unwrap();
        assert!((de - (1.0 + 2f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!(matches!(
            g_xi(&NoiseModel::Rademacher, 0.0),
            Err(Error::AssumptionViolated(_))
        ));
    }

    #[test]
    fn admissibility_examples() {
        let r = admissibility(&NoiseModel::gaussian(1.0).unwrap(), 10);
        assert_eq!((r.assumption_a_holds, r.g_sup, r.n_divisible, r.symmetric), (true, GSup::Finite(1.0), true, true));
        let r = admissibility(&NoiseModel::uniform(1.0).unwrap(), 10);
        assert_eq!((r.assumption_a_holds, r.g_sup, r.n_divisible, r.symmetric), (true, GSup::Finite(0.5), false, true));
        let r = admissibility(&NoiseModel::Rademacher, 10);
        assert_eq!((r.assumption_a_holds, r.g_sup, r.n_divisible, r.symmetric), (false, GSup::Undefined, false, true));
        let r = admissibility(&NoiseModel::double_exponential(1.0).unwrap(), 10);
        assert_eq!((r.g_sup, r.n_divisible), (GSup::Infinite, true));
    }

    fn trapezoid_density() -> NoiseModel {
        NoiseModel::bounded_density_normalized(1.5, vec![0.2, 0.5, 0.9, 0.5, 0.2]).unwrap()
    }

    #[test]
    fn bounded_density_sup_g_within_bound() {
        let m = trapezoid_density();
        let r = admissibility(&m, 10);
        let bound = r.g_sup.finite().unwrap();
        for k in 0..=300 {
            let x = -1.5 + 3.0 * k as f64 / 300.0;
            assert!(g_xi(&m, x).unwrap() <= bound + 1e-12);
        }
    }

    #[test]
    fn bounded_density_rejects_bad_tables() {
        assert!(NoiseModel::BoundedDensity { b: 1.0, density: vec![0.5, 0.5] }.validate().is_ok());
        assert!(NoiseModel::BoundedDensity { b: 1.0, density: vec![0.4, 0.6] }.validate().is_err());
        assert!(NoiseModel::BoundedDensity { b: 1.0, density: vec![0.6, 0.6] }.validate().is_err());
        assert!(NoiseModel::BoundedDensity { b: 1.0, density: vec![1.0, 0.0, 1.0] }.validate().is_err());
    }

    #[test]
    fn bounded_density_sampler_matches_cdf() {
        let m = trapezoid_density();
        let mut xs = sample(&m, 50_000, 5).unwrap();
        xs.sort_by(f64::total_cmp);
        let mut worst: f64 = 0.0;
        for (i, &x) in xs.iter().enumerate().step_by(97) {
            let cdf = integrate(|z| m.density(z).unwrap(), -1.5, x, QuadOptions::default()).value[0];
            worst = worst.max((cdf - (i as f64 + 0.5) / xs.len() as f64).abs());
        }
        assert!(worst < 0.01, "max CDF deviation {worst}");
    }

    #[test]
    fn tail_mean_peak_is_half_mean_abs() {
        for model in [
            NoiseModel::gaussian(1.7).unwrap(),
            NoiseModel::uniform(2.0).unwrap(),
            trapezoid_density(),
            NoiseModel::double_exponential(0.8).unwrap(),
            NoiseModel::student_t(3.0, 7.0).unwrap(),
        ] {
            let peak = m_xi(&model, 0.0).unwrap();
            assert!((peak - 0.5 * model.mean_abs().unwrap()).abs() < 1e-6, "{model:?}");
            // m_xi is unimodal at zero.
            let grid: Vec<f64> = (0..=60).map(|k| k as f64 * 0.05).collect();
            for w in grid.windows(2) {
                let (a, b) = (m_xi(&model, w[0]).unwrap(), m_xi(&model, w[1]).unwrap());
                assert!(b <= a + 1e-12);
                assert!(m_xi(&model, -w[1]).unwrap() <= m_xi(&model, -w[0]).unwrap() + 1e-12);
            }
        }
    }

    #[test]
    fn student_t_moment_bound_by_quadrature() {
        let m = NoiseModel::student_t(3.0, 8.0).unwrap();
        let b = m.moment_bound().unwrap();
        let r = crate::quadrature::integrate_to_infinity(
            |z| 2.0 * z.powi(3) * m.density(z).unwrap(),
            0.0,
            QuadOptions::default(),
        );
        assert!((r.value[0] - b).abs() < 1e-8 * b);
        let var = crate::quadrature::integrate_to_infinity(
            |z| 2.0 * z * z * m.density(z).unwrap(),
            0.0,
            QuadOptions::default(),
        );
        assert!((var.value[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn skorokhod_two_point_values() {
        let zeta = skorokhod_dummy(&[0.0; 4], 1).unwrap();
        assert!(zeta.iter().all(|z| *z == 0.0));

        // n = 2, xi = 1: values 0.5 or -2.5 with probabilities 5/6, 1/6.
        let draws = 60_000;
        let mut small = 0usize;
        for r in 0..draws / 2 {
            for z in skorokhod_dummy(&[1.0, 1.0], r as u64).unwrap() {
                if z == 0.5 {
                    small += 1;
                } else {
                    assert_eq!(z, -2.5);
                }
            }
        }
        let p = small as f64 / draws as f64;
        let se = (5.0 / 36.0 / draws as f64).sqrt();
        assert!((p - 5.0 / 6.0).abs() < 4.0 * se);

        // Conditional mean is zero exactly for the two-point law.
        for n in 1..20usize {
            let nf = n as f64;
            let xi = 0.731;
            let mean = (2.0 * nf + 1.0) / (2.0 * nf + 2.0) * xi / nf
                + (1.0 / (2.0 * nf + 2.0)) * (-2.0 * xi - xi / nf);
            assert!(mean.abs() < 1e-15);
        }
    }

    #[test]
    fn skorokhod_log_mgf_matches_direct_expectation() {
        for &(n, lx) in &[(1usize, 0.3), (5, -1.2), (10, 2.5)] {
            let nf = n as f64;
            let direct = ((2.0 * nf + 1.0) / (2.0 * nf + 2.0) * (lx / nf).exp()
                + (1.0 / (2.0 * nf + 2.0)) * (lx * (-2.0 - 1.0 / nf)).exp())
            .ln();
            assert!((skorokhod_log_mgf(n, lx) - direct).abs() < 1e-13);
        }
    }

    #[test]
    fn zeta_mixture_weight_and_second_moment() {
        assert_eq!(zeta_atom_weight(3), 9.0 / 16.0);
        // Second derivative of the MGF at zero: (2n+1) sigma2 / n^2.
        let (n, s2) = (4usize, 1.0);
        let h = 1e-4;
        let second = (zeta_mgf(n, s2, h) - 2.0 * zeta_mgf(n, s2, 0.0) + zeta_mgf(n, s2, -h)) / (h * h);
        assert!((second - 9.0 / 16.0).abs() < 1e-6);

        let z = n_divisible_zeta_sample(&NoiseModel::double_exponential(s2).unwrap(), n, 200_000, 9).unwrap();
        let m2 = z.iter().map(|v| v * v).sum::<f64>() / z.len() as f64;
        let m4 = z.iter().map(|v| v.powi(4)).sum::<f64>() / z.len() as f64;
        let se = ((m4 - m2 * m2) / z.len() as f64).sqrt();
        assert!((m2 - 9.0 / 16.0).abs() < 4.0 * se, "m2={m2} se={se}");
    }

    #[test]
    fn zeta_mixture_reproduces_dilated_law() {
        let n = 3;
        let model = NoiseModel::double_exponential(1.0).unwrap();
        let count = 100_000;
        let xi = sample(&model, count, 21).unwrap();
        let zeta = n_divisible_zeta_sample(&model, n, count, 22).unwrap();
        let mut sum: Vec<f64> = xi.iter().zip(&zeta).map(|(a, b)| a + b).collect();
        let mut dilated: Vec<f64> = sample(&model, count, 23)
            .unwrap()
            .into_iter()
            .map(|v| v * (1.0 + 1.0 / n as f64))
            .collect();
        let d = ks_two_sample(&mut sum, &mut dilated);
        assert!(d < 0.01, "KS distance {d}");
    }

    #[test]
    fn zeta_sampler_rejects_other_models() {
        assert!(matches!(
            n_divisible_zeta_sample(&NoiseModel::gaussian(1.0).unwrap(), 3, 10, 0),
            Err(Error::Unsupported(_))
        ));
    }
}
