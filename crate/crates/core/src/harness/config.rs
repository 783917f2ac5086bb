use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bounds::{BoundParams, ComplexityForm, Regime};
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::sparse_ewa::Algorithm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    FiniteMs,
    SparseSoi,
    SkorokhodCheck,
    NoiseCheck,
    BoundSuite,
}

/// A positive number, or `"auto"` to derive it from the rest of the config.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum AutoOr {
    #[default]
    Auto,
    Value(f64),
}

impl Serialize for AutoOr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            AutoOr::Auto => s.serialize_str("auto"),
            AutoOr::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for AutoOr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) if v > 0.0 && v.is_finite() => Ok(AutoOr::Value(v)),
            Repr::Num(v) => Err(serde::de::Error::custom(format!("expected a positive number, got {v}"))),
            Repr::Text(t) if t == "auto" => Ok(AutoOr::Auto),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("expected a number or \"auto\", got {t:?}"))),
        }
    }
}

/// How the design and the regression function are generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TruthSpec {
    /// Gaussian design with unit empirical column norms and `sparsity`
    /// nonzero coefficients of magnitude in `[0.5, 2]`.
    SparseLinear { sparsity: usize },
    /// Candidates `f + d_j u_j` around `f(x) = sin(2 pi x)` with `||u_j||_n = 1`.
    /// `distances` holds the `d_j`; the default is `d_j = 0.2 + 0.1 j`.
    FiniteFamily {
        #[serde(default)]
        distances: Option<Vec<f64>>,
    },
    /// Cosine/sine basis on the grid `i/n`. Without coefficients the truth is
    /// a Gaussian bump outside the span of the basis.
    TrigBasis {
        #[serde(default)]
        coefficients: Option<Vec<f64>>,
    },
}

/// Sampler settings of an experiment; chain seeds are derived per replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    #[serde(default = "default_algorithm")]
    pub algorithm: Algorithm,
    #[serde(default)]
    pub step_size: AutoOr,
    #[serde(default = "default_n_steps")]
    pub n_steps: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "one")]
    pub thinning: usize,
    #[serde(default = "default_chains")]
    pub n_chains: usize,
}

fn default_algorithm() -> Algorithm {
    Algorithm::Rwmh
}
fn default_n_steps() -> usize {
    20_000
}
fn default_burn_in() -> usize {
    5_000
}
fn one() -> usize {
    1
}
fn default_chains() -> usize {
    4
}

impl Default for SamplerSpec {
    fn default() -> Self {
        Self {
            algorithm: default_algorithm(),
            step_size: AutoOr::Auto,
            n_steps: default_n_steps(),
            burn_in: default_burn_in(),
            thinning: 1,
            n_chains: default_chains(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub n: usize,
    #[serde(alias = "M")]
    pub m: usize,
    pub noise: NoiseModel,
    #[serde(default)]
    pub beta: AutoOr,
    /// Threshold family for `beta = "auto"` and for admissibility; inferred
    /// from the noise model when absent.
    #[serde(default)]
    pub regime: Option<Regime>,
    #[serde(default)]
    pub tau: AutoOr,
    pub replications: usize,
    pub seed: u64,
    pub truth: TruthSpec,
    #[serde(default)]
    pub sampler: Option<SamplerSpec>,
    /// Extra constants for the moment-based thresholds (`t`, `kappa`, `s`, `alpha0`, `B`).
    #[serde(default)]
    pub bound_params: Option<BoundParams>,
    #[serde(default)]
    pub complexity_form: ComplexityForm,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::Config("n and M must be positive".into()));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        self.noise.validate().map_err(|e| Error::Config(format!("noise: {e}")))?;
        match &self.truth {
            TruthSpec::SparseLinear { sparsity } if *sparsity > self.m => {
                return Err(Error::Config(format!("sparsity {sparsity} exceeds M = {}", self.m)))
            }
            TruthSpec::FiniteFamily { distances: Some(d) } if d.len() != self.m => {
                return Err(Error::Config(format!("{} distances for M = {}", d.len(), self.m)))
            }
            TruthSpec::FiniteFamily { distances: Some(d) } if d.iter().any(|v| !(*v >= 0.0 && v.is_finite())) => {
                return Err(Error::Config("distances must be finite and nonnegative".into()))
            }
            TruthSpec::TrigBasis { coefficients: Some(c) } if c.len() != self.m => {
                return Err(Error::Config(format!("{} coefficients for M = {}", c.len(), self.m)))
            }
            _ => {}
        }
        if let Some(s) = &self.sampler {
            if s.n_steps == 0 || s.n_chains == 0 || s.thinning == 0 || s.burn_in >= s.n_steps {
                return Err(Error::Config(
                    "sampler needs n_steps, n_chains, thinning >= 1 and burn_in < n_steps".into(),
                ));
            }
        }
        Ok(())
    }

    /// Regime given in the config, else the natural one for the noise model.
    pub fn effective_regime(&self) -> Regime {
        self.regime.unwrap_or(match self.noise {
            NoiseModel::DoubleExponential { .. } => Regime::DoubleExponential,
            NoiseModel::Rademacher => Regime::Bounded,
            NoiseModel::PowerMoment { .. } => Regime::PowerMoments,
            _ => Regime::Gaussian,
        })
    }

    /// The default desk-scale finite-family experiment.
    pub fn default_finite_ms() -> Self {
        Self {
            scenario: Scenario::FiniteMs,
            n: 100,
            m: 10,
            noise: NoiseModel::Gaussian { sigma2: 1.0 },
            beta: AutoOr::Value(4.0),
            regime: None,
            tau: AutoOr::Auto,
            replications: 1000,
            seed: 20_240_601,
            truth: TruthSpec::FiniteFamily { distances: None },
            sampler: None,
            bound_params: None,
            complexity_form: ComplexityForm::Jensen,
        }
    }

    /// The desk-scale sparse experiment.
    pub fn default_sparse_soi() -> Self {
        Self {
            scenario: Scenario::SparseSoi,
            n: 100,
            m: 50,
            noise: NoiseModel::Gaussian { sigma2: 1.0 },
            beta: AutoOr::Value(4.0),
            regime: None,
            tau: AutoOr::Auto,
            replications: 200,
            seed: 20_240_602,
            truth: TruthSpec::SparseLinear { sparsity: 3 },
            sampler: Some(SamplerSpec::default()),
            bound_params: None,
            complexity_form: ComplexityForm::Jensen,
        }
    }
}
