use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use ewagg_core::bounds::{
    cor1_2_bound, cor1_bound, ms_bound, soi_bound_thm6path, soip_bound, thm4_general_soi, BoundParams, BoundReport,
    ComplexityForm,
};
use ewagg_core::harness::verify::{run_suite, Suite};
use ewagg_core::harness::{emit_results, run_replications, ExperimentConfig, OutputFormat, Scenario};
use ewagg_core::model::{CoefVector, EvaluatedDictionary, ResponseVector};
use ewagg_core::{Error, Result};

#[derive(Parser)]
#[command(name = "ewagg", version, about = "Exponentially weighted aggregation experiments and bound calculators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Finite-family aggregation replications.
    Finite {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Sparse aggregation replications with the MCMC posterior mean.
    Sparse {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Numeric self-checks; the report is written as JSON.
    Verify {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20240603)]
        seed: u64,
    },
    /// Evaluates one bound and prints the report as JSON.
    Bound {
        #[arg(long, value_enum)]
        theorem: TheoremArg,
        #[arg(long)]
        params: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Noise,
    Skorokhod,
    Bounds,
    Prior,
    Appendix,
}

#[derive(Clone, Copy, ValueEnum)]
enum TheoremArg {
    Ms,
    Thm4,
    Soi,
    Soip,
    Cor1,
    #[value(name = "cor1_2")]
    Cor1_2,
}

/// Inputs of `ewagg bound`; each theorem reads the fields it needs.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundInput {
    beta: f64,
    #[serde(default)]
    n: Option<usize>,
    #[serde(default)]
    model_losses: Option<Vec<f64>>,
    /// Dictionary columns, each of length `n`.
    #[serde(default)]
    dictionary: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    truth: Option<Vec<f64>>,
    #[serde(default)]
    lambda_star: Option<Vec<f64>>,
    #[serde(default)]
    sigma2: Option<f64>,
    #[serde(default)]
    phi0: Option<f64>,
    #[serde(default)]
    tau: Option<f64>,
    #[serde(default)]
    l0: Option<f64>,
    #[serde(default)]
    delta: Option<f64>,
    #[serde(default)]
    complexity_form: ComplexityForm,
    #[serde(default)]
    params: BoundParams,
}

fn field<T: Clone>(v: &Option<T>, name: &str) -> Result<T> {
    v.clone().ok_or_else(|| Error::Config(format!("bound parameters are missing {name:?}")))
}

struct SparseInputs {
    dict: EvaluatedDictionary,
    truth: ResponseVector,
    lambda_star: CoefVector,
}

impl BoundInput {
    fn sparse(&self) -> Result<SparseInputs> {
        Ok(SparseInputs {
            dict: EvaluatedDictionary::from_columns(&field(&self.dictionary, "dictionary")?)?,
            truth: ResponseVector::new(field(&self.truth, "truth")?)?,
            lambda_star: CoefVector::new(field(&self.lambda_star, "lambda_star")?)?,
        })
    }

    fn params_with_n(&self) -> BoundParams {
        BoundParams {
            n: self.params.n.or(self.n),
            ..self.params.clone()
        }
    }
}

fn evaluate_bound(theorem: TheoremArg, input: &BoundInput) -> Result<BoundReport> {
    match theorem {
        TheoremArg::Ms => ms_bound(&field(&input.model_losses, "model_losses")?, input.beta, field(&input.n, "n")?),
        TheoremArg::Cor1 => cor1_bound(&field(&input.model_losses, "model_losses")?, input.beta, &input.params_with_n()),
        TheoremArg::Cor1_2 => {
            cor1_2_bound(&field(&input.model_losses, "model_losses")?, input.beta, &input.params_with_n())
        }
        TheoremArg::Soi => {
            let s = input.sparse()?;
            soi_bound_thm6path(
                &s.lambda_star,
                &s.truth,
                &s.dict,
                field(&input.sigma2, "sigma2")?,
                input.beta,
                input.complexity_form,
            )
        }
        TheoremArg::Soip => {
            let s = input.sparse()?;
            soip_bound(
                &s.lambda_star,
                &s.truth,
                &s.dict,
                field(&input.sigma2, "sigma2")?,
                input.beta,
                field(&input.phi0, "phi0")?,
                input.complexity_form,
            )
        }
        TheoremArg::Thm4 => {
            let s = input.sparse()?;
            thm4_general_soi(
                &s.lambda_star,
                &s.truth,
                &s.dict,
                input.beta,
                field(&input.tau, "tau")?,
                input.l0,
                input.delta.unwrap_or(0.5),
            )
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn run_experiment(expected: Scenario, config: &Path, out: &Path, format: Format) -> Result<()> {
    let cfg = ExperimentConfig::load(config)?;
    if cfg.scenario != expected {
        return Err(Error::Config(format!(
            "config scenario is {:?}, this subcommand runs {expected:?}",
            cfg.scenario
        )));
    }
    let result = run_replications(&cfg)?;
    let format = match format {
        Format::Csv => OutputFormat::Csv,
        Format::Json => OutputFormat::Json,
    };
    emit_results(&result, out, format)?;
    let e = &result.estimate;
    eprintln!(
        "mean risk {:.6} (SE {:.6}) over {} replications; bound {:.6}; satisfied: {}",
        e.mean_risk, e.std_error, e.replications, e.bound_rhs, e.bound_satisfied
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Finite { config, out, format } => run_experiment(Scenario::FiniteMs, &config, &out, format),
        Command::Sparse { config, out, format } => run_experiment(Scenario::SparseSoi, &config, &out, format),
        Command::Verify { suite, out, seed } => {
            let suite = match suite {
                SuiteArg::Noise => Suite::Noise,
                SuiteArg::Skorokhod => Suite::Skorokhod,
                SuiteArg::Bounds => Suite::Bounds,
                SuiteArg::Prior => Suite::Prior,
                SuiteArg::Appendix => Suite::Appendix,
            };
            let report = run_suite(suite, seed)?;
            let text = serde_json::to_string_pretty(&report).expect("report is serializable");
            fs::write(&out, text).map_err(|source| Error::Io { path: out.clone(), source })?;
            for c in &report.checks {
                eprintln!(
                    "{} {}: {:.6e} (threshold {:.6e})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.threshold
                );
            }
            if report.passed {
                Ok(())
            } else {
                let failed = report.checks.iter().filter(|c| !c.passed).count();
                Err(Error::Degenerate(format!("{failed} check(s) failed in suite {suite:?}")))
            }
        }
        Command::Bound { theorem, params } => {
            let input: BoundInput = serde_json::from_str(&read(&params)?)
                .map_err(|e| Error::Config(format!("{}: {e}", params.display())))?;
            let report = evaluate_bound(theorem, &input)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report is serializable"));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
