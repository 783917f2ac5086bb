use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::ExperimentResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

const CSV_HEADER: &str = "replication,seed,risk,bound_rhs,beta,method";

/// `out.csv` -> `out.summary.json`.
pub fn summary_path(path: &Path) -> PathBuf {
    path.with_extension("summary.json")
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// CSV rows use 17 significant digits and `\n` line endings; the summary
/// JSON is written next to the CSV. The JSON format writes the whole result.
pub fn emit_results(result: &ExperimentResult, path: &Path, format: OutputFormat) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut out = String::with_capacity(64 * (result.records.len() + 1));
            out.push_str(CSV_HEADER);
            out.push('\n');
            for r in &result.records {
                writeln!(
                    out,
                    "{},{},{:.16e},{:.16e},{:.16e},{}",
                    r.replication, r.seed, r.risk, r.bound_rhs, r.beta, r.method
                )
                .expect("writing to a String cannot fail");
            }
            write(path, &out)?;
            let summary = serde_json::json!({
                "mean_risk": result.estimate.mean_risk,
                "std_error": result.estimate.std_error,
                "replications": result.estimate.replications,
                "bound_rhs": result.estimate.bound_rhs,
                "bound_satisfied_within": result.estimate.bound_satisfied_within,
                "bound_satisfied": result.estimate.bound_satisfied,
                "report": result.report,
                "resolved": result.resolved,
                "baseline": result.baseline,
                "sampler": result.sampler,
            });
            write(
                &summary_path(path),
                &serde_json::to_string_pretty(&summary).expect("summary is serializable"),
            )
        }
        OutputFormat::Json => write(
            path,
            &serde_json::to_string_pretty(result).expect("result is serializable"),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run_replications, ExperimentConfig};

    fn small() -> ExperimentResult {
        let mut cfg = ExperimentConfig::default_finite_ms();
        cfg.replications = 7;
        run_replications(&cfg).unwrap()
    }

    #[test]
    fn csv_shape_and_summary() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.csv");
        let res = small();
        emit_results(&res, &path, OutputFormat::Csv).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 8);
        assert_eq!(lines[0], CSV_HEADER);
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields.len(), 6);
        assert_eq!(fields[2].parse::<f64>().unwrap(), res.records[0].risk);
        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("run.summary.json")).unwrap()).unwrap();
        assert_eq!(summary["mean_risk"].as_f64().unwrap(), res.estimate.mean_risk);
    }

    #[test]
    fn json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        let res = small();
        emit_results(&res, &path, OutputFormat::Json).unwrap();
        let back: ExperimentResult = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(back, res);
    }

    #[test]
    fn missing_directory_names_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("absent").join("run.csv");
        let err = emit_results(&small(), &path, OutputFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("absent"));
    }
}
