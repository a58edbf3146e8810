use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentResult;
use crate::error::{Error, Result};

pub const RUN_TRACE_HEADER: &str = "iter,rel_error";
pub const LONG_CSV_HEADER: &str = "algorithm,iter,rel_error";
pub const SUMMARY_FILE: &str = "summary.json";
pub const LONG_CSV_FILE: &str = "convergence_long.csv";

/// Paths written by [`emit_results`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub traces: Vec<PathBuf>,
    pub summary: PathBuf,
    pub long_csv: PathBuf,
}

impl Manifest {
    pub fn all(&self) -> Vec<&Path> {
        self.traces
            .iter()
            .map(PathBuf::as_path)
            .chain([self.summary.as_path(), self.long_csv.as_path()])
            .collect()
    }
}

fn trace_csv(trace: &[(usize, f64)]) -> String {
    let mut out = format!("{RUN_TRACE_HEADER}\n");
    for (iter, err) in trace {
        let _ = writeln!(out, "{iter},{err:e}");
    }
    out
}

/// Writes one trace CSV per run, the summary JSON (summary plus run
/// records) and a long-format CSV holding the best run of every group.
pub fn emit_results(result: &ExperimentResult, out_dir: impl AsRef<Path>) -> Result<Manifest> {
    if result.runs.is_empty() {
        return Err(Error::InvalidArgument("no run records to emit".into()));
    }
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir)?;

    let mut traces = Vec::with_capacity(result.runs.len());
    for run in &result.runs {
        let path = out_dir.join(&run.trace_file);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, trace_csv(&run.trace))?;
        traces.push(path);
    }

    let summary = out_dir.join(SUMMARY_FILE);
    fs::write(&summary, serde_json::to_string_pretty(result)? + "\n")?;

    let mut long = format!("{LONG_CSV_HEADER}\n");
    for group in &result.summary.groups {
        if let Some(id) = group.best_run {
            for (iter, err) in &result.runs[id].trace {
                let _ = writeln!(long, "{},{iter},{err:e}", group.group);
            }
        }
    }
    let long_csv = out_dir.join(LONG_CSV_FILE);
    fs::write(&long_csv, long)?;

    Ok(Manifest {
        traces,
        summary,
        long_csv,
    })
}
