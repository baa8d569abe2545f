//! Run outputs: one JSON record per line, then the final planning table.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::runner::RunReport;
use super::ScenarioError;
use crate::aircraft::write_table;

pub const TRACE_FILE: &str = "trace.ndjson";
pub const PLAN_FILE: &str = "plan.csv";

/// The trace as text: the header record followed by every loop event.
pub fn trace_text(report: &RunReport) -> Result<String, ScenarioError> {
    let mut out = String::new();
    for rec in std::iter::once(report.header_record()).chain(report.events.iter().cloned()) {
        let line = serde_json::to_string(&rec).map_err(|e| ScenarioError::Config(e.to_string()))?;
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

pub fn plan_text(report: &RunReport) -> Result<String, ScenarioError> {
    let mut buf = Vec::new();
    write_table(&mut buf, &report.final_plan)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

fn write(path: &Path, text: &str) -> Result<(), ScenarioError> {
    let io = |e: std::io::Error| ScenarioError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(text.as_bytes()).map_err(io)
}

/// Write `trace.ndjson` and `plan.csv` into `dir`, creating it if needed.
pub fn export_trace(report: &RunReport, dir: &Path) -> Result<(PathBuf, PathBuf), ScenarioError> {
    fs::create_dir_all(dir).map_err(|e| ScenarioError::Io {
        path: dir.to_path_buf(),
        message: e.to_string(),
    })?;
    let trace = dir.join(TRACE_FILE);
    let plan = dir.join(PLAN_FILE);
    write(&trace, &trace_text(report)?)?;
    write(&plan, &plan_text(report)?)?;
    Ok((trace, plan))
}
