//! Artifact files. All reals in CSV go through the 17-significant-digit
//! formatter, rows are pre-sorted by the runner, and JSON serialization is
//! struct-ordered, so a byte comparison is a valid equality test.

use std::fs;
use std::path::{Path, PathBuf};

use pdmp_core::util::fmt17;
use serde::Serialize;

use crate::runner::RunArtifacts;
use crate::CliError;

#[derive(Clone, Copy, PartialEq, Eq, Debug, clap::ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Config(format!("cannot write {}: {e}", path.display()))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Config(format!("cannot serialize {name}: {e}")))?;
    text.push('\n');
    write_file(dir, name, &text)
}

fn csv_hits(art: &RunArtifacts) -> String {
    let mut s = String::from("replica,i,t_star,prejump_speed,postjump_value\n");
    for r in &art.hits {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.replica,
            r.i,
            fmt17(r.t_star),
            fmt17(r.prejump_speed),
            fmt17(r.postjump_value)
        ));
    }
    s
}

fn csv_path(art: &RunArtifacts) -> String {
    let mut s = String::from("t,x,kind\n");
    for r in &art.path0 {
        s.push_str(&format!("{},{},{}\n", fmt17(r.t), fmt17(r.x), r.kind));
    }
    s
}

fn csv_switching(rows: &[crate::runner::SwitchRow]) -> String {
    let mut s = String::from("t,new_state\n");
    for r in rows {
        s.push_str(&format!("{},{}\n", fmt17(r.t), r.new_state));
    }
    s
}

fn csv_coupling(art: &RunArtifacts) -> String {
    let mut s = String::from(
        "replica,k,epsilon,n_jumps_x,n_jumps_xp,coupling_broken,sup_dist_after_warp,lambda_sup_dev\n",
    );
    for r in &art.coupling {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.replica,
            r.k,
            fmt17(r.epsilon),
            r.n_jumps_x,
            r.n_jumps_xp,
            r.coupling_broken,
            fmt17(r.sup_dist_after_warp),
            fmt17(r.lambda_sup_dev)
        ));
    }
    s
}

/// Writes one run's artifact set into `dir` and returns the paths written.
/// The summary is always JSON; the row tables are CSV or JSON per `format`.
/// `path.*` and `switching.*` describe replica 0 only.
pub fn write_artifacts(
    dir: &Path,
    format: OutputFormat,
    art: &RunArtifacts,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut written = Vec::new();
    match format {
        OutputFormat::Csv => {
            written.push(write_file(dir, "hits.csv", &csv_hits(art))?);
            written.push(write_file(dir, "path.csv", &csv_path(art))?);
            if let Some(rows) = &art.switching0 {
                written.push(write_file(dir, "switching.csv", &csv_switching(rows))?);
            }
            if !art.coupling.is_empty() {
                written.push(write_file(dir, "coupling.csv", &csv_coupling(art))?);
            }
        }
        OutputFormat::Json => {
            written.push(write_json(dir, "hits.json", &art.hits)?);
            written.push(write_json(dir, "path.json", &art.path0)?);
            if let Some(rows) = &art.switching0 {
                written.push(write_json(dir, "switching.json", rows)?);
            }
            if !art.coupling.is_empty() {
                written.push(write_json(dir, "coupling.json", &art.coupling)?);
            }
        }
    }
    written.push(write_json(dir, "summary.json", &art.summary)?);
    Ok(written)
}
