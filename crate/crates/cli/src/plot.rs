//! Long-format plot data distilled from summary files: one row per
//! (sweep value, estimator), ready for any external plotting tool.

use std::path::Path;

use pdmp_core::util::fmt17;

use crate::runner::RunSummary;
use crate::CliError;

/// Reads the given summary JSON files and renders the plot CSV. Summaries
/// must agree on their estimator sets; single runs without a sweep value
/// fall back to their epsilon as the x coordinate.
pub fn emit_plot_data<P: AsRef<Path>>(summaries: &[P]) -> Result<String, CliError> {
    if summaries.is_empty() {
        return Err(CliError::Config(
            "no summary files given; nothing to plot".into(),
        ));
    }
    let mut loaded: Vec<RunSummary> = Vec::with_capacity(summaries.len());
    for p in summaries {
        let p = p.as_ref();
        let text = std::fs::read_to_string(p)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
        let s: RunSummary = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
        loaded.push(s);
    }

    let mut reference_names: Vec<&str> = loaded[0]
        .estimators
        .iter()
        .map(|e| e.estimator.as_str())
        .collect();
    reference_names.sort_unstable();
    for (s, p) in loaded.iter().zip(summaries).skip(1) {
        let mut names: Vec<&str> = s.estimators.iter().map(|e| e.estimator.as_str()).collect();
        names.sort_unstable();
        if names != reference_names {
            return Err(CliError::Config(format!(
                "inconsistent summaries: {} reports estimators {names:?}, expected {reference_names:?}",
                p.as_ref().display()
            )));
        }
    }

    let mut rows: Vec<(f64, String, f64, f64)> = Vec::new();
    for s in &loaded {
        let x = s.sweep_value.unwrap_or(s.resolved_config.epsilon);
        for e in &s.estimators {
            rows.push((x, e.estimator.clone(), e.value, e.std_error));
        }
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));

    let mut out = String::from("sweep_value,estimator,value,std_error\n");
    for (x, name, value, se) in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt17(x),
            name,
            fmt17(value),
            fmt17(se)
        ));
    }
    Ok(out)
}
