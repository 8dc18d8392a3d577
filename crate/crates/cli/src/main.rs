//! `pdmp`: run boundary-constrained switching-process experiments from
//! JSON configs or named presets, sweep epsilon or the penalty exponent,
//! and distill summaries into plot-ready CSV.
//!
//! Exit codes: 0 success, 1 config error, 2 a config-requested check
//! failed (artifacts are still written so the failure can be inspected).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use pdmp_cli::config::{
    apply_overrides, load_config, preset, ExperimentConfig, Overrides, SweepParameter, SweepSpec,
};
use pdmp_cli::plot::emit_plot_data;
use pdmp_cli::runner::{prepare_run, run_experiment, RunArtifacts};
use pdmp_cli::writers::{write_artifacts, OutputFormat};
use pdmp_cli::CliError;

#[derive(Parser)]
#[command(
    name = "pdmp",
    version,
    about = "Experiment driver for boundary-constrained piecewise-linear switching processes"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one experiment (or the config's sweep block) and write artifacts.
    Simulate(RunFlags),
    /// Run the experiment once per epsilon value.
    SweepEpsilon(SweepFlags),
    /// Run the experiment once per penalty exponent k.
    SweepK(SweepFlags),
    /// Collect summary JSON files into one long-format plot CSV.
    EmitPlotData(PlotFlags),
}

#[derive(Args)]
struct RunFlags {
    /// Experiment config JSON (schema 1).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Named built-in config: quadratic-if or quadratic-z.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Override the config's epsilon.
    #[arg(long, value_name = "X")]
    epsilon: Option<f64>,
    /// Override the config's penalty exponent.
    #[arg(long, value_name = "N")]
    k: Option<u32>,
    /// Override the config's replica count.
    #[arg(long, value_name = "N")]
    replicas: Option<u64>,
    /// Override the config's seed (the PDMP_SEED env var beats this flag).
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Output directory (sweeps write one subdirectory per value).
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Row-table format; the summary is always JSON.
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

#[derive(Args)]
struct SweepFlags {
    #[command(flatten)]
    run: RunFlags,
    /// Comma-separated sweep values; overrides the config's sweep block.
    #[arg(long, value_delimiter = ',', value_name = "V,V,...")]
    values: Vec<f64>,
}

#[derive(Args)]
struct PlotFlags {
    /// Summary JSON files written by simulate or the sweeps.
    #[arg(required = true, value_name = "SUMMARY")]
    summaries: Vec<PathBuf>,
    /// Output CSV path.
    #[arg(long, value_name = "PATH", default_value = "plot.csv")]
    out: PathBuf,
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap's own exit codes don't match the documented contract
            // (0 ok, 1 config error, 2 failed check), so map them here.
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprint!("{e}");
            return 1;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Simulate(flags) => {
            let cfg = resolve(&flags)?;
            run_all(cfg, &flags.out, flags.format)
        }
        Cmd::SweepEpsilon(flags) => {
            let cfg = with_sweep(&flags, SweepParameter::Epsilon)?;
            run_all(cfg, &flags.run.out, flags.run.format)
        }
        Cmd::SweepK(flags) => {
            let cfg = with_sweep(&flags, SweepParameter::K)?;
            run_all(cfg, &flags.run.out, flags.run.format)
        }
        Cmd::EmitPlotData(flags) => {
            let csv = emit_plot_data(&flags.summaries)?;
            std::fs::write(&flags.out, csv).map_err(|e| {
                CliError::Config(format!("cannot write {}: {e}", flags.out.display()))
            })?;
            println!("wrote {}", flags.out.display());
            Ok(())
        }
    }
}

/// Loads the base config (file or preset), then layers flag overrides and
/// the PDMP_SEED environment variable on top.
fn resolve(flags: &RunFlags) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match (&flags.config, &flags.preset) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "--config and --preset are mutually exclusive".into(),
            ));
        }
        (None, None) => {
            return Err(CliError::Config(
                "one of --config or --preset is required".into(),
            ));
        }
        (Some(path), None) => load_config(path)?,
        (None, Some(name)) => preset(name)?,
    };
    let mut overrides = Overrides {
        epsilon: flags.epsilon,
        k: flags.k,
        replicas: flags.replicas,
        seed: flags.seed,
    };
    if let Some(seed) = env_seed()? {
        overrides.seed = Some(seed);
    }
    apply_overrides(&mut cfg, &overrides);
    Ok(cfg)
}

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var("PDMP_SEED") {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|e| CliError::Config(format!("PDMP_SEED must be a u64: {e}"))),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Config(format!("PDMP_SEED: {e}"))),
    }
}

fn with_sweep(flags: &SweepFlags, parameter: SweepParameter) -> Result<ExperimentConfig, CliError> {
    let mut cfg = resolve(&flags.run)?;
    let values = if !flags.values.is_empty() {
        flags.values.clone()
    } else if let Some(sweep) = &cfg.sweep {
        if sweep.parameter != parameter {
            return Err(CliError::Config(format!(
                "the config sweeps {} but the command sweeps {}; pass --values or fix the config",
                sweep.parameter.name(),
                parameter.name()
            )));
        }
        sweep.values.clone()
    } else {
        return Err(CliError::Config(
            "no sweep values: pass --values or put a sweep block in the config".into(),
        ));
    };
    cfg.sweep = Some(SweepSpec { parameter, values });
    Ok(cfg)
}

fn failed_checks(art: &RunArtifacts) -> Vec<String> {
    art.summary
        .estimators
        .iter()
        .filter(|e| !e.pass)
        .map(|e| format!("{} = {} (reference {})", e.estimator, e.value, e.reference))
        .collect()
}

/// Runs the config: once when there is no sweep block, otherwise once per
/// sweep value into `<out>/<parameter>_<value>/`. All artifacts are written
/// before a failed check turns the run into exit code 2.
fn run_all(cfg: ExperimentConfig, out: &Path, format: OutputFormat) -> Result<(), CliError> {
    cfg.validate()?;
    let Some(sweep) = cfg.sweep.clone() else {
        let rr = prepare_run(cfg, None)?;
        let art = run_experiment(&rr)?;
        write_artifacts(out, format, &art)?;
        println!("wrote {}", out.display());
        let failures = failed_checks(&art);
        if !failures.is_empty() {
            return Err(CliError::Validation(failures.join("; ")));
        }
        return Ok(());
    };

    let mut failures = Vec::new();
    for &value in &sweep.values {
        let mut point = cfg.clone();
        point.sweep = None;
        let dir_name = match sweep.parameter {
            SweepParameter::Epsilon => {
                point.epsilon = value;
                format!("epsilon_{value}")
            }
            SweepParameter::K => {
                // validate() has already pinned sweep k values to integers.
                point.k = value as u32;
                format!("k_{}", value as u32)
            }
        };
        let dir = out.join(dir_name);
        let rr = prepare_run(point, Some((sweep.parameter, value)))?;
        let art = run_experiment(&rr)?;
        write_artifacts(&dir, format, &art)?;
        println!("wrote {}", dir.display());
        for f in failed_checks(&art) {
            failures.push(format!("{}={}: {f}", sweep.parameter.name(), value));
        }
    }
    if !failures.is_empty() {
        return Err(CliError::Validation(failures.join("; ")));
    }
    Ok(())
}
