//! Experiment configuration: the `"schema": 1` JSON layout, named presets,
//! flag overrides, and the digest that ties artifacts to the exact resolved
//! config that produced them.

use std::fmt;
use std::path::Path;

use pdmp_core::{
    reduce_to_linear, FlowKind, FlowProcessConfig, FlowSpec, JumpKernel, ProbabilityVector,
    ProcessConfig, SwitchInit, SwitchingGenerator,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{cfg_err, CliError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    Constrained,
    Penalized,
    Averaged,
    Mirror,
    Flow,
    Coupled,
}

impl ProcessKind {
    pub fn name(self) -> &'static str {
        match self {
            ProcessKind::Constrained => "constrained",
            ProcessKind::Penalized => "penalized",
            ProcessKind::Averaged => "averaged",
            ProcessKind::Mirror => "mirror",
            ProcessKind::Flow => "flow",
            ProcessKind::Coupled => "coupled",
        }
    }
}

impl fmt::Display for ProcessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Jump-target law in JSON form. Point masses and uniforms cover the
/// simulators' needs; mixtures nest arbitrarily.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    Dirac { at: f64 },
    Uniform { lo: f64, hi: f64 },
    Mixture { components: Vec<WeightedKernel> },
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WeightedKernel {
    pub weight: f64,
    pub kernel: KernelSpec,
}

impl KernelSpec {
    pub fn build(&self) -> JumpKernel {
        match self {
            KernelSpec::Dirac { at } => JumpKernel::dirac(*at),
            KernelSpec::Uniform { lo, hi } => JumpKernel::uniform(*lo, *hi),
            KernelSpec::Mixture { components } => JumpKernel::mixture(
                components
                    .iter()
                    .map(|c| (c.weight, c.kernel.build()))
                    .collect(),
            ),
        }
    }
}

/// Initial switching state: a fixed index, or a law over state indices.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(untagged)]
pub enum InitialStateSpec {
    Index(usize),
    Law { weights: Vec<f64> },
}

impl Default for InitialStateSpec {
    fn default() -> Self {
        InitialStateSpec::Index(0)
    }
}

impl InitialStateSpec {
    fn build(&self, n_states: usize) -> Result<SwitchInit, CliError> {
        match self {
            InitialStateSpec::Index(i) => {
                if *i >= n_states {
                    return Err(CliError::Config(format!(
                        "initial_state index {i} out of range for {n_states} states"
                    )));
                }
                Ok(SwitchInit::State(*i))
            }
            InitialStateSpec::Law { weights } => {
                if weights.len() != n_states {
                    return Err(CliError::Config(format!(
                        "initial_state law has {} weights for {n_states} states",
                        weights.len()
                    )));
                }
                let support = (0..n_states).map(|i| i as f64).collect();
                let pv = ProbabilityVector::new(support, weights.clone()).map_err(cfg_err)?;
                Ok(SwitchInit::Law(pv))
            }
        }
    }
}

/// Nonlinear-motion block, required when `process` is `flow`. Only the
/// closed-form quadratic motion is expressible in JSON; `boundary` and
/// `gap` from the top level are read in the original coordinates.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FlowBlock {
    pub m: f64,
    pub alpha: Vec<f64>,
    pub kind: FlowKindSpec,
}

#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum FlowKindSpec {
    Quadratic,
}

#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Epsilon,
    K,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Epsilon => "epsilon",
            SweepParameter::K => "k",
        }
    }
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

/// A pass/fail assertion on a named estimator; failures flip the exit code
/// to 2 after all artifacts are written.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub estimator: String,
    pub reference: f64,
    pub tolerance: f64,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub process: ProcessKind,
    pub speeds: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub boundary: f64,
    pub gap: f64,
    pub initial_value: KernelSpec,
    #[serde(default)]
    pub initial_state: InitialStateSpec,
    pub kernels: Vec<KernelSpec>,
    pub epsilon: f64,
    #[serde(default = "default_k")]
    pub k: u32,
    pub horizon: f64,
    #[serde(default = "default_replicas")]
    pub replicas: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<CheckSpec>,
}

fn default_k() -> u32 {
    1
}

fn default_replicas() -> u64 {
    64
}

/// The built simulator input: either the piecewise-linear process family or
/// the nonlinear-motion config that reduces to it.
#[derive(Clone, Debug)]
pub enum CoreProcess {
    Linear(ProcessConfig),
    Flow(FlowProcessConfig),
}

/// Estimators each process kind reports; a check may only name one of these.
pub fn allowed_estimators(process: ProcessKind) -> &'static [&'static str] {
    match process {
        ProcessKind::Constrained | ProcessKind::Flow => &["prejump_speed_tv", "drift"],
        ProcessKind::Penalized => &["prejump_speed_tv", "drift", "lambda_sup_dev_mean"],
        ProcessKind::Averaged => &["drift"],
        ProcessKind::Mirror => &["mirror_traverse_time"],
        ProcessKind::Coupled => &["skorokhod_mean", "broken_fraction", "lambda_sup_dev_mean"],
    }
}

impl ExperimentConfig {
    /// Schema-level validation plus a full build of the simulator config,
    /// so every reportable mistake surfaces before any replica runs.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema {} (this binary reads schema {SCHEMA_VERSION})",
                self.schema
            )));
        }
        if self.replicas < 1 {
            return Err(CliError::Config("replicas must be at least 1".into()));
        }
        match (self.process, &self.flow) {
            (ProcessKind::Flow, None) => {
                return Err(CliError::Config(
                    "process \"flow\" requires a flow block".into(),
                ));
            }
            (ProcessKind::Flow, Some(_)) => {}
            (_, Some(_)) => {
                return Err(CliError::Config(format!(
                    "flow block is only valid for process \"flow\", not \"{}\"",
                    self.process
                )));
            }
            (_, None) => {}
        }
        if matches!(self.process, ProcessKind::Penalized | ProcessKind::Coupled) && self.k < 1 {
            return Err(CliError::Config(format!(
                "process \"{}\" needs k >= 1, got {}",
                self.process, self.k
            )));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(CliError::Config("sweep values must be nonempty".into()));
            }
            for &v in &sweep.values {
                match sweep.parameter {
                    SweepParameter::Epsilon => {
                        if !(v > 0.0) || !v.is_finite() {
                            return Err(CliError::Config(format!(
                                "sweep epsilon values must be positive and finite, got {v}"
                            )));
                        }
                    }
                    SweepParameter::K => {
                        if v.fract() != 0.0 || !(v >= 1.0) || v > u32::MAX as f64 {
                            return Err(CliError::Config(format!(
                                "sweep k values must be integers >= 1, got {v}"
                            )));
                        }
                    }
                }
            }
        }
        let allowed = allowed_estimators(self.process);
        for check in &self.checks {
            if !allowed.contains(&check.estimator.as_str()) {
                return Err(CliError::Config(format!(
                    "check names estimator \"{}\" but process \"{}\" reports only {:?}",
                    check.estimator, self.process, allowed
                )));
            }
            if !check.reference.is_finite() {
                return Err(CliError::Config(format!(
                    "check \"{}\" reference must be finite",
                    check.estimator
                )));
            }
            if !(check.tolerance >= 0.0) || !check.tolerance.is_finite() {
                return Err(CliError::Config(format!(
                    "check \"{}\" tolerance must be finite and nonnegative",
                    check.estimator
                )));
            }
        }
        self.build()?;
        Ok(())
    }

    /// Builds the simulator-facing config, surfacing model-level problems
    /// (bad rate matrix, kernel support above the safety gap, ...) as
    /// config errors.
    pub fn build(&self) -> Result<CoreProcess, CliError> {
        let generator =
            SwitchingGenerator::new(self.speeds.clone(), self.q.clone()).map_err(cfg_err)?;
        let initial_state = self.initial_state.build(self.speeds.len())?;
        let initial_value = self.initial_value.build();
        let kernels: Vec<JumpKernel> = self.kernels.iter().map(KernelSpec::build).collect();
        match self.process {
            ProcessKind::Flow => {
                let block = self.flow.as_ref().ok_or_else(|| {
                    CliError::Config("process \"flow\" requires a flow block".into())
                })?;
                let fcfg = FlowProcessConfig {
                    generator,
                    flow: FlowSpec {
                        m: block.m,
                        boundary: self.boundary,
                        alpha: block.alpha.clone(),
                        kind: match block.kind {
                            FlowKindSpec::Quadratic => FlowKind::Quadratic,
                        },
                    },
                    initial_value,
                    initial_state,
                    kernels,
                    epsilon: self.epsilon,
                    horizon: self.horizon,
                    gap: self.gap,
                };
                // The reduction validates the whole flow config, including
                // pushed-forward kernel supports.
                reduce_to_linear(&fcfg).map_err(cfg_err)?;
                Ok(CoreProcess::Flow(fcfg))
            }
            _ => {
                let pcfg = ProcessConfig {
                    generator,
                    boundary: self.boundary,
                    initial_value,
                    initial_state,
                    kernels,
                    epsilon: self.epsilon,
                    horizon: self.horizon,
                    gap: self.gap,
                };
                pcfg.validate().map_err(cfg_err)?;
                Ok(CoreProcess::Linear(pcfg))
            }
        }
    }
}

/// Flag-level overrides; `None` keeps the config value. Seed precedence is
/// PDMP_SEED env var, then `--seed`, then the config field.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub epsilon: Option<f64>,
    pub k: Option<u32>,
    pub replicas: Option<u64>,
    pub seed: Option<u64>,
}

pub fn apply_overrides(cfg: &mut ExperimentConfig, o: &Overrides) {
    if let Some(e) = o.epsilon {
        cfg.epsilon = e;
    }
    if let Some(k) = o.k {
        cfg.k = k;
    }
    if let Some(r) = o.replicas {
        cfg.replicas = r;
    }
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    // serde_json errors carry "at line L column C"; keep them verbatim.
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Named ready-to-run configs.
///
/// * `quadratic-if`: the nonlinear integrate-and-fire style example with
///   motion x' = (speed * x)^2 on two states, reduced internally to the
///   linear case by G(x) = 1/m - 1/x.
/// * `quadratic-z`: the already-reduced linear configuration with speeds
///   {1, 4}, boundary 1, and uniform jump targets on [0, 1/2].
pub fn preset(name: &str) -> Result<ExperimentConfig, CliError> {
    let quadratic_q = vec![vec![-1.0, 1.0], vec![2.0, -2.0]];
    match name {
        "quadratic-if" => Ok(ExperimentConfig {
            schema: SCHEMA_VERSION,
            process: ProcessKind::Flow,
            speeds: vec![1.0, 2.0],
            q: quadratic_q,
            boundary: 2.0,
            gap: 0.25,
            initial_value: KernelSpec::Uniform { lo: 1.0, hi: 1.75 },
            initial_state: InitialStateSpec::Index(0),
            kernels: vec![
                KernelSpec::Uniform { lo: 1.0, hi: 1.75 },
                KernelSpec::Uniform { lo: 1.0, hi: 1.75 },
            ],
            epsilon: 0.05,
            k: 1,
            horizon: 20.0,
            replicas: 64,
            seed: 0,
            flow: Some(FlowBlock {
                m: 1.0,
                alpha: vec![1.0, 4.0],
                kind: FlowKindSpec::Quadratic,
            }),
            sweep: None,
            checks: Vec::new(),
        }),
        "quadratic-z" => Ok(ExperimentConfig {
            schema: SCHEMA_VERSION,
            process: ProcessKind::Constrained,
            speeds: vec![1.0, 4.0],
            q: quadratic_q,
            boundary: 1.0,
            gap: 0.5,
            initial_value: KernelSpec::Dirac { at: 0.25 },
            initial_state: InitialStateSpec::Index(0),
            kernels: vec![
                KernelSpec::Uniform { lo: 0.0, hi: 0.5 },
                KernelSpec::Uniform { lo: 0.0, hi: 0.5 },
            ],
            epsilon: 0.05,
            k: 1,
            horizon: 4.0,
            replicas: 64,
            seed: 0,
            flow: None,
            sweep: None,
            checks: Vec::new(),
        }),
        other => Err(CliError::Config(format!(
            "unknown preset \"{other}\" (available: quadratic-if, quadratic-z)"
        ))),
    }
}

/// SHA-256 of the resolved config's canonical JSON. Struct fields serialize
/// in declaration order and floats print shortest-roundtrip, so the digest
/// is stable across runs and platforms.
pub fn config_digest(cfg: &ExperimentConfig) -> String {
    let json = serde_json::to_string(cfg).expect("config serializes");
    let mut hasher = Sha256::new();
    hasher.update(json.as_bytes());
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
