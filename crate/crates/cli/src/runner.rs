//! Parallel replica dispatch. Replica r always draws from stream id r of
//! the config seed, results are merged in replica order, and estimator
//! folds run sequentially over the merged data, so artifacts are identical
//! whatever the worker-thread count.

use pdmp_core::{
    averaged_drift, boundary_speed_measure, pistar_first_moment, reduce_to_linear,
    simulate_averaged, simulate_constrained, simulate_coupled, simulate_flow, simulate_mirror,
    simulate_penalized, simulate_switching, skorokhod_upper_bound, time_change, tv_distance,
    warped_sup_distance, CadlagPath, EmpiricalLaw, Estimate, EstimatorSummary, FlowPath,
    HittingRecord, ProbabilityVector, RngStream, SwitchInit, SwitchingGenerator,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{
    config_digest, CoreProcess, ExperimentConfig, ProcessKind, SweepParameter, SCHEMA_VERSION,
};
use crate::{cfg_err, CliError};

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct HitRow {
    pub replica: u64,
    pub i: usize,
    pub t_star: f64,
    pub prejump_speed: f64,
    pub postjump_value: f64,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct PathRow {
    pub t: f64,
    pub x: f64,
    pub kind: &'static str,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct SwitchRow {
    pub t: f64,
    pub new_state: usize,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct CouplingRow {
    pub replica: u64,
    pub k: u32,
    pub epsilon: f64,
    pub n_jumps_x: u64,
    pub n_jumps_xp: u64,
    pub coupling_broken: bool,
    pub sup_dist_after_warp: f64,
    pub lambda_sup_dev: f64,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub schema: u32,
    pub config_digest: String,
    pub process: String,
    pub n_replicas: u64,
    pub n_hits: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_parameter: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_value: Option<f64>,
    pub resolved_config: ExperimentConfig,
    pub estimators: Vec<EstimatorSummary>,
    pub checks_passed: bool,
}

/// Everything one experiment produces, before any file is written.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub hits: Vec<HitRow>,
    pub path0: Vec<PathRow>,
    pub switching0: Option<Vec<SwitchRow>>,
    pub coupling: Vec<CouplingRow>,
    pub summary: RunSummary,
}

/// A validated config plus the exact limit quantities its estimators are
/// reported against. For the flow process these refer to the reduced linear
/// coordinates (the hit-time clock is shared, values are mapped).
pub struct ResolvedRun {
    pub config: ExperimentConfig,
    pub digest: String,
    pub sweep: Option<(SweepParameter, f64)>,
    pub core: CoreProcess,
    drift_window: f64,
    drift_reference: f64,
    speed_support: Vec<f64>,
    pistar_weights: Vec<f64>,
    traverse_reference: f64,
}

pub fn prepare_run(
    config: ExperimentConfig,
    sweep: Option<(SweepParameter, f64)>,
) -> Result<ResolvedRun, CliError> {
    config.validate()?;
    let core = config.build()?;
    let linear = match &core {
        CoreProcess::Linear(p) => p.clone(),
        CoreProcess::Flow(f) => reduce_to_linear(f).map_err(cfg_err)?,
    };
    let drift_reference = averaged_drift(&linear.generator).map_err(cfg_err)?;
    let pistar = boundary_speed_measure(&linear.generator).map_err(cfg_err)?;
    let moment = pistar_first_moment(&linear.generator).map_err(cfg_err)?;
    // A window that no path can leave before the boundary: from the top of
    // the initial support, even the fastest speed covers less than half the
    // remaining headroom. Chord slopes over it are hit-free by construction.
    let headroom = linear.boundary - linear.initial_value.support_upper_bound();
    let drift_window = (0.45 * headroom / linear.max_speed()).min(0.5 * linear.horizon);
    Ok(ResolvedRun {
        digest: config_digest(&config),
        sweep,
        core,
        drift_window,
        drift_reference,
        speed_support: linear.generator.speeds().to_vec(),
        pistar_weights: pistar.weights().to_vec(),
        traverse_reference: linear.boundary * moment,
        config,
    })
}

#[derive(Default)]
struct ReplicaOut {
    hits: Vec<HitRow>,
    drift_slope: Option<f64>,
    lambda_dev: Option<f64>,
    skorokhod: Option<f64>,
    broken: Option<bool>,
    traverse: Option<f64>,
    coupling: Option<CouplingRow>,
    path0: Option<Vec<PathRow>>,
    switching0: Option<Vec<SwitchRow>>,
}

fn hit_rows(replica: u64, jumps: &[HittingRecord]) -> Vec<HitRow> {
    jumps
        .iter()
        .map(|r| HitRow {
            replica,
            i: r.index,
            t_star: r.time,
            prejump_speed: r.prejump_speed,
            postjump_value: r.postjump_value,
        })
        .collect()
}

fn chord_slope(path: &CadlagPath, w: f64) -> Result<f64, CliError> {
    let a = path.value_at(0.0).map_err(cfg_err)?;
    let b = path.value_at(w).map_err(cfg_err)?;
    Ok((b - a) / w)
}

/// Event rows of one piecewise-linear path: every segment start, hits split
/// into the boundary touch and the jump target, and the horizon value.
fn dump_linear_path(path: &CadlagPath) -> Result<Vec<PathRow>, CliError> {
    let segs = path.segments();
    let jumps = path.jumps();
    let mut rows = Vec::with_capacity(segs.len() + jumps.len() + 1);
    let mut j = 0usize;
    for (si, s) in segs.iter().enumerate() {
        if si > 0 && j < jumps.len() && jumps[j].time == s.t_start {
            rows.push(PathRow {
                t: s.t_start,
                x: path.value_left(s.t_start).map_err(cfg_err)?,
                kind: "hit",
            });
            rows.push(PathRow {
                t: s.t_start,
                x: s.x_start,
                kind: "jump_target",
            });
            j += 1;
        } else {
            rows.push(PathRow {
                t: s.t_start,
                x: s.x_start,
                kind: "segment_start",
            });
        }
    }
    rows.push(PathRow {
        t: path.horizon(),
        x: path.value_at(path.horizon()).map_err(cfg_err)?,
        kind: "horizon",
    });
    Ok(rows)
}

/// Same event rows for the flow process, with values mapped back to the
/// original coordinates.
fn dump_flow_path(fp: &FlowPath) -> Result<Vec<PathRow>, CliError> {
    let hom = fp.homeomorphism();
    let mut rows = dump_linear_path(fp.z_path())?;
    for row in &mut rows {
        row.x = hom.inverse_value(row.x);
    }
    Ok(rows)
}

/// Replays the switching realization of stream `stream` (the lanes are
/// stateless, so this reproduces exactly what the simulator consumed).
fn dump_switching(
    g: &SwitchingGenerator,
    init: &SwitchInit,
    epsilon: f64,
    horizon: f64,
    stream: &RngStream,
) -> Result<Vec<SwitchRow>, CliError> {
    let sp = simulate_switching(g, init, epsilon, horizon, stream).map_err(cfg_err)?;
    let mut rows = Vec::with_capacity(sp.events().len() + 1);
    rows.push(SwitchRow {
        t: 0.0,
        new_state: sp.initial_state(),
    });
    for &(t, s) in sp.events() {
        rows.push(SwitchRow { t, new_state: s });
    }
    Ok(rows)
}

fn run_replica(rr: &ResolvedRun, replica: u64) -> Result<ReplicaOut, CliError> {
    let stream = RngStream::replica(rr.config.seed, replica);
    let dump = replica == 0;
    let mut out = ReplicaOut::default();
    match &rr.core {
        CoreProcess::Linear(pcfg) => match rr.config.process {
            ProcessKind::Constrained => {
                let path = simulate_constrained(pcfg, &stream).map_err(cfg_err)?;
                out.hits = hit_rows(replica, path.jumps());
                out.drift_slope = Some(chord_slope(&path, rr.drift_window)?);
                if dump {
                    out.path0 = Some(dump_linear_path(&path)?);
                    out.switching0 = Some(dump_switching(
                        &pcfg.generator,
                        &pcfg.initial_state,
                        pcfg.epsilon,
                        pcfg.horizon,
                        &stream,
                    )?);
                }
            }
            ProcessKind::Penalized => {
                let pp = simulate_penalized(pcfg, rr.config.k, &stream).map_err(cfg_err)?;
                out.hits = hit_rows(replica, pp.path().jumps());
                out.drift_slope = Some(chord_slope(pp.path(), rr.drift_window)?);
                out.lambda_dev = Some(time_change(&pp, pcfg.epsilon, rr.config.k).sup_deviation());
                if dump {
                    out.path0 = Some(dump_linear_path(pp.path())?);
                    out.switching0 = Some(dump_switching(
                        &pcfg.generator,
                        &pcfg.initial_state,
                        pcfg.epsilon,
                        pcfg.horizon,
                        &stream,
                    )?);
                }
            }
            ProcessKind::Averaged => {
                let path = simulate_averaged(pcfg, &stream).map_err(cfg_err)?;
                out.hits = hit_rows(replica, path.jumps());
                out.drift_slope = Some(chord_slope(&path, rr.drift_window)?);
                if dump {
                    out.path0 = Some(dump_linear_path(&path)?);
                }
            }
            ProcessKind::Mirror => {
                let m = simulate_mirror(pcfg, &stream, pcfg.boundary).map_err(cfg_err)?;
                out.traverse = Some(m.value_at(pcfg.boundary).map_err(cfg_err)?);
                if dump {
                    out.path0 = Some(dump_linear_path(&m)?);
                    out.switching0 = Some(dump_switching(
                        &pcfg.generator.tilted(),
                        &pcfg.initial_state,
                        pcfg.epsilon,
                        pcfg.boundary,
                        &stream,
                    )?);
                }
            }
            ProcessKind::Coupled => {
                let pair = simulate_coupled(pcfg, rr.config.k, &stream).map_err(cfg_err)?;
                out.hits = hit_rows(replica, pair.x.jumps());
                let sup =
                    warped_sup_distance(&pair.x, pair.xp.path(), &pair.warp).map_err(cfg_err)?;
                let dev = time_change(&pair.xp, pcfg.epsilon, rr.config.k).sup_deviation();
                out.skorokhod =
                    Some(skorokhod_upper_bound(&pair.x, pair.xp.path()).map_err(cfg_err)?);
                out.broken = Some(pair.coupling_broken);
                out.lambda_dev = Some(dev);
                out.coupling = Some(CouplingRow {
                    replica,
                    k: rr.config.k,
                    epsilon: pcfg.epsilon,
                    n_jumps_x: pair.x.jumps().len() as u64,
                    n_jumps_xp: pair.xp.path().jumps().len() as u64,
                    coupling_broken: pair.coupling_broken,
                    sup_dist_after_warp: sup,
                    lambda_sup_dev: dev,
                });
                if dump {
                    out.path0 = Some(dump_linear_path(&pair.x)?);
                    out.switching0 = Some(dump_switching(
                        &pcfg.generator,
                        &pcfg.initial_state,
                        pcfg.epsilon,
                        pcfg.horizon,
                        &stream,
                    )?);
                }
            }
            ProcessKind::Flow => {
                return Err(CliError::Config(
                    "internal: flow process built a linear config".into(),
                ));
            }
        },
        CoreProcess::Flow(fcfg) => {
            let fp = simulate_flow(fcfg, &stream).map_err(cfg_err)?;
            let xs = fp.postjump_values_x();
            out.hits = fp
                .z_path()
                .jumps()
                .iter()
                .zip(xs)
                .map(|(r, x)| HitRow {
                    replica,
                    i: r.index,
                    t_star: r.time,
                    prejump_speed: r.prejump_speed,
                    postjump_value: x,
                })
                .collect();
            out.drift_slope = Some(chord_slope(fp.z_path(), rr.drift_window)?);
            if dump {
                out.path0 = Some(dump_flow_path(&fp)?);
                let reduced = reduce_to_linear(fcfg).map_err(cfg_err)?;
                out.switching0 = Some(dump_switching(
                    &reduced.generator,
                    &reduced.initial_state,
                    reduced.epsilon,
                    reduced.horizon,
                    &stream,
                )?);
            }
        }
    }
    Ok(out)
}

fn summarize(
    rr: &ResolvedRun,
    name: &str,
    value: f64,
    std_error: f64,
    reference: f64,
) -> EstimatorSummary {
    EstimatorSummary {
        config_digest: rr.digest.clone(),
        n_replicas: rr.config.replicas as usize,
        estimator: name.to_string(),
        value,
        std_error,
        reference,
        pass: true,
    }
}

fn summarize_estimate(
    rr: &ResolvedRun,
    name: &str,
    est: &Estimate,
    reference: f64,
) -> EstimatorSummary {
    summarize(rr, name, est.mean, est.std_error, reference)
}

/// TV distance of the pooled pre-jump speed law to the boundary speed
/// measure. The reported standard error is the conservative multinomial
/// bound 1/(2 sqrt(n)); with no hits at all the distance degenerates to its
/// upper bound 1.
fn prejump_tv(rr: &ResolvedRun, hits: &[HitRow]) -> Result<EstimatorSummary, CliError> {
    if hits.is_empty() {
        return Ok(summarize(rr, "prejump_speed_tv", 1.0, 0.5, 0.0));
    }
    let law = EmpiricalLaw::from_values(hits.iter().map(|h| h.prejump_speed)).map_err(cfg_err)?;
    let reference = ProbabilityVector::new(rr.speed_support.clone(), rr.pistar_weights.clone())
        .map_err(cfg_err)?;
    let tv = tv_distance(&law, &reference);
    let se = 0.5 / (hits.len() as f64).sqrt();
    Ok(summarize(rr, "prejump_speed_tv", tv, se, 0.0))
}

fn assemble(rr: &ResolvedRun, outs: Vec<ReplicaOut>) -> Result<RunArtifacts, CliError> {
    let mut hits = Vec::new();
    let mut path0 = Vec::new();
    let mut switching0 = None;
    let mut coupling = Vec::new();
    let mut drift_slopes = Vec::new();
    let mut lambda_devs = Vec::new();
    let mut skorokhods = Vec::new();
    let mut broken01 = Vec::new();
    let mut traverses = Vec::new();
    for mut out in outs {
        hits.append(&mut out.hits);
        if let Some(p) = out.path0 {
            path0 = p;
        }
        if out.switching0.is_some() {
            switching0 = out.switching0;
        }
        if let Some(c) = out.coupling {
            coupling.push(c);
        }
        if let Some(v) = out.drift_slope {
            drift_slopes.push(v);
        }
        if let Some(v) = out.lambda_dev {
            lambda_devs.push(v);
        }
        if let Some(v) = out.skorokhod {
            skorokhods.push(v);
        }
        if let Some(b) = out.broken {
            broken01.push(if b { 1.0 } else { 0.0 });
        }
        if let Some(v) = out.traverse {
            traverses.push(v);
        }
    }

    let mut estimators = Vec::new();
    match rr.config.process {
        ProcessKind::Constrained | ProcessKind::Flow => {
            estimators.push(prejump_tv(rr, &hits)?);
            estimators.push(summarize_estimate(
                rr,
                "drift",
                &Estimate::from_samples(&drift_slopes),
                rr.drift_reference,
            ));
        }
        ProcessKind::Penalized => {
            estimators.push(prejump_tv(rr, &hits)?);
            estimators.push(summarize_estimate(
                rr,
                "drift",
                &Estimate::from_samples(&drift_slopes),
                rr.drift_reference,
            ));
            estimators.push(summarize_estimate(
                rr,
                "lambda_sup_dev_mean",
                &Estimate::from_samples(&lambda_devs),
                0.0,
            ));
        }
        ProcessKind::Averaged => {
            estimators.push(summarize_estimate(
                rr,
                "drift",
                &Estimate::from_samples(&drift_slopes),
                rr.drift_reference,
            ));
        }
        ProcessKind::Mirror => {
            estimators.push(summarize_estimate(
                rr,
                "mirror_traverse_time",
                &Estimate::from_samples(&traverses),
                rr.traverse_reference,
            ));
        }
        ProcessKind::Coupled => {
            estimators.push(summarize_estimate(
                rr,
                "skorokhod_mean",
                &Estimate::from_samples(&skorokhods),
                0.0,
            ));
            estimators.push(summarize_estimate(
                rr,
                "broken_fraction",
                &Estimate::from_samples(&broken01),
                0.0,
            ));
            estimators.push(summarize_estimate(
                rr,
                "lambda_sup_dev_mean",
                &Estimate::from_samples(&lambda_devs),
                0.0,
            ));
        }
    }

    // A check retargets its estimator's reference and decides pass/fail;
    // untouched entries stay informational with pass = true.
    for check in &rr.config.checks {
        let entry = estimators
            .iter_mut()
            .find(|e| e.estimator == check.estimator)
            .ok_or_else(|| {
                CliError::Config(format!(
                    "check names unknown estimator \"{}\"",
                    check.estimator
                ))
            })?;
        entry.reference = check.reference;
        entry.pass = (entry.value - check.reference).abs() <= check.tolerance;
    }
    let checks_passed = estimators.iter().all(|e| e.pass);

    let summary = RunSummary {
        schema: SCHEMA_VERSION,
        config_digest: rr.digest.clone(),
        process: rr.config.process.name().to_string(),
        n_replicas: rr.config.replicas,
        n_hits: hits.len() as u64,
        sweep_parameter: rr.sweep.map(|(p, _)| p.name().to_string()),
        sweep_value: rr.sweep.map(|(_, v)| v),
        resolved_config: rr.config.clone(),
        estimators,
        checks_passed,
    };
    Ok(RunArtifacts {
        hits,
        path0,
        switching0,
        coupling,
        summary,
    })
}

/// Runs every replica (in parallel when a rayon pool is available) and
/// folds the results in replica order.
pub fn run_experiment(rr: &ResolvedRun) -> Result<RunArtifacts, CliError> {
    let outs: Result<Vec<ReplicaOut>, CliError> = (0..rr.config.replicas)
        .into_par_iter()
        .map(|r| run_replica(rr, r))
        .collect();
    assemble(rr, outs?)
}
