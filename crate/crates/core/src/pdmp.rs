//! Event-driven simulation of the boundary-constrained process, its
//! averaged limit, and the mirror process.
//!
//! Hitting detection is algebraic: within a constant-speed stretch the hit
//! time is t + (c - x)/y, compared against the next switching event. There
//! is no time-stepping anywhere, so event times are exact up to one rounding
//! per arithmetic step.

use rand::Rng;
use thiserror::Error;

use crate::ctmc::{simulate_switching, CtmcError, SwitchInit, SwitchPath};
use crate::generator::{averaged_drift, averaged_jump_kernel, GeneratorError, SwitchingGenerator};
use crate::kernel::JumpKernel;
use crate::path::{CadlagPath, HittingRecord, PathError, Segment};
use crate::rng::{Lane, RngStream};
use crate::util::KahanSum;

/// Slack allowed when comparing kernel support bounds against c - rho;
/// absorbs the one rounding a pushforward introduces.
const SUPPORT_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum PdmpError {
    #[error("invalid process config: {reason}")]
    ConfigInvalid { reason: String },
    #[error("simulation produced a nonfinite or non-advancing event time")]
    NonfiniteTime,
    #[error(transparent)]
    Ctmc(#[from] CtmcError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
}

/// Full description of one constrained-process experiment.
///
/// `kernels[i]` is the jump measure fired when the boundary is hit at speed
/// `generator.speeds()[i]`. Both the kernels and the initial law must be
/// supported at or below `boundary - gap`; keeping the initial value out of
/// the gap strip as well makes the deterministic hit-count bound
/// p*(T) <= T * max_speed / gap hold from time zero.
#[derive(Debug, Clone)]
pub struct ProcessConfig {
    pub generator: SwitchingGenerator,
    pub boundary: f64,
    /// Law of the initial value xi_0.
    pub initial_value: JumpKernel,
    /// Law of the initial switching state.
    pub initial_state: SwitchInit,
    pub kernels: Vec<JumpKernel>,
    pub epsilon: f64,
    pub horizon: f64,
    /// The gap rho > 0: all jump kernels live on (-inf, boundary - gap].
    pub gap: f64,
}

impl ProcessConfig {
    pub fn validate(&self) -> Result<(), PdmpError> {
        let invalid = |reason: String| Err(PdmpError::ConfigInvalid { reason });
        self.generator
            .validate()
            .map_err(|e| PdmpError::ConfigInvalid {
                reason: format!("generator: {e}"),
            })?;
        if !self.boundary.is_finite() {
            return invalid(format!("boundary must be finite, got {}", self.boundary));
        }
        if !(self.gap > 0.0) || !self.gap.is_finite() {
            return invalid(format!("gap must be positive and finite, got {}", self.gap));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return invalid(format!("epsilon must lie in (0, 1], got {}", self.epsilon));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return invalid(format!(
                "horizon must be positive and finite, got {}",
                self.horizon
            ));
        }
        let n = self.generator.n_states();
        if self.kernels.len() != n {
            return invalid(format!(
                "{} kernels declared for {n} speeds",
                self.kernels.len()
            ));
        }
        let cap = self.boundary - self.gap + SUPPORT_TOL * self.boundary.abs().max(1.0);
        for (i, k) in self.kernels.iter().enumerate() {
            k.validate().map_err(|e| PdmpError::ConfigInvalid {
                reason: format!("kernel {i}: {e}"),
            })?;
            if k.support_upper_bound() > cap {
                return invalid(format!(
                    "kernel {i} support reaches {} above boundary - gap = {}",
                    k.support_upper_bound(),
                    self.boundary - self.gap
                ));
            }
        }
        self.initial_value
            .validate()
            .map_err(|e| PdmpError::ConfigInvalid {
                reason: format!("initial law: {e}"),
            })?;
        if self.initial_value.support_upper_bound() > cap {
            return invalid(format!(
                "initial law support reaches {} above boundary - gap = {}",
                self.initial_value.support_upper_bound(),
                self.boundary - self.gap
            ));
        }
        match &self.initial_state {
            SwitchInit::State(i) if *i >= n => {
                invalid(format!("initial switching state {i} out of range"))
            }
            SwitchInit::Law(law) if law.len() != n => invalid(format!(
                "initial switching law has {} weights for {n} states",
                law.len()
            )),
            _ => Ok(()),
        }
    }

    pub fn max_speed(&self) -> f64 {
        self.generator.max_speed()
    }

    /// Deterministic ceiling on the number of boundary jumps up to t.
    pub fn hit_count_bound(&self, t: f64) -> f64 {
        t * self.max_speed() / self.gap
    }
}

/// Constrained process: linear motion at the switching speed, instantaneous
/// jump from the speed-matched kernel whenever x reaches the boundary.
///
/// A hit and a switch at the identical floating-point instant resolve in
/// favor of the hit, so the jump measure reads the pre-switch speed.
pub fn simulate_constrained(
    cfg: &ProcessConfig,
    stream: &RngStream,
) -> Result<CadlagPath, PdmpError> {
    cfg.validate()?;
    let switching = simulate_switching(
        &cfg.generator,
        &cfg.initial_state,
        cfg.epsilon,
        cfg.horizon,
        stream,
    )?;
    let mut targets = stream.lane(Lane::JumpTargets);
    let xi0 = cfg.initial_value.sample(targets.random::<f64>());
    build_constrained(cfg, &switching, xi0, &mut || targets.random::<f64>())
}

/// Shared event loop: runs the constrained dynamics on a fixed switching
/// realization, drawing jump-target uniforms from `draw`.
fn build_constrained(
    cfg: &ProcessConfig,
    switching: &SwitchPath,
    xi0: f64,
    draw: &mut dyn FnMut() -> f64,
) -> Result<CadlagPath, PdmpError> {
    let speeds = cfg.generator.speeds();
    let c = cfg.boundary;
    let horizon = cfg.horizon;
    let mut state = switching.initial_state();
    let mut segments = vec![Segment {
        t_start: 0.0,
        x_start: xi0,
        slope: speeds[state],
    }];
    let mut jumps: Vec<HittingRecord> = Vec::new();
    let mut events = switching.events().iter().peekable();
    let mut t = 0.0;
    let mut x = xi0;
    loop {
        let speed = speeds[state];
        let next_switch = events.peek().map_or(f64::INFINITY, |&&(et, _)| et);
        let stretch_end = next_switch.min(horizon);
        // Clamping keeps the loop total if rounding ever lands x at or
        // above c at a segment start: the hit then fires immediately.
        let t_hit = (t + (c - x) / speed).max(t);
        if !t_hit.is_finite() {
            return Err(PdmpError::NonfiniteTime);
        }
        if t_hit <= stretch_end {
            if jumps.last().is_some_and(|r| t_hit <= r.time) {
                return Err(PdmpError::NonfiniteTime);
            }
            let xi = cfg.kernels[state].sample(draw());
            jumps.push(HittingRecord {
                index: jumps.len() + 1,
                time: t_hit,
                prejump_speed: speed,
                postjump_value: xi,
            });
            segments.push(Segment {
                t_start: t_hit,
                x_start: xi,
                slope: speed,
            });
            t = t_hit;
            x = xi;
            if t >= horizon {
                break;
            }
        } else if next_switch <= horizon {
            let &(et, es) = events.next().expect("peeked switch event");
            x += speed * (et - t);
            t = et;
            state = es;
            segments.push(Segment {
                t_start: t,
                x_start: x,
                slope: speeds[state],
            });
            if t >= horizon {
                break;
            }
        } else {
            break;
        }
    }
    Ok(CadlagPath::from_parts(segments, jumps, horizon, false)?)
}

/// Averaged limit process: constant drift sum(y pi(y)), jump targets drawn
/// from the pi*-weighted kernel mixture. With Dirac kernels the whole path
/// is deterministic.
pub fn simulate_averaged(cfg: &ProcessConfig, stream: &RngStream) -> Result<CadlagPath, PdmpError> {
    cfg.validate()?;
    let drift = averaged_drift(&cfg.generator)?;
    let nubar = averaged_jump_kernel(&cfg.generator, &cfg.kernels)?;
    let mut targets = stream.lane(Lane::JumpTargets);
    let xi0 = cfg.initial_value.sample(targets.random::<f64>());
    let c = cfg.boundary;
    let mut segments = vec![Segment {
        t_start: 0.0,
        x_start: xi0,
        slope: drift,
    }];
    let mut jumps: Vec<HittingRecord> = Vec::new();
    let mut t = 0.0;
    let mut x = xi0;
    loop {
        let t_hit = (t + (c - x) / drift).max(t);
        if !t_hit.is_finite() {
            return Err(PdmpError::NonfiniteTime);
        }
        if t_hit > cfg.horizon {
            break;
        }
        if jumps.last().is_some_and(|r| t_hit <= r.time) {
            return Err(PdmpError::NonfiniteTime);
        }
        let xi = nubar.sample(targets.random::<f64>());
        jumps.push(HittingRecord {
            index: jumps.len() + 1,
            time: t_hit,
            prejump_speed: drift,
            postjump_value: xi,
        });
        segments.push(Segment {
            t_start: t_hit,
            x_start: xi,
            slope: drift,
        });
        t = t_hit;
        x = xi;
        if t >= cfg.horizon {
            break;
        }
    }
    Ok(CadlagPath::from_parts(segments, jumps, cfg.horizon, true)?)
}

/// Mirror process M(x): the reciprocal-speed chain simulated along the
/// space axis and integrated. The output is a continuous, strictly
/// increasing piecewise-linear path whose "time" axis is space.
pub fn simulate_mirror(
    cfg: &ProcessConfig,
    stream: &RngStream,
    x_horizon: f64,
) -> Result<CadlagPath, PdmpError> {
    cfg.validate()?;
    if !(x_horizon > 0.0) || !x_horizon.is_finite() {
        return Err(PdmpError::ConfigInvalid {
            reason: format!("x_horizon must be positive and finite, got {x_horizon}"),
        });
    }
    let tilted = cfg.generator.tilted();
    let chain = simulate_switching(&tilted, &cfg.initial_state, cfg.epsilon, x_horizon, stream)?;
    let w = tilted.speeds();
    let mut state = chain.initial_state();
    let mut segments = vec![Segment {
        t_start: 0.0,
        x_start: 0.0,
        slope: w[state],
    }];
    let mut m = KahanSum::new();
    let mut prev_u = 0.0;
    for &(u, s) in chain.events() {
        m.add(w[state] * (u - prev_u));
        prev_u = u;
        state = s;
        segments.push(Segment {
            t_start: u,
            x_start: m.value(),
            slope: w[state],
        });
    }
    Ok(CadlagPath::from_parts(
        segments,
        Vec::new(),
        x_horizon,
        false,
    )?)
}

/// Space-integral of reciprocal speeds along a constrained path, up to its
/// first boundary hit: sum over stretches of (x-increment)/(speed). This is
/// the mirror readout of the path's own switching realization; it must
/// reproduce the first hitting time to within accumulated rounding.
pub fn mirror_first_hit_time(path: &CadlagPath, boundary: f64) -> Option<f64> {
    let t1 = path.jumps().first()?.time;
    let segs = path.segments();
    let mut acc = KahanSum::new();
    for (i, s) in segs.iter().enumerate() {
        if s.t_start >= t1 {
            break;
        }
        let seg_end = segs.get(i + 1).map_or(path.horizon(), |n| n.t_start);
        if seg_end < t1 {
            let x_end = s.x_start + s.slope * (seg_end - s.t_start);
            acc.add((x_end - s.x_start) / s.slope);
        } else {
            acc.add((boundary - s.x_start) / s.slope);
            break;
        }
    }
    Some(acc.value())
}
