//! Penalized relaxation of the constrained process, its time change, the
//! coupled pair, and Skorokhod-distance upper bounds.
//!
//! The penalized process crosses the boundary and keeps moving; the jump fires
//! after an exponential delay of rate epsilon^-k. Both processes of a
//! coupled pair read the same switching realization and the same jump-target
//! uniforms by index, so their marginal laws are untouched while their paths
//! stay glued until a switching event lands between a hit of one process and
//! the matching jump of the other.

use rand::Rng;
use rand_distr::Exp1;
use thiserror::Error;

use crate::ctmc::simulate_switching;
use crate::path::{CadlagPath, HittingRecord, Segment};
use crate::pdmp::{simulate_constrained, PdmpError, ProcessConfig};
use crate::rng::{Lane, RngStream};
use crate::util::{Estimate, KahanSum};

#[derive(Debug, Error, PartialEq)]
pub enum PenaltyError {
    #[error("paths have different horizons: {a} vs {b}")]
    HorizonMismatch { a: f64, b: f64 },
    #[error("malformed piecewise-linear map: {what}")]
    MalformedWarp { what: &'static str },
    #[error(transparent)]
    Process(#[from] PdmpError),
}

/// One boundary excursion of the penalized process: the trajectory reaches
/// the boundary at `hit_time`, keeps moving above it for `duration`, and
/// jumps at `jump_time` to `postjump_value` using the kernel of the speed
/// then in force. `switched_during` marks a switching event strictly inside
/// the excursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overshoot {
    pub hit_time: f64,
    pub duration: f64,
    pub jump_time: f64,
    pub postjump_value: f64,
    pub speed_at_jump: f64,
    pub switched_during: bool,
}

/// Penalized trajectory: the full cadlag path (overshoot wedges included)
/// plus the excursion records. An excursion still open at the horizon is
/// kept in `pending_hit`.
#[derive(Debug, Clone, PartialEq)]
pub struct PenalizedPath {
    path: CadlagPath,
    overshoots: Vec<Overshoot>,
    pending_hit: Option<f64>,
}

impl PenalizedPath {
    pub fn path(&self) -> &CadlagPath {
        &self.path
    }

    pub fn overshoots(&self) -> &[Overshoot] {
        &self.overshoots
    }

    pub fn pending_hit(&self) -> Option<f64> {
        self.pending_hit
    }

    /// Time intervals spent at or above the boundary, clipped to the
    /// horizon; disjoint and increasing.
    pub fn overshoot_intervals(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = self
            .overshoots
            .iter()
            .map(|o| (o.hit_time, o.jump_time))
            .collect();
        if let Some(h) = self.pending_hit {
            out.push((h, self.path.horizon()));
        }
        out.retain(|(a, b)| b > a);
        out
    }
}

/// Strictly increasing piecewise-linear map through explicit breakpoints,
/// extended with slope 1 beyond them. Used for the time change lambda and
/// for the jump-matching warp gamma.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearMap {
    points: Vec<(f64, f64)>,
}

impl PiecewiseLinearMap {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, PenaltyError> {
        if points.len() < 2 {
            return Err(PenaltyError::MalformedWarp {
                what: "need at least two breakpoints",
            });
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) || !(w[1].1 > w[0].1) {
                return Err(PenaltyError::MalformedWarp {
                    what: "breakpoints must increase strictly in both coordinates",
                });
            }
        }
        if points
            .iter()
            .any(|&(a, b)| !a.is_finite() || !b.is_finite())
        {
            return Err(PenaltyError::MalformedWarp {
                what: "breakpoints must be finite",
            });
        }
        Ok(Self { points })
    }

    pub fn identity(horizon: f64) -> Self {
        Self {
            points: vec![(0.0, 0.0), (horizon, horizon)],
        }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn value(&self, t: f64) -> f64 {
        let pts = &self.points;
        if t <= pts[0].0 {
            return pts[0].1 + (t - pts[0].0);
        }
        if t >= pts[pts.len() - 1].0 {
            let last = pts[pts.len() - 1];
            return last.1 + (t - last.0);
        }
        let idx = pts.partition_point(|p| p.0 <= t);
        let (x0, y0) = pts[idx - 1];
        let (x1, y1) = pts[idx];
        y0 + (t - x0) * (y1 - y0) / (x1 - x0)
    }

    /// Swapping coordinates inverts a strictly increasing map exactly.
    pub fn inverse(&self) -> Self {
        Self {
            points: self.points.iter().map(|&(a, b)| (b, a)).collect(),
        }
    }

    /// max |map(t) - t|; exact for a piecewise-linear map because the
    /// deviation is piecewise linear with the same breakpoints.
    pub fn sup_deviation_from_identity(&self) -> f64 {
        self.points
            .iter()
            .map(|&(a, b)| (b - a).abs())
            .fold(0.0, f64::max)
    }
}

/// The time change lambda: slope 1 off overshoots, slope
/// 1/(1 + epsilon^-k) inside them. lambda(0) = 0, strictly increasing,
/// 1-Lipschitz, and t - lambda(t) is nondecreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeChange {
    map: PiecewiseLinearMap,
}

impl TimeChange {
    pub fn map(&self) -> &PiecewiseLinearMap {
        &self.map
    }

    pub fn value(&self, t: f64) -> f64 {
        self.map.value(t)
    }

    /// ||lambda - Id||_inf over the whole horizon.
    pub fn sup_deviation(&self) -> f64 {
        self.map.sup_deviation_from_identity()
    }

    /// Checks every invariant: origin at zero, strict increase, increments
    /// bounded by the identity's.
    pub fn validate(&self) -> Result<(), PenaltyError> {
        let pts = self.map.points();
        if pts[0] != (0.0, 0.0) {
            return Err(PenaltyError::MalformedWarp {
                what: "time change must start at (0, 0)",
            });
        }
        for w in pts.windows(2) {
            let dt = w[1].0 - w[0].0;
            let dl = w[1].1 - w[0].1;
            // The accumulated lambda values carry about one ulp of rounding
            // each, so the Lipschitz comparison gets a relative tolerance.
            if !(dl > 0.0) || dl > dt + 1e-12 * w[1].0.abs().max(1.0) {
                return Err(PenaltyError::MalformedWarp {
                    what: "time change must increase strictly and be 1-Lipschitz",
                });
            }
        }
        Ok(())
    }
}

/// Slope of the time change during an overshoot: 1/(1 + epsilon^-k).
pub fn overshoot_slope(epsilon: f64, k: u32) -> f64 {
    1.0 / (1.0 + epsilon.powi(-(k as i32)))
}

/// Penalized process: constrained dynamics below the boundary, linear
/// continuation above it, jump after an Exp(epsilon^-k) delay read from the
/// overshoot-clock lane. A jump and a switch at the identical instant
/// resolve in favor of the jump, mirroring the hit-wins rule.
pub fn simulate_penalized(
    cfg: &ProcessConfig,
    k: u32,
    stream: &RngStream,
) -> Result<PenalizedPath, PdmpError> {
    cfg.validate()?;
    if k < 1 {
        return Err(PdmpError::ConfigInvalid {
            reason: format!("penalty exponent k must be >= 1, got {k}"),
        });
    }
    let switching = simulate_switching(
        &cfg.generator,
        &cfg.initial_state,
        cfg.epsilon,
        cfg.horizon,
        stream,
    )?;
    let mut targets = stream.lane(Lane::JumpTargets);
    let xi0 = cfg.initial_value.sample(targets.random::<f64>());
    let mut clocks = stream.lane(Lane::OvershootClocks);
    let eps_k = cfg.epsilon.powi(k as i32);

    enum Mode {
        Free,
        Over {
            hit_time: f64,
            duration: f64,
            jump_at: f64,
            switched: bool,
        },
    }

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
    let mut overshoots: Vec<Overshoot> = Vec::new();
    let mut pending_hit = None;
    let mut events = switching.events().iter().peekable();
    let mut t = 0.0;
    let mut x = xi0;
    let mut mode = Mode::Free;
    loop {
        let speed = speeds[state];
        let next_switch = events.peek().map_or(f64::INFINITY, |&&(et, _)| et);
        match mode {
            Mode::Free => {
                let stretch_end = next_switch.min(horizon);
                let t_hit = (t + (c - x) / speed).max(t);
                if !t_hit.is_finite() {
                    return Err(PdmpError::NonfiniteTime);
                }
                if t_hit <= stretch_end {
                    // Boundary reached: the motion continues on the same
                    // line; only the jump clock starts.
                    let mut e: f64 = clocks.sample(Exp1);
                    while e == 0.0 {
                        e = clocks.sample(Exp1);
                    }
                    let duration = e * eps_k;
                    let jump_at = t_hit + duration;
                    if !jump_at.is_finite() {
                        return Err(PdmpError::NonfiniteTime);
                    }
                    // Re-anchor the trajectory exactly at the crossing.
                    segments.push(Segment {
                        t_start: t_hit,
                        x_start: c,
                        slope: speed,
                    });
                    t = t_hit;
                    x = c;
                    mode = Mode::Over {
                        hit_time: t_hit,
                        duration,
                        jump_at,
                        switched: false,
                    };
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
            Mode::Over {
                hit_time,
                duration,
                jump_at,
                switched,
            } => {
                if jump_at <= next_switch && jump_at <= horizon {
                    if jumps.last().is_some_and(|r| jump_at <= r.time) {
                        return Err(PdmpError::NonfiniteTime);
                    }
                    let xi = cfg.kernels[state].sample(targets.random::<f64>());
                    overshoots.push(Overshoot {
                        hit_time,
                        duration,
                        jump_time: jump_at,
                        postjump_value: xi,
                        speed_at_jump: speed,
                        switched_during: switched,
                    });
                    jumps.push(HittingRecord {
                        index: jumps.len() + 1,
                        time: jump_at,
                        prejump_speed: speed,
                        postjump_value: xi,
                    });
                    segments.push(Segment {
                        t_start: jump_at,
                        x_start: xi,
                        slope: speed,
                    });
                    t = jump_at;
                    x = xi;
                    mode = Mode::Free;
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
                    mode = Mode::Over {
                        hit_time,
                        duration,
                        jump_at,
                        switched: true,
                    };
                } else {
                    pending_hit = Some(hit_time);
                    break;
                }
            }
        }
    }
    let path = CadlagPath::from_parts(segments, jumps, horizon, false)?;
    Ok(PenalizedPath {
        path,
        overshoots,
        pending_hit,
    })
}

/// Exact piecewise-linear integral of ds/(1 + epsilon^-k 1[x >= c]).
pub fn time_change(path: &PenalizedPath, epsilon: f64, k: u32) -> TimeChange {
    let s = overshoot_slope(epsilon, k);
    let horizon = path.path().horizon();
    let mut points = vec![(0.0, 0.0)];
    let mut lam = KahanSum::new();
    let mut prev_t = 0.0;
    for (a, b) in path.overshoot_intervals() {
        if a > prev_t {
            lam.add(a - prev_t);
            points.push((a, lam.value()));
        }
        lam.add(s * (b - a));
        points.push((b, lam.value()));
        prev_t = b;
    }
    if prev_t < horizon {
        lam.add(horizon - prev_t);
        points.push((horizon, lam.value()));
    }
    TimeChange {
        map: PiecewiseLinearMap { points },
    }
}

/// The constrained and penalized process driven by one switching
/// realization and one jump-target uniform sequence. `warp` is the
/// piecewise-linear map matching the i-th constrained hit to the i-th
/// penalized jump. Index i is broken when the two processes jumped to
/// different values there; that happens exactly when a switching event fell
/// between the constrained hit and the penalized jump of that index.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledPair {
    pub x: CadlagPath,
    pub xp: PenalizedPath,
    pub shared_jump_targets: Vec<f64>,
    pub warp: PiecewiseLinearMap,
    pub broken_indices: Vec<usize>,
    pub coupling_broken: bool,
}

/// Simulates the coupled pair off one stream: both components re-read the
/// same switching lane and the same jump-target lane, so each marginal law
/// is exactly what the standalone simulator produces.
pub fn simulate_coupled(
    cfg: &ProcessConfig,
    k: u32,
    stream: &RngStream,
) -> Result<CoupledPair, PdmpError> {
    let x = simulate_constrained(cfg, stream)?;
    let xp = simulate_penalized(cfg, k, stream)?;
    let shared = x.jumps().len().min(xp.path().jumps().len());
    let mut broken_indices = Vec::new();
    for i in 0..shared {
        // Same kernel and same uniform imply bitwise-equal targets, so a
        // value mismatch is precisely a kernel (speed) mismatch.
        if x.jumps()[i].postjump_value != xp.path().jumps()[i].postjump_value {
            broken_indices.push(i + 1);
        }
    }
    let coupling_broken = !broken_indices.is_empty() || x.jumps().len() != xp.path().jumps().len();
    let warp = jump_matching_warp(&x, xp.path());
    let shared_jump_targets = x.jumps().iter().map(|r| r.postjump_value).collect();
    Ok(CoupledPair {
        x,
        xp,
        shared_jump_targets,
        warp,
        broken_indices,
        coupling_broken,
    })
}

/// Piecewise-linear warp through (0,0), the matched jump-time pairs (up to
/// the shorter count), and the shared horizon when that stays monotone.
pub fn jump_matching_warp(a: &CadlagPath, b: &CadlagPath) -> PiecewiseLinearMap {
    let horizon = a.horizon();
    let mut points = vec![(0.0, 0.0)];
    let shared = a.jumps().len().min(b.jumps().len());
    for i in 0..shared {
        let p = (a.jumps()[i].time, b.jumps()[i].time);
        let last = *points.last().expect("warp points start nonempty");
        if p.0 > last.0 && p.1 > last.1 {
            points.push(p);
        }
    }
    let last = *points.last().expect("warp points start nonempty");
    if horizon > last.0 && horizon > last.1 {
        points.push((horizon, horizon));
    }
    if points.len() < 2 {
        return PiecewiseLinearMap::identity(horizon);
    }
    PiecewiseLinearMap { points }
}

/// sup_t |a(t) - b(warp(t))| over the shared horizon, evaluated exactly:
/// both sides are piecewise linear between the merged breakpoints, so the
/// sup is attained at a breakpoint or one-sided limit.
pub fn warped_sup_distance(
    a: &CadlagPath,
    b: &CadlagPath,
    warp: &PiecewiseLinearMap,
) -> Result<f64, PenaltyError> {
    if a.horizon() != b.horizon() {
        return Err(PenaltyError::HorizonMismatch {
            a: a.horizon(),
            b: b.horizon(),
        });
    }
    let horizon = a.horizon();
    let clamp = |t: f64| t.clamp(0.0, horizon);
    let mut grid: Vec<f64> = Vec::new();
    grid.push(0.0);
    grid.push(horizon);
    grid.extend(a.segments().iter().map(|s| s.t_start));
    grid.extend(warp.points().iter().map(|p| p.0));
    let inv = warp.inverse();
    grid.extend(b.segments().iter().map(|s| inv.value(s.t_start)));
    let mut best = 0.0f64;
    for &raw in &grid {
        let t = clamp(raw);
        let wt = clamp(warp.value(t));
        let right = (a.value_at(t).map_err(PdmpError::from)?
            - b.value_at(wt).map_err(PdmpError::from)?)
        .abs();
        best = best.max(right);
        if t > 0.0 {
            let left = (a.value_left(t).map_err(PdmpError::from)?
                - b.value_left(wt).map_err(PdmpError::from)?)
            .abs();
            best = best.max(left);
        }
    }
    Ok(best)
}

/// Certified upper bound of the Skorokhod distance: the best of the
/// identity warp, the jump-matching warp, and its inverse.
pub fn skorokhod_upper_bound(a: &CadlagPath, b: &CadlagPath) -> Result<f64, PenaltyError> {
    if a.horizon() != b.horizon() {
        return Err(PenaltyError::HorizonMismatch {
            a: a.horizon(),
            b: b.horizon(),
        });
    }
    let mut candidates = vec![PiecewiseLinearMap::identity(a.horizon())];
    if !a.jumps().is_empty() && a.jumps().len() == b.jumps().len() {
        let gamma = jump_matching_warp(a, b);
        candidates.push(gamma.inverse());
        candidates.push(gamma);
    }
    let mut best = f64::INFINITY;
    for w in &candidates {
        let score = w
            .sup_deviation_from_identity()
            .max(warped_sup_distance(a, b, w)?);
        best = best.min(score);
    }
    Ok(best)
}

/// Monte Carlo mean of the Skorokhod upper bound over coupled replicas; an
/// upper-bound estimator of the Wasserstein distance between the two
/// processes. Replica r runs on `stream_id + r`.
pub fn wasserstein_estimate(
    cfg: &ProcessConfig,
    k: u32,
    replicas: usize,
    stream: &RngStream,
) -> Result<Estimate, PenaltyError> {
    if replicas < 2 {
        return Err(PenaltyError::Process(PdmpError::ConfigInvalid {
            reason: format!("need at least 2 replicas, got {replicas}"),
        }));
    }
    let mut dists = Vec::with_capacity(replicas);
    for r in 0..replicas {
        let sub = RngStream::new(stream.seed, stream.stream_id.wrapping_add(r as u64));
        let pair = simulate_coupled(cfg, k, &sub)?;
        dists.push(skorokhod_upper_bound(&pair.x, pair.xp.path())?);
    }
    Ok(Estimate::from_samples(&dists))
}
