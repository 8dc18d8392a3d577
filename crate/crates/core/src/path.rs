//! Piecewise-linear cadlag trajectories.
//!
//! Every simulator in this crate emits the same structure: linear segments
//! plus the hitting records that separate them. Evaluation is event-based,
//! O(log n) by binary search; no trajectory is ever sampled on a grid.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PathError {
    #[error("time {t} outside [0, {horizon}]")]
    OutOfHorizon { t: f64, horizon: f64 },
    #[error("malformed path: {what}")]
    Malformed { what: &'static str },
}

/// Linear stretch starting at (t_start, x_start) with the given slope,
/// extending until the next segment begins (or the horizon).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub t_start: f64,
    pub x_start: f64,
    pub slope: f64,
}

/// One boundary hit: the i-th jump happened at `time`, the switching chain
/// ran at `prejump_speed` just before it, and the path restarted at
/// `postjump_value`. Indices are 1-based to match the T*_i naming.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HittingRecord {
    pub index: usize,
    pub time: f64,
    pub prejump_speed: f64,
    pub postjump_value: f64,
}

/// Piecewise-linear cadlag path on [0, horizon].
///
/// Segment start times are nondecreasing; equal start times mark an
/// instantaneous cascade (a jump and a switch at the same instant) and
/// cadlag evaluation reads the last segment of such a group. The
/// `averaged` flag marks paths whose slope is the averaged drift rather
/// than an element of the speed set.
#[derive(Debug, Clone, PartialEq)]
pub struct CadlagPath {
    segments: Vec<Segment>,
    jumps: Vec<HittingRecord>,
    horizon: f64,
    averaged: bool,
}

impl CadlagPath {
    pub fn from_parts(
        segments: Vec<Segment>,
        jumps: Vec<HittingRecord>,
        horizon: f64,
        averaged: bool,
    ) -> Result<Self, PathError> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(PathError::Malformed {
                what: "horizon must be positive and finite",
            });
        }
        let first = segments.first().ok_or(PathError::Malformed {
            what: "a path needs at least one segment",
        })?;
        if first.t_start != 0.0 {
            return Err(PathError::Malformed {
                what: "first segment must start at t = 0",
            });
        }
        let mut prev = f64::NEG_INFINITY;
        for s in &segments {
            if !s.t_start.is_finite() || !s.x_start.is_finite() || !s.slope.is_finite() {
                return Err(PathError::Malformed {
                    what: "segment fields must be finite",
                });
            }
            if s.t_start < prev || s.t_start > horizon {
                return Err(PathError::Malformed {
                    what: "segment start times must be nondecreasing and within the horizon",
                });
            }
            prev = s.t_start;
        }
        let mut prev_jump = 0.0;
        for (j, r) in jumps.iter().enumerate() {
            if r.index != j + 1 {
                return Err(PathError::Malformed {
                    what: "jump indices must be 1-based and consecutive",
                });
            }
            if !(r.time > prev_jump) || r.time > horizon {
                return Err(PathError::Malformed {
                    what: "jump times must be strictly increasing in (0, horizon]",
                });
            }
            // The first segment of the group starting at the jump instant
            // must restart at the recorded post-jump value.
            let at = segments.partition_point(|s| s.t_start < r.time);
            match segments.get(at) {
                Some(s) if s.t_start == r.time && s.x_start == r.postjump_value => {}
                _ => {
                    return Err(PathError::Malformed {
                        what: "each jump needs a segment restarting at its post-jump value",
                    });
                }
            }
            prev_jump = r.time;
        }
        Ok(Self {
            segments,
            jumps,
            horizon,
            averaged,
        })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn jumps(&self) -> &[HittingRecord] {
        &self.jumps
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn is_averaged(&self) -> bool {
        self.averaged
    }

    fn check_time(&self, t: f64) -> Result<(), PathError> {
        if !t.is_finite() || t < 0.0 || t > self.horizon {
            return Err(PathError::OutOfHorizon {
                t,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    /// Cadlag evaluation: at a jump instant this is the post-jump value.
    pub fn value_at(&self, t: f64) -> Result<f64, PathError> {
        self.check_time(t)?;
        let idx = self.segments.partition_point(|s| s.t_start <= t);
        let s = &self.segments[idx - 1];
        Ok(s.x_start + s.slope * (t - s.t_start))
    }

    /// Left limit: at a hitting instant this is the boundary value c.
    /// At t = 0 the left limit is defined as the initial value.
    pub fn value_left(&self, t: f64) -> Result<f64, PathError> {
        self.check_time(t)?;
        if t == 0.0 {
            return self.value_at(0.0);
        }
        let idx = self.segments.partition_point(|s| s.t_start < t);
        let s = &self.segments[idx - 1];
        Ok(s.x_start + s.slope * (t - s.t_start))
    }

    /// p*(t): number of boundary jumps up to and including time t.
    pub fn jump_count(&self, t: f64) -> usize {
        self.jumps.partition_point(|r| r.time <= t)
    }

    pub fn hit_times(&self) -> Vec<f64> {
        self.jumps.iter().map(|r| r.time).collect()
    }
}

/// Cadlag readout (free-function spelling of [`CadlagPath::value_at`]).
pub fn path_value(path: &CadlagPath, t: f64) -> Result<f64, PathError> {
    path.value_at(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Unit-speed sawtooth on [0, 2.5]: hits c = 1 at t = 1 and t = 2,
    /// resetting to 0.
    fn sawtooth() -> CadlagPath {
        CadlagPath::from_parts(
            vec![
                Segment {
                    t_start: 0.0,
                    x_start: 0.0,
                    slope: 1.0,
                },
                Segment {
                    t_start: 1.0,
                    x_start: 0.0,
                    slope: 1.0,
                },
                Segment {
                    t_start: 2.0,
                    x_start: 0.0,
                    slope: 1.0,
                },
            ],
            vec![
                HittingRecord {
                    index: 1,
                    time: 1.0,
                    prejump_speed: 1.0,
                    postjump_value: 0.0,
                },
                HittingRecord {
                    index: 2,
                    time: 2.0,
                    prejump_speed: 1.0,
                    postjump_value: 0.0,
                },
            ],
            2.5,
            false,
        )
        .unwrap()
    }

    #[test]
    fn sawtooth_values_and_limits() {
        let p = sawtooth();
        assert_eq!(p.value_at(0.5).unwrap(), 0.5);
        assert_eq!(p.value_at(1.0).unwrap(), 0.0);
        assert_eq!(p.value_left(1.0).unwrap(), 1.0);
        assert_eq!(p.value_at(2.5).unwrap(), 0.5);
        assert_eq!(p.value_left(0.0).unwrap(), 0.0);
        assert_eq!(path_value(&p, 0.25).unwrap(), 0.25);
    }

    #[test]
    fn jump_counting() {
        let p = sawtooth();
        assert_eq!(p.jump_count(0.5), 0);
        assert_eq!(p.jump_count(1.0), 1);
        assert_eq!(p.jump_count(2.5), 2);
        assert_eq!(p.hit_times(), vec![1.0, 2.0]);
    }

    #[test]
    fn instantaneous_cascade_reads_last_of_group() {
        // A jump to 0.2 and a switch at the same instant: two segments start
        // at t = 1, cadlag reads the later one (same value, new slope).
        let p = CadlagPath::from_parts(
            vec![
                Segment {
                    t_start: 0.0,
                    x_start: 0.0,
                    slope: 1.0,
                },
                Segment {
                    t_start: 1.0,
                    x_start: 0.2,
                    slope: 1.0,
                },
                Segment {
                    t_start: 1.0,
                    x_start: 0.2,
                    slope: 2.0,
                },
            ],
            vec![HittingRecord {
                index: 1,
                time: 1.0,
                prejump_speed: 1.0,
                postjump_value: 0.2,
            }],
            2.0,
            false,
        )
        .unwrap();
        assert_eq!(p.value_at(1.0).unwrap(), 0.2);
        assert_eq!(p.value_left(1.0).unwrap(), 1.0);
        // Slope after the cascade is the switched one.
        assert!((p.value_at(1.25).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn out_of_horizon_is_an_error() {
        let p = sawtooth();
        assert!(matches!(
            p.value_at(-0.1),
            Err(PathError::OutOfHorizon { .. })
        ));
        assert!(matches!(
            p.value_at(2.6),
            Err(PathError::OutOfHorizon { .. })
        ));
        assert!(matches!(
            p.value_left(f64::NAN),
            Err(PathError::OutOfHorizon { .. })
        ));
    }

    #[test]
    fn from_parts_rejects_malformed_paths() {
        let seg = |t, x, v| Segment {
            t_start: t,
            x_start: x,
            slope: v,
        };
        // First segment not at zero.
        assert!(CadlagPath::from_parts(vec![seg(0.5, 0.0, 1.0)], vec![], 1.0, false).is_err());
        // Decreasing segment times.
        assert!(CadlagPath::from_parts(
            vec![seg(0.0, 0.0, 1.0), seg(0.8, 0.0, 1.0), seg(0.4, 0.0, 1.0)],
            vec![],
            1.0,
            false
        )
        .is_err());
        // Jump without a restarting segment.
        assert!(CadlagPath::from_parts(
            vec![seg(0.0, 0.0, 1.0)],
            vec![HittingRecord {
                index: 1,
                time: 0.5,
                prejump_speed: 1.0,
                postjump_value: 0.0
            }],
            1.0,
            false
        )
        .is_err());
        // Wrong jump numbering.
        assert!(CadlagPath::from_parts(
            vec![seg(0.0, 0.0, 1.0), seg(0.5, 0.0, 1.0)],
            vec![HittingRecord {
                index: 2,
                time: 0.5,
                prejump_speed: 1.0,
                postjump_value: 0.0
            }],
            1.0,
            false
        )
        .is_err());
    }

    #[test]
    fn random_path_matches_linear_scan() {
        // Replay by scanning segments directly; binary-search evaluation
        // must agree everywhere.
        let segs = vec![
            Segment {
                t_start: 0.0,
                x_start: 0.1,
                slope: 2.0,
            },
            Segment {
                t_start: 0.3,
                x_start: 0.7,
                slope: 0.5,
            },
            Segment {
                t_start: 0.9,
                x_start: 1.0,
                slope: 1.5,
            },
        ];
        let p = CadlagPath::from_parts(segs.clone(), vec![], 2.0, false).unwrap();
        for i in 0..=100 {
            let t = 2.0 * i as f64 / 100.0;
            let mut s = segs[0];
            for cand in &segs {
                if cand.t_start <= t {
                    s = *cand;
                }
            }
            let expect = s.x_start + s.slope * (t - s.t_start);
            assert_eq!(p.value_at(t).unwrap(), expect);
        }
    }
}
