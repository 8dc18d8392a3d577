//! Exact simulation of the switching chain and its occupation measure.
//!
//! The chain runs on the accelerated clock t/epsilon: holding times are
//! exponential with rate exit_rate/epsilon, drawn from the Switching lane of
//! the replica's stream. Acceleration divides rates at simulation time, so
//! horizon arithmetic never rescales a stored path.

use rand::Rng;
use rand_distr::Exp1;
use thiserror::Error;

use crate::generator::{ProbabilityVector, SwitchingGenerator};
use crate::rng::{Lane, RngStream};
use crate::util::KahanSum;

#[derive(Debug, Error, PartialEq)]
pub enum CtmcError {
    #[error("invalid simulation input: {reason}")]
    InvalidInput { reason: String },
    #[error("state {state} has zero exit rate in a multi-state chain")]
    AbsorbingState { state: usize },
    #[error("time {t} outside [0, {horizon}]")]
    OutOfHorizon { t: f64, horizon: f64 },
    #[error("malformed switch path: {what}")]
    Malformed { what: &'static str },
}

/// Initial condition of the switching chain.
#[derive(Debug, Clone, PartialEq)]
pub enum SwitchInit {
    /// Start in a fixed state index.
    State(usize),
    /// Draw the initial state from a law whose weight i belongs to state i.
    Law(ProbabilityVector),
}

/// One realization of the switching chain: initial state plus the ordered
/// list of (time, new state) events, truncated at the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchPath {
    initial_state: usize,
    events: Vec<(f64, usize)>,
    n_states: usize,
    horizon: f64,
}

impl SwitchPath {
    /// Validating constructor, used by tests and analysis oracles. Event
    /// times must be strictly increasing in (0, horizon], indices in range,
    /// and consecutive states distinct.
    pub fn from_parts(
        initial_state: usize,
        events: Vec<(f64, usize)>,
        n_states: usize,
        horizon: f64,
    ) -> Result<Self, CtmcError> {
        if n_states == 0 || initial_state >= n_states {
            return Err(CtmcError::Malformed {
                what: "initial state out of range",
            });
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(CtmcError::Malformed {
                what: "horizon must be positive and finite",
            });
        }
        let mut prev_t = 0.0;
        let mut prev_s = initial_state;
        for &(t, s) in &events {
            if !(t > prev_t) || t > horizon {
                return Err(CtmcError::Malformed {
                    what: "event times must be strictly increasing in (0, horizon]",
                });
            }
            if s >= n_states {
                return Err(CtmcError::Malformed {
                    what: "event state out of range",
                });
            }
            if s == prev_s {
                return Err(CtmcError::Malformed {
                    what: "consecutive states must differ",
                });
            }
            prev_t = t;
            prev_s = s;
        }
        Ok(Self {
            initial_state,
            events,
            n_states,
            horizon,
        })
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    pub fn events(&self) -> &[(f64, usize)] {
        &self.events
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    fn check_time(&self, t: f64) -> Result<(), CtmcError> {
        if !t.is_finite() || t < 0.0 || t > self.horizon {
            return Err(CtmcError::OutOfHorizon {
                t,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    /// Cadlag evaluation: the state set by the last event at time <= t.
    pub fn state_at(&self, t: f64) -> Result<usize, CtmcError> {
        self.check_time(t)?;
        let idx = self.events.partition_point(|&(s, _)| s <= t);
        Ok(if idx == 0 {
            self.initial_state
        } else {
            self.events[idx - 1].1
        })
    }

    /// Left limit: the state just before t (so an event exactly at t does
    /// not count). At t = 0 this is the initial state.
    pub fn state_left(&self, t: f64) -> Result<usize, CtmcError> {
        self.check_time(t)?;
        let idx = self.events.partition_point(|&(s, _)| s < t);
        Ok(if idx == 0 {
            self.initial_state
        } else {
            self.events[idx - 1].1
        })
    }

    /// Fraction of [0, t] spent in each state. Components sum to 1 for
    /// t > 0; at t = 0 the indicator of the initial state is returned.
    pub fn occupation_measure(&self, t: f64) -> Result<Vec<f64>, CtmcError> {
        self.check_time(t)?;
        let mut occ = vec![KahanSum::new(); self.n_states];
        if t == 0.0 {
            let mut out = vec![0.0; self.n_states];
            out[self.initial_state] = 1.0;
            return Ok(out);
        }
        let mut prev_t = 0.0;
        let mut state = self.initial_state;
        for &(et, es) in &self.events {
            if et >= t {
                break;
            }
            occ[state].add(et - prev_t);
            prev_t = et;
            state = es;
        }
        occ[state].add(t - prev_t);
        Ok(occ.iter().map(|k| k.value() / t).collect())
    }
}

/// Cadlag state readout (free-function spelling of [`SwitchPath::state_at`]).
pub fn state_at(path: &SwitchPath, t: f64) -> Result<usize, CtmcError> {
    path.state_at(t)
}

/// Occupation fractions on [0, t].
pub fn occupation_measure(path: &SwitchPath, t: f64) -> Result<Vec<f64>, CtmcError> {
    path.occupation_measure(t)
}

/// Simulates the accelerated chain Y(t/epsilon) on [0, horizon].
///
/// Holding time in state i is exponential with rate exit_rate(i)/epsilon;
/// the next state is chosen with the embedded-chain probabilities
/// q_ij/exit_rate(i). All draws come from the Switching lane of `stream`.
pub fn simulate_switching(
    g: &SwitchingGenerator,
    init: &SwitchInit,
    epsilon: f64,
    horizon: f64,
    stream: &RngStream,
) -> Result<SwitchPath, CtmcError> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(CtmcError::InvalidInput {
            reason: format!("epsilon must lie in (0, 1], got {epsilon}"),
        });
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(CtmcError::InvalidInput {
            reason: format!("horizon must be positive and finite, got {horizon}"),
        });
    }
    let n = g.n_states();
    let mut rng = stream.lane(Lane::Switching);
    let mut state = match init {
        SwitchInit::State(i) => {
            if *i >= n {
                return Err(CtmcError::InvalidInput {
                    reason: format!("initial state {i} out of range for {n} states"),
                });
            }
            *i
        }
        SwitchInit::Law(law) => {
            if law.len() != n {
                return Err(CtmcError::InvalidInput {
                    reason: format!("initial law has {} weights for {n} states", law.len()),
                });
            }
            sample_index(law.weights(), rng.random::<f64>())
        }
    };
    let initial_state = state;
    let mut events = Vec::new();
    let mut t = 0.0;
    loop {
        let exit = g.exit_rate(state);
        if exit <= 0.0 {
            if n > 1 {
                // Unreachable through validated generators; kept as a guard.
                return Err(CtmcError::AbsorbingState { state });
            }
            break;
        }
        let rate = exit / epsilon;
        let mut e: f64 = rng.sample(Exp1);
        while e == 0.0 {
            // Zero draws have probability ~2^-64; conditioning Exp(1) on
            // (0, inf) is the same law, and strict increase of event times
            // is preserved.
            e = rng.sample(Exp1);
        }
        t += e / rate;
        if t > horizon {
            break;
        }
        let u = rng.random::<f64>();
        let next = sample_embedded(g, state, u);
        events.push((t, next));
        state = next;
    }
    SwitchPath::from_parts(initial_state, events, n, horizon)
}

/// Index drawn from cumulative weights with one uniform.
fn sample_index(weights: &[f64], u: f64) -> usize {
    let mut cum = 0.0;
    for (i, w) in weights.iter().enumerate() {
        cum += w;
        if u < cum {
            return i;
        }
    }
    weights.len() - 1
}

/// Embedded-chain transition out of `state`.
fn sample_embedded(g: &SwitchingGenerator, state: usize, u: f64) -> usize {
    let exit = g.exit_rate(state);
    let mut cum = 0.0;
    let mut last_valid = state;
    for j in 0..g.n_states() {
        if j == state {
            continue;
        }
        let p = g.entry(state, j) / exit;
        if p <= 0.0 {
            continue;
        }
        last_valid = j;
        cum += p;
        if u < cum {
            return j;
        }
    }
    // Rounding can leave cum marginally below 1; the topmost reachable
    // state absorbs the sliver.
    last_valid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::mean_and_se;

    fn quadratic() -> SwitchingGenerator {
        SwitchingGenerator::new(vec![1.0, 2.0], vec![vec![-1.0, 1.0], vec![2.0, -2.0]]).unwrap()
    }

    #[test]
    fn one_state_generator_never_switches() {
        let g = SwitchingGenerator::new(vec![3.0], vec![vec![0.0]]).unwrap();
        let p =
            simulate_switching(&g, &SwitchInit::State(0), 1.0, 5.0, &RngStream::new(1, 0)).unwrap();
        assert!(p.events().is_empty());
        assert_eq!(p.state_at(3.0).unwrap(), 0);
        assert_eq!(p.occupation_measure(5.0).unwrap(), vec![1.0]);
    }

    #[test]
    fn cadlag_and_left_limit_conventions() {
        let p = SwitchPath::from_parts(0, vec![(1.0, 1)], 2, 2.0).unwrap();
        assert_eq!(p.state_at(0.0).unwrap(), 0);
        assert_eq!(p.state_at(0.999).unwrap(), 0);
        assert_eq!(p.state_at(1.0).unwrap(), 1);
        assert_eq!(p.state_left(1.0).unwrap(), 0);
        assert_eq!(p.state_left(1.5).unwrap(), 1);
        assert_eq!(p.state_left(0.0).unwrap(), 0);
        assert!(matches!(
            p.state_at(2.5),
            Err(CtmcError::OutOfHorizon { .. })
        ));
    }

    #[test]
    fn occupation_of_single_midpoint_switch() {
        let p = SwitchPath::from_parts(0, vec![(1.0, 1)], 2, 2.0).unwrap();
        let occ = p.occupation_measure(2.0).unwrap();
        assert!((occ[0] - 0.5).abs() < 1e-15);
        assert!((occ[1] - 0.5).abs() < 1e-15);
        let occ0 = p.occupation_measure(0.0).unwrap();
        assert_eq!(occ0, vec![1.0, 0.0]);
    }

    #[test]
    fn state_at_agrees_with_linear_scan() {
        let g = quadratic();
        let p = simulate_switching(&g, &SwitchInit::State(0), 0.3, 20.0, &RngStream::new(11, 4))
            .unwrap();
        assert!(p.events().len() > 10);
        for i in 0..=200 {
            let t = 20.0 * i as f64 / 200.0;
            let mut expect = p.initial_state();
            for &(et, es) in p.events() {
                if et <= t {
                    expect = es;
                } else {
                    break;
                }
            }
            assert_eq!(p.state_at(t).unwrap(), expect);
        }
    }

    #[test]
    fn holding_time_means_match_rates() {
        // Exit rates 1 and 2 at epsilon = 1: mean holds 1 and 1/2, checked
        // to three standard errors over ~1e5 events.
        let g = quadratic();
        let p = simulate_switching(
            &g,
            &SwitchInit::State(0),
            1.0,
            75_000.0,
            &RngStream::new(5, 0),
        )
        .unwrap();
        assert!(p.events().len() > 90_000);
        let mut holds: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        let mut prev_t = 0.0;
        let mut state = p.initial_state();
        for &(t, s) in p.events() {
            holds[state].push(t - prev_t);
            prev_t = t;
            state = s;
        }
        let (m0, se0) = mean_and_se(&holds[0]);
        let (m1, se1) = mean_and_se(&holds[1]);
        assert!((m0 - 1.0).abs() <= 3.0 * se0, "state 0: {m0} +- {se0}");
        assert!((m1 - 0.5).abs() <= 3.0 * se1, "state 1: {m1} +- {se1}");
    }

    #[test]
    fn halving_epsilon_halves_event_times_exactly() {
        // epsilon = 1/2 doubles every rate; with the same draws each holding
        // time and each cumulative event time halves exactly in floating
        // point (scaling by a power of two commutes with rounding).
        let g = quadratic();
        let s = RngStream::new(9, 2);
        let a = simulate_switching(&g, &SwitchInit::State(0), 1.0, 50.0, &s).unwrap();
        let b = simulate_switching(&g, &SwitchInit::State(0), 0.5, 25.0, &s).unwrap();
        assert_eq!(a.events().len(), b.events().len());
        assert!(!a.events().is_empty());
        for (&(ta, sa), &(tb, sb)) in a.events().iter().zip(b.events()) {
            assert_eq!(sa, sb);
            assert_eq!(tb, ta * 0.5);
        }
    }

    #[test]
    fn initial_law_is_sampled_reproducibly() {
        let g = quadratic();
        let law = ProbabilityVector::new(vec![1.0, 2.0], vec![0.25, 0.75]).unwrap();
        let init = SwitchInit::Law(law);
        let mut starts = [0usize; 2];
        for r in 0..2_000 {
            let s = RngStream::replica(42, r);
            let p = simulate_switching(&g, &init, 1.0, 1e-6, &s).unwrap();
            starts[p.initial_state()] += 1;
        }
        // Binomial(2000, 0.75): 3 sigma is about 58.
        assert!((starts[1] as f64 - 1_500.0).abs() < 60.0, "{starts:?}");
        // Determinism: the same stream always yields the same start.
        let p1 = simulate_switching(&g, &init, 1.0, 1e-6, &RngStream::replica(42, 7)).unwrap();
        let p2 = simulate_switching(&g, &init, 1.0, 1e-6, &RngStream::replica(42, 7)).unwrap();
        assert_eq!(p1, p2);
    }

    #[test]
    fn from_parts_rejects_malformed_paths() {
        assert!(SwitchPath::from_parts(0, vec![(1.0, 1), (1.0, 0)], 2, 2.0).is_err());
        assert!(SwitchPath::from_parts(0, vec![(3.0, 1)], 2, 2.0).is_err());
        assert!(SwitchPath::from_parts(0, vec![(0.5, 0)], 2, 2.0).is_err());
        assert!(SwitchPath::from_parts(2, vec![], 2, 2.0).is_err());
        assert!(SwitchPath::from_parts(0, vec![(0.5, 1), (0.7, 0)], 2, 2.0).is_ok());
    }

    #[test]
    fn invalid_inputs_are_reported() {
        let g = quadratic();
        let s = RngStream::new(1, 0);
        assert!(matches!(
            simulate_switching(&g, &SwitchInit::State(0), 0.0, 1.0, &s),
            Err(CtmcError::InvalidInput { .. })
        ));
        assert!(matches!(
            simulate_switching(&g, &SwitchInit::State(0), 1.5, 1.0, &s),
            Err(CtmcError::InvalidInput { .. })
        ));
        assert!(matches!(
            simulate_switching(&g, &SwitchInit::State(5), 1.0, 1.0, &s),
            Err(CtmcError::InvalidInput { .. })
        ));
    }
}
