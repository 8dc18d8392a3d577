//! Estimators and exact evaluators that tie simulation output to the limit
//! objects: pre-jump speed law vs the boundary speed measure, drift vs the
//! averaged slope, switching occupation vs the invariant measure, and the
//! closed-form finite-dimensional law of the averaged hit chain for point
//! data.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ctmc::{CtmcError, SwitchPath};
use crate::generator::{
    boundary_speed_measure, pistar_first_moment, GeneratorError, ProbabilityVector,
    SwitchingGenerator,
};
use crate::kernel::JumpKernel;
use crate::path::{CadlagPath, HittingRecord, PathError};
use crate::util::{Estimate, KahanSum};

#[derive(Debug, Error, PartialEq)]
pub enum ValidationError {
    #[error("estimator needs at least one input value")]
    EmptyInput,
    #[error("measurement window contains a boundary hit at t = {time}")]
    WindowContainsHit { time: f64 },
    #[error("closed-form law needs Dirac initial data and Dirac kernels")]
    UnsupportedKernel,
    #[error("invalid query: {reason}")]
    InvalidQuery { reason: String },
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Ctmc(#[from] CtmcError),
}

/// Counting measure over exactly observed values.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalLaw {
    support: Vec<f64>,
    counts: Vec<u64>,
    total: u64,
}

impl EmpiricalLaw {
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Result<Self, ValidationError> {
        let mut sorted: Vec<f64> = values.into_iter().collect();
        if sorted.is_empty() {
            return Err(ValidationError::EmptyInput);
        }
        sorted.sort_by(f64::total_cmp);
        let mut support = Vec::new();
        let mut counts: Vec<u64> = Vec::new();
        for v in sorted {
            match support.last() {
                Some(&last) if last == v => *counts.last_mut().expect("parallel vec") += 1,
                _ => {
                    support.push(v);
                    counts.push(1);
                }
            }
        }
        let total = counts.iter().sum();
        Ok(Self {
            support,
            counts,
            total,
        })
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn weight_at(&self, v: f64) -> f64 {
        match self.support.iter().position(|&s| s == v) {
            Some(i) => self.counts[i] as f64 / self.total as f64,
            None => 0.0,
        }
    }
}

/// Anything usable as a discrete law for total-variation comparison.
pub trait AsLaw {
    /// `(value, probability)` atoms; values distinct and sorted.
    fn atoms(&self) -> Vec<(f64, f64)>;
}

impl AsLaw for EmpiricalLaw {
    fn atoms(&self) -> Vec<(f64, f64)> {
        self.support
            .iter()
            .zip(&self.counts)
            .map(|(&v, &c)| (v, c as f64 / self.total as f64))
            .collect()
    }
}

impl AsLaw for ProbabilityVector {
    fn atoms(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = self
            .support()
            .iter()
            .copied()
            .zip(self.weights().iter().copied())
            .collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }
}

/// Half the total absolute weight difference over the union support;
/// missing atoms count as zero.
pub fn tv_distance<A: AsLaw + ?Sized, B: AsLaw + ?Sized>(a: &A, b: &B) -> f64 {
    let xa = a.atoms();
    let xb = b.atoms();
    let mut sum = KahanSum::new();
    let (mut i, mut j) = (0, 0);
    while i < xa.len() || j < xb.len() {
        let va = xa.get(i).map_or(f64::INFINITY, |p| p.0);
        let vb = xb.get(j).map_or(f64::INFINITY, |p| p.0);
        if va < vb {
            sum.add(xa[i].1.abs());
            i += 1;
        } else if vb < va {
            sum.add(xb[j].1.abs());
            j += 1;
        } else {
            sum.add((xa[i].1 - xb[j].1).abs());
            i += 1;
            j += 1;
        }
    }
    0.5 * sum.value()
}

/// Law of the speed in force just before each boundary hit. The limit as
/// epsilon vanishes is the boundary speed measure read on speeds.
pub fn prejump_speed_law(records: &[HittingRecord]) -> Result<EmpiricalLaw, ValidationError> {
    EmpiricalLaw::from_values(records.iter().map(|r| r.prejump_speed))
}

/// Mean chord slope over a hit-free window across replicas.
pub fn drift_estimate(
    paths: &[CadlagPath],
    window: (f64, f64),
) -> Result<Estimate, ValidationError> {
    let (t0, t1) = window;
    if paths.is_empty() {
        return Err(ValidationError::EmptyInput);
    }
    if !(t0.is_finite() && t1.is_finite() && t0 >= 0.0 && t1 > t0) {
        return Err(ValidationError::InvalidQuery {
            reason: format!("window ({t0}, {t1}) is not an ordered finite pair"),
        });
    }
    let mut slopes = Vec::with_capacity(paths.len());
    for p in paths {
        for r in p.jumps() {
            if r.time > t0 && r.time <= t1 {
                return Err(ValidationError::WindowContainsHit { time: r.time });
            }
        }
        slopes.push((p.value_at(t1)? - p.value_at(t0)?) / (t1 - t0));
    }
    Ok(Estimate::from_samples(&slopes))
}

/// Reference distribution for the exact Kolmogorov-Smirnov statistic.
/// `cdf_left` is the left limit P(X < x); the default suits continuous laws.
pub trait ReferenceCdf {
    fn cdf(&self, x: f64) -> f64;

    fn cdf_left(&self, x: f64) -> f64 {
        self.cdf(x)
    }
}

/// Wrapper giving any continuous CDF closure the reference trait.
pub struct ContinuousCdf<F: Fn(f64) -> f64>(pub F);

impl<F: Fn(f64) -> f64> ReferenceCdf for ContinuousCdf<F> {
    fn cdf(&self, x: f64) -> f64 {
        (self.0)(x)
    }
}

impl ReferenceCdf for JumpKernel {
    fn cdf(&self, x: f64) -> f64 {
        JumpKernel::cdf(self, x)
    }

    fn cdf_left(&self, x: f64) -> f64 {
        match self.discrete_atoms() {
            Some(atoms) => {
                let at_x: f64 = atoms.iter().filter(|(a, _)| *a == x).map(|(_, w)| w).sum();
                (JumpKernel::cdf(self, x) - at_x).max(0.0)
            }
            None => JumpKernel::cdf(self, x),
        }
    }
}

/// Exact sup |F_n - F| over the whole line: for each tie group the
/// deviation is checked from above with `cdf` and from below with
/// `cdf_left`, which covers atoms in either distribution.
pub fn ks_statistic<R: ReferenceCdf + ?Sized>(
    sample: &[f64],
    reference: &R,
) -> Result<f64, ValidationError> {
    if sample.is_empty() {
        return Err(ValidationError::EmptyInput);
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut best = 0.0f64;
    let mut below = 0usize;
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == v {
            j += 1;
        }
        let lo = below as f64 / n;
        let hi = j as f64 / n;
        best = best.max((lo - reference.cdf_left(v)).abs());
        best = best.max((hi - reference.cdf(v)).abs());
        below = j;
        i = j;
    }
    Ok(best)
}

/// Asymptotic Kolmogorov-Smirnov critical value sqrt(ln(2/alpha) / (2n)).
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

/// Joint event for the averaged hit chain: hit i happens by time `times[i]`
/// with pre-hit speed `speeds[i]`, and exactly k hits land in [0, horizon].
#[derive(Debug, Clone, PartialEq)]
pub struct LimitLawQuery {
    pub times: Vec<f64>,
    pub speeds: Vec<f64>,
    pub k: usize,
    pub horizon: f64,
}

impl LimitLawQuery {
    fn validate(&self, g: &SwitchingGenerator) -> Result<Vec<usize>, ValidationError> {
        if self.k < 1 {
            return Err(ValidationError::InvalidQuery {
                reason: "k must be at least 1".into(),
            });
        }
        if self.times.len() != self.k || self.speeds.len() != self.k {
            return Err(ValidationError::InvalidQuery {
                reason: format!(
                    "expected {} times and speeds, got {} and {}",
                    self.k,
                    self.times.len(),
                    self.speeds.len()
                ),
            });
        }
        if self.times.iter().any(|t| t.is_nan() || *t <= 0.0)
            || self.times.windows(2).any(|w| w[1] < w[0])
        {
            return Err(ValidationError::InvalidQuery {
                reason: "times must be positive and nondecreasing".into(),
            });
        }
        if !self.horizon.is_finite() || self.horizon <= 0.0 {
            return Err(ValidationError::InvalidQuery {
                reason: "horizon must be positive and finite".into(),
            });
        }
        self.speeds
            .iter()
            .map(|&x| {
                g.speeds().iter().position(|&s| s == x).ok_or_else(|| {
                    ValidationError::InvalidQuery {
                        reason: format!("speed {x} is not a generator speed"),
                    }
                })
            })
            .collect()
    }
}

fn dirac_atom(k: &JumpKernel) -> Result<f64, ValidationError> {
    match k.discrete_atoms() {
        Some(atoms) if atoms.len() == 1 => Ok(atoms[0].0),
        _ => Err(ValidationError::UnsupportedKernel),
    }
}

/// Closed-form probability of a `LimitLawQuery` event for point initial
/// data and point kernels: the product of boundary-speed-measure weights of
/// the queried speeds times the indicator that the deterministic hit
/// recursion T*_i = (i c - sum of the first i levels) E lands inside the
/// time constraints, with exactly k hits before the horizon.
pub fn limit_law_probability(
    g: &SwitchingGenerator,
    boundary: f64,
    initial: &JumpKernel,
    kernels: &[JumpKernel],
    q: &LimitLawQuery,
) -> Result<f64, ValidationError> {
    if kernels.len() != g.n_states() {
        return Err(ValidationError::InvalidQuery {
            reason: format!("expected {} kernels, got {}", g.n_states(), kernels.len()),
        });
    }
    let state_idx = q.validate(g)?;
    let u0 = dirac_atom(initial)?;
    let atoms: Vec<f64> = kernels.iter().map(dirac_atom).collect::<Result<_, _>>()?;
    let pistar = boundary_speed_measure(g)?;
    let moment = pistar_first_moment(g)?;

    let mut weight = 1.0;
    let mut level_sum = u0;
    let mut t_star_k = 0.0;
    for (i, &s) in state_idx.iter().enumerate() {
        let t_star = ((i + 1) as f64 * boundary - level_sum) * moment;
        if !(t_star <= q.times[i]) {
            return Ok(0.0);
        }
        weight *= pistar.weights()[s];
        level_sum += atoms[s];
        t_star_k = t_star;
    }
    // Exactly k hits in [0, horizon]: the k-th lands by the horizon and the
    // (k+1)-th after it.
    let t_star_next = ((q.k + 1) as f64 * boundary - level_sum) * moment;
    if t_star_k <= q.horizon && q.horizon < t_star_next {
        Ok(weight)
    } else {
        Ok(0.0)
    }
}

/// Total-variation distance between the replica-averaged occupation vector
/// of the switching paths on [0, t] and the invariant measure.
pub fn occupation_vs_pi(
    g: &SwitchingGenerator,
    paths: &[SwitchPath],
    t: f64,
) -> Result<f64, ValidationError> {
    if paths.is_empty() {
        return Err(ValidationError::EmptyInput);
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(ValidationError::InvalidQuery {
            reason: format!("occupation time {t} must be positive and finite"),
        });
    }
    let n = g.n_states();
    let mut acc = vec![KahanSum::new(); n];
    for p in paths {
        let occ = p.occupation_measure(t)?;
        if occ.len() != n {
            return Err(ValidationError::InvalidQuery {
                reason: "switch path state count differs from the generator".into(),
            });
        }
        for (a, o) in acc.iter_mut().zip(occ) {
            a.add(o);
        }
    }
    let pi = g.invariant_measure()?;
    let mut diff = KahanSum::new();
    for (a, w) in acc.iter().zip(pi.weights()) {
        diff.add((a.value() / paths.len() as f64 - w).abs());
    }
    Ok(0.5 * diff.value())
}

/// One estimator run condensed for the summary artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub config_digest: String,
    pub n_replicas: usize,
    pub estimator: String,
    pub value: f64,
    pub std_error: f64,
    pub reference: f64,
    pub pass: bool,
}
