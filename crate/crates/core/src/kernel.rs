//! Boundary jump measures.
//!
//! Kernels are parametric — Dirac, uniform, finite mixture, and monotone
//! pushforward — so sampling is inverse-CDF from a single uniform draw.
//! That single-draw discipline is what the process coupling relies on: two
//! processes handed the same uniform and the same kernel land on the same
//! post-jump value.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Strictly increasing real map used by pushforward kernels.
pub type MapFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum JumpKernel {
    /// Point mass at `at`.
    Dirac { at: f64 },
    /// Uniform on `[lo, hi)`, `lo < hi`.
    Uniform { lo: f64, hi: f64 },
    /// Finite mixture; weights sum to 1.
    Mixture { components: Vec<(f64, JumpKernel)> },
    /// Image of `base` under a strictly increasing map; produced by the flow
    /// reduction, where `forward` is the space homeomorphism G.
    Mapped {
        base: Box<JumpKernel>,
        forward: MapFn,
        inverse: MapFn,
    },
}

impl fmt::Debug for JumpKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Dirac { at } => write!(f, "Dirac {{ at: {at:?} }}"),
            Self::Uniform { lo, hi } => write!(f, "Uniform {{ lo: {lo:?}, hi: {hi:?} }}"),
            Self::Mixture { components } => f
                .debug_struct("Mixture")
                .field("components", components)
                .finish(),
            Self::Mapped { base, .. } => f
                .debug_struct("Mapped")
                .field("base", base)
                .finish_non_exhaustive(),
        }
    }
}

/// Mixture weights may drift from 1 by at most this much.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("kernel parameter is not finite")]
    NonfiniteParam,
    #[error("uniform kernel needs lo < hi, got [{lo}, {hi})")]
    EmptyUniform { lo: f64, hi: f64 },
    #[error("mixture has no components")]
    EmptyMixture,
    #[error("mixture weight {value} is negative")]
    NegativeWeight { value: f64 },
    #[error("mixture weights sum to {sum}, not 1")]
    WeightSumNotOne { sum: f64 },
}

impl JumpKernel {
    pub fn dirac(at: f64) -> Self {
        Self::Dirac { at }
    }

    pub fn uniform(lo: f64, hi: f64) -> Self {
        Self::Uniform { lo, hi }
    }

    pub fn mixture(components: Vec<(f64, JumpKernel)>) -> Self {
        Self::Mixture { components }
    }

    pub fn mapped(base: JumpKernel, forward: MapFn, inverse: MapFn) -> Self {
        Self::Mapped {
            base: Box::new(base),
            forward,
            inverse,
        }
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        match self {
            Self::Dirac { at } => {
                if !at.is_finite() {
                    return Err(KernelError::NonfiniteParam);
                }
            }
            Self::Uniform { lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() {
                    return Err(KernelError::NonfiniteParam);
                }
                if !(lo < hi) {
                    return Err(KernelError::EmptyUniform { lo: *lo, hi: *hi });
                }
            }
            Self::Mixture { components } => {
                if components.is_empty() {
                    return Err(KernelError::EmptyMixture);
                }
                let mut sum = 0.0;
                for (w, k) in components {
                    if !w.is_finite() {
                        return Err(KernelError::NonfiniteParam);
                    }
                    if *w < 0.0 {
                        return Err(KernelError::NegativeWeight { value: *w });
                    }
                    sum += w;
                    k.validate()?;
                }
                if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
                    return Err(KernelError::WeightSumNotOne { sum });
                }
            }
            Self::Mapped { base, .. } => base.validate()?,
        }
        Ok(())
    }

    /// Least upper bound of the support; the config validator compares it
    /// against the boundary gap c − ρ.
    pub fn support_upper_bound(&self) -> f64 {
        match self {
            Self::Dirac { at } => *at,
            Self::Uniform { hi, .. } => *hi,
            Self::Mixture { components } => components
                .iter()
                .map(|(_, k)| k.support_upper_bound())
                .fold(f64::NEG_INFINITY, f64::max),
            Self::Mapped { base, forward, .. } => forward(base.support_upper_bound()),
        }
    }

    /// Greatest lower bound of the support; the flow reduction requires it
    /// to stay above the lower endpoint m of the homeomorphism domain.
    pub fn support_lower_bound(&self) -> f64 {
        match self {
            Self::Dirac { at } => *at,
            Self::Uniform { lo, .. } => *lo,
            Self::Mixture { components } => components
                .iter()
                .map(|(_, k)| k.support_lower_bound())
                .fold(f64::INFINITY, f64::min),
            Self::Mapped { base, forward, .. } => forward(base.support_lower_bound()),
        }
    }

    /// Inverse-CDF sampling from a single uniform u in [0, 1).
    ///
    /// For mixtures the leading digits of u select the component by
    /// cumulative weight and the rescaled remainder inverts that component's
    /// CDF; the sampled law is exactly the mixture.
    pub fn sample(&self, u: f64) -> f64 {
        debug_assert!((0.0..1.0).contains(&u), "uniform draw out of [0,1): {u}");
        match self {
            Self::Dirac { at } => *at,
            Self::Uniform { lo, hi } => lo + u * (hi - lo),
            Self::Mixture { components } => {
                let mut cum = 0.0;
                let last = components.len() - 1;
                for (idx, (w, k)) in components.iter().enumerate() {
                    // Zero-weight components never consume u-mass.
                    if *w == 0.0 && idx != last {
                        continue;
                    }
                    if u < cum + w || idx == last {
                        let rescaled = if *w > 0.0 { (u - cum) / w } else { 0.0 };
                        return k.sample(rescaled.clamp(0.0, 1.0 - f64::EPSILON));
                    }
                    cum += w;
                }
                unreachable!("mixture sampling fell through")
            }
            Self::Mapped { base, forward, .. } => forward(base.sample(u)),
        }
    }

    /// Exact CDF evaluation.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Dirac { at } => {
                if x >= *at {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Self::Mixture { components } => components.iter().map(|(w, k)| w * k.cdf(x)).sum(),
            Self::Mapped { base, inverse, .. } => base.cdf(inverse(x)),
        }
    }

    /// Atom decomposition when the law is purely discrete: sorted, merged
    /// `(location, weight)` pairs. `None` if any component is continuous.
    pub fn discrete_atoms(&self) -> Option<Vec<(f64, f64)>> {
        fn collect(k: &JumpKernel, scale: f64, out: &mut Vec<(f64, f64)>) -> bool {
            match k {
                JumpKernel::Dirac { at } => {
                    out.push((*at, scale));
                    true
                }
                JumpKernel::Uniform { .. } => false,
                JumpKernel::Mixture { components } => {
                    components.iter().all(|(w, k)| collect(k, scale * w, out))
                }
                JumpKernel::Mapped { base, forward, .. } => {
                    let mut inner = Vec::new();
                    if !collect(base, scale, &mut inner) {
                        return false;
                    }
                    out.extend(inner.into_iter().map(|(a, w)| (forward(a), w)));
                    true
                }
            }
        }
        let mut atoms = Vec::new();
        if !collect(self, 1.0, &mut atoms) {
            return None;
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (a, w) in atoms {
            match merged.last_mut() {
                Some((m, mw)) if *m == a => *mw += w,
                _ => merged.push((a, w)),
            }
        }
        Some(merged)
    }
}
