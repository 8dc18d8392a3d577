//! Nonlinear motions dx/dt = alpha(y) F(x) on (m, c) and their reduction to
//! the linear process through the space change Z = G(X), with
//! G(x) = integral of 1/F from m to x.
//!
//! Only closed-form G families are supported: the quadratic flow F(x) = x^2
//! with G(x) = 1/m - 1/x, and user-supplied forward/inverse pairs checked by
//! a dense round-trip grid. Keeping G exact keeps the hit times of X and Z
//! identical as floating-point numbers, which the simulator relies on: it
//! always runs in Z-coordinates and maps back on demand.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::ctmc::SwitchInit;
use crate::generator::{GeneratorError, SwitchingGenerator};
use crate::kernel::{JumpKernel, MapFn};
use crate::path::{CadlagPath, PathError};
use crate::pdmp::{simulate_constrained, PdmpError, ProcessConfig};
use crate::rng::RngStream;

const ROUND_TRIP_TOL: f64 = 1e-12;
const ROUND_TRIP_GRID: usize = 1000;
const SUPPORT_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum FlowError {
    #[error("1/F is not integrable near the lower endpoint; G(c) is not finite")]
    NonIntegrableF,
    #[error("G and its claimed inverse disagree at x = {at} by {error}")]
    RoundTripFailure { at: f64, error: f64 },
    #[error("kernel support [{lo}, {hi}] leaves the required window")]
    KernelSupportViolation { lo: f64, hi: f64 },
    #[error(transparent)]
    Config(#[from] PdmpError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
}

/// Shape of F in dx/dt = alpha(y) F(x).
#[derive(Clone)]
pub enum FlowKind {
    /// F(x) = x^2; G(x) = 1/m - 1/x in closed form.
    Quadratic,
    /// Arbitrary F given through its closed-form G and inverse; checked by
    /// round-trip on a dense grid, never integrated numerically.
    Table { forward: MapFn, inverse: MapFn },
}

impl fmt::Debug for FlowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Quadratic => f.write_str("Quadratic"),
            Self::Table { .. } => f.write_str("Table"),
        }
    }
}

/// The motion law: domain (m, c), one positive multiplier per switching
/// state, and the shape of F.
#[derive(Debug, Clone)]
pub struct FlowSpec {
    pub m: f64,
    pub boundary: f64,
    /// alpha(y) per generator state, in state order. Must be strictly
    /// increasing so the reduced process keeps the speed-sorted layout.
    pub alpha: Vec<f64>,
    pub kind: FlowKind,
}

impl FlowSpec {
    pub fn validate(&self) -> Result<(), FlowError> {
        if !self.m.is_finite() || !self.boundary.is_finite() || self.m >= self.boundary {
            return Err(FlowError::Config(PdmpError::ConfigInvalid {
                reason: format!(
                    "flow domain must satisfy m < c, got ({}, {})",
                    self.m, self.boundary
                ),
            }));
        }
        if self.alpha.is_empty() || self.alpha.iter().any(|a| !a.is_finite() || *a <= 0.0) {
            return Err(FlowError::Config(PdmpError::ConfigInvalid {
                reason: "alpha must be nonempty, finite, and positive".into(),
            }));
        }
        if matches!(self.kind, FlowKind::Quadratic) && self.m <= 0.0 {
            // integral of du/u^2 diverges at 0.
            return Err(FlowError::NonIntegrableF);
        }
        Ok(())
    }
}

/// G and its inverse as exact evaluators; G maps (m, c) onto (0, G(c))
/// strictly increasingly.
#[derive(Clone)]
pub struct Homeomorphism {
    forward: MapFn,
    inverse: MapFn,
    m: f64,
    boundary: f64,
}

impl fmt::Debug for Homeomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Homeomorphism")
            .field("m", &self.m)
            .field("boundary", &self.boundary)
            .finish_non_exhaustive()
    }
}

impl Homeomorphism {
    pub fn value(&self, x: f64) -> f64 {
        (self.forward)(x)
    }

    pub fn inverse_value(&self, z: f64) -> f64 {
        (self.inverse)(z)
    }

    pub fn forward_fn(&self) -> MapFn {
        Arc::clone(&self.forward)
    }

    pub fn inverse_fn(&self) -> MapFn {
        Arc::clone(&self.inverse)
    }

    /// G(c), the upper end of the reduced domain.
    pub fn reduced_boundary(&self) -> f64 {
        (self.forward)(self.boundary)
    }
}

/// Builds G for the spec's F. Quadratic uses the closed form; table pairs
/// are verified on a 1000-point grid: strict increase and round trip within
/// 1e-12.
pub fn build_homeomorphism(spec: &FlowSpec) -> Result<Homeomorphism, FlowError> {
    spec.validate()?;
    let (m, c) = (spec.m, spec.boundary);
    let (forward, inverse): (MapFn, MapFn) = match &spec.kind {
        FlowKind::Quadratic => {
            let f: MapFn = Arc::new(move |x: f64| 1.0 / m - 1.0 / x);
            let g: MapFn = Arc::new(move |z: f64| 1.0 / (1.0 / m - z));
            (f, g)
        }
        FlowKind::Table { forward, inverse } => (Arc::clone(forward), Arc::clone(inverse)),
    };
    if !forward(c).is_finite() {
        return Err(FlowError::NonIntegrableF);
    }
    if let FlowKind::Table { .. } = spec.kind {
        let mut prev = f64::NEG_INFINITY;
        for i in 1..=ROUND_TRIP_GRID {
            let x = m + (c - m) * i as f64 / (ROUND_TRIP_GRID + 1) as f64;
            let z = forward(x);
            if !z.is_finite() || z <= prev {
                return Err(FlowError::RoundTripFailure {
                    at: x,
                    error: f64::INFINITY,
                });
            }
            prev = z;
            let back = inverse(z);
            let err = (back - x).abs();
            if !(err <= ROUND_TRIP_TOL * x.abs().max(1.0)) {
                return Err(FlowError::RoundTripFailure { at: x, error: err });
            }
        }
    }
    Ok(Homeomorphism {
        forward,
        inverse,
        m,
        boundary: c,
    })
}

/// Process description in X-coordinates: switching generator over the base
/// speeds y, flow spec carrying alpha and F, kernels and initial law
/// supported in (m, c - gap).
#[derive(Debug, Clone)]
pub struct FlowProcessConfig {
    pub generator: SwitchingGenerator,
    pub flow: FlowSpec,
    pub initial_value: JumpKernel,
    pub initial_state: SwitchInit,
    pub kernels: Vec<JumpKernel>,
    pub epsilon: f64,
    pub horizon: f64,
    pub gap: f64,
}

fn push_kernel(k: &JumpKernel, hom: &Homeomorphism) -> JumpKernel {
    // Point masses push forward exactly; anything with a continuous part is
    // represented by inverse-CDF sampling composed with G.
    match k.discrete_atoms() {
        Some(atoms) if atoms.len() == 1 => JumpKernel::dirac(hom.value(atoms[0].0)),
        Some(atoms) => JumpKernel::mixture(
            atoms
                .into_iter()
                .map(|(a, w)| (w, JumpKernel::dirac(hom.value(a))))
                .collect(),
        ),
        None => JumpKernel::mapped(k.clone(), hom.forward_fn(), hom.inverse_fn()),
    }
}

fn check_support(k: &JumpKernel, m: f64, hi_allowed: f64) -> Result<(), FlowError> {
    let lo = k.support_lower_bound();
    let hi = k.support_upper_bound();
    let tol = SUPPORT_TOL * hi_allowed.abs().max(1.0);
    if lo < m - tol || hi > hi_allowed + tol {
        return Err(FlowError::KernelSupportViolation { lo, hi });
    }
    Ok(())
}

/// Space change to the linear process: boundary G(c), speeds alpha(y),
/// kernels and initial law pushed through G, generator matrix unchanged.
/// The reduced safety gap is G(c) - G(c - gap).
pub fn reduce_to_linear(cfg: &FlowProcessConfig) -> Result<ProcessConfig, FlowError> {
    let hom = build_homeomorphism(&cfg.flow)?;
    let n = cfg.generator.n_states();
    if cfg.flow.alpha.len() != n {
        return Err(FlowError::Config(PdmpError::ConfigInvalid {
            reason: format!(
                "alpha has {} entries for {} states",
                cfg.flow.alpha.len(),
                n
            ),
        }));
    }
    let hi_allowed = cfg.flow.boundary - cfg.gap;
    check_support(&cfg.initial_value, cfg.flow.m, hi_allowed)?;
    for k in &cfg.kernels {
        check_support(k, cfg.flow.m, hi_allowed)?;
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| cfg.generator.entry(i, j)).collect())
        .collect();
    let generator = SwitchingGenerator::new(cfg.flow.alpha.clone(), rows)?;
    let z_boundary = hom.reduced_boundary();
    let z_gap = z_boundary - hom.value(cfg.flow.boundary - cfg.gap);
    let reduced = ProcessConfig {
        generator,
        boundary: z_boundary,
        initial_value: push_kernel(&cfg.initial_value, &hom),
        initial_state: cfg.initial_state.clone(),
        kernels: cfg.kernels.iter().map(|k| push_kernel(k, &hom)).collect(),
        epsilon: cfg.epsilon,
        horizon: cfg.horizon,
        gap: z_gap,
    };
    reduced.validate()?;
    Ok(reduced)
}

/// Trajectory of the nonlinear flow: the exactly simulated Z-path plus the
/// inverse map. Evaluation bends each linear Z-segment back through G^-1;
/// jump records stay in Z-coordinates, where `prejump_speed` means the
/// effective linear speed alpha(y).
#[derive(Debug, Clone)]
pub struct FlowPath {
    z: CadlagPath,
    hom: Homeomorphism,
}

impl FlowPath {
    pub fn z_path(&self) -> &CadlagPath {
        &self.z
    }

    pub fn homeomorphism(&self) -> &Homeomorphism {
        &self.hom
    }

    pub fn value_at(&self, t: f64) -> Result<f64, PathError> {
        Ok(self.hom.inverse_value(self.z.value_at(t)?))
    }

    pub fn value_left(&self, t: f64) -> Result<f64, PathError> {
        Ok(self.hom.inverse_value(self.z.value_left(t)?))
    }

    /// Boundary-hit instants; bitwise equal to the Z-path's because the
    /// simulation happens in Z.
    pub fn hit_times(&self) -> Vec<f64> {
        self.z.hit_times()
    }

    /// Post-jump values mapped back to X-coordinates.
    pub fn postjump_values_x(&self) -> Vec<f64> {
        self.z
            .jumps()
            .iter()
            .map(|r| self.hom.inverse_value(r.postjump_value))
            .collect()
    }
}

/// Simulates the flow by reducing to Z, running the linear engine, and
/// wrapping the result with the inverse map.
pub fn simulate_flow(cfg: &FlowProcessConfig, stream: &RngStream) -> Result<FlowPath, FlowError> {
    let hom = build_homeomorphism(&cfg.flow)?;
    let reduced = reduce_to_linear(cfg)?;
    let z = simulate_constrained(&reduced, stream)?;
    Ok(FlowPath { z, hom })
}

/// Quadratic integrate-and-fire preset: base speeds {1, 2}, alpha(y) = y^2,
/// Q = [[-1, 1], [2, -2]], domain (1, 2), gap 0.25, uniform kernels on
/// (m, c - gap).
pub fn quadratic_if_preset() -> FlowProcessConfig {
    let generator = SwitchingGenerator::new(vec![1.0, 2.0], vec![vec![-1.0, 1.0], vec![2.0, -2.0]])
        .expect("preset generator is valid");
    FlowProcessConfig {
        generator,
        flow: FlowSpec {
            m: 1.0,
            boundary: 2.0,
            alpha: vec![1.0, 4.0],
            kind: FlowKind::Quadratic,
        },
        initial_value: JumpKernel::uniform(1.0, 1.75),
        initial_state: SwitchInit::State(0),
        kernels: vec![
            JumpKernel::uniform(1.0, 1.75),
            JumpKernel::uniform(1.0, 1.75),
        ],
        epsilon: 0.05,
        horizon: 20.0,
        gap: 0.25,
    }
}

/// The reduced linear process of the quadratic preset: speeds {1, 4},
/// boundary 1/2, same generator matrix.
pub fn quadratic_z_preset() -> ProcessConfig {
    reduce_to_linear(&quadratic_if_preset()).expect("preset reduces cleanly")
}
