//! Event-driven simulation and exact limit objects for piecewise-linear
//! Markov processes confined below a boundary by downward jumps, driven by
//! a fast finite-state switching process.
//!
//! The model: a position moves at the speed attached to the current state
//! of a continuous-time Markov chain accelerated by 1/epsilon. Whenever the
//! position reaches the boundary it jumps down according to a kernel chosen
//! by the speed in force. As epsilon vanishes the position converges to an
//! averaged process with constant drift (the speed mean under the chain's
//! invariant measure) and jump mixture weighted by the boundary speed
//! measure, i.e. the invariant measure of the speed-tilted generator.
//!
//! Everything here is exact event arithmetic, never time discretization:
//! * [`generator`]: validated rate matrices, invariant measures, the tilt,
//!   averaged drift and jump mixture, deterministic hit recursions.
//! * [`ctmc`]: switching-path simulation and occupation measures.
//! * [`kernel`]: jump target laws with exact sampling and CDFs.
//! * [`path`]: cadlag piecewise-linear trajectories and hit records.
//! * [`pdmp`]: the constrained process, the averaged process, and the
//!   space-axis mirror construction.
//! * [`penalty`]: soft-boundary relaxation, its time change, coupled pairs,
//!   Skorokhod-distance upper bounds.
//! * [`flow`]: nonlinear motions reduced to the linear case by a closed-form
//!   space change.
//! * [`validation`]: estimators and closed-form laws to test convergence.
//! * [`rng`]: deterministic stream/lane splitting so every experiment is
//!   reproducible replica by replica.

// Negated comparisons are NaN guards throughout: `!(x > 0.0)` must reject
// NaN where `x <= 0.0` would let it through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ctmc;
pub mod flow;
pub mod generator;
pub mod kernel;
pub mod path;
pub mod pdmp;
pub mod penalty;
pub mod rng;
pub mod util;
pub mod validation;

pub use ctmc::{simulate_switching, SwitchInit, SwitchPath};
pub use flow::{
    build_homeomorphism, quadratic_if_preset, quadratic_z_preset, reduce_to_linear, simulate_flow,
    FlowKind, FlowPath, FlowProcessConfig, FlowSpec, Homeomorphism,
};
pub use generator::{
    averaged_drift, averaged_hitting_times, averaged_jump_kernel, boundary_speed_measure,
    pistar_first_moment, validate_generator, GeneratorError, ProbabilityVector, SwitchingGenerator,
};
pub use kernel::JumpKernel;
pub use path::{CadlagPath, HittingRecord, Segment};
pub use pdmp::{
    mirror_first_hit_time, simulate_averaged, simulate_constrained, simulate_mirror, PdmpError,
    ProcessConfig,
};
pub use penalty::{
    simulate_coupled, simulate_penalized, skorokhod_upper_bound, time_change, warped_sup_distance,
    wasserstein_estimate, CoupledPair, PenalizedPath, PenaltyError, TimeChange,
};
pub use rng::{Lane, RngStream};
pub use util::Estimate;
pub use validation::{
    drift_estimate, ks_critical, ks_statistic, limit_law_probability, occupation_vs_pi,
    prejump_speed_law, tv_distance, EmpiricalLaw, EstimatorSummary, LimitLawQuery, ValidationError,
};
