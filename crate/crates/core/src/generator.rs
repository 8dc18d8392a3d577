//! Intensity-matrix algebra for the switching chain.
//!
//! Everything the averaging limit needs in closed form lives here: the
//! invariant measure pi of Q, the speed-tilted generator V^-1 Q together
//! with its invariant measure pi* (which weights boundary hits), the
//! averaged drift, the averaged jump mixture, and the deterministic
//! hitting-time recursion of the averaged process.

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use thiserror::Error;

use crate::kernel::JumpKernel;
use crate::util::ksum;

/// Off-diagonal entries at or below this threshold are treated as absent
/// edges when checking irreducibility.
pub const EDGE_THRESHOLD: f64 = 1e-14;
/// Row sums of an intensity matrix must vanish within this tolerance.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Componentwise residual allowed for computed invariant measures.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Probability vectors must sum to 1 within this tolerance.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum GeneratorError {
    #[error("speed {index} is not strictly positive: {value}")]
    NonpositiveSpeed { index: usize, value: f64 },
    #[error("speeds must be strictly increasing; speeds[{index}] = {value} breaks the order")]
    UnorderedSpeeds { index: usize, value: f64 },
    #[error("intensity matrix must be square with one row per speed ({expected} rows), got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("row {row} of the intensity matrix sums to {sum}, not 0")]
    RowSumNonzero { row: usize, sum: f64 },
    #[error("off-diagonal entry ({row},{col}) is negative: {value}")]
    NegativeOffDiagonal { row: usize, col: usize, value: f64 },
    #[error("intensity matrix is reducible: its off-diagonal graph is not strongly connected")]
    Reducible,
    #[error("invariant-measure solve failed or left a residual above tolerance")]
    SingularSystem,
    #[error("no jump kernel declared for speed {speed}")]
    MissingKernel { speed: f64 },
    #[error("kernel list has {got} entries for {expected} speeds")]
    KernelCountMismatch { got: usize, expected: usize },
    #[error("drift must be strictly positive, got {value}")]
    NonpositiveDrift { value: f64 },
    #[error("post-jump value {value} at position {index} is not below the boundary {boundary}")]
    XiAboveBoundary {
        index: usize,
        value: f64,
        boundary: f64,
    },
    #[error("weight {index} is negative: {value}")]
    NegativeWeight { index: usize, value: f64 },
    #[error("weights sum to {sum}, not 1")]
    WeightSumNotOne { sum: f64 },
    #[error("support values must be pairwise distinct; position {index} repeats")]
    DuplicateSupport { index: usize },
    #[error("support and weights have different lengths: {support} vs {weights}")]
    LengthMismatch { support: usize, weights: usize },
}

/// A finite speed set with the intensity matrix of the switching chain.
///
/// Public construction via [`SwitchingGenerator::new`] requires strictly
/// increasing speeds. [`SwitchingGenerator::tilted`] keeps its support
/// aligned with the input rows, so a tilted generator stores reciprocal
/// speeds in decreasing order; [`validate`](Self::validate) accepts any
/// pairwise-distinct positive speeds for that reason.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingGenerator {
    speeds: Vec<f64>,
    q: DMatrix<f64>,
}

impl SwitchingGenerator {
    pub fn new(speeds: Vec<f64>, rows: Vec<Vec<f64>>) -> Result<Self, GeneratorError> {
        let n = speeds.len();
        for i in 1..n {
            if !(speeds[i] > speeds[i - 1]) {
                return Err(GeneratorError::UnorderedSpeeds {
                    index: i,
                    value: speeds[i],
                });
            }
        }
        if rows.len() != n {
            return Err(GeneratorError::ShapeMismatch {
                expected: n,
                got: rows.len(),
            });
        }
        for row in &rows {
            if row.len() != n {
                return Err(GeneratorError::ShapeMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
        }
        let q = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        let g = Self { speeds, q };
        g.validate()?;
        Ok(g)
    }

    pub fn n_states(&self) -> usize {
        self.speeds.len()
    }

    pub fn speeds(&self) -> &[f64] {
        &self.speeds
    }

    pub fn max_speed(&self) -> f64 {
        self.speeds
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.q[(i, j)]
    }

    /// Total exit rate of state `i` (the negated diagonal entry).
    pub fn exit_rate(&self, i: usize) -> f64 {
        -self.q[(i, i)]
    }

    /// Checks every type invariant except speed ordering (see type docs):
    /// strictly positive distinct speeds, vanishing row sums, nonnegative
    /// off-diagonals, and strong connectivity of the transition graph.
    pub fn validate(&self) -> Result<(), GeneratorError> {
        let n = self.n_states();
        for (i, &y) in self.speeds.iter().enumerate() {
            if !(y > 0.0) || !y.is_finite() {
                return Err(GeneratorError::NonpositiveSpeed { index: i, value: y });
            }
            if self.speeds[..i].contains(&y) {
                return Err(GeneratorError::DuplicateSupport { index: i });
            }
        }
        for i in 0..n {
            let sum = ksum((0..n).map(|j| self.q[(i, j)]));
            if sum.abs() > ROW_SUM_TOL {
                return Err(GeneratorError::RowSumNonzero { row: i, sum });
            }
            for j in 0..n {
                if i != j && self.q[(i, j)] < 0.0 {
                    return Err(GeneratorError::NegativeOffDiagonal {
                        row: i,
                        col: j,
                        value: self.q[(i, j)],
                    });
                }
            }
        }
        if !self.is_irreducible() {
            return Err(GeneratorError::Reducible);
        }
        Ok(())
    }

    fn is_irreducible(&self) -> bool {
        let n = self.n_states();
        if n <= 1 {
            return true;
        }
        let mut graph = DiGraph::<(), ()>::new();
        let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
        for i in 0..n {
            for j in 0..n {
                if i != j && self.q[(i, j)] > EDGE_THRESHOLD {
                    graph.add_edge(nodes[i], nodes[j], ());
                }
            }
        }
        tarjan_scc(&graph).len() == 1
    }

    /// Invariant measure pi of Q: solves Q^T pi = 0 with the last equation
    /// replaced by the all-ones normalization, by dense LU.
    pub fn invariant_measure(&self) -> Result<ProbabilityVector, GeneratorError> {
        let n = self.n_states();
        let mut a = self.q.transpose();
        for j in 0..n {
            a[(n - 1, j)] = 1.0;
        }
        let mut b = DVector::zeros(n);
        b[n - 1] = 1.0;
        let pi = a.lu().solve(&b).ok_or(GeneratorError::SingularSystem)?;
        // Componentwise residual of pi Q = 0 and positivity.
        for j in 0..n {
            let r = ksum((0..n).map(|i| pi[i] * self.q[(i, j)]));
            if r.abs() > RESIDUAL_TOL {
                return Err(GeneratorError::SingularSystem);
            }
        }
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            if pi[i] < -RESIDUAL_TOL {
                return Err(GeneratorError::SingularSystem);
            }
            weights.push(pi[i].max(0.0));
        }
        ProbabilityVector::new(self.speeds.clone(), weights)
    }

    /// Generator of the reciprocal-speed chain: row i divided by speeds[i],
    /// support replaced by 1/speeds[i] in the same row order.
    pub fn tilted(&self) -> SwitchingGenerator {
        let n = self.n_states();
        let speeds: Vec<f64> = self.speeds.iter().map(|y| 1.0 / y).collect();
        let q = DMatrix::from_fn(n, n, |i, j| self.q[(i, j)] / self.speeds[i]);
        SwitchingGenerator { speeds, q }
    }
}

/// Free-function spelling of [`SwitchingGenerator::validate`].
pub fn validate_generator(g: &SwitchingGenerator) -> Result<(), GeneratorError> {
    g.validate()
}

/// pi*: invariant measure of the tilted generator, stored on the reciprocal
/// support but indexed like the input rows (weight i belongs to speed i).
/// Verifies the tilt identity pi*({1/y}) * sum_z z pi(z) = y pi(y).
pub fn boundary_speed_measure(g: &SwitchingGenerator) -> Result<ProbabilityVector, GeneratorError> {
    let pistar = g.tilted().invariant_measure()?;
    let pi = g.invariant_measure()?;
    let drift = ksum(pi.weights().iter().zip(g.speeds()).map(|(w, y)| w * y));
    for i in 0..g.n_states() {
        let lhs = pistar.weights()[i] * drift;
        let rhs = g.speeds()[i] * pi.weights()[i];
        if (lhs - rhs).abs() > RESIDUAL_TOL {
            return Err(GeneratorError::SingularSystem);
        }
    }
    Ok(pistar)
}

/// Drift of the averaged process: sum of y pi({y}).
pub fn averaged_drift(g: &SwitchingGenerator) -> Result<f64, GeneratorError> {
    let pi = g.invariant_measure()?;
    Ok(ksum(
        pi.weights().iter().zip(g.speeds()).map(|(w, y)| w * y),
    ))
}

/// First moment of pi*; the reciprocal of the averaged drift.
pub fn pistar_first_moment(g: &SwitchingGenerator) -> Result<f64, GeneratorError> {
    let pistar = boundary_speed_measure(g)?;
    Ok(ksum(
        pistar
            .weights()
            .iter()
            .zip(pistar.support())
            .map(|(w, s)| w * s),
    ))
}

/// Averaged boundary jump measure: the mixture weighting kernel i by
/// pi*'s weight i. The weights are exactly those of
/// [`boundary_speed_measure`].
pub fn averaged_jump_kernel(
    g: &SwitchingGenerator,
    kernels: &[JumpKernel],
) -> Result<JumpKernel, GeneratorError> {
    let n = g.n_states();
    if kernels.len() < n {
        return Err(GeneratorError::MissingKernel {
            speed: g.speeds()[kernels.len()],
        });
    }
    if kernels.len() > n {
        return Err(GeneratorError::KernelCountMismatch {
            got: kernels.len(),
            expected: n,
        });
    }
    let pistar = boundary_speed_measure(g)?;
    Ok(JumpKernel::mixture(
        pistar
            .weights()
            .iter()
            .zip(kernels)
            .map(|(w, k)| (*w, k.clone()))
            .collect(),
    ))
}

/// Boundary hitting times of the averaged process: starting from value
/// xi[0], then restarting from xi[1], xi[2], ... after each jump,
/// T*_k = T*_{k-1} + (c - xi[k-1]) / drift. Returns (T*_1, ..., T*_n).
pub fn averaged_hitting_times(
    drift: f64,
    boundary: f64,
    xi: &[f64],
) -> Result<Vec<f64>, GeneratorError> {
    if !(drift > 0.0) {
        return Err(GeneratorError::NonpositiveDrift { value: drift });
    }
    let mut times = Vec::with_capacity(xi.len());
    let mut t = 0.0;
    for (index, &x) in xi.iter().enumerate() {
        if !(x < boundary) {
            return Err(GeneratorError::XiAboveBoundary {
                index,
                value: x,
                boundary,
            });
        }
        t += (boundary - x) / drift;
        times.push(t);
    }
    Ok(times)
}

/// Nonnegative weights summing to 1 over pairwise-distinct support points.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    support: Vec<f64>,
    weights: Vec<f64>,
}

impl ProbabilityVector {
    pub fn new(support: Vec<f64>, weights: Vec<f64>) -> Result<Self, GeneratorError> {
        if support.len() != weights.len() {
            return Err(GeneratorError::LengthMismatch {
                support: support.len(),
                weights: weights.len(),
            });
        }
        for (i, &w) in weights.iter().enumerate() {
            if w < 0.0 || !w.is_finite() {
                return Err(GeneratorError::NegativeWeight { index: i, value: w });
            }
        }
        let sum = ksum(weights.iter().copied());
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(GeneratorError::WeightSumNotOne { sum });
        }
        for i in 0..support.len() {
            if support[..i].contains(&support[i]) {
                return Err(GeneratorError::DuplicateSupport { index: i });
            }
        }
        Ok(Self { support, weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight attached to an exact support point, if present.
    pub fn weight_at(&self, point: f64) -> Option<f64> {
        self.support
            .iter()
            .position(|&s| s == point)
            .map(|i| self.weights[i])
    }

    /// Same weights re-labeled onto a different support (used to express
    /// pi* as a law on the speeds themselves rather than the reciprocals).
    pub fn with_support(&self, support: Vec<f64>) -> Result<Self, GeneratorError> {
        Self::new(support, self.weights.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic_q() -> Vec<Vec<f64>> {
        vec![vec![-1.0, 1.0], vec![2.0, -2.0]]
    }

    // ── Validation ──────────────────────────────────────────────────────

    #[test]
    fn quadratic_generator_is_valid() {
        assert!(SwitchingGenerator::new(vec![1.0, 2.0], quadratic_q()).is_ok());
    }

    #[test]
    fn row_sum_violation_is_reported() {
        let err = SwitchingGenerator::new(vec![1.0, 2.0], vec![vec![-1.0, 0.5], vec![2.0, -2.0]])
            .unwrap_err();
        assert!(matches!(err, GeneratorError::RowSumNonzero { row: 0, .. }));
    }

    #[test]
    fn zero_matrix_is_reducible() {
        let err = SwitchingGenerator::new(vec![1.0, 2.0], vec![vec![0.0, 0.0], vec![0.0, 0.0]])
            .unwrap_err();
        assert_eq!(err, GeneratorError::Reducible);
    }

    #[test]
    fn negative_off_diagonal_is_reported() {
        let err = SwitchingGenerator::new(
            vec![1.0, 2.0, 3.0],
            vec![
                vec![-1.0, 2.0, -1.0],
                vec![1.0, -2.0, 1.0],
                vec![1.0, 1.0, -2.0],
            ],
        )
        .unwrap_err();
        assert!(matches!(
            err,
            GeneratorError::NegativeOffDiagonal { row: 0, col: 2, .. }
        ));
    }

    #[test]
    fn speeds_must_be_positive_and_increasing() {
        let err = SwitchingGenerator::new(vec![2.0, 1.0], quadratic_q()).unwrap_err();
        assert!(matches!(err, GeneratorError::UnorderedSpeeds { .. }));
        let err = SwitchingGenerator::new(vec![0.0], vec![vec![0.0]]).unwrap_err();
        assert!(matches!(err, GeneratorError::NonpositiveSpeed { .. }));
    }

    #[test]
    fn one_state_generator_is_valid() {
        let g = SwitchingGenerator::new(vec![3.0], vec![vec![0.0]]).unwrap();
        assert_eq!(g.exit_rate(0), 0.0);
    }

    // ── Invariant measure ───────────────────────────────────────────────

    #[test]
    fn quadratic_invariant_measure() {
        let g = SwitchingGenerator::new(vec![1.0, 2.0], quadratic_q()).unwrap();
        let pi = g.invariant_measure().unwrap();
        assert!((pi.weights()[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((pi.weights()[1] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(pi.support(), &[1.0, 2.0]);
    }

    #[test]
    fn symmetric_invariant_measure() {
        let g = SwitchingGenerator::new(vec![0.5, 1.0], vec![vec![-1.0, 1.0], vec![1.0, -1.0]])
            .unwrap();
        let pi = g.invariant_measure().unwrap();
        assert!((pi.weights()[0] - 0.5).abs() < 1e-12);
        assert!((pi.weights()[1] - 0.5).abs() < 1e-12);
    }

    // ── Tilting ─────────────────────────────────────────────────────────

    #[test]
    fn tilted_quadratic_z_matches_hand_division() {
        let g = SwitchingGenerator::new(vec![1.0, 4.0], quadratic_q()).unwrap();
        let t = g.tilted();
        assert_eq!(t.speeds(), &[1.0, 0.25]);
        assert_eq!(t.entry(0, 0), -1.0);
        assert_eq!(t.entry(0, 1), 1.0);
        assert_eq!(t.entry(1, 0), 0.5);
        assert_eq!(t.entry(1, 1), -0.5);
        t.validate().unwrap();
    }

    #[test]
    fn tilted_one_state_is_zero_matrix() {
        let g = SwitchingGenerator::new(vec![4.0], vec![vec![0.0]]).unwrap();
        let t = g.tilted();
        assert_eq!(t.speeds(), &[0.25]);
        assert_eq!(t.entry(0, 0), 0.0);
    }

    #[test]
    fn tilted_half_one_example() {
        let g = SwitchingGenerator::new(vec![0.5, 1.0], vec![vec![-1.0, 1.0], vec![1.0, -1.0]])
            .unwrap();
        let t = g.tilted();
        assert_eq!(t.speeds(), &[2.0, 1.0]);
        assert_eq!(t.entry(0, 0), -2.0);
        assert_eq!(t.entry(0, 1), 2.0);
        assert_eq!(t.entry(1, 0), 1.0);
        assert_eq!(t.entry(1, 1), -1.0);
    }

    #[test]
    fn double_tilt_is_identity_for_dyadic_speeds() {
        // Division by powers of two is exact, so tilting twice must return
        // the original generator bit for bit.
        let g = SwitchingGenerator::new(
            vec![0.5, 1.0, 4.0],
            vec![
                vec![-1.5, 1.0, 0.5],
                vec![2.0, -3.0, 1.0],
                vec![0.25, 0.75, -1.0],
            ],
        )
        .unwrap();
        let tt = g.tilted().tilted();
        assert_eq!(g, tt);
    }

    // ── pi*, drift, first moment ────────────────────────────────────────

    #[test]
    fn quadratic_z_boundary_speed_measure() {
        let g = SwitchingGenerator::new(vec![1.0, 4.0], quadratic_q()).unwrap();
        let pistar = boundary_speed_measure(&g).unwrap();
        assert_eq!(pistar.support(), &[1.0, 0.25]);
        assert!((pistar.weights()[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((pistar.weights()[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_speed_boundary_measure_is_dirac() {
        let g = SwitchingGenerator::new(vec![5.0], vec![vec![0.0]]).unwrap();
        let pistar = boundary_speed_measure(&g).unwrap();
        assert_eq!(pistar.support(), &[0.2]);
        assert_eq!(pistar.weights(), &[1.0]);
    }

    #[test]
    fn half_one_boundary_measure() {
        let g = SwitchingGenerator::new(vec![0.5, 1.0], vec![vec![-1.0, 1.0], vec![1.0, -1.0]])
            .unwrap();
        let pistar = boundary_speed_measure(&g).unwrap();
        assert!((pistar.weights()[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((pistar.weights()[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn drift_examples() {
        let single = SwitchingGenerator::new(vec![3.0], vec![vec![0.0]]).unwrap();
        assert!((averaged_drift(&single).unwrap() - 3.0).abs() < 1e-15);

        let z = SwitchingGenerator::new(vec![1.0, 4.0], quadratic_q()).unwrap();
        assert!((averaged_drift(&z).unwrap() - 2.0).abs() < 1e-12);

        let half = SwitchingGenerator::new(vec![0.5, 1.0], vec![vec![-1.0, 1.0], vec![1.0, -1.0]])
            .unwrap();
        assert!((averaged_drift(&half).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn first_moment_examples() {
        let z = SwitchingGenerator::new(vec![1.0, 4.0], quadratic_q()).unwrap();
        assert!((pistar_first_moment(&z).unwrap() - 0.5).abs() < 1e-12);

        let single = SwitchingGenerator::new(vec![4.0], vec![vec![0.0]]).unwrap();
        assert!((pistar_first_moment(&single).unwrap() - 0.25).abs() < 1e-15);

        let half = SwitchingGenerator::new(vec![0.5, 1.0], vec![vec![-1.0, 1.0], vec![1.0, -1.0]])
            .unwrap();
        assert!((pistar_first_moment(&half).unwrap() - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn duality_of_drift_and_first_moment() {
        let z = SwitchingGenerator::new(vec![1.0, 4.0], quadratic_q()).unwrap();
        let product = pistar_first_moment(&z).unwrap() * averaged_drift(&z).unwrap();
        assert!((product - 1.0).abs() < 1e-10);
    }

    // ── Averaged kernel and recursion ───────────────────────────────────

    #[test]
    fn averaged_kernel_weights_equal_pistar_exactly() {
        let g = SwitchingGenerator::new(vec![1.0, 4.0], quadratic_q()).unwrap();
        let kernels = vec![JumpKernel::dirac(0.1), JumpKernel::dirac(0.3)];
        let nubar = averaged_jump_kernel(&g, &kernels).unwrap();
        let pistar = boundary_speed_measure(&g).unwrap();
        match nubar {
            JumpKernel::Mixture { components } => {
                assert_eq!(components.len(), 2);
                assert_eq!(components[0].0, pistar.weights()[0]);
                assert_eq!(components[1].0, pistar.weights()[1]);
            }
            other => panic!("expected mixture, got {other:?}"),
        }
    }

    #[test]
    fn averaged_kernel_of_identical_components_is_the_component() {
        let g = SwitchingGenerator::new(vec![1.0, 4.0], quadratic_q()).unwrap();
        let nu = JumpKernel::uniform(0.0, 0.25);
        let nubar = averaged_jump_kernel(&g, &[nu.clone(), nu.clone()]).unwrap();
        for i in 0..=20 {
            let u = i as f64 / 21.0;
            assert!((nubar.cdf(nu.sample(u)) - nu.cdf(nu.sample(u))).abs() < 1e-12);
        }
    }

    #[test]
    fn missing_kernel_is_reported_with_its_speed() {
        let g = SwitchingGenerator::new(vec![1.0, 4.0], quadratic_q()).unwrap();
        let err = averaged_jump_kernel(&g, &[JumpKernel::dirac(0.0)]).unwrap_err();
        assert_eq!(err, GeneratorError::MissingKernel { speed: 4.0 });
    }

    #[test]
    fn hitting_time_recursion_examples() {
        let t = averaged_hitting_times(2.0, 1.0, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(t, vec![0.5, 1.0, 1.5]);
        let t = averaged_hitting_times(1.0, 1.0, &[0.0, 0.5]).unwrap();
        assert_eq!(t, vec![1.0, 1.5]);
    }

    #[test]
    fn hitting_time_recursion_errors() {
        assert!(matches!(
            averaged_hitting_times(0.0, 1.0, &[0.0]),
            Err(GeneratorError::NonpositiveDrift { .. })
        ));
        assert!(matches!(
            averaged_hitting_times(1.0, 1.0, &[0.0, 1.0]),
            Err(GeneratorError::XiAboveBoundary { index: 1, .. })
        ));
    }

    // ── ProbabilityVector ───────────────────────────────────────────────

    #[test]
    fn probability_vector_checks() {
        assert!(ProbabilityVector::new(vec![1.0, 2.0], vec![0.5, 0.5]).is_ok());
        assert!(matches!(
            ProbabilityVector::new(vec![1.0, 2.0], vec![0.6, 0.6]),
            Err(GeneratorError::WeightSumNotOne { .. })
        ));
        assert!(matches!(
            ProbabilityVector::new(vec![1.0, 1.0], vec![0.5, 0.5]),
            Err(GeneratorError::DuplicateSupport { .. })
        ));
        assert!(matches!(
            ProbabilityVector::new(vec![1.0, 2.0], vec![1.5, -0.5]),
            Err(GeneratorError::NegativeWeight { .. })
        ));
    }

    #[test]
    fn weight_lookup_by_support_point() {
        let p = ProbabilityVector::new(vec![1.0, 0.25], vec![1.0 / 3.0, 2.0 / 3.0]).unwrap();
        assert_eq!(p.weight_at(0.25), Some(2.0 / 3.0));
        assert_eq!(p.weight_at(0.5), None);
    }
}
