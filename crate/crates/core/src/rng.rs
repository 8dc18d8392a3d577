//! Deterministic splittable randomness for parallel replicas.
//!
//! Every replica owns an [`RngStream`] identified by `(seed, stream_id)`;
//! by convention `stream_id` is the replica index. A stream is further split
//! into fixed lanes (switching clock, overshoot clocks, jump targets) so the
//! draws consumed by one component of a simulation never shift the draws
//! seen by another. This is what lets the constrained and penalized process
//! share a switching realization and a jump-target sequence while keeping
//! their marginal laws intact.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids are spaced by this factor so each `(stream_id, lane)` pair
/// maps to a distinct ChaCha stream.
const LANES_PER_STREAM: u64 = 4;

/// Independent sub-streams of one replica's randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lane {
    /// Holding times and embedded-chain choices of the switching chain.
    Switching = 0,
    /// Exponential overshoot clocks of the penalized process.
    OvershootClocks = 1,
    /// The initial-condition draw and the post-jump target uniforms.
    JumpTargets = 2,
}

/// A named position in the global randomness table.
///
/// Identical `(seed, stream_id)` reproduce identical draw sequences;
/// distinct `stream_id`s index non-overlapping ChaCha streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Stream for one replica of a Monte Carlo run: `stream_id` = replica index.
    pub fn replica(seed: u64, index: u64) -> Self {
        Self::new(seed, index)
    }

    /// Generator for one lane of this stream. Pure: calling twice with the
    /// same lane yields the same sequence.
    pub fn lane(&self, lane: Lane) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(
            self.stream_id
                .wrapping_mul(LANES_PER_STREAM)
                .wrapping_add(lane as u64),
        );
        rng
    }
}
