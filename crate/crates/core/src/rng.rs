//! Reproducible random streams.
//!
//! Every replica of every experiment draws from its own ChaCha8 stream.  The
//! stream is identified by the triple `(master seed, replica index, purpose)`:
//! the master seed keys the generator and `(replica << 8) | purpose` selects
//! the 64-bit ChaCha stream id.  Streams never overlap, so results do not
//! depend on how replicas are scheduled across worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Which part of a replica consumes a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    /// Client arrival times / types of a queue simulation.
    Arrivals = 0,
    /// Surplus (pinch) points.
    Pinches = 1,
    /// Independent edge coins of the direct sampler.
    EdgeCoins = 2,
    /// Galton–Watson offspring draws.
    Offspring = 3,
    /// Brownian increments and jump times of the continuum process.
    Continuum = 4,
    /// Anything else (test data, random weights, ...).
    Auxiliary = 5,
}

/// Largest replica index accepted by [`stream`].
pub const MAX_REPLICA: u64 = (1 << 56) - 1;

/// Returns the generator for `(master, replica, purpose)`.
///
/// # Panics
/// If `replica` exceeds [`MAX_REPLICA`].
pub fn stream(master: u64, replica: u64, purpose: Purpose) -> ChaCha8Rng {
    assert!(replica <= MAX_REPLICA, "replica index {replica} out of range");
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream((replica << 8) | purpose as u64);
    rng
}
