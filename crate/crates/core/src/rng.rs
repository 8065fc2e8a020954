//! Counter-based random streams.
//!
//! Every replicate draws from ChaCha20 keyed by the 64-bit master seed with
//! the replicate index as the stream id, so a replicate's values depend only
//! on `(seed, index)` and never on scheduling or worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Default master seed for reproduction reports.
pub const DEFAULT_SEED: u64 = 20200101;

/// Independent stream `stream` of the generator keyed by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Binomial(m, p) draw as a sum of Bernoulli trials.
///
/// Consumes exactly `m` uniforms so streams stay aligned across
/// implementations regardless of `p`.
pub fn binomial<R: Rng + ?Sized>(rng: &mut R, m: u32, p: f64) -> u32 {
    (0..m).filter(|_| rng.random::<f64>() < p).count() as u32
}
