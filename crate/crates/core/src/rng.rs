//! Splittable, order-independent random streams.
//!
//! Every independent unit of work (a simulated path, a block of one-step
//! samples) draws from its own ChaCha8 stream keyed by `(seed, stream index)`.
//! The stream index is a pure function of the work item, so results are
//! bit-identical for any number of worker threads.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::scalar::Scalar;

pub type StreamRng = ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws one standard normal variate. Sampling happens in `f64` for every
/// scalar type so that `f32` and `f64` runs share the same noise.
#[inline]
pub fn standard_normal<T: Scalar>(rng: &mut StreamRng) -> T {
    let z: f64 = StandardNormal.sample(rng);
    T::lit(z)
}
