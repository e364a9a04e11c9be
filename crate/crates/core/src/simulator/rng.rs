use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A seedable, reproducible source of uniform variates.
///
/// Streams with the same `(seed, stream_id)` produce identical sequences;
/// distinct stream ids under one seed are independent ChaCha streams.
#[derive(Debug, Clone)]
pub struct Stream {
    rng: ChaCha8Rng,
}

impl Stream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { rng }
    }

    /// Uniform on the open interval (0, 1).
    #[inline]
    pub fn uniform_open01(&mut self) -> f64 {
        self.rng.sample(Open01)
    }
}

/// Inverse transform of an exponential: `-ln(u) / rate`.
#[inline]
pub fn exponential_from_uniform(rate: f64, u: f64) -> f64 {
    -u.ln() / rate
}

/// Draws an exponential time with the given `rate` (> 0).
#[inline]
pub fn exponential_variate(rate: f64, stream: &mut Stream) -> f64 {
    debug_assert!(rate > 0.0);
    exponential_from_uniform(rate, stream.uniform_open01())
}
