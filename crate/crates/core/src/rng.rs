//! Seeded random streams.
//!
//! Every stream is identified by `(master_seed, stream_id)`. The pair is mixed
//! through a SplitMix64 finalizer into a 64-bit seed for a ChaCha20 generator,
//! so a trial's output depends only on its own key. Normal variates use the
//! Marsaglia polar method on top of the generator's uniform `f64` draws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Name and pinned version of the underlying generator, recorded in output headers.
pub const GENERATOR: &str = "rand_chacha::ChaCha20Rng+splitmix64+polar@0.3";

/// Identifies one reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self {
            master_seed,
            stream_id,
        }
    }

    pub fn derived_seed(&self) -> u64 {
        splitmix64(
            self.master_seed ^ splitmix64(self.stream_id.wrapping_add(0x9E37_79B9_7F4A_7C15)),
        )
    }

    pub fn rng(&self) -> StreamRng {
        StreamRng {
            key: *self,
            inner: ChaCha20Rng::seed_from_u64(self.derived_seed()),
            spare_normal: None,
        }
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A live generator for one [`RngStream`].
#[derive(Debug, Clone)]
pub struct StreamRng {
    key: RngStream,
    inner: ChaCha20Rng,
    spare_normal: Option<f64>,
}

impl StreamRng {
    pub fn key(&self) -> RngStream {
        self.key
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Standard normal variate (polar method, pairs cached).
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let factor = (-2.0 * s.ln() / s).sqrt();
                self.spare_normal = Some(v * factor);
                return u * factor;
            }
        }
    }
}
