//! Deterministic seeding of independent simulation streams.
//!
//! A run is identified by `(master_seed, run_index)`. The stream seed is
//!
//! ```text
//! seed = mix(master_seed + mix(run_index + GOLDEN))
//! ```
//!
//! where `mix` is the SplitMix64 finalizer (a bijection on `u64`) and all
//! additions wrap. For a fixed master seed the map `run_index -> seed` is a
//! composition of bijections, so distinct run indices never collide.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Random generator used for every simulation stream.
pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub run_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, run_index: u64) -> Self {
        Self {
            master_seed,
            run_index,
        }
    }

    pub fn with_run_index(self, run_index: u64) -> Self {
        Self { run_index, ..self }
    }

    pub fn stream_seed(&self) -> u64 {
        derive_stream_seed(*self)
    }

    pub fn rng(&self) -> StreamRng {
        StreamRng::seed_from_u64(self.stream_seed())
    }
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_stream_seed(spec: SeedSpec) -> u64 {
    mix(spec
        .master_seed
        .wrapping_add(mix(spec.run_index.wrapping_add(GOLDEN))))
}
