//! Reproducible random streams.
//!
//! A [`RandomStream`] is a ChaCha8 generator keyed by a master seed and
//! positioned on one of its 2^64 independent streams. Replica `r` of an
//! experiment tagged `e` always uses `stream_id(e, r)`, so results do not
//! depend on the order in which replicas are executed.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream id of replica `replica` within experiment `experiment`:
/// `splitmix64(splitmix64(experiment) ^ replica)`.
pub fn stream_id(experiment: u64, replica: u64) -> u64 {
    splitmix64(splitmix64(experiment) ^ replica)
}

/// Stable 64-bit tag for a string (FNV-1a), used to turn experiment names into
/// stream namespaces.
pub fn tag(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325_u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Identity of a random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamKey {
    pub master_seed: u64,
    pub stream_id: u64,
}

/// A seeded, positionable random number generator.
#[derive(Debug, Clone)]
pub struct RandomStream {
    key: StreamKey,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_id);
        Self {
            key: StreamKey {
                master_seed,
                stream_id,
            },
            rng,
        }
    }

    /// Stream for replica `replica` of the experiment namespace `experiment`.
    pub fn for_replica(master_seed: u64, experiment: u64, replica: u64) -> Self {
        Self::new(master_seed, stream_id(experiment, replica))
    }

    /// An independent child stream; the parent is left untouched.
    pub fn child(&self, tag: u64) -> Self {
        Self::new(self.key.master_seed, stream_id(self.key.stream_id, tag))
    }

    pub fn key(&self) -> StreamKey {
        self.key
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}
