//! Named random sub-streams derived from one master seed.
//!
//! Every consumer of randomness asks for its own stream by name and index, so
//! results do not depend on the order in which streams are drawn or on how
//! work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream used for the initial-access perturbation of the track.
pub const TRAJECTORY_INIT: &str = "trajectory-init";
/// Receiver noise.
pub const NOISE: &str = "noise";
/// Probe waveform phases.
pub const PROBE: &str = "probe";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStream {
    master: u64,
}

impl SeedStream {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// Independent generator for `(name, index)`.
    pub fn substream(&self, name: &str, index: u64) -> ChaCha8Rng {
        let mut seed = [0u8; 32];
        let words = [
            splitmix(self.master),
            splitmix(fnv1a(name.as_bytes())),
            splitmix(index ^ 0x5bd1_e995_u64.rotate_left(17)),
            splitmix(self.master ^ fnv1a(name.as_bytes()).rotate_left(29) ^ index),
        ];
        for (chunk, w) in seed.chunks_exact_mut(8).zip(words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(*b)).wrapping_mul(0x0000_0100_0000_01b3))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
