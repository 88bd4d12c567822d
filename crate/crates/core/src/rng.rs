//! Seed derivation. Every run is driven by 64-bit seeds; each purpose reads
//! its own ChaCha stream so that changing how one component consumes
//! randomness never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    Instance = 1,
    Corruption = 2,
    Arrival = 3,
    Baseline = 4,
    Tester = 5,
}

pub fn stream_rng(seed: u64, stream: Stream) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
