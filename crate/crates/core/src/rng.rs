//! Seed substreams.
//!
//! Every consumer of randomness draws from its own ChaCha stream keyed by the
//! master seed, so adding draws in one consumer never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identifies which consumer a random stream belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Init,
    Split,
    /// Augmentation for a training round (warm-up is round 0) and one of the two views.
    View {
        round: u32,
        view: u8,
    },
    Probe {
        round: u32,
    },
    Selection {
        round: u32,
    },
    FeatProp,
    Sbm,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Init => 1,
            Stream::Split => 2,
            Stream::FeatProp => 3,
            Stream::Sbm => 4,
            Stream::View { round, view } => (1 << 60) | ((round as u64) << 8) | view as u64,
            Stream::Probe { round } => (2 << 60) | round as u64,
            Stream::Selection { round } => (3 << 60) | round as u64,
        }
    }
}

pub fn substream(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}

/// Two further independent streams split off a caller-provided seed.
pub fn split_seed(seed: u64, lane: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((7 << 60) | lane);
    rng
}
