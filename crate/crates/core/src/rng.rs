//! Seeded random streams.
//!
//! Every stochastic routine in the crate draws from a [`RngStream`], a
//! (master seed, stream, substream) triple. The triple is hashed with SHA-256
//! into a ChaCha8 key, so distinct triples give unrelated keystreams and the
//! same triple always reproduces the same output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_id: u64,
    pub substream_id: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64, substream_id: u64) -> Self {
        Self {
            master_seed,
            stream_id,
            substream_id,
        }
    }

    /// Same master seed and stream, different substream.
    pub fn substream(&self, substream_id: u64) -> Self {
        Self {
            substream_id,
            ..*self
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(b"lrplab/rng/v1");
        h.update(self.master_seed.to_le_bytes());
        h.update(self.stream_id.to_le_bytes());
        h.update(self.substream_id.to_le_bytes());
        let digest = h.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        ChaCha8Rng::from_seed(key)
    }
}

/// Keyed hash of a label and integer coordinates into a stream id, e.g.
/// `stream_id("scaling", &[n, replicate])`.
pub fn stream_id(label: &str, parts: &[u64]) -> u64 {
    let mut h = Sha256::new();
    h.update(b"lrplab/stream/v1");
    h.update((label.len() as u64).to_le_bytes());
    h.update(label.as_bytes());
    for p in parts {
        h.update(p.to_le_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}
