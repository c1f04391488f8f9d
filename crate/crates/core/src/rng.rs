//! Seeded, splittable pseudorandom streams.
//!
//! Every party and every protocol session draws from its own stream. A child
//! stream depends only on the parent's seed and the label path, never on how
//! much of the parent has been consumed, so sessions can run in any order (or
//! concurrently) and still reproduce the same transcript.

use rand::{CryptoRng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: [u8; 32],
    inner: ChaCha20Rng,
}

impl RngStream {
    pub fn from_seed(seed: u64) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(b"fedforest/root");
        hasher.update(seed.to_le_bytes());
        Self::from_bytes(hasher.finalize().into())
    }

    fn from_bytes(seed: [u8; 32]) -> Self {
        Self {
            seed,
            inner: ChaCha20Rng::from_seed(seed),
        }
    }

    /// Child stream for `label`.
    pub fn fork(&self, label: &str) -> Self {
        self.derive(label.as_bytes(), None)
    }

    /// Child stream for `label` and a numeric index, e.g. one per tree or sample.
    pub fn fork_indexed(&self, label: &str, index: u64) -> Self {
        self.derive(label.as_bytes(), Some(index))
    }

    fn derive(&self, label: &[u8], index: Option<u64>) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(self.seed);
        hasher.update((label.len() as u64).to_le_bytes());
        hasher.update(label);
        if let Some(index) = index {
            hasher.update([1u8]);
            hasher.update(index.to_le_bytes());
        } else {
            hasher.update([0u8]);
        }
        Self::from_bytes(hasher.finalize().into())
    }

    /// A 64-bit value identifying this stream; used as a session nonce.
    pub fn fingerprint(&self) -> u64 {
        u64::from_le_bytes(self.seed[..8].try_into().expect("8 bytes"))
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

impl CryptoRng for RngStream {}
