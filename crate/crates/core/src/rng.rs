//! Randomness sources for protocol sessions.
//!
//! Every session owns its own ChaCha20 stream. In test builds the stream
//! can be pinned through the `SKNN_SEED` environment variable; the seed is
//! mixed with a per-session label so that distinct sessions never share a
//! stream. The `release-secure` feature disables the override entirely.

use rand::rngs::OsRng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub type SessionRng = ChaCha20Rng;

pub const SEED_ENV: &str = "SKNN_SEED";

pub fn fixed_seed() -> Option<u64> {
    if cfg!(feature = "release-secure") {
        return None;
    }
    std::env::var(SEED_ENV).ok()?.trim().parse().ok()
}

/// Fresh session stream: OS entropy, or the pinned seed mixed with `label`.
pub fn session_rng(label: &[u8]) -> SessionRng {
    match fixed_seed() {
        Some(seed) => seeded(seed, label),
        None => ChaCha20Rng::from_rng(OsRng).expect("OS randomness unavailable"),
    }
}

pub fn seeded(seed: u64, label: &[u8]) -> SessionRng {
    let mut h = Sha256::new();
    h.update(seed.to_be_bytes());
    h.update(label);
    ChaCha20Rng::from_seed(h.finalize().into())
}
