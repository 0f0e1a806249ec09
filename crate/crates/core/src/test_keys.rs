use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::paillier::{keygen, PublicKey, SecretKey};

/// One 512-bit keypair shared by every unit test in the crate.
pub fn keypair_512() -> &'static (PublicKey, SecretKey) {
    static KEYS: OnceLock<(PublicKey, SecretKey)> = OnceLock::new();
    KEYS.get_or_init(|| keygen(512, &mut ChaCha20Rng::seed_from_u64(0x5eed)).unwrap())
}
