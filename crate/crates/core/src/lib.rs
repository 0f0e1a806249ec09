//! Secure k-nearest-neighbor queries over a Paillier-encrypted database
//! split between two non-colluding clouds.
//!
//! C1 stores the encrypted table and drives every protocol; C2 holds the
//! secret key and only ever decrypts blinded or masked values; Bob sends an
//! encrypted query and unblinds the records it receives.

mod arith;
pub mod bench;
pub mod codec;
pub mod dataset;
pub mod error;
pub mod oracle;
pub mod paillier;
pub mod primitives;
pub mod rng;
pub mod sknn;
pub mod transport;

#[cfg(test)]
mod test_keys;

pub use error::{Error, Result};
