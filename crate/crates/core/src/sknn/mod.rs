//! The two query protocols and the blinded result delivery.
//!
//! Message flow for one query with session id `S`:
//!
//! ```text
//! Bob -> C2   HELLO            (Bob waits on session S)
//! Bob -> C1   QUERY(E(Q), k, protocol)
//! C1 <-> C2   sub-protocol traffic on S (and on extra pool sessions)
//! C1 -> C2    GAMMA(E(t + r))  C2 forwards GAMMA_PRIME(t + r) to Bob, closes S
//! C1 -> Bob   BLINDS(r)        Bob computes t = (t + r) - r mod N
//! ```

mod database;
pub mod local;
mod protocol;

use num_bigint::BigUint;
use rand::{CryptoRng, RngCore};

pub use database::{EncryptedDatabase, DB_FILE_MAGIC};
pub use protocol::{
    c1_handle_query, deliver_results, distance_bits, exclude_winner, reconstruct_value, select_winner_record,
    sknn_basic, sknn_full, sknn_full_with, FullOptions,
};

use crate::error::{Error, Result};
use crate::paillier::{Ciphertext, PublicKey};
use crate::transport::{Message, PartyEndpoint, PlainMatrix, ProtocolKind};

/// An encrypted query as C1 receives it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryJob {
    pub enc_query: Vec<Ciphertext>,
    pub k: usize,
    pub protocol: ProtocolKind,
}

impl QueryJob {
    pub fn to_message(&self) -> Message {
        Message::Query {
            enc_query: self.enc_query.clone(),
            k: self.k as u32,
            protocol: self.protocol,
        }
    }

    pub fn from_message(msg: Message) -> Result<Self> {
        match msg {
            Message::Query { enc_query, k, protocol } => Ok(Self { enc_query, k: k as usize, protocol }),
            other => Err(Error::UnexpectedMessage { expected: "QUERY", got: other.name() }),
        }
    }

    /// Checks the job against the database C1 holds.
    pub fn validate(&self, db: &EncryptedDatabase) -> Result<()> {
        let dims = db.feature_indices().len();
        if self.enc_query.len() != dims {
            return Err(Error::Precondition(format!(
                "query has {} attributes, database has {dims} feature columns",
                self.enc_query.len()
            )));
        }
        if self.k == 0 || self.k > db.n() {
            return Err(Error::Precondition(format!("k = {} must be in 1..={}", self.k, db.n())));
        }
        Ok(())
    }
}

/// Bob's first step: encrypt `query` attribute-wise.
pub fn bob_encrypt_query<R: RngCore + CryptoRng>(
    pk: &PublicKey,
    query: &[u64],
    k: usize,
    protocol: ProtocolKind,
    rng: &mut R,
) -> Result<QueryJob> {
    if k == 0 {
        return Err(Error::Precondition("k must be at least 1".into()));
    }
    if query.is_empty() {
        return Err(Error::Precondition("empty query".into()));
    }
    let enc_query = query
        .iter()
        .map(|&q| pk.encrypt_u64(q, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(QueryJob { enc_query, k, protocol })
}

/// `t = gamma' - r mod N`, cell by cell.
pub fn bob_unblind(pk: &PublicKey, gamma_prime: &PlainMatrix, blinds: &PlainMatrix) -> Result<PlainMatrix> {
    let n = pk.n();
    if gamma_prime.len() != blinds.len()
        || gamma_prime.iter().zip(blinds).any(|(g, r)| g.len() != r.len())
    {
        return Err(Error::ProtocolFault("blinded records and blinds differ in shape".into()));
    }
    Ok(gamma_prime
        .iter()
        .zip(blinds)
        .map(|(g, r)| g.iter().zip(r).map(|(g, r)| (g + n - (r % n)) % n).collect())
        .collect())
}

/// Bob's side of a query over already-connected endpoints: sends the job
/// to C1, then collects BLINDS from C1 and GAMMA_PRIME from C2.
pub fn bob_run_query(
    pk: &PublicKey,
    c1: &mut PartyEndpoint,
    c2: &mut PartyEndpoint,
    job: &QueryJob,
) -> Result<Vec<Vec<BigUint>>> {
    c1.send(&job.to_message())?;
    let blinds = match c1.recv()? {
        Message::Blinds(b) => b,
        Message::Error { code, text } => return Err(Error::Remote { code, text }),
        other => return Err(Error::UnexpectedMessage { expected: "BLINDS", got: other.name() }),
    };
    let gamma_prime = match c2.recv()? {
        Message::GammaPrime(g) => g,
        Message::Error { code, text } => return Err(Error::Remote { code, text }),
        other => return Err(Error::UnexpectedMessage { expected: "GAMMA_PRIME", got: other.name() }),
    };
    bob_unblind(pk, &gamma_prime, &blinds)
}

/// Converts plaintext records to integers, failing on values beyond `u64`.
pub fn records_to_u64(records: &[Vec<BigUint>]) -> Result<Vec<Vec<u64>>> {
    records
        .iter()
        .map(|r| {
            r.iter()
                .map(|v| u64::try_from(v).map_err(|_| Error::ProtocolFault(format!("record value {v} out of range"))))
                .collect()
        })
        .collect()
}
