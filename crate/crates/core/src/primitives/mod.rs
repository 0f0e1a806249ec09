//! Two-party sub-protocols between C1 (holds ciphertexts) and C2 (holds sk).
//!
//! The C1 side of every primitive is a method on [`C1Session`]; the C2 side
//! lives in [`responder`]. A session is strictly request/response, so one
//! invocation is sequential. Parallel work goes through a [`SessionPool`].

mod sbd;
mod sm;
mod smin;
pub mod responder;

use std::sync::Arc;

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::paillier::{Ciphertext, PublicKey};
use crate::rng::SessionRng;
use crate::transport::{Message, PartyEndpoint};

pub use responder::{C2Responder, DeliveryRegistry, ObservationKind, ObservationLog, Observer};
pub use smin::{tournament_schedule, Functionality, SminChoice};
pub(crate) use smin::{permute, unpermute};

/// Default statistical masking parameter for bit decomposition, in bits.
pub const DEFAULT_KAPPA: u32 = 40;

#[derive(Clone, Copy, Debug)]
pub struct ProtocolConfig {
    /// Statistical security parameter of the SBD masks.
    pub kappa: u32,
    /// Maximum number of products per SM_BATCH round trip.
    pub batch_size: usize,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self { kappa: DEFAULT_KAPPA, batch_size: 4096 }
    }
}

/// Bitwise encryption `[z]`, most significant bit first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncryptedBits(pub Vec<Ciphertext>);

impl EncryptedBits {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[Ciphertext] {
        &self.0
    }

    pub fn encrypt<R: rand::RngCore + rand::CryptoRng>(
        pk: &PublicKey,
        value: u64,
        l: usize,
        rng: &mut R,
    ) -> Result<Self> {
        (0..l)
            .map(|i| pk.encrypt_u64((value >> (l - 1 - i)) & 1, rng))
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

/// `E(u XOR v)` from bit encryptions and `E(u*v)`: `E(u) * E(v) * E(uv)^(N-2)`.
pub fn sxor_bits(pk: &PublicKey, u: &Ciphertext, v: &Ciphertext, uv: &Ciphertext) -> Ciphertext {
    let minus_two = pk.n() - 2u32;
    pk.add(&pk.add(u, v), &pk.scalar_mul(uv, &minus_two))
}

/// Tests whether `2^(l + kappa + ceil(log2 l) + 1) < N`, the bound under
/// which SBD masking never wraps modulo N.
pub fn sbd_mask_fits(pk: &PublicKey, l: usize, kappa: u32) -> bool {
    let log_l = (usize::BITS - l.saturating_sub(1).leading_zeros()) as usize;
    let exp = l + kappa as usize + log_l + 1;
    (BigUint::from(1u32) << exp) < *pk.n()
}

/// C1's side of one session with C2.
pub struct C1Session {
    endpoint: PartyEndpoint,
    pk: Arc<PublicKey>,
    rng: SessionRng,
    config: ProtocolConfig,
}

impl C1Session {
    pub fn new(endpoint: PartyEndpoint, pk: Arc<PublicKey>, rng: SessionRng, config: ProtocolConfig) -> Self {
        Self { endpoint, pk, rng, config }
    }

    pub fn pk(&self) -> &PublicKey {
        &self.pk
    }

    pub fn shared_pk(&self) -> Arc<PublicKey> {
        Arc::clone(&self.pk)
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.config
    }

    pub fn rng(&mut self) -> &mut SessionRng {
        &mut self.rng
    }

    pub fn endpoint(&mut self) -> &mut PartyEndpoint {
        &mut self.endpoint
    }

    pub fn encrypt(&mut self, m: &BigUint) -> Result<Ciphertext> {
        self.pk.encrypt(m, &mut self.rng)
    }

    pub fn random_nonzero(&mut self) -> BigUint {
        self.pk.random_nonzero(&mut self.rng)
    }

    pub fn rerandomize(&mut self, c: &Ciphertext) -> Ciphertext {
        self.pk.rerandomize(c, &mut self.rng)
    }

    /// Sends `msg` and waits for the reply; an ERROR reply becomes [`Error::Remote`].
    pub(crate) fn request(&mut self, msg: &Message) -> Result<Message> {
        self.endpoint.send(msg)?;
        match self.endpoint.recv()? {
            Message::Error { code, text } => Err(Error::Remote { code, text }),
            reply => Ok(reply),
        }
    }
}

fn unexpected(expected: &'static str, got: &Message) -> Error {
    Error::UnexpectedMessage { expected, got: got.name() }
}

/// A set of independent C1 sessions to the same C2.
pub struct SessionPool {
    sessions: Vec<C1Session>,
}

impl SessionPool {
    pub fn new(sessions: Vec<C1Session>) -> Self {
        assert!(!sessions.is_empty(), "a session pool needs at least one session");
        Self { sessions }
    }

    pub fn single(session: C1Session) -> Self {
        Self::new(vec![session])
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The first session; the one bound to the client's session id.
    pub fn primary(&mut self) -> &mut C1Session {
        &mut self.sessions[0]
    }

    pub fn pk(&self) -> &PublicKey {
        self.sessions[0].pk()
    }

    pub fn into_sessions(self) -> Vec<C1Session> {
        self.sessions
    }

    /// Applies `f` to every item, spreading contiguous chunks over the
    /// sessions on scoped threads. Output order matches input order.
    pub fn map<T, U, F>(&mut self, items: &[T], f: F) -> Result<Vec<U>>
    where
        T: Sync,
        U: Send,
        F: Fn(&mut C1Session, &T) -> Result<U> + Sync,
    {
        if self.sessions.len() == 1 || items.len() <= 1 {
            let s = &mut self.sessions[0];
            return items.iter().map(|it| f(s, it)).collect();
        }
        let chunk = items.len().div_ceil(self.sessions.len());
        let f = &f;
        let results: Vec<Result<Vec<U>>> = std::thread::scope(|scope| {
            let handles: Vec<_> = self
                .sessions
                .iter_mut()
                .zip(items.chunks(chunk))
                .map(|(s, part)| scope.spawn(move || part.iter().map(|it| f(s, it)).collect()))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("pool worker panicked"))
                .collect()
        });
        let mut out = Vec::with_capacity(items.len());
        for r in results {
            out.extend(r?);
        }
        Ok(out)
    }

    /// Element-wise SM with the pairs spread over the sessions.
    pub fn sm_batch(&mut self, pairs: &[(Ciphertext, Ciphertext)]) -> Result<Vec<Ciphertext>> {
        let chunk = pairs.len().div_ceil(self.sessions.len()).max(1);
        let chunks: Vec<&[(Ciphertext, Ciphertext)]> = pairs.chunks(chunk).collect();
        Ok(self.map(&chunks, |s, c| s.sm_batch(c))?.into_iter().flatten().collect())
    }

    pub fn sbor_batch(&mut self, pairs: &[(Ciphertext, Ciphertext)]) -> Result<Vec<Ciphertext>> {
        let chunk = pairs.len().div_ceil(self.sessions.len()).max(1);
        let chunks: Vec<&[(Ciphertext, Ciphertext)]> = pairs.chunks(chunk).collect();
        Ok(self.map(&chunks, |s, c| s.sbor_batch(c))?.into_iter().flatten().collect())
    }

    /// Minimum of `n` bit vectors via a stride-doubling SMIN tournament;
    /// the comparisons of one level run in parallel across the pool.
    pub fn smin_n(&mut self, values: &[EncryptedBits]) -> Result<EncryptedBits> {
        let (first, rest) = values
            .split_first()
            .ok_or_else(|| Error::Precondition("SMIN_n needs at least one input".into()))?;
        if rest.iter().any(|v| v.len() != first.len()) {
            return Err(Error::Precondition("SMIN_n inputs differ in bit length".into()));
        }
        if rest.is_empty() {
            let s = self.primary();
            return Ok(EncryptedBits(first.0.iter().map(|c| s.rerandomize(c)).collect()));
        }
        let mut slots: Vec<Option<EncryptedBits>> = values.iter().cloned().map(Some).collect();
        for level in tournament_schedule(values.len()) {
            let pairs: Vec<(EncryptedBits, EncryptedBits)> = level
                .iter()
                .map(|&(a, b)| {
                    let left = slots[a].take().expect("tournament slot populated");
                    let right = slots[b].take().expect("tournament slot populated");
                    (left, right)
                })
                .collect();
            let winners = self.map(&pairs, |s, (u, v)| s.smin(u, v))?;
            for (&(a, _), w) in level.iter().zip(winners) {
                slots[a] = Some(w);
            }
        }
        Ok(slots[0].take().expect("tournament root populated"))
    }
}
