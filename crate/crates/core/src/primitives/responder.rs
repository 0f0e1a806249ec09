//! C2: the key holder. Answers masked decryption requests from C1 and
//! forwards blinded results to Bob.

use std::collections::HashMap;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use log::{debug, warn};
use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::paillier::{Ciphertext, PublicKey, SecretKey};
use crate::rng::{session_rng, SessionRng};
use crate::transport::{
    Message, PartyEndpoint, Role, SessionId, TransportError, ERR_DECRYPT, ERR_FAULT, ERR_NO_RECIPIENT,
    ERR_UNEXPECTED,
};

/// Where a plaintext seen by C2 came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ObservationKind {
    /// A blinded SM operand `a + r_a` or `b + r_b`.
    SmOperand,
    /// The blinded product `(a + r_a)(b + r_b)`.
    SmProduct,
    /// A masked SBD value `x + r`.
    SbdMasked,
    /// A decrypted `L'` entry of SMIN.
    SminL,
    /// A decrypted `beta'` entry.
    Beta,
    /// A squared distance from the basic protocol.
    Distance,
    /// A blinded result attribute.
    Blinded,
}

/// Test instrumentation hook: sees every plaintext C2 decrypts.
pub trait Observer: Send + Sync {
    fn observe(&self, kind: ObservationKind, values: &[BigUint]);
}

#[derive(Default)]
pub struct ObservationLog {
    entries: Mutex<Vec<(ObservationKind, BigUint)>>,
}

impl ObservationLog {
    pub fn values_of(&self, kind: ObservationKind) -> Vec<BigUint> {
        self.entries
            .lock()
            .unwrap()
            .iter()
            .filter(|(k, _)| *k == kind)
            .map(|(_, v)| v.clone())
            .collect()
    }

    pub fn all(&self) -> Vec<(ObservationKind, BigUint)> {
        self.entries.lock().unwrap().clone()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        self.entries.lock().unwrap().clear();
    }
}

impl Observer for ObservationLog {
    fn observe(&self, kind: ObservationKind, values: &[BigUint]) {
        self.entries
            .lock()
            .unwrap()
            .extend(values.iter().map(|v| (kind, v.clone())));
    }
}

/// Bob endpoints waiting for their GAMMA_PRIME, keyed by query session.
#[derive(Default)]
pub struct DeliveryRegistry {
    waiting: Mutex<HashMap<SessionId, PartyEndpoint>>,
    ready: Condvar,
}

impl DeliveryRegistry {
    pub fn register(&self, endpoint: PartyEndpoint) {
        self.waiting.lock().unwrap().insert(endpoint.session_id(), endpoint);
        self.ready.notify_all();
    }

    /// Removes and returns Bob's endpoint for `id`, waiting up to `timeout`.
    pub fn take(&self, id: SessionId, timeout: Duration) -> Option<PartyEndpoint> {
        let deadline = Instant::now() + timeout;
        let mut map = self.waiting.lock().unwrap();
        loop {
            if let Some(ep) = map.remove(&id) {
                return Some(ep);
            }
            let now = Instant::now();
            if now >= deadline {
                return None;
            }
            map = self.ready.wait_timeout(map, deadline - now).unwrap().0;
        }
    }
}

/// C2's request handler. Stateless across requests; one instance can serve
/// any number of sessions concurrently.
#[derive(Clone)]
pub struct C2Responder {
    sk: Arc<SecretKey>,
    observer: Option<Arc<dyn Observer>>,
    deliveries: Arc<DeliveryRegistry>,
    delivery_timeout: Duration,
    log_plaintext: bool,
}

/// Terminates the session with an ERROR frame to C1.
struct Abort {
    code: u32,
    text: String,
}

impl Abort {
    fn new(code: u32, text: impl Into<String>) -> Self {
        Self { code, text: text.into() }
    }
}

impl From<Error> for Abort {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidCiphertext => Abort::new(ERR_DECRYPT, "ciphertext failed to decrypt"),
            other => Abort::new(ERR_FAULT, other.to_string()),
        }
    }
}

enum Step {
    Reply(Message),
    /// The query is finished; close the session.
    Done,
}

impl C2Responder {
    pub fn new(sk: Arc<SecretKey>) -> Self {
        Self {
            sk,
            observer: None,
            deliveries: Arc::new(DeliveryRegistry::default()),
            delivery_timeout: Duration::from_secs(60),
            log_plaintext: false,
        }
    }

    pub fn with_observer(mut self, observer: Arc<dyn Observer>) -> Self {
        self.observer = Some(observer);
        self
    }

    /// Include decrypted values in debug logs. Off by default.
    pub fn with_log_plaintext(mut self, on: bool) -> Self {
        self.log_plaintext = on;
        self
    }

    pub fn with_deliveries(mut self, registry: Arc<DeliveryRegistry>) -> Self {
        self.deliveries = registry;
        self
    }

    pub fn with_delivery_timeout(mut self, timeout: Duration) -> Self {
        self.delivery_timeout = timeout;
        self
    }

    pub fn deliveries(&self) -> Arc<DeliveryRegistry> {
        Arc::clone(&self.deliveries)
    }

    pub fn pk(&self) -> &PublicKey {
        self.sk.public()
    }

    /// Routes an accepted connection: Bob's are parked for delivery, C1's
    /// are served until they close.
    pub fn handle_connection(&self, endpoint: PartyEndpoint) -> Result<()> {
        if endpoint.peer_role() == Some(Role::Bob) {
            debug!("session {}: Bob waiting for delivery", endpoint.session_id());
            self.deliveries.register(endpoint);
            return Ok(());
        }
        self.serve(endpoint)
    }

    /// Answers requests on `endpoint` until C1 closes it. A bad request is
    /// answered with ERROR and ends the session.
    pub fn serve(&self, mut endpoint: PartyEndpoint) -> Result<()> {
        let sid = endpoint.session_id();
        let mut label = b"c2".to_vec();
        label.extend_from_slice(&sid.0);
        let mut rng = session_rng(&label);
        loop {
            let msg = match endpoint.recv() {
                Ok(m) => m,
                Err(TransportError::Closed) => return Ok(()),
                Err(e) => {
                    warn!("session {sid}: {e}");
                    let _ = endpoint.send(&Message::Error { code: ERR_UNEXPECTED, text: e.to_string() });
                    return Err(e.into());
                }
            };
            debug!("session {sid}: {}", msg.name());
            match self.step(sid, msg, &mut rng) {
                Ok(Step::Reply(reply)) => endpoint.send(&reply)?,
                Ok(Step::Done) => return Ok(()),
                Err(abort) => {
                    warn!("session {sid}: aborting: {}", abort.text);
                    let _ = endpoint.send(&Message::Error { code: abort.code, text: abort.text.clone() });
                    return Err(Error::ProtocolFault(abort.text));
                }
            }
        }
    }

    fn observe(&self, kind: ObservationKind, values: &[BigUint]) {
        if self.log_plaintext {
            debug!("{kind:?}: {values:?}");
        }
        if let Some(o) = &self.observer {
            o.observe(kind, values);
        }
    }

    fn decrypt_all(&self, cs: &[Ciphertext]) -> Result<Vec<BigUint>> {
        cs.iter().map(|c| self.sk.decrypt(c)).collect()
    }

    fn step(&self, sid: SessionId, msg: Message, rng: &mut SessionRng) -> Result<Step, Abort> {
        let pk = self.sk.public();
        let reply = match msg {
            Message::SmReq { a, b } => Message::SmResp(self.product(&a, &b, rng)?),
            Message::SmBatchReq(pairs) => Message::SmBatchResp(
                pairs
                    .iter()
                    .map(|(a, b)| self.product(a, b, rng))
                    .collect::<Result<_>>()?,
            ),
            Message::SbdLsbReq(y) => {
                let y = self.sk.decrypt(&y)?;
                self.observe(ObservationKind::SbdMasked, std::slice::from_ref(&y));
                let bit = u64::from(y.is_odd());
                Message::SbdLsbResp(self.sk.encrypt_u64(bit, rng)?)
            }
            Message::SminReq { gamma, l } => {
                if gamma.len() != l.len() {
                    return Err(Abort::new(ERR_FAULT, "SMIN vectors differ in length"));
                }
                let m = self.decrypt_all(&l)?;
                self.observe(ObservationKind::SminL, &m);
                let ones = m.iter().filter(|x| x.is_one()).count();
                if ones > 1 {
                    return Err(Abort::new(ERR_FAULT, format!("SMIN: {ones} entries decrypt to 1")));
                }
                let alpha = ones as u64;
                let exponent = BigUint::from(alpha);
                // Re-randomized so that the alpha = 0 case is not the trivial ciphertext 1.
                let m_prime = gamma
                    .iter()
                    .map(|g| self.sk.rerandomize(&pk.scalar_mul(g, &exponent), rng))
                    .collect();
                Message::SminResp { m: m_prime, alpha: self.sk.encrypt_u64(alpha, rng)? }
            }
            Message::Beta(beta) => {
                let plain = self.decrypt_all(&beta)?;
                self.observe(ObservationKind::Beta, &plain);
                let zeros: Vec<usize> = (0..plain.len()).filter(|&i| plain[i].is_zero()).collect();
                if zeros.is_empty() {
                    return Err(Abort::new(ERR_FAULT, "no zero among the permuted differences"));
                }
                let pick = zeros[rng.gen_range(0..zeros.len())];
                let u = (0..plain.len())
                    .map(|i| self.sk.encrypt_u64(u64::from(i == pick), rng))
                    .collect::<Result<_>>()?;
                Message::UVec(u)
            }
            Message::DistList { k, entries } => {
                let k = k as usize;
                if k == 0 || k > entries.len() {
                    return Err(Abort::new(ERR_FAULT, format!("k = {k} with {} distances", entries.len())));
                }
                let mut plain = Vec::with_capacity(entries.len());
                for (idx, c) in &entries {
                    plain.push((self.sk.decrypt(c)?, *idx));
                }
                let distances: Vec<BigUint> = plain.iter().map(|(d, _)| d.clone()).collect();
                self.observe(ObservationKind::Distance, &distances);
                plain.sort();
                Message::IndexList(plain.iter().take(k).map(|(_, i)| *i).collect())
            }
            Message::Gamma(matrix) => {
                let mut blinded = Vec::with_capacity(matrix.len());
                for row in &matrix {
                    let plain = self.decrypt_all(row)?;
                    self.observe(ObservationKind::Blinded, &plain);
                    blinded.push(plain);
                }
                let mut bob = self
                    .deliveries
                    .take(sid, self.delivery_timeout)
                    .ok_or_else(|| Abort::new(ERR_NO_RECIPIENT, format!("no recipient for session {sid}")))?;
                bob.send(&Message::GammaPrime(blinded))
                    .map_err(|e| Abort::new(ERR_NO_RECIPIENT, e.to_string()))?;
                return Ok(Step::Done);
            }
            other => return Err(Abort::new(ERR_UNEXPECTED, format!("C2 does not handle {}", other.name()))),
        };
        Ok(Step::Reply(reply))
    }

    fn product(&self, a: &Ciphertext, b: &Ciphertext, rng: &mut SessionRng) -> Result<Ciphertext> {
        let ha = self.sk.decrypt(a)?;
        let hb = self.sk.decrypt(b)?;
        let h = (&ha * &hb) % self.sk.public().n();
        self.observe(ObservationKind::SmOperand, &[ha, hb]);
        self.observe(ObservationKind::SmProduct, std::slice::from_ref(&h));
        self.sk.encrypt(&h, rng)
    }
}
