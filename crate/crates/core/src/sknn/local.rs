//! All three parties in one process, connected by in-memory links. Used by
//! tests and the benchmark driver; the daemons use the same functions over
//! TCP.

use std::sync::Arc;

use num_bigint::BigUint;

use super::{bob_encrypt_query, bob_run_query, c1_handle_query, EncryptedDatabase};
use crate::error::{Error, Result};
use crate::paillier::{PublicKey, SecretKey};
use crate::primitives::{C1Session, C2Responder, Observer, ProtocolConfig, SessionPool};
use crate::rng::{seeded, session_rng, SessionRng};
use crate::transport::{in_process_pair, ProtocolKind, Role, SessionId};

pub struct LocalCluster {
    pk: Arc<PublicKey>,
    responder: C2Responder,
    db: Arc<EncryptedDatabase>,
    parallel: usize,
    config: ProtocolConfig,
    seed: Option<u64>,
}

impl LocalCluster {
    pub fn new(sk: &SecretKey, db: EncryptedDatabase) -> Result<Self> {
        db.check_key(sk.public())?;
        Ok(Self {
            pk: Arc::new(sk.public().clone()),
            responder: C2Responder::new(Arc::new(sk.clone())),
            db: Arc::new(db),
            parallel: 1,
            config: ProtocolConfig::default(),
            seed: None,
        })
    }

    /// Number of C1-C2 sessions used for the parallel phases.
    pub fn with_parallel(mut self, parallel: usize) -> Self {
        self.parallel = parallel.max(1);
        self
    }

    pub fn with_observer(mut self, observer: Arc<dyn Observer>) -> Self {
        self.responder = self.responder.with_observer(observer);
        self
    }

    pub fn with_config(mut self, config: ProtocolConfig) -> Self {
        self.config = config;
        self
    }

    /// Derives all C1 and Bob randomness from `seed`.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn pk(&self) -> &PublicKey {
        &self.pk
    }

    pub fn db(&self) -> &EncryptedDatabase {
        &self.db
    }

    fn rng(&self, label: &[u8]) -> SessionRng {
        match self.seed {
            Some(seed) => seeded(seed, label),
            None => session_rng(label),
        }
    }

    /// A pool of `parallel` C1 sessions, each served by its own C2 thread.
    /// The first session carries `id`.
    pub fn connect_pool(&self, id: SessionId) -> Result<SessionPool> {
        let fp = self.pk.fingerprint();
        let mut sessions = Vec::with_capacity(self.parallel);
        for i in 0..self.parallel {
            let sid = id.derive(i);
            let (c1, c2) = in_process_pair(sid, Role::C1, Role::C2, &fp)?;
            let responder = self.responder.clone();
            std::thread::spawn(move || responder.serve(c2));
            let mut label = b"c1".to_vec();
            label.extend_from_slice(&sid.0);
            sessions.push(C1Session::new(c1, Arc::clone(&self.pk), self.rng(&label), self.config));
        }
        Ok(SessionPool::new(sessions))
    }

    /// Runs a complete query as Bob and returns the plaintext records.
    pub fn query(&self, query: &[u64], k: usize, protocol: ProtocolKind) -> Result<Vec<Vec<BigUint>>> {
        let mut bob_rng = self.rng(b"bob");
        let id = SessionId::random(&mut bob_rng);
        let fp = self.pk.fingerprint();
        let job = bob_encrypt_query(&self.pk, query, k, protocol, &mut bob_rng)?;

        let (mut bob_c2, c2_bob) = in_process_pair(id, Role::Bob, Role::C2, &fp)?;
        self.responder.handle_connection(c2_bob)?;
        let (mut bob_c1, mut c1_bob) = in_process_pair(id, Role::Bob, Role::C1, &fp)?;

        let mut pool = self.connect_pool(id)?;
        let db = Arc::clone(&self.db);
        let c1 = std::thread::spawn(move || c1_handle_query(&mut c1_bob, &mut pool, &db));
        let result = bob_run_query(&self.pk, &mut bob_c1, &mut bob_c2, &job);
        let c1_result = c1.join().map_err(|_| Error::ProtocolFault("C1 thread panicked".into()))?;
        let records = result?;
        c1_result?;
        Ok(records)
    }
}
