#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::{Arc, OnceLock};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sknn_core::dataset::{encrypt_table, load_csv, PlainTable, Schema};
use sknn_core::oracle::{is_valid_answer, plain_knn};
use sknn_core::paillier::{keygen, PublicKey, SecretKey};
use sknn_core::primitives::{ObservationKind, ObservationLog};
use sknn_core::sknn::local::LocalCluster;
use sknn_core::sknn::{records_to_u64, EncryptedDatabase};
use sknn_core::transport::ProtocolKind;

pub const HEART_QUERY: [u64; 9] = [58, 1, 4, 133, 196, 1, 2, 1, 6];

pub fn keys() -> &'static (PublicKey, SecretKey) {
    static KEYS: OnceLock<(PublicKey, SecretKey)> = OnceLock::new();
    KEYS.get_or_init(|| keygen(512, &mut ChaCha20Rng::seed_from_u64(0xbeef)).unwrap())
}

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn heart() -> PlainTable {
    let schema = Schema::read_file(&data_dir().join("heart.schema")).unwrap();
    load_csv(&data_dir().join("heart.csv"), &schema).unwrap()
}

pub fn encrypt(table: &PlainTable, seed: u64) -> EncryptedDatabase {
    encrypt_table(&keys().0, table, &mut ChaCha20Rng::seed_from_u64(seed)).unwrap()
}

/// A table of `n` rows and `m` attributes drawn from `0..16`, every column a
/// feature, with its schema declaring exactly that domain.
pub fn random_table<R: Rng>(n: usize, m: usize, rng: &mut R) -> PlainTable {
    let text: String = (0..m).map(|j| format!("a{j}: 0..15, feature: yes\n")).collect();
    let schema = Schema::parse(&text).unwrap();
    let rows = (0..n).map(|_| (0..m).map(|_| rng.gen_range(0..16)).collect()).collect();
    PlainTable { schema, rows }
}

pub fn cluster(table: &PlainTable, seed: u64) -> LocalCluster {
    LocalCluster::new(&keys().1, encrypt(table, seed)).unwrap().with_seed(seed)
}

pub fn run(cluster: &LocalCluster, query: &[u64], k: usize, protocol: ProtocolKind) -> Vec<Vec<u64>> {
    records_to_u64(&cluster.query(query, k, protocol).unwrap()).unwrap()
}

/// Outcome of one random oracle comparison.
pub struct Trial {
    pub valid: bool,
    pub ordered: bool,
}

pub fn oracle_trial(seed: u64, protocol: ProtocolKind) -> Trial {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=40);
    let m = rng.gen_range(1..=4);
    let k = rng.gen_range(1..=5.min(n));
    let table = random_table(n, m, &mut rng);
    let query: Vec<u64> = (0..m).map(|_| rng.gen_range(0..16)).collect();
    let c = cluster(&table, seed);
    let got = run(&c, &query, k, protocol);
    let features = table.schema.feature_indices();
    let dists: Vec<u128> = got
        .iter()
        .map(|r| sknn_core::oracle::squared_distance(&sknn_core::oracle::project(r, &features), &query))
        .collect();
    Trial {
        valid: got.len() == k && is_valid_answer(&table.rows, &features, &query, &got),
        ordered: dists.windows(2).all(|w| w[0] <= w[1]),
    }
}

/// Values C2 saw that coincide with a row index or a true distance,
/// ignoring the 0/1 indicator entries that SMIN and the winner selection
/// reveal by construction.
pub fn leaked_values(log: &ObservationLog, table: &PlainTable, query: &[u64]) -> Vec<(ObservationKind, BigUint)> {
    let features = table.schema.feature_indices();
    let n = table.rows.len();
    let mut sensitive: Vec<BigUint> = (0..n as u64).map(BigUint::from).collect();
    sensitive.extend(plain_knn(&table.rows, &features, query, n).distances.into_iter().map(BigUint::from));
    let structural = [BigUint::from(0u32), BigUint::from(1u32)];
    log.all()
        .into_iter()
        .filter(|(kind, v)| {
            let indicator = matches!(kind, ObservationKind::SminL | ObservationKind::Beta) && structural.contains(v);
            !indicator && sensitive.contains(v)
        })
        .collect()
}

pub fn observed_cluster(table: &PlainTable, seed: u64) -> (LocalCluster, Arc<ObservationLog>) {
    let log = Arc::new(ObservationLog::default());
    let c = cluster(table, seed).with_observer(log.clone());
    (c, log)
}

/// A C1 session served by a C2 thread that records every plaintext it sees.
pub fn session(seed: u64) -> (sknn_core::primitives::C1Session, Arc<ObservationLog>) {
    use sknn_core::primitives::{C1Session, C2Responder, ProtocolConfig};
    use sknn_core::transport::{in_process_pair, Role, SessionId};
    let (pk, sk) = keys();
    let id = SessionId::random(&mut ChaCha20Rng::seed_from_u64(seed));
    let (c1, c2) = in_process_pair(id, Role::C1, Role::C2, &pk.fingerprint()).unwrap();
    let log = Arc::new(ObservationLog::default());
    let responder = C2Responder::new(Arc::new(sk.clone())).with_observer(log.clone());
    std::thread::spawn(move || responder.serve(c2));
    let rng = sknn_core::rng::seeded(seed, b"c1-acceptance");
    (C1Session::new(c1, Arc::new(pk.clone()), rng, ProtocolConfig::default()), log)
}

pub fn dec(c: &sknn_core::paillier::Ciphertext) -> u64 {
    u64::try_from(keys().1.decrypt(c).unwrap()).unwrap()
}

pub fn dec_bits(bits: &sknn_core::primitives::EncryptedBits) -> Vec<u8> {
    bits.bits().iter().map(|c| dec(c) as u8).collect()
}

pub fn enc_bits(v: u64, l: usize, rng: &mut ChaCha20Rng) -> sknn_core::primitives::EncryptedBits {
    sknn_core::primitives::EncryptedBits::encrypt(&keys().0, v, l, rng).unwrap()
}
