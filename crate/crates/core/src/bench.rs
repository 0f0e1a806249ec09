//! Synthetic workloads and wall-clock timing for the benchmark driver.

use std::fmt;
use std::time::{Duration, Instant};

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::paillier::{Ciphertext, PublicKey, SecretKey};
use crate::rng::{seeded, SessionRng};
use crate::sknn::local::LocalCluster;
use crate::sknn::{distance_bits, EncryptedDatabase};
use crate::transport::{ProtocolKind, SessionId};

pub const CSV_HEADER: &str = "protocol,n,m,k,l,K,parallel,seconds";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BenchPoint {
    pub protocol: ProtocolKind,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub l: usize,
    pub key_bits: u32,
    pub parallel: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct BenchRow {
    pub point: BenchPoint,
    pub seconds: f64,
}

impl fmt::Display for BenchRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = &self.point;
        let name = match p.protocol {
            ProtocolKind::Basic => "basic",
            ProtocolKind::Full => "full",
        };
        write!(f, "{name},{},{},{},{},{},{},{:.6}", p.n, p.m, p.k, p.l, p.key_bits, p.parallel, self.seconds)
    }
}

/// Largest per-attribute value for which `m` attributes keep every squared
/// distance at or below `2^l - 2`.
pub fn attribute_bound(m: usize, l: usize) -> Result<u64> {
    if m == 0 || l == 0 || l > 62 {
        return Err(Error::Precondition(format!("no attribute domain for m = {m}, l = {l}")));
    }
    let budget = ((1u64 << l) - 2) / m as u64;
    let hi = budget.isqrt();
    if hi == 0 {
        return Err(Error::Precondition(format!("l = {l} leaves no room for {m} attributes")));
    }
    Ok(hi)
}

/// `n` random rows of `m` attributes in `0..=attribute_bound(m, l)`, and a
/// query drawn from the same domain.
pub fn synthetic_rows<R: RngCore>(n: usize, m: usize, l: usize, rng: &mut R) -> Result<(Vec<Vec<u64>>, Vec<u64>)> {
    let hi = attribute_bound(m, l)?;
    let mut row = || (0..m).map(|_| rng.gen_range(0..=hi)).collect::<Vec<u64>>();
    let rows = (0..n).map(|_| row()).collect();
    Ok((rows, row()))
}

/// Encrypts `rows` with every column a feature column.
pub fn encrypt_rows<R: RngCore + rand::CryptoRng>(
    pk: &PublicKey,
    rows: &[Vec<u64>],
    l: usize,
    rng: &mut R,
) -> Result<EncryptedDatabase> {
    let m = rows.first().map_or(0, Vec::len);
    let records = rows
        .iter()
        .map(|r| r.iter().map(|&v| pk.encrypt_u64(v, rng)).collect::<Result<Vec<Ciphertext>>>())
        .collect::<Result<Vec<_>>>()?;
    EncryptedDatabase::new((0..m).map(|j| format!("a{j}")).collect(), vec![true; m], l, pk.fingerprint(), records)
}

fn bench_data(sk: &SecretKey, point: &BenchPoint, seed: u64) -> Result<(EncryptedDatabase, Vec<u64>)> {
    if sk.public().bits() != point.key_bits {
        return Err(Error::Precondition(format!(
            "point asks for K = {}, key has {} bits",
            point.key_bits,
            sk.public().bits()
        )));
    }
    let mut rng: SessionRng = seeded(seed, b"bench-data");
    let (rows, query) = synthetic_rows(point.n, point.m, point.l, &mut rng)?;
    Ok((encrypt_rows(sk.public(), &rows, point.l, &mut rng)?, query))
}

/// Times one complete query. Key generation and database encryption are
/// excluded.
pub fn run_point(sk: &SecretKey, point: BenchPoint, seed: u64) -> Result<BenchRow> {
    let (db, query) = bench_data(sk, &point, seed)?;
    let cluster = LocalCluster::new(sk, db)?.with_parallel(point.parallel).with_seed(seed);
    let start = Instant::now();
    cluster.query(&query, point.k, point.protocol)?;
    Ok(BenchRow { point, seconds: start.elapsed().as_secs_f64() })
}

/// Times only the per-record SSED and SBD phase of the full protocol.
pub fn time_distance_phase(sk: &SecretKey, point: BenchPoint, seed: u64) -> Result<Duration> {
    let (db, query) = bench_data(sk, &point, seed)?;
    let cluster = LocalCluster::new(sk, db)?.with_parallel(point.parallel).with_seed(seed);
    let mut rng = seeded(seed, b"bench-query");
    let enc_query = query
        .iter()
        .map(|&q| cluster.pk().encrypt_u64(q, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let mut pool = cluster.connect_pool(SessionId::random(&mut rng))?;
    let start = Instant::now();
    distance_bits(&mut pool, cluster.db(), &enc_query)?;
    Ok(start.elapsed())
}

/// Least-squares fit of `y = a + b x`; returns the coefficient of
/// determination.
pub fn linear_r_squared(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let syy: f64 = points.iter().map(|(_, y)| (y - my).powi(2)).sum();
    if syy == 0.0 {
        return 1.0;
    }
    sxy * sxy / (sxx * syy)
}
