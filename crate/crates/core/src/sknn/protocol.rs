//! C1-side orchestration of the basic and the access-pattern-hiding
//! protocols.

use num_bigint::RandBigInt;
use rand::seq::SliceRandom;

use super::{EncryptedDatabase, QueryJob};
use crate::error::{Error, Result};
use crate::paillier::{Ciphertext, PublicKey};
use crate::primitives::{permute, unpermute, C1Session, EncryptedBits, SessionPool};
use crate::transport::{Message, PartyEndpoint, PlainMatrix, ProtocolKind, TransportError, ERR_FAULT, ERR_PRECONDITION};

/// Tuning for the full protocol.
#[derive(Clone, Copy, Debug, Default)]
pub struct FullOptions {
    /// Also run the exclusion step after the final iteration. It has no
    /// effect on the answer; tests use it to inspect the final state.
    pub exclude_after_last: bool,
}

/// `E(sum bits_g * 2^(l-g-1))` by Horner's rule: square and add the next bit.
pub fn reconstruct_value(pk: &PublicKey, bits: &EncryptedBits) -> Ciphertext {
    let (first, rest) = bits.bits().split_first().expect("bit vector is non-empty");
    rest.iter()
        .fold(first.clone(), |acc, b| pk.add(&pk.add(&acc, &acc), b))
}

/// SSED then SBD for every record, spread over the pool. Returns `E(d_i)`
/// alongside `[d_i]`.
pub fn distance_bits(
    pool: &mut SessionPool,
    db: &EncryptedDatabase,
    enc_query: &[Ciphertext],
) -> Result<Vec<(Ciphertext, EncryptedBits)>> {
    let rows: Vec<usize> = (0..db.n()).collect();
    let l = db.l();
    pool.map(&rows, |s, &i| {
        let d = s.ssed(enc_query, &db.feature_row(i))?;
        let bits = s.sbd(&d, l)?;
        Ok((d, bits))
    })
}

/// Basic protocol: C2 sees the distances and returns the `k` nearest
/// indices, which C1 then learns.
pub fn sknn_basic(pool: &mut SessionPool, db: &EncryptedDatabase, job: &QueryJob) -> Result<Vec<Vec<Ciphertext>>> {
    job.validate(db)?;
    let rows: Vec<usize> = (0..db.n()).collect();
    let dists = pool.map(&rows, |s, &i| s.ssed(&job.enc_query, &db.feature_row(i)))?;
    let entries = dists.into_iter().enumerate().map(|(i, d)| (i as u32, d)).collect();
    let reply = pool.primary().request(&Message::DistList { k: job.k as u32, entries })?;
    let delta = match reply {
        Message::IndexList(d) => d,
        other => return Err(Error::UnexpectedMessage { expected: "INDEX_LIST", got: other.name() }),
    };
    if delta.len() != job.k || delta.iter().any(|&i| i as usize >= db.n()) {
        return Err(Error::ProtocolFault(format!("bad index list {delta:?}")));
    }
    Ok(delta.iter().map(|&i| db.row(i as usize).to_vec()).collect())
}

/// Full protocol: `k` rounds of oblivious minimum selection. Winners are
/// returned in selection order.
pub fn sknn_full(pool: &mut SessionPool, db: &EncryptedDatabase, job: &QueryJob) -> Result<Vec<Vec<Ciphertext>>> {
    sknn_full_with(pool, db, job, FullOptions::default()).map(|(w, _)| w)
}

/// As [`sknn_full`], also returning the final distance bit vectors.
pub fn sknn_full_with(
    pool: &mut SessionPool,
    db: &EncryptedDatabase,
    job: &QueryJob,
    options: FullOptions,
) -> Result<(Vec<Vec<Ciphertext>>, Vec<EncryptedBits>)> {
    job.validate(db)?;
    let pk = pool.primary().shared_pk();
    let (mut dist, mut bits): (Vec<Ciphertext>, Vec<EncryptedBits>) =
        distance_bits(pool, db, &job.enc_query)?.into_iter().unzip();
    let mut winners = Vec::with_capacity(job.k);
    for s in 0..job.k {
        let dmin_bits = pool.smin_n(&bits)?;
        let dmin = reconstruct_value(&pk, &dmin_bits);
        if s > 0 {
            // Any row may have been excluded, so all distances are rebuilt.
            dist = bits.iter().map(|b| reconstruct_value(&pk, b)).collect();
        }
        let v = winner_indicator(pool.primary(), &dmin, &dist)?;
        winners.push(select_winner_record(pool, &v, db)?);
        if s + 1 < job.k || options.exclude_after_last {
            bits = exclude_winner(pool, &v, &bits)?;
        }
    }
    Ok((winners, bits))
}

/// `V` with `V_i = E(1)` for one row at the minimum distance and `E(0)`
/// elsewhere. C2 only sees `r_i (d_min - d_i)` under a secret permutation.
fn winner_indicator(s: &mut C1Session, dmin: &Ciphertext, dist: &[Ciphertext]) -> Result<Vec<Ciphertext>> {
    let pk = s.shared_pk();
    let tau: Vec<Ciphertext> = dist
        .iter()
        .map(|d| {
            let r = s.random_nonzero();
            pk.scalar_mul(&pk.sub(dmin, d), &r)
        })
        .collect();
    let mut pi: Vec<usize> = (0..dist.len()).collect();
    pi.shuffle(s.rng());
    let u = match s.request(&Message::Beta(permute(&pi, &tau)))? {
        Message::UVec(u) => u,
        other => return Err(Error::UnexpectedMessage { expected: "U_VEC", got: other.name() }),
    };
    if u.len() != dist.len() {
        return Err(Error::ProtocolFault(format!("U has {} entries for {} rows", u.len(), dist.len())));
    }
    Ok(unpermute(&pi, &u))
}

/// `E(t'_j) = prod_i SM(V_i, E(t_ij))`: the record picked out by the
/// encrypted basis vector `V`.
pub fn select_winner_record(pool: &mut SessionPool, v: &[Ciphertext], db: &EncryptedDatabase) -> Result<Vec<Ciphertext>> {
    if v.len() != db.n() {
        return Err(Error::Precondition(format!("selector has {} entries for {} rows", v.len(), db.n())));
    }
    let m = db.m();
    let pairs: Vec<(Ciphertext, Ciphertext)> = db
        .records()
        .iter()
        .zip(v)
        .flat_map(|(row, vi)| row.iter().map(move |t| (vi.clone(), t.clone())))
        .collect();
    let products = pool.sm_batch(&pairs)?;
    let pk = pool.pk();
    let mut out: Vec<Ciphertext> = products[..m].to_vec();
    for row in products[m..].chunks(m) {
        for (acc, p) in out.iter_mut().zip(row) {
            *acc = pk.add(acc, p);
        }
    }
    Ok(out)
}

/// Sets every bit of the selected row to 1 via `SBOR(V_i, d_ig)`; other rows
/// keep their value under fresh ciphertexts.
pub fn exclude_winner(pool: &mut SessionPool, v: &[Ciphertext], bits: &[EncryptedBits]) -> Result<Vec<EncryptedBits>> {
    if v.len() != bits.len() {
        return Err(Error::Precondition(format!("selector has {} entries for {} rows", v.len(), bits.len())));
    }
    let pairs: Vec<(Ciphertext, Ciphertext)> = v
        .iter()
        .zip(bits)
        .flat_map(|(vi, b)| b.bits().iter().map(move |c| (vi.clone(), c.clone())))
        .collect();
    let ored = pool.sbor_batch(&pairs)?;
    let mut out = Vec::with_capacity(bits.len());
    let mut it = ored.into_iter();
    for b in bits {
        out.push(EncryptedBits(it.by_ref().take(b.len()).collect()));
    }
    Ok(out)
}

/// Blinds the winners, sends GAMMA for C2 to forward to Bob, and returns
/// the blinds that Bob needs.
pub fn deliver_results(s: &mut C1Session, winners: &[Vec<Ciphertext>]) -> Result<PlainMatrix> {
    let pk = s.shared_pk();
    let mut blinds = Vec::with_capacity(winners.len());
    let mut gamma = Vec::with_capacity(winners.len());
    for row in winners {
        let r: Vec<_> = row.iter().map(|_| s.rng().gen_biguint_below(pk.n())).collect();
        let g = row
            .iter()
            .zip(&r)
            .map(|(t, r)| Ok(pk.add(t, &s.encrypt(r)?)))
            .collect::<Result<Vec<_>>>()?;
        blinds.push(r);
        gamma.push(g);
    }
    let ep = s.endpoint();
    ep.send(&Message::Gamma(gamma))?;
    // C2 closes the session once GAMMA_PRIME is on its way to Bob.
    match ep.recv() {
        Err(TransportError::Closed) => Ok(blinds),
        Ok(Message::Error { code, text }) => Err(Error::Remote { code, text }),
        Ok(other) => Err(Error::UnexpectedMessage { expected: "session close", got: other.name() }),
        Err(e) => Err(e.into()),
    }
}

/// Runs one query end to end on C1: reads QUERY from Bob, executes the
/// requested protocol with C2 through `pool`, delivers, and sends BLINDS.
/// Failures are reported to Bob as ERROR before being returned.
pub fn c1_handle_query(bob: &mut PartyEndpoint, pool: &mut SessionPool, db: &EncryptedDatabase) -> Result<()> {
    if pool.primary().endpoint().session_id() != bob.session_id() {
        return Err(Error::Precondition("primary C2 session must carry the query's session id".into()));
    }
    let result = QueryJob::from_message(bob.recv()?).and_then(|job| {
        job.validate(db)?;
        let winners = match job.protocol {
            ProtocolKind::Basic => sknn_basic(pool, db, &job)?,
            ProtocolKind::Full => sknn_full(pool, db, &job)?,
        };
        deliver_results(pool.primary(), &winners)
    });
    match result {
        Ok(blinds) => {
            bob.send(&Message::Blinds(blinds))?;
            Ok(())
        }
        Err(e) => {
            let code = if matches!(e, Error::Precondition(_)) { ERR_PRECONDITION } else { ERR_FAULT };
            let _ = bob.send(&Message::Error { code, text: e.to_string() });
            Err(e)
        }
    }
}
