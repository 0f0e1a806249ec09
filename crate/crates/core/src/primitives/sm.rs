//! Secure multiplication, squared Euclidean distance and bit-OR.

use num_bigint::BigUint;

use super::{unexpected, C1Session};
use crate::error::{Error, Result};
use crate::paillier::Ciphertext;
use crate::transport::Message;

impl C1Session {
    /// `E(a*b)` from `E(a)`, `E(b)`. C2 sees only `a + r_a` and `b + r_b`.
    pub fn sm(&mut self, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
        let ra = self.random_nonzero();
        let rb = self.random_nonzero();
        self.sm_with_blinds(a, b, &ra, &rb)
    }

    /// SM with caller-chosen blinds.
    pub fn sm_with_blinds(
        &mut self,
        a: &Ciphertext,
        b: &Ciphertext,
        ra: &BigUint,
        rb: &BigUint,
    ) -> Result<Ciphertext> {
        let (a1, b1) = self.blind_pair(a, b, ra, rb)?;
        match self.request(&Message::SmReq { a: a1, b: b1 })? {
            Message::SmResp(h) => Ok(self.unblind_product(a, b, &h, ra, rb)),
            other => Err(unexpected("SM_RESP", &other)),
        }
    }

    fn blind_pair(
        &mut self,
        a: &Ciphertext,
        b: &Ciphertext,
        ra: &BigUint,
        rb: &BigUint,
    ) -> Result<(Ciphertext, Ciphertext)> {
        let ea = self.encrypt(ra)?;
        let eb = self.encrypt(rb)?;
        Ok((self.pk().add(a, &ea), self.pk().add(b, &eb)))
    }

    /// `h' * E(a)^(N - r_b) * E(b)^(N - r_a) * E(-r_a r_b)`.
    fn unblind_product(
        &self,
        a: &Ciphertext,
        b: &Ciphertext,
        h: &Ciphertext,
        ra: &BigUint,
        rb: &BigUint,
    ) -> Ciphertext {
        let pk = self.pk();
        let s = pk.add(h, &pk.scalar_mul(a, &pk.negate_plain(rb)));
        let s = pk.add(&s, &pk.scalar_mul(b, &pk.negate_plain(ra)));
        pk.add_plain(&s, &pk.negate_plain(&(ra * rb)))
    }

    /// Element-wise SM in one round trip per `batch_size` pairs.
    pub fn sm_batch(&mut self, pairs: &[(Ciphertext, Ciphertext)]) -> Result<Vec<Ciphertext>> {
        let mut out = Vec::with_capacity(pairs.len());
        let batch = self.config().batch_size.max(1);
        for chunk in pairs.chunks(batch) {
            let mut blinds = Vec::with_capacity(chunk.len());
            let mut req = Vec::with_capacity(chunk.len());
            for (a, b) in chunk {
                let ra = self.random_nonzero();
                let rb = self.random_nonzero();
                req.push(self.blind_pair(a, b, &ra, &rb)?);
                blinds.push((ra, rb));
            }
            let replies = match self.request(&Message::SmBatchReq(req))? {
                Message::SmBatchResp(v) => v,
                other => return Err(unexpected("SM_BATCH_RESP", &other)),
            };
            if replies.len() != chunk.len() {
                return Err(Error::ProtocolFault(format!(
                    "SM batch of {} answered with {} products",
                    chunk.len(),
                    replies.len()
                )));
            }
            for (((a, b), (ra, rb)), h) in chunk.iter().zip(&blinds).zip(&replies) {
                out.push(self.unblind_product(a, b, h, ra, rb));
            }
        }
        Ok(out)
    }

    /// `E(|X - Y|^2)`; the `m` squarings share one SM round trip.
    pub fn ssed(&mut self, x: &[Ciphertext], y: &[Ciphertext]) -> Result<Ciphertext> {
        if x.len() != y.len() || x.is_empty() {
            return Err(Error::Precondition(format!(
                "SSED needs equal non-empty dimensions, got {} and {}",
                x.len(),
                y.len()
            )));
        }
        let pk = self.shared_pk();
        let diffs: Vec<_> = x
            .iter()
            .zip(y)
            .map(|(xi, yi)| {
                let d = pk.sub(xi, yi);
                (d.clone(), d)
            })
            .collect();
        let squares = self.sm_batch(&diffs)?;
        let mut acc = squares[0].clone();
        for sq in &squares[1..] {
            acc = pk.add(&acc, sq);
        }
        Ok(acc)
    }

    /// `E(o1 OR o2) = E(o1 + o2) * E(o1 AND o2)^(N-1)` for bits.
    pub fn sbor(&mut self, o1: &Ciphertext, o2: &Ciphertext) -> Result<Ciphertext> {
        let and = self.sm(o1, o2)?;
        Ok(self.pk().sub(&self.pk().add(o1, o2), &and))
    }

    pub fn sbor_batch(&mut self, pairs: &[(Ciphertext, Ciphertext)]) -> Result<Vec<Ciphertext>> {
        let ands = self.sm_batch(pairs)?;
        let pk = self.shared_pk();
        Ok(pairs
            .iter()
            .zip(&ands)
            .map(|((a, b), and)| pk.sub(&pk.add(a, b), and))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use num_bigint::{BigUint, RandBigInt};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    use crate::oracle;
    use crate::primitives::test_support::Harness;
    use crate::primitives::ObservationKind;

    #[test]
    fn multiplication_example_with_fixed_blinds() {
        let mut h = Harness::new(21);
        let (a, b) = (h.enc(59), h.enc(58));
        let out = h
            .session
            .sm_with_blinds(&a, &b, &BigUint::from(1u32), &BigUint::from(3u32))
            .unwrap();
        assert_eq!(h.dec_u64(&out), 3422);
        assert_eq!(
            h.log.values_of(ObservationKind::SmOperand),
            vec![BigUint::from(60u32), BigUint::from(61u32)]
        );
        assert_eq!(h.log.values_of(ObservationKind::SmProduct), vec![BigUint::from(3660u32)]);
    }

    #[test]
    fn zero_and_negative_operands() {
        let mut h = Harness::new(22);
        let zero = h.enc(0);
        let x = h.enc(12345);
        let out = h.session.sm(&zero, &x).unwrap();
        assert_eq!(h.dec_u64(&out), 0);

        let n = h.n();
        let minus_two = h.session.encrypt(&(&n - 2u32)).unwrap();
        let out = h.session.sm(&minus_two, &minus_two).unwrap();
        assert_eq!(h.dec(&out), oracle::plain_product(&(&n - 2u32), &(&n - 2u32), &n));
        assert_eq!(h.dec_u64(&out), 4);
    }

    #[test]
    fn batch_small_and_empty() {
        let mut h = Harness::new(23);
        let pairs = vec![(h.enc(2), h.enc(3)), (h.enc(0), h.enc(9))];
        let out = h.session.sm_batch(&pairs).unwrap();
        let got: Vec<u64> = out.iter().map(|c| h.dec_u64(c)).collect();
        assert_eq!(got, vec![6, 0]);
        assert!(h.session.sm_batch(&[]).unwrap().is_empty());
    }

    #[test]
    fn batch_of_1000_random_products() {
        let mut h = Harness::new(24);
        let n = h.n();
        let mut rng = ChaCha20Rng::seed_from_u64(24);
        let plain: Vec<(BigUint, BigUint)> = (0..1000)
            .map(|i| {
                // Every fourth pair mixes in negative residues.
                let a = rng.gen_biguint_below(&n);
                let b = if i % 4 == 0 { &n - rng.gen_range(1u32..1000) } else { rng.gen_biguint_below(&n) };
                (a, b)
            })
            .collect();
        let pairs: Vec<_> = plain
            .iter()
            .map(|(a, b)| (h.session.encrypt(a).unwrap(), h.session.encrypt(b).unwrap()))
            .collect();
        let out = h.session.sm_batch(&pairs).unwrap();
        for ((a, b), c) in plain.iter().zip(&out) {
            assert_eq!(h.dec(c), oracle::plain_product(a, b, &n));
        }
    }

    const T1: [u64; 10] = [63, 1, 1, 145, 233, 1, 3, 0, 6, 0];
    const T2: [u64; 10] = [56, 1, 3, 130, 256, 1, 2, 1, 6, 2];

    #[test]
    fn ssed_on_heart_rows() {
        let mut h = Harness::new(25);
        let x: Vec<_> = T1.iter().map(|&v| h.enc(v)).collect();
        let y: Vec<_> = T2.iter().map(|&v| h.enc(v)).collect();
        let d = h.session.ssed(&x, &y).unwrap();
        assert_eq!(h.dec_u64(&d), oracle::squared_distance(&T1, &T2) as u64);
        assert_eq!(h.dec_u64(&d), 813);

        let same = h.session.ssed(&x, &x).unwrap();
        assert_eq!(h.dec_u64(&same), 0);

        let q = [58u64, 1, 4, 133, 196, 1, 2, 1, 6];
        let t5 = [55u64, 0, 4, 128, 205, 0, 2, 1, 7];
        let eq: Vec<_> = q.iter().map(|&v| h.enc(v)).collect();
        let e5: Vec<_> = t5.iter().map(|&v| h.enc(v)).collect();
        let d = h.session.ssed(&eq, &e5).unwrap();
        assert_eq!(h.dec_u64(&d), oracle::squared_distance(&q, &t5) as u64);
    }

    #[test]
    fn ssed_dimension_mismatch_sends_nothing() {
        let mut h = Harness::new(26);
        let x = vec![h.enc(1), h.enc(2)];
        let y = vec![h.enc(1)];
        assert!(h.session.ssed(&x, &y).is_err());
        assert!(h.session.ssed(&[], &[]).is_err());
        assert!(h.log.is_empty());
    }

    #[test]
    fn ssed_random_vectors() {
        let mut h = Harness::new(27);
        let mut rng = ChaCha20Rng::seed_from_u64(27);
        // l = 16, m = 4: entries below 2^8 / 2.
        for _ in 0..20 {
            let m = rng.gen_range(1..=4);
            let a: Vec<u64> = (0..m).map(|_| rng.gen_range(0..128)).collect();
            let b: Vec<u64> = (0..m).map(|_| rng.gen_range(0..128)).collect();
            let ea: Vec<_> = a.iter().map(|&v| h.enc(v)).collect();
            let eb: Vec<_> = b.iter().map(|&v| h.enc(v)).collect();
            let d = h.session.ssed(&ea, &eb).unwrap();
            assert_eq!(h.dec_u64(&d) as u128, oracle::squared_distance(&a, &b));
        }
    }

    #[test]
    fn sbor_truth_table_and_composition() {
        let mut h = Harness::new(28);
        for a in 0..2u64 {
            for b in 0..2u64 {
                let (ca, cb) = (h.enc(a), h.enc(b));
                let out = h.session.sbor(&ca, &cb).unwrap();
                assert_eq!(h.dec_u64(&out), a | b, "{a} or {b}");
            }
        }
        let (z, o, z2) = (h.enc(0), h.enc(1), h.enc(0));
        let inner = h.session.sbor(&z, &o).unwrap();
        let outer = h.session.sbor(&inner, &z2).unwrap();
        assert_eq!(h.dec_u64(&outer), 1);

        let pairs: Vec<_> = [(0, 0), (0, 1), (1, 0), (1, 1)]
            .iter()
            .map(|&(a, b)| (h.enc(a), h.enc(b)))
            .collect();
        let out = h.session.sbor_batch(&pairs).unwrap();
        let got: Vec<u64> = out.iter().map(|c| h.dec_u64(c)).collect();
        assert_eq!(got, vec![0, 1, 1, 1]);
    }
}
