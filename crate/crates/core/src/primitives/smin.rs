//! Secure minimum of two bit-decomposed values, and the tournament schedule
//! used to extend it to `n` values.

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::Rng;

use super::{sxor_bits, unexpected, C1Session, EncryptedBits};
use crate::error::{Error, Result};
use crate::transport::Message;

/// Which comparison C1 asks C2 to evaluate obliviously.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Functionality {
    UGtV,
    VGtU,
}

/// C1's secret coins for one SMIN run.
///
/// Permutations map positions forward: element `i` of the input lands at
/// position `pi[i]` of the output.
#[derive(Clone, Debug)]
pub struct SminChoice {
    pub functionality: Functionality,
    pub pi1: Vec<usize>,
    pub pi2: Vec<usize>,
}

impl SminChoice {
    pub fn random<R: Rng>(l: usize, rng: &mut R) -> Self {
        let functionality = if rng.gen::<bool>() { Functionality::UGtV } else { Functionality::VGtU };
        let mut pi1: Vec<usize> = (0..l).collect();
        let mut pi2 = pi1.clone();
        pi1.shuffle(rng);
        pi2.shuffle(rng);
        Self { functionality, pi1, pi2 }
    }

    fn validate(&self, l: usize) -> Result<()> {
        for pi in [&self.pi1, &self.pi2] {
            let mut seen = vec![false; l];
            if pi.len() != l || !pi.iter().all(|&p| p < l && !std::mem::replace(&mut seen[p], true)) {
                return Err(Error::Precondition(format!("not a permutation of 0..{l}: {pi:?}")));
            }
        }
        Ok(())
    }
}

pub(crate) fn permute<T: Clone>(pi: &[usize], items: &[T]) -> Vec<T> {
    let mut out = items.to_vec();
    for (i, item) in items.iter().enumerate() {
        out[pi[i]] = item.clone();
    }
    out
}

pub(crate) fn unpermute<T: Clone>(pi: &[usize], items: &[T]) -> Vec<T> {
    pi.iter().map(|&p| items[p].clone()).collect()
}

/// Pairings of the stride-doubling tournament over `n` slots: at stride `s`
/// slot `i` (a multiple of `2s`) meets slot `i + s`, the winner stays in `i`,
/// and an unpaired slot advances untouched.
pub fn tournament_schedule(n: usize) -> Vec<Vec<(usize, usize)>> {
    let mut levels = Vec::new();
    let mut stride = 1;
    while stride < n {
        let level: Vec<_> = (0..n)
            .step_by(2 * stride)
            .filter(|i| i + stride < n)
            .map(|i| (i, i + stride))
            .collect();
        levels.push(level);
        stride *= 2;
    }
    levels
}

impl C1Session {
    /// `[min(u, v)]` with fresh coins.
    pub fn smin(&mut self, u: &EncryptedBits, v: &EncryptedBits) -> Result<EncryptedBits> {
        let choice = SminChoice::random(u.len(), self.rng());
        self.smin_with(u, v, &choice)
    }

    /// SMIN with caller-fixed functionality and permutations.
    pub fn smin_with(
        &mut self,
        u: &EncryptedBits,
        v: &EncryptedBits,
        choice: &SminChoice,
    ) -> Result<EncryptedBits> {
        let l = u.len();
        if l == 0 || v.len() != l {
            return Err(Error::Precondition(format!(
                "SMIN needs equal non-empty bit lengths, got {} and {}",
                u.len(),
                v.len()
            )));
        }
        choice.validate(l)?;
        let pk = self.shared_pk();
        let n = pk.n().clone();
        let minus_one = &n - 1u32;

        let pairs: Vec<_> = u.0.iter().cloned().zip(v.0.iter().cloned()).collect();
        let uv = self.sm_batch(&pairs)?;

        let mut gamma = Vec::with_capacity(l);
        let mut big_l = Vec::with_capacity(l);
        let mut r_hat = Vec::with_capacity(l);
        let mut h = self.encrypt(&BigUint::from(0u32))?;
        for i in 0..l {
            let (ui, vi) = (&u.0[i], &v.0[i]);
            let (w, diff) = match choice.functionality {
                Functionality::UGtV => (pk.sub(ui, &uv[i]), pk.sub(vi, ui)),
                Functionality::VGtU => (pk.sub(vi, &uv[i]), pk.sub(ui, vi)),
            };
            let rh = self.random_nonzero();
            gamma.push(pk.add(&diff, &self.encrypt(&rh)?));
            r_hat.push(rh);

            let g = sxor_bits(&pk, ui, vi, &uv[i]);
            let ri = self.random_nonzero();
            h = pk.add(&pk.scalar_mul(&h, &ri), &g);
            let phi = pk.add_plain(&h, &minus_one);
            let rp = self.random_nonzero();
            big_l.push(pk.add(&w, &pk.scalar_mul(&phi, &rp)));
        }

        let request = Message::SminReq {
            gamma: permute(&choice.pi1, &gamma),
            l: permute(&choice.pi2, &big_l),
        };
        let (m_prime, alpha) = match self.request(&request)? {
            Message::SminResp { m, alpha } => (m, alpha),
            other => return Err(unexpected("SMIN_RESP", &other)),
        };
        if m_prime.len() != l {
            return Err(Error::ProtocolFault(format!(
                "SMIN response has {} entries for {l} bits",
                m_prime.len()
            )));
        }
        let m_tilde = unpermute(&choice.pi1, &m_prime);
        let base = match choice.functionality {
            Functionality::UGtV => u,
            Functionality::VGtU => v,
        };
        let out = (0..l)
            .map(|i| {
                // lambda_i = alpha * (other_i - base_i)
                let lambda = pk.add(&m_tilde[i], &pk.scalar_mul(&alpha, &pk.negate_plain(&r_hat[i])));
                pk.add(&base.0[i], &lambda)
            })
            .collect();
        Ok(EncryptedBits(out))
    }

    /// `[min]` of `values` by folding SMIN left to right on this session.
    pub fn smin_fold(&mut self, values: &[EncryptedBits]) -> Result<EncryptedBits> {
        let (first, rest) = values
            .split_first()
            .ok_or_else(|| Error::Precondition("SMIN_n needs at least one input".into()))?;
        let mut acc = EncryptedBits(first.0.iter().map(|c| self.rerandomize(c)).collect());
        for v in rest {
            acc = self.smin(&acc, v)?;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use num_bigint::BigUint;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    use super::*;
    use crate::oracle;
    use crate::primitives::test_support::Harness;
    use crate::primitives::{ObservationKind, SessionPool};

    fn one_based(p: &[usize]) -> Vec<usize> {
        p.iter().map(|&x| x - 1).collect()
    }

    fn example_choice(functionality: Functionality) -> SminChoice {
        SminChoice {
            functionality,
            pi1: one_based(&[6, 5, 4, 3, 2, 1]),
            pi2: one_based(&[2, 1, 5, 6, 3, 4]),
        }
    }

    #[test]
    fn example_55_58_both_functionalities() {
        let mut h = Harness::new(41);
        let u = h.bits(55, 6);
        let v = h.bits(58, 6);
        for f in [Functionality::VGtU, Functionality::UGtV] {
            h.log.clear();
            let out = h.session.smin_with(&u, &v, &example_choice(f)).unwrap();
            assert_eq!(h.dec_bits(&out), oracle::plain_min_bits(55, 58, 6));
            assert_eq!(h.dec_bits(&out), vec![1, 1, 0, 1, 1, 1]);
        }
    }

    #[test]
    fn example_first_difference_lands_at_fifth_slot() {
        let mut h = Harness::new(42);
        let u = h.bits(55, 6);
        let v = h.bits(58, 6);
        h.session.smin_with(&u, &v, &example_choice(Functionality::VGtU)).unwrap();
        let m = h.log.values_of(ObservationKind::SminL);
        assert_eq!(m.len(), 6);
        let ones: Vec<usize> = (0..6).filter(|&i| m[i] == BigUint::from(1u32)).collect();
        assert_eq!(ones, vec![4]);
    }

    #[test]
    fn tie_returns_common_value() {
        let mut h = Harness::new(43);
        let u = h.bits(13, 4);
        let v = h.bits(13, 4);
        let out = h.session.smin(&u, &v).unwrap();
        assert_eq!(h.dec_bits(&out), oracle::plain_sbd(13, 4));
        let m = h.log.values_of(ObservationKind::SminL);
        assert!(m.iter().all(|x| *x != BigUint::from(1u32)));
    }

    #[test]
    fn exhaustive_four_bits_both_functionalities() {
        let mut h = Harness::new(44);
        let mut rng = ChaCha20Rng::seed_from_u64(44);
        let enc: Vec<_> = (0..16).map(|x| h.bits(x, 4)).collect();
        for f in [Functionality::UGtV, Functionality::VGtU] {
            for a in 0..16u64 {
                for b in 0..16u64 {
                    let mut choice = SminChoice::random(4, &mut rng);
                    choice.functionality = f;
                    let out = h.session.smin_with(&enc[a as usize], &enc[b as usize], &choice).unwrap();
                    assert_eq!(h.dec_bits(&out), oracle::plain_min_bits(a, b, 4), "{a} {b} {f:?}");
                }
            }
        }
    }

    #[test]
    fn c2_sees_at_most_one_indicator() {
        let mut h = Harness::new(45);
        let mut rng = ChaCha20Rng::seed_from_u64(45);
        for _ in 0..30 {
            let (a, b) = (rng.gen_range(0..256u64), rng.gen_range(0..256u64));
            let (u, v) = (h.bits(a, 8), h.bits(b, 8));
            h.log.clear();
            h.session.smin(&u, &v).unwrap();
            let m = h.log.values_of(ObservationKind::SminL);
            let one = BigUint::from(1u32);
            let zero = BigUint::from(0u32);
            assert!(m.iter().filter(|x| **x == one).count() <= 1);
            // A zero appears only at the first differing bit when F points the other way.
            let zeros = m.iter().filter(|x| **x == zero).count();
            assert!(zeros <= 1);
            if a == b {
                assert_eq!(zeros, 0);
            }
        }
    }

    #[test]
    fn outputs_are_fresh() {
        let mut h = Harness::new(46);
        let u = h.bits(9, 4);
        let v = h.bits(3, 4);
        let out = h.session.smin(&u, &v).unwrap();
        for c in &out.0 {
            assert!(!u.0.contains(c) && !v.0.contains(c));
        }
    }

    #[test]
    fn rejects_bad_inputs_without_traffic() {
        let mut h = Harness::new(47);
        let u = h.bits(1, 4);
        let v = h.bits(1, 3);
        assert!(h.session.smin(&u, &v).is_err());
        let bad = SminChoice { functionality: Functionality::UGtV, pi1: vec![0, 0, 1, 2], pi2: vec![0, 1, 2, 3] };
        assert!(h.session.smin_with(&u, &u, &bad).is_err());
        assert!(h.log.is_empty());
    }

    #[test]
    fn schedule_for_six() {
        assert_eq!(
            tournament_schedule(6),
            vec![vec![(0, 1), (2, 3), (4, 5)], vec![(0, 2)], vec![(0, 4)]]
        );
        assert!(tournament_schedule(1).is_empty());
        assert_eq!(tournament_schedule(3), vec![vec![(0, 1)], vec![(0, 2)]]);
    }

    #[test]
    fn schedule_covers_every_slot_once_as_loser() {
        for n in 1..=40 {
            let mut lost = vec![0; n];
            for level in tournament_schedule(n) {
                for (_, b) in level {
                    lost[b] += 1;
                }
            }
            assert_eq!(lost[0], 0);
            assert!(lost[1..].iter().all(|&c| c == 1), "n = {n}");
        }
    }

    /// Moves the session into a pool; the returned harness shares the key
    /// and serves only for decryption.
    fn pool(h: Harness) -> (SessionPool, Harness) {
        (SessionPool::single(h.session), Harness::new(0))
    }

    #[test]
    fn minimum_of_six_and_ties() {
        let mut h = Harness::new(48);
        let vals: Vec<_> = [5u64, 3, 8, 1, 7, 2].iter().map(|&x| h.bits(x, 4)).collect();
        let dup: Vec<_> = [4u64, 4, 9].iter().map(|&x| h.bits(x, 4)).collect();
        let single = vec![h.bits(6, 4)];
        let (mut p, h) = pool(h);
        assert_eq!(h.dec_bits(&p.smin_n(&vals).unwrap()), oracle::plain_sbd(1, 4));
        assert_eq!(h.dec_bits(&p.smin_n(&dup).unwrap()), oracle::plain_sbd(4, 4));
        let one = p.smin_n(&single).unwrap();
        assert_eq!(h.dec_bits(&one), oracle::plain_sbd(6, 4));
        assert_ne!(one, single[0]);
        assert!(p.smin_n(&[]).is_err());
    }

    #[test]
    fn tournament_matches_fold_and_oracle() {
        let mut h = Harness::new(49);
        let mut rng = ChaCha20Rng::seed_from_u64(49);
        let cases: Vec<Vec<u64>> = (0..12)
            .map(|_| {
                let n = rng.gen_range(1..=12);
                (0..n).map(|_| rng.gen_range(0..32)).collect()
            })
            .collect();
        let enc: Vec<Vec<_>> = cases.iter().map(|c| c.iter().map(|&x| h.bits(x, 5)).collect()).collect();
        for (plain, e) in cases.iter().zip(&enc) {
            let folded = h.session.smin_fold(e).unwrap();
            assert_eq!(h.dec_bits(&folded), oracle::plain_sbd(*plain.iter().min().unwrap(), 5));
        }
        let (mut p, h) = pool(h);
        for (plain, e) in cases.iter().zip(&enc) {
            let got = p.smin_n(e).unwrap();
            assert_eq!(h.dec_bits(&got), oracle::plain_sbd(*plain.iter().min().unwrap(), 5));
        }
    }
}
