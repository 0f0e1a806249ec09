//! Secure bit decomposition by iterated least-significant-bit extraction.
//!
//! Round `g` (0-based): C1 holds `E(x)` with `x < 2^(l-g)`, sends
//! `E(x + r)` with `r < 2^(l-g+kappa)`, C2 answers `E((x + r) mod 2)`,
//! and C1 corrects for the parity of `r`. Then `x <- (x - x_0) / 2`,
//! computed as an exponentiation by `2^-1 mod N`.

use num_bigint::{BigUint, RandBigInt};
use num_traits::One;

use super::{sbd_mask_fits, unexpected, C1Session, EncryptedBits};
use crate::error::{Error, Result};
use crate::paillier::Ciphertext;
use crate::transport::Message;

impl C1Session {
    /// `[z]` for `0 <= z < 2^l`, most significant bit first.
    pub fn sbd(&mut self, z: &Ciphertext, l: usize) -> Result<EncryptedBits> {
        let kappa = self.config().kappa;
        if l == 0 {
            return Err(Error::Precondition("SBD needs l >= 1".into()));
        }
        if !sbd_mask_fits(self.pk(), l, kappa) {
            return Err(Error::Precondition(format!(
                "l = {l} with kappa = {kappa} does not fit under the {}-bit modulus",
                self.pk().bits()
            )));
        }
        let pk = self.shared_pk();
        let half = (pk.n() + 1u32) >> 1;
        let mut x = z.clone();
        let mut lsb_first = Vec::with_capacity(l);
        for round in 0..l {
            let bound = BigUint::one() << (l - round + kappa as usize);
            let r = self.rng().gen_biguint_below(&bound);
            let masked = pk.add(&x, &self.encrypt(&r)?);
            let y0 = match self.request(&Message::SbdLsbReq(masked))? {
                Message::SbdLsbResp(c) => c,
                other => return Err(unexpected("SBD_LSB_RESP", &other)),
            };
            let bit = if r.bit(0) {
                pk.add_plain(&pk.negate(&y0), &BigUint::one())
            } else {
                y0
            };
            if round + 1 < l {
                x = pk.scalar_mul(&pk.sub(&x, &bit), &half);
            }
            lsb_first.push(bit);
        }
        lsb_first.reverse();
        Ok(EncryptedBits(lsb_first))
    }
}
