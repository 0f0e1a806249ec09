//! Paillier cryptosystem with generator `g = N + 1`.
//!
//! Plaintexts are residues in `[0, N)`; a negative quantity `-x` is
//! represented as `N - x`. Ciphertexts are units modulo `N^2`.

use std::path::Path;

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};

use crate::arith::{inv_mod, pow_mod};
use crate::codec::{put_biguint, put_u32, Reader};
use crate::error::{Error, Result};

pub const ALLOWED_KEY_BITS: [u32; 3] = [512, 1024, 2048];

/// Miller-Rabin rounds used during prime generation.
pub const MILLER_RABIN_ROUNDS: usize = 64;

pub const KEY_FILE_MAGIC: &[u8; 8] = b"SKNNKEY1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicKey {
    bits: u32,
    n: BigUint,
    g: BigUint,
    n_squared: BigUint,
}

#[derive(Clone, Debug)]
pub struct SecretKey {
    public: PublicKey,
    lambda: BigUint,
    mu: BigUint,
    crt: Crt,
}

/// Per-prime constants for decryption and encryption modulo `p^2`, `q^2`.
#[derive(Clone, Debug)]
struct Crt {
    p: BigUint,
    q: BigUint,
    p2: BigUint,
    q2: BigUint,
    /// `L_p(g^(p-1) mod p^2)^-1 mod p`, and likewise for `q`.
    hp: BigUint,
    hq: BigUint,
    q_inv_p: BigUint,
    q2_inv_p2: BigUint,
    /// `N mod p(p-1)`: the exponent of `r^N` reduced modulo the order of the group mod `p^2`.
    np: BigUint,
    nq: BigUint,
}

impl Crt {
    fn new(p: BigUint, q: BigUint, g: &BigUint) -> Option<Self> {
        let n = &p * &q;
        let p2 = &p * &p;
        let q2 = &q * &q;
        let h = |prime: &BigUint, sq: &BigUint| {
            let x = pow_mod(&(g % sq), &(prime - 1u32), sq);
            inv_mod(&((x - 1u32) / prime), prime)
        };
        Some(Self {
            hp: h(&p, &p2)?,
            hq: h(&q, &q2)?,
            q_inv_p: inv_mod(&q, &p)?,
            q2_inv_p2: inv_mod(&q2, &p2)?,
            np: &n % (&p * (&p - 1u32)),
            nq: &n % (&q * (&q - 1u32)),
            p,
            q,
            p2,
            q2,
        })
    }

    /// Recovers `p, q` from `N` and any multiple of `lambda(N)` by finding a
    /// nontrivial square root of 1.
    fn factor(n: &BigUint, lambda: &BigUint) -> Option<(BigUint, BigUint)> {
        let t = lambda.trailing_zeros()?;
        let d = lambda >> t;
        let n1 = n - 1u32;
        for a in 2u32..200 {
            let mut x = pow_mod(&BigUint::from(a), &d, n);
            if x.is_one() || x == n1 {
                continue;
            }
            for _ in 0..t {
                let y = &x * &x % n;
                if y.is_one() {
                    let p = (&x - 1u32).gcd(n);
                    let q = n / &p;
                    return (!p.is_one() && !q.is_one()).then_some((p, q));
                }
                if y == n1 {
                    break;
                }
                x = y;
            }
        }
        None
    }

    fn combine(&self, xp: &BigUint, xq: &BigUint, modp: &BigUint, modq: &BigUint, inv: &BigUint) -> BigUint {
        // x = xq + modq * ((xp - xq) * modq^-1 mod modp)
        let diff = (xp + modp - (xq % modp)) % modp;
        xq + modq * (diff * inv % modp)
    }
}

/// One Paillier ciphertext, a residue modulo `N^2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Ciphertext(BigUint);

impl Ciphertext {
    /// Wraps a raw residue without validation; [`SecretKey::decrypt`]
    /// rejects values outside the ciphertext group.
    pub fn from_raw(value: BigUint) -> Self {
        Self(value)
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn into_value(self) -> BigUint {
        self.0
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        put_biguint(&mut buf, &self.0);
        buf
    }
}

pub fn keygen<R: RngCore + CryptoRng>(bits: u32, rng: &mut R) -> Result<(PublicKey, SecretKey)> {
    if !ALLOWED_KEY_BITS.contains(&bits) {
        return Err(Error::KeySize(bits));
    }
    let half = (bits / 2) as u64;
    // |p - q| must not be small enough for Fermat factoring.
    let min_gap = BigUint::one() << (half - 100);
    loop {
        let p = random_prime(half, rng);
        let q = random_prime(half, rng);
        if p == q {
            continue;
        }
        let gap = if p > q { &p - &q } else { &q - &p };
        if gap < min_gap {
            continue;
        }
        let n = &p * &q;
        if n.bits() != bits as u64 {
            continue;
        }
        let p1 = &p - 1u32;
        let q1 = &q - 1u32;
        if !n.gcd(&(&p1 * &q1)).is_one() {
            continue;
        }
        let lambda = p1.lcm(&q1);
        let Some(mu) = lambda.modinv(&n) else {
            continue;
        };
        let public = PublicKey::from_modulus(bits, n);
        let Some(crt) = Crt::new(p, q, public.g()) else {
            continue;
        };
        let secret = SecretKey { public: public.clone(), lambda, mu, crt };
        return Ok((public, secret));
    }
}

fn random_prime<R: RngCore + CryptoRng>(bits: u64, rng: &mut R) -> BigUint {
    loop {
        let mut cand = rng.gen_biguint(bits);
        // Top two bits set so the product has exactly 2*bits bits.
        cand.set_bit(bits - 1, true);
        cand.set_bit(bits - 2, true);
        cand.set_bit(0, true);
        if is_probable_prime(&cand, MILLER_RABIN_ROUNDS, rng) {
            return cand;
        }
    }
}

const SMALL_PRIMES: [u32; 54] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193,
    197, 199, 211, 223, 227, 229, 233, 239, 241, 251,
];

/// Trial division by small primes followed by `rounds` Miller-Rabin
/// iterations with uniformly random bases.
pub fn is_probable_prime<R: RngCore>(n: &BigUint, rounds: usize, rng: &mut R) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    for &p in &SMALL_PRIMES {
        let p = BigUint::from(p);
        if *n == p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    let n_minus_1 = n - 1u32;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    'witness: for _ in 0..rounds {
        let a = rng.gen_biguint_range(&two, &n_minus_1);
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

impl PublicKey {
    fn from_modulus(bits: u32, n: BigUint) -> Self {
        let g = &n + 1u32;
        let n_squared = &n * &n;
        Self { bits, n, g, n_squared }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn n(&self) -> &BigUint {
        &self.n
    }

    pub fn g(&self) -> &BigUint {
        &self.g
    }

    pub fn n_squared(&self) -> &BigUint {
        &self.n_squared
    }

    /// SHA-256 over the serialized `(N, g)`.
    pub fn fingerprint(&self) -> [u8; 32] {
        let mut buf = Vec::new();
        put_biguint(&mut buf, &self.n);
        put_biguint(&mut buf, &self.g);
        Sha256::digest(&buf).into()
    }

    pub fn fingerprint_hex(&self) -> String {
        hex::encode(self.fingerprint())
    }

    /// `N - (x mod N)`, i.e. the residue representing `-x`.
    pub fn negate_plain(&self, x: &BigUint) -> BigUint {
        let x = x % &self.n;
        if x.is_zero() {
            x
        } else {
            &self.n - x
        }
    }

    /// Uniform residue in `[1, N)`.
    pub fn random_nonzero<R: RngCore + CryptoRng>(&self, rng: &mut R) -> BigUint {
        rng.gen_biguint_range(&BigUint::one(), &self.n)
    }

    fn random_unit<R: RngCore + CryptoRng>(&self, rng: &mut R) -> BigUint {
        loop {
            let r = self.random_nonzero(rng);
            if r.gcd(&self.n).is_one() {
                return r;
            }
        }
    }

    /// `(1 + mN) * r^N mod N^2` with a fresh unit `r`.
    pub fn encrypt<R: RngCore + CryptoRng>(&self, m: &BigUint, rng: &mut R) -> Result<Ciphertext> {
        if *m >= self.n {
            return Err(Error::PlaintextOutOfRange);
        }
        let r = self.random_unit(rng);
        let rn = pow_mod(&r, &self.n, &self.n_squared);
        let gm = (m * &self.n + 1u32) % &self.n_squared;
        Ok(Ciphertext(gm * rn % &self.n_squared))
    }

    pub fn encrypt_u64<R: RngCore + CryptoRng>(&self, m: u64, rng: &mut R) -> Result<Ciphertext> {
        self.encrypt(&BigUint::from(m), rng)
    }

    /// Encryption with randomness 1: `1 + mN`. Only used where the result
    /// is immediately combined with a properly randomized ciphertext.
    fn trivial(&self, m: &BigUint) -> BigUint {
        ((m % &self.n) * &self.n + 1u32) % &self.n_squared
    }

    pub fn add(&self, a: &Ciphertext, b: &Ciphertext) -> Ciphertext {
        Ciphertext(&a.0 * &b.0 % &self.n_squared)
    }

    /// Adds a known plaintext constant without drawing randomness.
    pub fn add_plain(&self, c: &Ciphertext, k: &BigUint) -> Ciphertext {
        Ciphertext(&c.0 * self.trivial(k) % &self.n_squared)
    }

    /// Encryption of `-a`, computed as the inverse modulo `N^2`.
    pub fn negate(&self, c: &Ciphertext) -> Ciphertext {
        Ciphertext(
            inv_mod(&c.0, &self.n_squared)
                .expect("ciphertext is a unit modulo N^2"),
        )
    }

    /// Decrypts to `a * s mod N`. Scalars above `N/2` are applied as
    /// `(c^-1)^(N - s)`, which encrypts the same residue with a shorter exponent.
    pub fn scalar_mul(&self, c: &Ciphertext, s: &BigUint) -> Ciphertext {
        let s = s % &self.n;
        let complement = &self.n - &s;
        if s.is_zero() {
            Ciphertext(BigUint::one())
        } else if complement.bits() < s.bits() {
            pow_mod(&self.negate(c).0, &complement, &self.n_squared).into()
        } else {
            pow_mod(&c.0, &s, &self.n_squared).into()
        }
    }

    pub fn sub(&self, a: &Ciphertext, b: &Ciphertext) -> Ciphertext {
        self.add(a, &self.negate(b))
    }

    pub fn rerandomize<R: RngCore + CryptoRng>(&self, c: &Ciphertext, rng: &mut R) -> Ciphertext {
        let zero = self
            .encrypt(&BigUint::zero(), rng)
            .expect("zero is in range");
        self.add(c, &zero)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = KEY_FILE_MAGIC.to_vec();
        put_u32(&mut buf, self.bits);
        put_biguint(&mut buf, &self.n);
        put_biguint(&mut buf, &self.g);
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let (bits, n, g) = read_key_header(&mut r)?;
        r.finish()?;
        validate_public(bits, n, g)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    /// Reads either a public or a secret key file and returns the public part.
    pub fn read_file(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        let mut r = Reader::new(&bytes);
        let (bits, n, g) = read_key_header(&mut r)?;
        validate_public(bits, n, g)
    }
}

impl From<BigUint> for Ciphertext {
    fn from(v: BigUint) -> Self {
        Ciphertext(v)
    }
}

fn read_key_header(r: &mut Reader<'_>) -> Result<(u32, BigUint, BigUint)> {
    if r.take(8)? != KEY_FILE_MAGIC {
        return Err(Error::Decode("bad key file magic".into()));
    }
    let bits = r.u32()?;
    let n = r.biguint()?;
    let g = r.biguint()?;
    Ok((bits, n, g))
}

fn validate_public(bits: u32, n: BigUint, g: BigUint) -> Result<PublicKey> {
    if !ALLOWED_KEY_BITS.contains(&bits) {
        return Err(Error::KeySize(bits));
    }
    if n.bits() != bits as u64 {
        return Err(Error::Decode(format!(
            "modulus has {} bits, header says {bits}",
            n.bits()
        )));
    }
    if g != &n + 1u32 {
        return Err(Error::Decode("generator must be N + 1".into()));
    }
    Ok(PublicKey::from_modulus(bits, n))
}

impl SecretKey {
    pub fn public(&self) -> &PublicKey {
        &self.public
    }

    pub fn decrypt(&self, c: &Ciphertext) -> Result<BigUint> {
        let pk = &self.public;
        if c.0.is_zero() || c.0 >= pk.n_squared || !c.0.gcd(&pk.n).is_one() {
            return Err(Error::InvalidCiphertext);
        }
        let k = &self.crt;
        let part = |prime: &BigUint, sq: &BigUint, h: &BigUint| {
            let x = pow_mod(&(&c.0 % sq), &(prime - 1u32), sq);
            (x - 1u32) / prime * h % prime
        };
        let mp = part(&k.p, &k.p2, &k.hp);
        let mq = part(&k.q, &k.q2, &k.hq);
        Ok(k.combine(&mp, &mq, &k.p, &k.q, &k.q_inv_p))
    }

    /// Encryption using the factorization; same distribution as
    /// [`PublicKey::encrypt`], about four times faster.
    pub fn encrypt<R: RngCore + CryptoRng>(&self, m: &BigUint, rng: &mut R) -> Result<Ciphertext> {
        let pk = &self.public;
        if *m >= pk.n {
            return Err(Error::PlaintextOutOfRange);
        }
        let k = &self.crt;
        let r = pk.random_unit(rng);
        let rp = pow_mod(&(&r % &k.p2), &k.np, &k.p2);
        let rq = pow_mod(&(&r % &k.q2), &k.nq, &k.q2);
        let rn = k.combine(&rp, &rq, &k.p2, &k.q2, &k.q2_inv_p2);
        let gm = (m * &pk.n + 1u32) % &pk.n_squared;
        Ok(Ciphertext(gm * rn % &pk.n_squared))
    }

    pub fn encrypt_u64<R: RngCore + CryptoRng>(&self, m: u64, rng: &mut R) -> Result<Ciphertext> {
        self.encrypt(&BigUint::from(m), rng)
    }

    /// Multiplies in a fresh encryption of zero.
    pub fn rerandomize<R: RngCore + CryptoRng>(&self, c: &Ciphertext, rng: &mut R) -> Ciphertext {
        let zero = self.encrypt(&BigUint::zero(), rng).expect("zero is in range");
        self.public.add(c, &zero)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = self.public.to_bytes();
        put_biguint(&mut buf, &self.lambda);
        put_biguint(&mut buf, &self.mu);
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let (bits, n, g) = read_key_header(&mut r)?;
        if r.is_empty() {
            return Err(Error::Decode(
                "public key file given where a secret key is required".into(),
            ));
        }
        let lambda = r.biguint()?;
        let mu = r.biguint()?;
        r.finish()?;
        let public = validate_public(bits, n, g)?;
        if (&lambda * &mu % public.n()) != BigUint::one() {
            return Err(Error::Decode("lambda and mu are inconsistent".into()));
        }
        let crt = Crt::factor(public.n(), &lambda)
            .and_then(|(p, q)| Crt::new(p, q, public.g()))
            .ok_or_else(|| Error::Decode("lambda does not match the modulus".into()))?;
        Ok(Self { public, lambda, mu, crt })
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_keys::keypair_512;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rng() -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(7)
    }

    #[test]
    fn keygen_512_round_trip() {
        let mut rng = rng();
        let (pk, sk) = keygen(512, &mut rng).unwrap();
        assert_eq!(pk.n().bits(), 512);
        let c = pk.encrypt_u64(12345, &mut rng).unwrap();
        assert_eq!(sk.decrypt(&c).unwrap(), BigUint::from(12345u32));
    }

    #[test]
    fn keygen_1024_has_exact_bit_length() {
        let (pk, _) = keygen(1024, &mut rng()).unwrap();
        assert_eq!(pk.n().bits(), 1024);
    }

    #[test]
    fn keygen_yields_distinct_moduli() {
        let mut rng = rng();
        let (a, _) = keygen(512, &mut rng).unwrap();
        let (b, _) = keygen(512, &mut rng).unwrap();
        assert_ne!(a.n(), b.n());
    }

    #[test]
    fn keygen_rejects_odd_sizes() {
        assert!(matches!(keygen(777, &mut rng()), Err(Error::KeySize(777))));
        assert!(matches!(keygen(256, &mut rng()), Err(Error::KeySize(256))));
    }

    #[test]
    fn primality_on_known_values() {
        let mut rng = rng();
        for p in [2u32, 3, 257, 65537, 2147483647] {
            assert!(is_probable_prime(&BigUint::from(p), 64, &mut rng), "{p}");
        }
        // 561 and 41041 are Carmichael numbers.
        for c in [1u32, 4, 561, 41041, 65535] {
            assert!(!is_probable_prime(&BigUint::from(c), 64, &mut rng), "{c}");
        }
    }

    #[test]
    fn encrypt_boundaries() {
        let (pk, sk) = keypair_512();
        let mut rng = rng();
        let zero = pk.encrypt_u64(0, &mut rng).unwrap();
        assert_eq!(sk.decrypt(&zero).unwrap(), BigUint::zero());
        let top = pk.n() - 1u32;
        let c = pk.encrypt(&top, &mut rng).unwrap();
        assert_eq!(sk.decrypt(&c).unwrap(), top);
        assert!(matches!(
            pk.encrypt(pk.n(), &mut rng),
            Err(Error::PlaintextOutOfRange)
        ));
    }

    #[test]
    fn encryption_is_probabilistic() {
        let (pk, sk) = keypair_512();
        let mut rng = rng();
        for _ in 0..100 {
            let a = pk.encrypt_u64(55, &mut rng).unwrap();
            let b = pk.encrypt_u64(55, &mut rng).unwrap();
            assert_ne!(a, b);
            assert_eq!(sk.decrypt(&a).unwrap(), sk.decrypt(&b).unwrap());
        }
    }

    #[test]
    fn decrypt_rejects_non_units() {
        let (pk, sk) = keypair_512();
        assert!(matches!(
            sk.decrypt(&Ciphertext::from_raw(BigUint::zero())),
            Err(Error::InvalidCiphertext)
        ));
        assert!(matches!(
            sk.decrypt(&Ciphertext::from_raw(pk.n().clone())),
            Err(Error::InvalidCiphertext)
        ));
        assert!(matches!(
            sk.decrypt(&Ciphertext::from_raw(pk.n_squared().clone())),
            Err(Error::InvalidCiphertext)
        ));
    }

    #[test]
    fn random_round_trips() {
        let (pk, sk) = keypair_512();
        let mut rng = rng();
        for _ in 0..1000 {
            let m = rng.gen_biguint_below(pk.n());
            let c = pk.encrypt(&m, &mut rng).unwrap();
            assert_eq!(sk.decrypt(&c).unwrap(), m);
        }
    }

    #[test]
    fn homomorphic_examples() {
        let (pk, sk) = keypair_512();
        let mut rng = rng();
        let e = |v: u64, rng: &mut ChaCha20Rng| pk.encrypt_u64(v, rng).unwrap();
        let d = |c: &Ciphertext| sk.decrypt(c).unwrap();

        assert_eq!(d(&pk.add(&e(3, &mut rng), &e(4, &mut rng))), 7u32.into());
        assert_eq!(d(&pk.add(&e(59, &mut rng), &e(1, &mut rng))), 60u32.into());
        assert_eq!(d(&pk.add(&e(42, &mut rng), &e(0, &mut rng))), 42u32.into());
        let top = pk.encrypt(&(pk.n() - 1u32), &mut rng).unwrap();
        assert_eq!(d(&pk.add(&top, &e(2, &mut rng))), 1u32.into());

        let x = e(9, &mut rng);
        assert_eq!(d(&pk.scalar_mul(&x, &(pk.n() - 1u32))), pk.n() - 9u32);
        assert_eq!(d(&pk.scalar_mul(&x, &BigUint::one())), 9u32.into());
        assert_eq!(d(&pk.scalar_mul(&e(5, &mut rng), &3u32.into())), 15u32.into());

        assert_eq!(d(&pk.sub(&e(58, &mut rng), &e(55, &mut rng))), 3u32.into());
        assert_eq!(d(&pk.sub(&e(55, &mut rng), &e(58, &mut rng))), pk.n() - 3u32);
        assert_eq!(d(&pk.sub(&x, &x)), BigUint::zero());
        assert_eq!(d(&pk.add_plain(&x, &(pk.n() - 2u32))), 7u32.into());
    }

    #[test]
    fn squares_of_negative_residues() {
        let (pk, _) = keypair_512();
        let n = pk.n();
        for x in [1u32, 2, 7, 1000] {
            let neg = n - x;
            assert_eq!(&neg * &neg % n, BigUint::from(x * x));
        }
    }

    #[test]
    fn key_files_round_trip() {
        let (pk, sk) = keypair_512();
        let dir = tempfile::tempdir().unwrap();
        let pub_path = dir.path().join("k.pub");
        let sec_path = dir.path().join("k.sec");
        pk.write_file(&pub_path).unwrap();
        sk.write_file(&sec_path).unwrap();
        assert_eq!(PublicKey::read_file(&pub_path).unwrap(), *pk);
        assert_eq!(PublicKey::read_file(&sec_path).unwrap(), *pk);
        let back = SecretKey::read_file(&sec_path).unwrap();
        let c = pk.encrypt_u64(99, &mut rng()).unwrap();
        assert_eq!(back.decrypt(&c).unwrap(), 99u32.into());
        assert!(SecretKey::read_file(&pub_path).is_err());
        let bytes = std::fs::read(&pub_path).unwrap();
        assert_eq!(&bytes[..8], b"SKNNKEY1");
        assert_eq!(&bytes[8..12], &512u32.to_be_bytes());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn additive_and_scalar_homomorphism(a in any::<[u8; 40]>(), b in any::<[u8; 40]>(), seed in any::<u64>()) {
            let (pk, sk) = keypair_512();
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let a = BigUint::from_bytes_be(&a) % pk.n();
            let b = BigUint::from_bytes_be(&b) % pk.n();
            let ca = pk.encrypt(&a, &mut rng).unwrap();
            let cb = pk.encrypt(&b, &mut rng).unwrap();
            prop_assert_eq!(sk.decrypt(&pk.add(&ca, &cb)).unwrap(), (&a + &b) % pk.n());
            prop_assert_eq!(sk.decrypt(&pk.scalar_mul(&ca, &b)).unwrap(), (&a * &b) % pk.n());
        }

        #[test]
        fn ciphertext_bytes_round_trip(seed in any::<u64>()) {
            let (pk, _) = keypair_512();
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let c = pk.encrypt_u64(seed, &mut rng).unwrap();
            let bytes = c.to_bytes();
            let back = Ciphertext::from_raw(Reader::new(&bytes).biguint().unwrap());
            prop_assert_eq!(back, c);
        }
    }
}
