//! Modular exponentiation and inversion on top of the system GMP.
//!
//! Values stay `BigUint` everywhere else; conversion costs a few
//! microseconds against hundreds for the operation itself.

use gmp::mpz::Mpz;
use num_bigint::BigUint;

fn to_mpz(v: &BigUint) -> Mpz {
    Mpz::from(&v.to_bytes_be()[..])
}

fn from_mpz(v: &Mpz) -> BigUint {
    let bytes: Vec<u8> = v.into();
    BigUint::from_bytes_be(&bytes)
}

/// `base^exp mod modulus`.
pub fn pow_mod(base: &BigUint, exp: &BigUint, modulus: &BigUint) -> BigUint {
    from_mpz(&to_mpz(base).powm(&to_mpz(exp), &to_mpz(modulus)))
}

/// `a^-1 mod modulus`, if it exists.
pub fn inv_mod(a: &BigUint, modulus: &BigUint) -> Option<BigUint> {
    if modulus <= &BigUint::from(1u32) {
        return None;
    }
    to_mpz(a).invert(&to_mpz(modulus)).map(|v| from_mpz(&v))
}
