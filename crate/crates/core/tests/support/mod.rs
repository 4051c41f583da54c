//! Exact-rational Bernoulli oracle.
//!
//! Computes B_0..B_top over `BigRational` by the defining recurrence
//! sum_{j=0}^{m} C(m+1, j) B_j = 0 (convention B_1 = -1/2), then reduces
//! p-integral entries mod p. Deliberately shares no arithmetic with the
//! crate under test: plain bignum rationals, a local modpow, nothing else.

use num::rational::BigRational;
use num::{BigInt, Integer, One, Zero};
use std::sync::OnceLock;

/// B_0..=B_top as exact rationals.
pub fn bernoulli_exact(top: usize) -> Vec<BigRational> {
    let mut b: Vec<BigRational> = Vec::with_capacity(top + 1);
    b.push(BigRational::one());
    for m in 1..=top {
        // Walk C(m+1, j) along the row: C(m+1, 0) = 1,
        // C(m+1, j+1) = C(m+1, j) * (m+1-j) / (j+1), always exact.
        let mut c = BigInt::one();
        let mut acc = BigRational::zero();
        for (j, bj) in b.iter().enumerate() {
            if !bj.is_zero() {
                acc += BigRational::from(c.clone()) * bj;
            }
            c = c * BigInt::from(m + 1 - j) / BigInt::from(j + 1);
        }
        let m1 = BigRational::from(BigInt::from(m + 1));
        b.push(-acc / m1);
    }
    b
}

/// One shared table, computed on first use, large enough for every test
/// in this suite (index p-3 plus one Kummer period p-1 for p < 200).
pub fn shared_table() -> &'static [BigRational] {
    static TABLE: OnceLock<Vec<BigRational>> = OnceLock::new();
    TABLE.get_or_init(|| bernoulli_exact(394))
}

fn modpow(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = ((acc as u128 * base as u128) % p as u128) as u64;
        }
        base = ((base as u128 * base as u128) % p as u128) as u64;
        exp >>= 1;
    }
    acc
}

fn bigint_mod(x: &BigInt, p: u64) -> u64 {
    let r = x.mod_floor(&BigInt::from(p));
    let (_, digits) = r.to_u64_digits();
    match digits.as_slice() {
        [] => 0,
        [d] => *d,
        _ => unreachable!("residue below u64 prime"),
    }
}

/// Reduce an exact rational mod p; None when p divides the denominator
/// (the von Staudt-Clausen poles, i.e. (p-1) | k for B_k).
pub fn reduce_mod_p(x: &BigRational, p: u64) -> Option<u64> {
    let den = bigint_mod(x.denom(), p);
    if den == 0 {
        return None;
    }
    let num = bigint_mod(x.numer(), p);
    Some(((num as u128 * modpow(den, p - 2, p) as u128) % p as u128) as u64)
}

/// Primes in [lo, hi) by trial division — small ranges only.
pub fn primes_in(lo: u64, hi: u64) -> Vec<u64> {
    (lo..hi)
        .filter(|&n| n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0))
        .collect()
}
