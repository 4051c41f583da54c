//! Cross-checks of the mod-p Bernoulli kernels against an exact-rational
//! oracle that shares no code with them.

mod support;

use bigimage_core::bernoulli::bernoulli_mod_p;
use bigimage_core::Budget;
use num::rational::BigRational;
use num::{BigInt, One, Zero};
use support::{primes_in, reduce_mod_p, shared_table};

/// Anchor the oracle itself on literature values before trusting it.
#[test]
fn oracle_reproduces_published_values() {
    let b = shared_table();
    let rat = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
    assert_eq!(b[0], BigRational::one());
    assert_eq!(b[1], rat(-1, 2));
    assert_eq!(b[2], rat(1, 6));
    assert!(b[3].is_zero());
    assert_eq!(b[4], rat(-1, 30));
    assert_eq!(b[10], rat(5, 66));
    assert_eq!(b[12], rat(-691, 2730));
    assert_eq!(b[30], rat(8615841276005, 14322));
}

/// Denominator of B_k (k even) is the product of primes q with (q-1) | k.
/// An independent theorem the oracle has no way to satisfy by accident.
#[test]
fn oracle_denominators_match_von_staudt_clausen() {
    let b = shared_table();
    for k in (2..=120u64).step_by(2) {
        let mut expect = BigInt::one();
        for q in primes_in(2, k + 2) {
            if k % (q - 1) == 0 {
                expect *= BigInt::from(q);
            }
        }
        assert_eq!(b[k as usize].denom(), &expect, "denominator of B_{k}");
    }
}

/// The production kernel agrees with the exact rationals entry by entry.
/// Indices 0..=p-3 are all p-integral, so every reduction must succeed.
#[test]
fn fast_kernel_matches_exact_rational_oracle() {
    let oracle = shared_table();
    let budget = Budget::unlimited();
    for p in primes_in(5, 200) {
        let table = bernoulli_mod_p(p, &budget).unwrap();
        assert_eq!(table.len() as u64, p - 2);
        for (k, &got) in table.iter().enumerate() {
            let want = reduce_mod_p(&oracle[k], p)
                .unwrap_or_else(|| panic!("B_{k} should be {p}-integral"));
            assert_eq!(got, want, "B_{k} mod {p}");
        }
    }
}

/// Kummer congruence: B_{k+(p-1)}/(k+p-1) ≡ B_k/k (mod p) for even k with
/// (p-1) ∤ k. The left side only exists in the oracle — the kernel stops at
/// p-3 — so this genuinely ties the two tables together across a period.
#[test]
fn kummer_congruence_across_one_period() {
    let oracle = shared_table();
    let budget = Budget::unlimited();
    for p in primes_in(5, 200) {
        let table = bernoulli_mod_p(p, &budget).unwrap();
        for k in (2..=p - 3).step_by(2) {
            let shifted = reduce_mod_p(&oracle[(k + p - 1) as usize], p).unwrap();
            // (k + p - 1) ≡ k - 1 and k are both invertible mod p here.
            let lhs = (shifted as u128 * modinv(k - 1, p) as u128 % p as u128) as u64;
            let rhs = (table[k as usize] as u128 * modinv(k, p) as u128 % p as u128) as u64;
            assert_eq!(lhs, rhs, "Kummer congruence at k={k}, p={p}");
        }
    }
}

fn modinv(x: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    let mut base = x % p;
    let mut exp = p - 2;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = (acc as u128 * base as u128 % p as u128) as u64;
        }
        base = (base as u128 * base as u128 % p as u128) as u64;
        exp >>= 1;
    }
    acc
}
