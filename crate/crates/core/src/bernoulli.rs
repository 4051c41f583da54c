//! Bernoulli numbers mod p (convention B_1 = -1/2, i.e. x/(e^x - 1)).
//!
//! Two independent implementations with the same contract:
//!
//! * [`bernoulli_mod_p_recurrence`] — the classical O(p^2) recurrence
//!   B_m = -1/(m+1) · Σ_{j<m} C(m+1, j) B_j, carried out directly in F_p.
//!   Every term is p-integral in the range we compute (k <= p-3), so
//!   reducing the recurrence mod p is legitimate.
//! * [`bernoulli_mod_p`] — the production kernel: B_k = k! · [x^k] E(x)^{-1}
//!   where E(x) = Σ x^i/(i+1)! = (e^x - 1)/x, with the series inverted by
//!   Newton iteration and products done by NTT. O(p log p).
//!
//! Both return [B_0 mod p, ..., B_{p-3} mod p], which is exactly the range
//! where p-integrality is guaranteed (von Staudt-Clausen blocks k = p-1).

use crate::budget::Budget;
use crate::error::Result;
use crate::ntt::multiply_mod;
use crate::zp::{mul_mod, pow_mod, Modulus};

/// factorials[k] = k! mod p and their inverses, k = 0..=limit (limit < p).
fn factorial_tables(p: u64, limit: usize) -> (Vec<u64>, Vec<u64>) {
    assert!((limit as u64) < p);
    let mut fact = vec![1u64; limit + 1];
    for k in 1..=limit {
        fact[k] = mul_mod(fact[k - 1], k as u64, p);
    }
    let mut inv_fact = vec![1u64; limit + 1];
    inv_fact[limit] = pow_mod(fact[limit], p - 2, p);
    for k in (0..limit).rev() {
        inv_fact[k] = mul_mod(inv_fact[k + 1], (k + 1) as u64, p);
    }
    (fact, inv_fact)
}

/// Reference implementation by the defining recurrence, O(p^2).
pub fn bernoulli_mod_p_recurrence(p: u64, budget: &Budget) -> Result<Vec<u64>> {
    Modulus::new(p, 1)?;
    let top = (p - 3).max(0) as usize; // highest index, p >= 3
    let (fact, inv_fact) = factorial_tables(p, top + 2);
    let binom = |n: usize, k: usize| -> u64 {
        mul_mod(fact[n], mul_mod(inv_fact[k], inv_fact[n - k], p), p)
    };
    let mut b = vec![0u64; top + 1];
    b[0] = 1 % p;
    for m in 1..=top {
        budget.check("bernoulli recurrence")?;
        let mut acc = 0u64;
        for j in 0..m {
            if b[j] != 0 {
                acc = (acc + mul_mod(binom(m + 1, j), b[j], p)) % p;
            }
        }
        // m+1 <= p-2 < p, so it is invertible.
        let inv_m1 = pow_mod((m + 1) as u64, p - 2, p);
        b[m] = mul_mod((p - acc) % p, inv_m1, p);
    }
    Ok(b)
}

/// Invert a power series with unit constant term to the given precision:
/// Newton doubling I <- I·(2 - E·I), each round doubling the number of
/// correct coefficients.
fn series_inverse(e: &[u64], precision: usize, p: u64, budget: &Budget) -> Result<Vec<u64>> {
    debug_assert_eq!(e[0] % p, 1, "series must start with 1");
    let mut inv = vec![1u64];
    let mut t = 1usize;
    while t < precision {
        budget.check("series inversion")?;
        let t2 = (2 * t).min(precision);
        let mut prod = multiply_mod(&e[..t2.min(e.len())], &inv, p);
        prod.truncate(t2);
        prod.resize(t2, 0);
        // d = 2 - E·I
        let mut d = vec![0u64; t2];
        d[0] = (2 + p - prod[0]) % p;
        for k in 1..t2 {
            d[k] = (p - prod[k]) % p;
        }
        let mut next = multiply_mod(&inv, &d, p);
        next.truncate(t2);
        next.resize(t2, 0);
        inv = next;
        t = t2;
    }
    Ok(inv)
}

/// Production kernel: B_k mod p for k = 0..=p-3 in O(p log p).
pub fn bernoulli_mod_p(p: u64, budget: &Budget) -> Result<Vec<u64>> {
    Modulus::new(p, 1)?;
    let len = (p - 2) as usize; // coefficients x^0 .. x^{p-3}
    if len < 64 {
        return bernoulli_mod_p_recurrence(p, budget);
    }
    let (fact, inv_fact) = factorial_tables(p, len);
    // E(x) = (e^x - 1)/x: coefficient of x^i is 1/(i+1)!.
    let e: Vec<u64> = (0..len).map(|i| inv_fact[i + 1]).collect();
    let inv = series_inverse(&e, len, p, budget)?;
    Ok((0..len).map(|k| mul_mod(fact[k], inv[k], p)).collect())
}

/// Indices k (even, 2 <= k <= p-3) with B_k ≡ 0 mod p, given the value
/// table from either kernel.
pub fn vanishing_even_indices(p: u64, table: &[u64]) -> Vec<u64> {
    debug_assert_eq!(table.len() as u64, (p - 2).max(1));
    (2..=p.saturating_sub(3))
        .step_by(2)
        .filter(|&k| table[k as usize] == 0)
        .collect()
}
