//! Number-theoretic transform over the fixed prime q = 29·2^57 + 1.
//!
//! Used to multiply polynomials with coefficients reduced mod a prime p:
//! both inputs are lifted to integers < p, convolved exactly over Z (the
//! true coefficients stay below q for every size this crate needs), and
//! reduced back mod p. A single word-sized prime with 2-adic valuation 57
//! covers transforms up to length 2^57, far beyond our worst case of 2^21.
//!
//! Arithmetic mod q runs in Montgomery form (R = 2^64) so the inner
//! butterfly loop avoids 128-bit remainders.

pub(crate) const NTT_PRIME: u64 = 4_179_340_454_199_820_289; // 29 * 2^57 + 1
pub(crate) const NTT_ROOT: u64 = 3; // smallest primitive root mod NTT_PRIME
const TWO_ADICITY: u32 = 57;

const Q: u64 = NTT_PRIME;

/// q^{-1} mod 2^64 by Newton iteration (each step doubles correct bits;
/// x = q is already correct mod 8 for odd q).
const fn inv_pow2(q: u64) -> u64 {
    let mut x = q;
    let mut i = 0;
    while i < 5 {
        x = x.wrapping_mul(2u64.wrapping_sub(q.wrapping_mul(x)));
        i += 1;
    }
    x
}

const NEG_QINV: u64 = inv_pow2(Q).wrapping_neg();
const R2: u64 = (((u128::MAX % Q as u128) + 1) % Q as u128) as u64; // 2^128 mod q

/// Montgomery reduction: t·2^{-64} mod q, valid for t < q·2^64.
#[inline]
fn redc(t: u128) -> u64 {
    let m = (t as u64).wrapping_mul(NEG_QINV);
    let folded = ((t + m as u128 * Q as u128) >> 64) as u64;
    if folded >= Q {
        folded - Q
    } else {
        folded
    }
}

#[inline]
fn to_mont(a: u64) -> u64 {
    redc(a as u128 * R2 as u128)
}

#[inline]
fn from_mont(a: u64) -> u64 {
    redc(a as u128)
}

#[inline]
fn mont_mul(a: u64, b: u64) -> u64 {
    redc(a as u128 * b as u128)
}

fn mont_pow(mut base: u64, mut exp: u64) -> u64 {
    let mut acc = to_mont(1);
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mont_mul(acc, base);
        }
        base = mont_mul(base, base);
        exp >>= 1;
    }
    acc
}

#[inline]
fn add_q(a: u64, b: u64) -> u64 {
    let s = a + b; // both < q < 2^63, no overflow
    if s >= Q {
        s - Q
    } else {
        s
    }
}

#[inline]
fn sub_q(a: u64, b: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + Q - b
    }
}

/// In-place transform of length 2^k (values in Montgomery form).
/// `invert` runs the inverse transform including the 1/n scaling.
fn ntt(v: &mut [u64], invert: bool) {
    let n = v.len();
    assert!(n.is_power_of_two() && n as u128 <= 1u128 << TWO_ADICITY);
    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            v.swap(i, j);
        }
    }
    let root_mont = to_mont(NTT_ROOT);
    let mut len = 2;
    while len <= n {
        let mut w_len = mont_pow(root_mont, (Q - 1) / len as u64);
        if invert {
            w_len = mont_pow(w_len, Q - 2);
        }
        for start in (0..n).step_by(len) {
            let mut w = to_mont(1);
            for i in start..start + len / 2 {
                let a = v[i];
                let b = mont_mul(v[i + len / 2], w);
                v[i] = add_q(a, b);
                v[i + len / 2] = sub_q(a, b);
                w = mont_mul(w, w_len);
            }
        }
        len <<= 1;
    }
    if invert {
        let n_inv = mont_pow(to_mont(n as u64), Q - 2);
        for x in v.iter_mut() {
            *x = mont_mul(*x, n_inv);
        }
    }
}

/// Exact polynomial product of two coefficient vectors with entries < p,
/// returned reduced mod p. Panics if the integer coefficients could reach
/// q (cannot happen below p ~ 2^20 at our transform sizes, which is
/// checked explicitly).
pub(crate) fn multiply_mod(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    if out_len < 32 {
        // Schoolbook for tiny operands; also the reference the NTT path
        // is tested against.
        let mut out = vec![0u64; out_len];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = (out[i + j] + (x as u128 * y as u128 % p as u128) as u64) % p;
            }
        }
        return out;
    }
    let size = out_len.next_power_of_two();
    let min_len = a.len().min(b.len()) as u128;
    assert!(
        min_len * (p as u128 - 1) * (p as u128 - 1) < Q as u128,
        "convolution coefficients could exceed the NTT prime"
    );
    let mut fa = vec![0u64; size];
    let mut fb = vec![0u64; size];
    for (dst, &src) in fa.iter_mut().zip(a) {
        *dst = to_mont(src % p);
    }
    for (dst, &src) in fb.iter_mut().zip(b) {
        *dst = to_mont(src % p);
    }
    ntt(&mut fa, false);
    ntt(&mut fb, false);
    for (x, &y) in fa.iter_mut().zip(&fb) {
        *x = mont_mul(*x, y);
    }
    ntt(&mut fa, true);
    fa.truncate(out_len);
    for x in fa.iter_mut() {
        *x = from_mont(*x) % p;
    }
    fa
}
