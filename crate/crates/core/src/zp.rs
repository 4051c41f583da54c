//! Exact arithmetic in Z/p^m for an odd prime p, with p^m held in a single
//! 64-bit word and all products routed through 128-bit intermediates.
//!
//! The unit group (Z/p^m)^* is cyclic of order p^{m-1}(p-1) and splits as
//! ⟨ω(g)⟩ × ⟨1+p⟩ where g is the smallest positive primitive root mod p and
//! ω denotes the Teichmüller lift (the unique (p-1)-st root of unity
//! congruent to the given residue mod p). [`UnitElem`] caches the discrete
//! logarithm of a unit with respect to this splitting, which is what the
//! character bookkeeping downstream runs on.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};

/// Product mod `modulus` without overflow (both operands already reduced).
#[inline]
pub(crate) fn mul_mod(a: u64, b: u64, modulus: u64) -> u64 {
    ((a as u128 * b as u128) % modulus as u128) as u64
}

/// `base^exp mod modulus` by square-and-multiply.
pub(crate) fn pow_mod(base: u64, mut exp: u64, modulus: u64) -> u64 {
    let mut base = base % modulus;
    let mut acc = 1 % modulus;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, modulus);
        }
        base = mul_mod(base, base, modulus);
        exp >>= 1;
    }
    acc
}

const MILLER_RABIN_BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Deterministic Miller-Rabin. The fixed base set decides primality
/// correctly for every 64-bit integer.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &q in &MILLER_RABIN_BASES {
        if n == q {
            return true;
        }
        if n % q == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &MILLER_RABIN_BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Trial-division factorization into (prime, multiplicity) pairs.
/// Fine for the sizes we feed it (p-1 for moderate p, NTT prime minus one).
pub(crate) fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d as u128 * d as u128 <= n as u128 {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// The ring Z/p^m, p an odd prime, p^m < 2^64.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Modulus {
    p: u64,
    m: u32,
    pm: u64,
}

impl Modulus {
    pub fn new(p: u64, m: u32) -> Result<Modulus> {
        if p < 3 || p % 2 == 0 || !is_prime(p) {
            return Err(Error::NotOddPrime(p));
        }
        if m == 0 {
            return Err(Error::ModulusOverflow { p, m });
        }
        let pm = p
            .checked_pow(m)
            .ok_or(Error::ModulusOverflow { p, m })?;
        Ok(Modulus { p, m, pm })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// p^m, the actual modulus.
    pub fn pm(&self) -> u64 {
        self.pm
    }

    /// The same prime at a different precision. Panics only if p^k
    /// overflows, which cannot happen for k <= m.
    pub fn at_level(&self, k: u32) -> Result<Modulus> {
        Modulus::new(self.p, k)
    }

    /// Canonical residue of an integer, mapping negatives correctly.
    pub fn reduce(&self, value: i128) -> RingElem {
        let v = value.rem_euclid(self.pm as i128) as u64;
        RingElem {
            value: v,
            modulus: *self,
        }
    }

    pub fn zero(&self) -> RingElem {
        RingElem {
            value: 0,
            modulus: *self,
        }
    }

    pub fn one(&self) -> RingElem {
        RingElem {
            value: 1 % self.pm,
            modulus: *self,
        }
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Z/{}^{}", self.p, self.m)
    }
}

/// A canonical residue in Z/p^m. Arithmetic panics on mixed moduli:
/// that is a programming error, not an input error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RingElem {
    value: u64,
    modulus: Modulus,
}

impl RingElem {
    pub fn new(value: i128, modulus: Modulus) -> RingElem {
        modulus.reduce(value)
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    /// True when the residue is a unit, i.e. not divisible by p.
    pub fn is_unit(&self) -> bool {
        self.value % self.modulus.p != 0
    }

    /// p-adic valuation, capped at m for the zero residue.
    pub fn valuation(&self) -> u32 {
        if self.value == 0 {
            return self.modulus.m;
        }
        let mut v = 0;
        let mut x = self.value;
        while x % self.modulus.p == 0 {
            x /= self.modulus.p;
            v += 1;
        }
        v
    }

    /// Image in Z/p^k for k <= m (or any level whose p^k fits).
    pub fn reduce_to(&self, k: u32) -> Result<RingElem> {
        let lower = self.modulus.at_level(k)?;
        Ok(lower.reduce(self.value as i128))
    }

    /// Multiplicative inverse by extended Euclid; errors on non-units.
    pub fn inverse(&self) -> Result<RingElem> {
        if !self.is_unit() {
            return Err(Error::NotAUnit {
                value: self.value,
                modulus: self.modulus.pm,
            });
        }
        let (mut r0, mut r1) = (self.modulus.pm as i128, self.value as i128);
        let (mut s0, mut s1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (s0, s1) = (s1, s0 - q * s1);
        }
        debug_assert_eq!(r0, 1);
        Ok(self.modulus.reduce(s0))
    }

    /// Integer power; negative exponents invert first and therefore
    /// require a unit.
    pub fn pow(&self, exp: i64) -> Result<RingElem> {
        if exp >= 0 {
            Ok(self.powu(exp as u64))
        } else {
            if !self.is_unit() {
                return Err(Error::NegativePowerOfNonUnit {
                    value: self.value,
                    exp,
                });
            }
            let inv = self.inverse()?;
            Ok(inv.powu(exp.unsigned_abs()))
        }
    }

    /// Non-negative power (always defined).
    pub fn powu(&self, exp: u64) -> RingElem {
        RingElem {
            value: pow_mod(self.value, exp, self.modulus.pm),
            modulus: self.modulus,
        }
    }
}

impl fmt::Display for RingElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

macro_rules! ring_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for RingElem {
            type Output = RingElem;
            fn $method(self, rhs: RingElem) -> RingElem {
                assert_eq!(
                    self.modulus, rhs.modulus,
                    "mixed moduli in ring arithmetic"
                );
                self.modulus
                    .reduce(self.value as i128 $op rhs.value as i128)
            }
        }
    };
}

ring_binop!(Add, add, +);
ring_binop!(Sub, sub, -);
ring_binop!(Mul, mul, *);

impl Neg for RingElem {
    type Output = RingElem;
    fn neg(self) -> RingElem {
        self.modulus.reduce(-(self.value as i128))
    }
}

/// Smallest positive primitive root mod p, memoized process-wide.
pub fn primitive_root(p: u64) -> u64 {
    static CACHE: OnceLock<Mutex<BTreeMap<u64, u64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(BTreeMap::new()));
    if let Some(&g) = cache.lock().unwrap().get(&p) {
        return g;
    }
    assert!(is_prime(p) && p % 2 == 1, "primitive_root needs an odd prime");
    let factors = factorize(p - 1);
    let g = (2..p)
        .find(|&g| {
            factors
                .iter()
                .all(|&(q, _)| pow_mod(g, (p - 1) / q, p) != 1)
        })
        .expect("every odd prime has a primitive root");
    cache.lock().unwrap().insert(p, g);
    g
}

/// Discrete log of `a` base `g` in (Z/p)^*, by direct scan. None when `a`
/// is divisible by p. O(p), used only where p is small or once per unit.
pub fn dlog(p: u64, g: u64, a: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        return None;
    }
    let mut acc = 1u64;
    for t in 0..p - 1 {
        if acc == a {
            return Some(t);
        }
        acc = mul_mod(acc, g, p);
    }
    None
}

/// Teichmüller lift: the unique root of x^{p-1} = 1 in Z/p^m congruent to
/// `a` mod p. Computed by Newton iteration on f(x) = x^{p-1} - 1, which
/// doubles p-adic precision each round.
pub fn teichmuller(a: u64, modulus: Modulus) -> Result<RingElem> {
    let p = modulus.p();
    if a % p == 0 {
        return Err(Error::ZeroResidue(a));
    }
    let mut x = modulus.reduce(a as i128);
    let rounds = 32 - (modulus.m().max(1) - 1).leading_zeros() + 1;
    for _ in 0..rounds {
        // x <- x - f(x)/f'(x) with f'(x) = (p-1) x^{p-2}, a unit.
        let fx = x.powu(p - 1) - modulus.one();
        let dfx = modulus.reduce((p - 1) as i128) * x.powu(p - 2);
        x = x - fx * dfx.inverse()?;
    }
    debug_assert_eq!(x.powu(p - 1), modulus.one());
    Ok(x)
}

/// ω(g)^t where g is the smallest primitive root mod p: the order-(p-1)
/// part of the unit group, exactly.
pub fn omega_pow(modulus: Modulus, t: u64) -> Result<RingElem> {
    let g = primitive_root(modulus.p());
    Ok(teichmuller(g, modulus)?.powu(t % (modulus.p() - 1)))
}

/// (1+p)^l, the pro-p part of the unit group.
pub fn one_unit_pow(modulus: Modulus, l: u64) -> RingElem {
    modulus.reduce(1 + modulus.p() as i128).powu(l)
}

/// A unit of Z/p^m together with its exact discrete logarithm
/// u = ω(g)^t · (1+p)^l, t mod p-1, l mod p^{m-1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnitElem {
    elem: RingElem,
    teich_exponent: u64,
    one_unit_log: u64,
}

impl UnitElem {
    pub fn ring(&self) -> RingElem {
        self.elem
    }

    pub fn value(&self) -> u64 {
        self.elem.value()
    }

    pub fn modulus(&self) -> Modulus {
        self.elem.modulus()
    }

    /// Exponent t of ω(g), reduced mod p-1.
    pub fn teich_exponent(&self) -> u64 {
        self.teich_exponent
    }

    /// Exponent l of (1+p), reduced mod p^{m-1}.
    pub fn one_unit_log(&self) -> u64 {
        self.one_unit_log
    }

    /// Rebuild ω(g)^t (1+p)^l; inverse of [`unit_decompose`].
    pub fn from_parts(modulus: Modulus, t: u64, l: u64) -> Result<UnitElem> {
        let value = omega_pow(modulus, t)? * one_unit_pow(modulus, l);
        unit_decompose(value)
    }
}

/// Split a unit across ⟨ω(g)⟩ × ⟨1+p⟩.
///
/// The Teichmüller exponent comes from a discrete log mod p; the one-unit
/// log is recovered one base-p digit at a time, using that
/// (1+p)^{p^k} = 1 + p^{k+1}·(unit ≡ 1 mod p).
pub fn unit_decompose(elem: RingElem) -> Result<UnitElem> {
    let modulus = elem.modulus();
    let (p, m) = (modulus.p(), modulus.m());
    if !elem.is_unit() {
        return Err(Error::NotAUnit {
            value: elem.value(),
            modulus: modulus.pm(),
        });
    }
    let g = primitive_root(p);
    let t = dlog(p, g, elem.value() % p).expect("unit has a dlog");
    let omega_inv_t = omega_pow(modulus, t)?.inverse()?;
    let mut v = elem * omega_inv_t; // one-unit: v ≡ 1 mod p
    let one_plus_p = modulus.reduce(1 + p as i128);
    let mut l = 0u64;
    let mut pk = 1u64; // p^k
    let mut pk1 = p; // p^{k+1}
    for _ in 0..m.saturating_sub(1) {
        let digit = ((v.value() - 1) / pk1) % p;
        l += digit * pk;
        if digit != 0 {
            let step = one_plus_p.powu(digit * pk).inverse()?;
            v = v * step;
        }
        pk *= p;
        pk1 = pk1.saturating_mul(p);
    }
    debug_assert_eq!(v, modulus.one(), "digit peeling must terminate at 1");
    Ok(UnitElem {
        elem,
        teich_exponent: t,
        one_unit_log: l,
    })
}
