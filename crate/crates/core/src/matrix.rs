//! Dense n×n matrices over Z/p^m.
//!
//! Everything downstream works with small n (2..=6) and needs *exact*
//! answers, so the implementations favor being obviously correct over
//! being fast: Bird's division-free determinant (O(n^4)), Gauss-Jordan
//! inversion using the local-ring fact that a pivot works iff it is a
//! unit, and square-and-multiply powers with signed exponents.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::zp::{Modulus, RingElem};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mat {
    n: usize,
    modulus: Modulus,
    entries: Vec<u64>, // row-major canonical residues
}

impl Mat {
    pub fn zero(n: usize, modulus: Modulus) -> Mat {
        Mat {
            n,
            modulus,
            entries: vec![0; n * n],
        }
    }

    pub fn identity(n: usize, modulus: Modulus) -> Mat {
        let mut m = Mat::zero(n, modulus);
        for i in 0..n {
            m.entries[i * n + i] = 1 % modulus.pm();
        }
        m
    }

    pub fn from_fn(n: usize, modulus: Modulus, mut f: impl FnMut(usize, usize) -> i128) -> Mat {
        let mut m = Mat::zero(n, modulus);
        for i in 0..n {
            for j in 0..n {
                m.entries[i * n + j] = modulus.reduce(f(i, j)).value();
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i128>], modulus: Modulus) -> Mat {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "rows must form a square");
        Mat::from_fn(n, modulus, |i, j| rows[i][j])
    }

    /// Build from row-major canonical entries (must have length n^2).
    pub fn from_entries(n: usize, modulus: Modulus, entries: Vec<u64>) -> Result<Mat> {
        if entries.len() != n * n {
            return Err(Error::ShapeMismatch(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                entries.len()
            )));
        }
        if let Some(&e) = entries.iter().find(|&&e| e >= modulus.pm()) {
            return Err(Error::ShapeMismatch(format!(
                "entry {e} is not a canonical residue mod {}",
                modulus.pm()
            )));
        }
        Ok(Mat { n, modulus, entries })
    }

    pub fn diag(values: &[RingElem]) -> Mat {
        let n = values.len();
        assert!(n > 0, "empty diagonal");
        let modulus = values[0].modulus();
        Mat::from_fn(n, modulus, |i, j| {
            if i == j {
                values[i].value() as i128
            } else {
                0
            }
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> RingElem {
        self.modulus.reduce(self.entries[i * self.n + j] as i128)
    }

    pub fn set(&mut self, i: usize, j: usize, value: RingElem) {
        assert_eq!(value.modulus(), self.modulus, "mixed moduli in set");
        self.entries[i * self.n + j] = value.value();
    }

    pub fn is_identity(&self) -> bool {
        *self == Mat::identity(self.n, self.modulus)
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.n, self.modulus, |i, j| self.entries[j * self.n + i] as i128)
    }

    pub fn trace(&self) -> RingElem {
        let mut t = self.modulus.zero();
        for i in 0..self.n {
            t = t + self.get(i, i);
        }
        t
    }

    pub fn scale(&self, s: RingElem) -> Mat {
        assert_eq!(s.modulus(), self.modulus, "mixed moduli in scale");
        let mut out = self.clone();
        for e in &mut out.entries {
            *e = ((*e as u128 * s.value() as u128) % self.modulus.pm() as u128) as u64;
        }
        out
    }

    /// Lie bracket XY - YX.
    pub fn bracket(&self, other: &Mat) -> Mat {
        self.clone() * other.clone() - other.clone() * self.clone()
    }

    /// Group commutator A B A^{-1} B^{-1}; errors if either is singular.
    pub fn group_commutator(&self, other: &Mat) -> Result<Mat> {
        Ok(self.clone() * other.clone() * self.inverse()? * other.inverse()?)
    }

    /// Determinant by Bird's division-free iteration: X <- mu(X)·A applied
    /// n-1 times, then det A = (-1)^{n-1} (X)_{11}. No divisions, so it is
    /// valid over any commutative ring, in particular Z/p^m.
    pub fn det(&self) -> RingElem {
        let n = self.n;
        if n == 0 {
            return self.modulus.one();
        }
        let mu = |x: &Mat| -> Mat {
            let mut out = Mat::zero(n, self.modulus);
            // strictly upper part copied, lower zeroed
            for i in 0..n {
                for j in i + 1..n {
                    out.entries[i * n + j] = x.entries[i * n + j];
                }
            }
            // diagonal: negated partial sums of the trailing diagonal
            let mut tail = self.modulus.zero();
            for i in (0..n).rev() {
                out.set(i, i, -tail);
                tail = tail + x.get(i, i);
            }
            out
        };
        let mut x = self.clone();
        for _ in 1..n {
            x = mu(&x) * self.clone();
        }
        let sign = if n % 2 == 1 { 1 } else { -1 };
        self.modulus.reduce(sign * x.entries[0] as i128)
    }

    /// Inverse by Gauss-Jordan. Over the local ring Z/p^m a row operation
    /// pivot is usable iff the entry is a unit, and the matrix is
    /// invertible iff every column yields such a pivot.
    pub fn inverse(&self) -> Result<Mat> {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = Mat::identity(n, self.modulus);
        for col in 0..n {
            let pivot_row = (col..n)
                .find(|&r| a.get(r, col).is_unit())
                .ok_or(Error::NotInvertible)?;
            if pivot_row != col {
                for j in 0..n {
                    a.entries.swap(pivot_row * n + j, col * n + j);
                    inv.entries.swap(pivot_row * n + j, col * n + j);
                }
            }
            let scale = a.get(col, col).inverse()?;
            for j in 0..n {
                a.set(col, j, a.get(col, j) * scale);
                inv.set(col, j, inv.get(col, j) * scale);
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a.get(r, col);
                if factor.is_zero() {
                    continue;
                }
                for j in 0..n {
                    a.set(r, j, a.get(r, j) - factor * a.get(col, j));
                    inv.set(r, j, inv.get(r, j) - factor * inv.get(col, j));
                }
            }
        }
        Ok(inv)
    }

    /// Signed power; negative exponents invert first.
    pub fn pow(&self, exp: i128) -> Result<Mat> {
        let (mut base, mut e) = if exp < 0 {
            (self.inverse()?, exp.unsigned_abs())
        } else {
            (self.clone(), exp as u128)
        };
        let mut acc = Mat::identity(self.n, self.modulus);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            base = base.clone() * base;
            e >>= 1;
        }
        Ok(acc)
    }

    /// Entrywise image in Z/p^k.
    pub fn reduce_to(&self, k: u32) -> Result<Mat> {
        let lower = self.modulus.at_level(k)?;
        Ok(Mat::from_fn(self.n, lower, |i, j| {
            self.entries[i * self.n + j] as i128
        }))
    }

    /// Entrywise set-lift: reinterpret the canonical residues in Z/p^k for
    /// k >= m. This is the "pick the same integer representative" lift.
    pub fn lift_to(&self, k: u32) -> Result<Mat> {
        let higher = self.modulus.at_level(k)?;
        Ok(Mat::from_fn(self.n, higher, |i, j| {
            self.entries[i * self.n + j] as i128
        }))
    }
}

impl Add for Mat {
    type Output = Mat;
    fn add(self, rhs: Mat) -> Mat {
        assert_eq!(self.modulus, rhs.modulus, "mixed moduli in matrix add");
        assert_eq!(self.n, rhs.n, "mixed sizes in matrix add");
        let mut out = self.clone();
        for (e, r) in out.entries.iter_mut().zip(rhs.entries.iter()) {
            *e = self.modulus.reduce(*e as i128 + *r as i128).value();
        }
        out
    }
}

impl Sub for Mat {
    type Output = Mat;
    fn sub(self, rhs: Mat) -> Mat {
        assert_eq!(self.modulus, rhs.modulus, "mixed moduli in matrix sub");
        assert_eq!(self.n, rhs.n, "mixed sizes in matrix sub");
        let mut out = self.clone();
        for (e, r) in out.entries.iter_mut().zip(rhs.entries.iter()) {
            *e = self.modulus.reduce(*e as i128 - *r as i128).value();
        }
        out
    }
}

impl Neg for Mat {
    type Output = Mat;
    fn neg(self) -> Mat {
        let mut out = self.clone();
        for e in &mut out.entries {
            *e = self.modulus.reduce(-(*e as i128)).value();
        }
        out
    }
}

impl Mul for Mat {
    type Output = Mat;
    fn mul(self, rhs: Mat) -> Mat {
        assert_eq!(self.modulus, rhs.modulus, "mixed moduli in matrix mul");
        assert_eq!(self.n, rhs.n, "mixed sizes in matrix mul");
        let n = self.n;
        let pm = self.modulus.pm() as u128;
        let mut out = Mat::zero(n, self.modulus);
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k] as u128;
                if a == 0 {
                    continue;
                }
                for j in 0..n {
                    let cur = out.entries[i * n + j] as u128;
                    out.entries[i * n + j] =
                        ((cur + a * rhs.entries[k * n + j] as u128) % pm) as u64;
                }
            }
        }
        out
    }
}

impl fmt::Display for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n)
                .map(|j| self.entries[i * self.n + j].to_string())
                .collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}
