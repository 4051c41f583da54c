//! Linear algebra over the prime field F_p: reduced row echelon form,
//! deterministic linear solves, null spaces, and incrementally maintained
//! row-reduced spans.
//!
//! Determinism matters here: the lifting machinery pins down *one*
//! solution of each underdetermined system by zeroing all free variables,
//! so repeated runs produce bit-identical representations.

use crate::zp::{mul_mod, pow_mod};

#[inline]
fn inv_mod_p(a: u64, p: u64) -> u64 {
    debug_assert!(a % p != 0);
    pow_mod(a, p - 2, p)
}

/// In-place reduced row echelon form; returns the pivot column of each
/// surviving row. Zero rows are dropped.
pub fn rref(rows: &mut Vec<Vec<u64>>, p: u64) -> Vec<usize> {
    let cols = rows.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut rank = 0usize;
    for col in 0..cols {
        let Some(pivot_row) = (rank..rows.len()).find(|&r| rows[r][col] % p != 0) else {
            continue;
        };
        rows.swap(rank, pivot_row);
        let inv = inv_mod_p(rows[rank][col], p);
        for x in rows[rank].iter_mut() {
            *x = mul_mod(*x, inv, p);
        }
        for r in 0..rows.len() {
            if r != rank && rows[r][col] != 0 {
                let factor = rows[r][col];
                for c in 0..cols {
                    let sub = mul_mod(factor, rows[rank][c], p);
                    rows[r][c] = (rows[r][c] + p - sub) % p;
                }
            }
        }
        pivots.push(col);
        rank += 1;
    }
    rows.truncate(rank);
    pivots
}

/// Solve A x = b over F_p. Returns the unique solution with every free
/// variable set to zero, or None when the system is inconsistent.
pub fn solve(a: &[Vec<u64>], b: &[u64], p: u64) -> Option<Vec<u64>> {
    assert_eq!(a.len(), b.len(), "row/rhs count mismatch");
    let cols = a.first().map_or(0, |r| r.len());
    let mut aug: Vec<Vec<u64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs % p);
            r
        })
        .collect();
    let pivots = rref(&mut aug, p);
    // A pivot in the appended column means 0 = nonzero.
    if pivots.last() == Some(&cols) {
        return None;
    }
    let mut x = vec![0u64; cols];
    for (row, &col) in aug.iter().zip(&pivots) {
        x[col] = row[cols];
    }
    Some(x)
}

/// Basis of the null space of A over F_p, one vector per free column,
/// in increasing column order.
pub fn null_space(a: &[Vec<u64>], p: u64) -> Vec<Vec<u64>> {
    let cols = a.first().map_or(0, |r| r.len());
    let mut rows: Vec<Vec<u64>> = a.to_vec();
    let pivots = rref(&mut rows, p);
    let pivot_set: std::collections::BTreeSet<usize> = pivots.iter().copied().collect();
    let mut basis = Vec::new();
    for free in 0..cols {
        if pivot_set.contains(&free) {
            continue;
        }
        let mut v = vec![0u64; cols];
        v[free] = 1;
        for (row, &pc) in rows.iter().zip(&pivots) {
            v[pc] = (p - row[free] % p) % p;
        }
        basis.push(v);
    }
    basis
}

/// An F_p subspace maintained in reduced row echelon form, supporting
/// cheap membership tests and incremental insertion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FpSpan {
    p: u64,
    ambient_dim: usize,
    basis: Vec<Vec<u64>>,   // RREF rows, pivot columns strictly increasing
    pivots: Vec<usize>,
}

impl FpSpan {
    pub fn new(p: u64, ambient_dim: usize) -> FpSpan {
        FpSpan {
            p,
            ambient_dim,
            basis: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn basis(&self) -> &[Vec<u64>] {
        &self.basis
    }

    pub fn is_full(&self) -> bool {
        self.dim() == self.ambient_dim
    }

    /// Reduce `v` against the current basis; the remainder is zero exactly
    /// when v lies in the span.
    fn residual(&self, v: &[u64]) -> Vec<u64> {
        assert_eq!(v.len(), self.ambient_dim, "vector/ambient mismatch");
        let p = self.p;
        let mut w: Vec<u64> = v.iter().map(|&x| x % p).collect();
        for (row, &pc) in self.basis.iter().zip(&self.pivots) {
            if w[pc] != 0 {
                let factor = w[pc];
                for c in 0..self.ambient_dim {
                    let sub = mul_mod(factor, row[c], p);
                    w[c] = (w[c] + p - sub) % p;
                }
            }
        }
        w
    }

    pub fn contains(&self, v: &[u64]) -> bool {
        self.residual(v).iter().all(|&x| x == 0)
    }

    /// Insert a vector. Returns true when it enlarged the span.
    pub fn insert(&mut self, v: &[u64]) -> bool {
        let mut w = self.residual(v);
        let Some(pivot) = w.iter().position(|&x| x != 0) else {
            return false;
        };
        let inv = inv_mod_p(w[pivot], self.p);
        for x in w.iter_mut() {
            *x = mul_mod(*x, inv, self.p);
        }
        // Back-substitute into existing rows to keep full RREF.
        for row in self.basis.iter_mut() {
            if row[pivot] != 0 {
                let factor = row[pivot];
                for c in 0..self.ambient_dim {
                    let sub = mul_mod(factor, w[c], self.p);
                    row[c] = (row[c] + self.p - sub) % self.p;
                }
            }
        }
        let pos = self.pivots.partition_point(|&pc| pc < pivot);
        self.pivots.insert(pos, pivot);
        self.basis.insert(pos, w);
        true
    }
}
