//! Adjoint-side verification: eigencomponent decompositions under a
//! diagonal torus element, the exact commutator identity that powers the
//! level-by-level filtration argument, graded bracket closures over F_p,
//! and brute-force subgroup closures over Z/p^m with congruence-kernel
//! certification.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::FpSpan;
use crate::matrix::Mat;
use crate::zp::{teichmuller, Modulus};

/// One nonzero off-diagonal eigencomponent: position (i, j) (1-based)
/// with its coefficient and the character exponent (k_i - k_j) mod p-1
/// by which conjugation scales it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OffDiagComponent {
    pub i: usize,
    pub j: usize,
    pub coeff: u64,
    pub weight: u64,
}

/// A matrix split into its torus part (the diagonal) and its weight
/// components. Well-posed only when the ordered differences k_i - k_j are
/// pairwise distinct mod p-1, so that weights identify positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EigenDecomposition {
    pub t_part: Vec<u64>,
    pub off_diag: Vec<OffDiagComponent>,
}

/// Decompose `mat` (over Z/p^m) relative to the exponent tuple `ks`.
pub fn eigen_decompose(mat: &Mat, ks: &[u64]) -> Result<EigenDecomposition> {
    let n = mat.n();
    if ks.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{} exponents for a {n}x{n} matrix",
            ks.len()
        )));
    }
    let p = mat.modulus().p();
    // Distinctness of ordered differences mod p-1.
    let mut seen = BTreeSet::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d = (ks[i] as i128 - ks[j] as i128).rem_euclid((p - 1) as i128) as u64;
                if !seen.insert(d) {
                    return Err(Error::IndistinctCharacters);
                }
            }
        }
    }
    let t_part = (0..n).map(|i| mat.get(i, i).value()).collect();
    let mut off_diag = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let coeff = mat.get(i, j).value();
            if coeff != 0 {
                let weight =
                    (ks[i] as i128 - ks[j] as i128).rem_euclid((p - 1) as i128) as u64;
                off_diag.push(OffDiagComponent {
                    i: i + 1,
                    j: j + 1,
                    coeff,
                    weight,
                });
            }
        }
    }
    Ok(EigenDecomposition { t_part, off_diag })
}

/// The torus element diag(ω(g)^{k_1}, ..., ω(g)^{k_n}) over Z/p^m, whose
/// conjugation action scales the (i, j) component by ω(g)^{k_i - k_j}.
pub fn torus_element(ks: &[u64], modulus: Modulus) -> Result<Mat> {
    let g = crate::zp::primitive_root(modulus.p());
    let omega = teichmuller(g, modulus)?;
    let diag: Vec<_> = ks.iter().map(|&k| omega.powu(k)).collect();
    Ok(Mat::diag(&diag))
}

/// Exact statement verified here, for any matrices C, D over Z/p^{l+m+1}:
/// with A = Id + p^l C and B = Id + p^m D,
///
///   A B A^{-1} B^{-1}  =  Id + p^{l+m} [C mod p, D mod p]   (mod p^{l+m+1})
///
/// where the bracket is lifted entrywise. The check is bit-exact.
pub fn commutator_identity_check_with_lifts(
    c_lift: &Mat,
    d_lift: &Mat,
    l: u32,
    m: u32,
) -> Result<bool> {
    assert!(l >= 1 && m >= 1, "depths must be positive");
    let modulus = c_lift.modulus();
    if modulus.m() != l + m + 1 || d_lift.modulus() != modulus {
        return Err(Error::ShapeMismatch(format!(
            "lifts must live over Z/p^{}",
            l + m + 1
        )));
    }
    let n = c_lift.n();
    let p = modulus.p();
    let id = Mat::identity(n, modulus);
    let a = id.clone() + c_lift.scale(modulus.reduce((p as i128).pow(l)));
    let b = id.clone() + d_lift.scale(modulus.reduce((p as i128).pow(m)));
    let lhs = a.group_commutator(&b)?;
    let bracket = c_lift
        .reduce_to(1)?
        .bracket(&d_lift.reduce_to(1)?)
        .lift_to(l + m + 1)?;
    let rhs = id + bracket.scale(modulus.reduce((p as i128).pow(l + m)));
    Ok(lhs == rhs)
}

/// [`commutator_identity_check_with_lifts`] with the canonical entrywise
/// lift of matrices given mod p.
pub fn commutator_identity_check(c: &Mat, d: &Mat, l: u32, m: u32) -> Result<bool> {
    let c_lift = c.lift_to(l + m + 1)?;
    let d_lift = d.lift_to(l + m + 1)?;
    commutator_identity_check_with_lifts(&c_lift, &d_lift, l, m)
}

/// The standard basis of sl_n: e_ij for i ≠ j, then e_ii - e_{i+1,i+1}.
pub fn sl_basis(n: usize, modulus: Modulus) -> Vec<Mat> {
    let mut basis = Vec::with_capacity(n * n - 1);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                basis.push(Mat::from_fn(n, modulus, |r, c| {
                    i128::from(r == i && c == j)
                }));
            }
        }
    }
    for i in 0..n - 1 {
        basis.push(Mat::from_fn(n, modulus, |r, c| {
            if r != c {
                0
            } else if r == i {
                1
            } else if r == i + 1 {
                -1
            } else {
                0
            }
        }));
    }
    basis
}

/// Graded spans Φ_1, ..., Φ_max over F_p, closed under Ad of a fixed
/// invertible element and under brackets [Φ_a, Φ_b] ⊆ Φ_{a+b} whenever
/// a + b <= max. Levels are *not* nested: membership propagates only
/// through the two closure rules.
#[derive(Debug, Clone)]
pub struct GradedClosure {
    p: u64,
    n: usize,
    max_level: u32,
    levels: Vec<FpSpan>, // index l-1 holds Φ_l
}

impl GradedClosure {
    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    pub fn level(&self, l: u32) -> &FpSpan {
        assert!((1..=self.max_level).contains(&l), "level out of range");
        &self.levels[(l - 1) as usize]
    }

    pub fn dims(&self) -> Vec<usize> {
        self.levels.iter().map(|s| s.dim()).collect()
    }

    /// Does Φ_l contain all of sl_n?
    pub fn contains_sl(&self, l: u32) -> bool {
        let modulus = Modulus::new(self.p, 1).expect("p validated at construction");
        let span = self.level(l);
        sl_basis(self.n, modulus)
            .iter()
            .all(|b| span.contains(b.entries()))
    }
}

fn mat_to_vec(m: &Mat) -> Vec<u64> {
    m.entries().to_vec()
}

/// Compute the closure of `seeds` (matrices mod p placed at given levels)
/// under Ad(sigma_bar) at each level and brackets across levels.
pub fn graded_closure(
    sigma_bar: &Mat,
    seeds: &[(u32, Mat)],
    max_level: u32,
) -> Result<GradedClosure> {
    let modulus = sigma_bar.modulus();
    if modulus.m() != 1 {
        return Err(Error::ShapeMismatch(
            "graded closure works over F_p (level-1 matrices)".into(),
        ));
    }
    let n = sigma_bar.n();
    let p = modulus.p();
    let sigma_inv = sigma_bar.inverse()?;
    let mut levels = vec![FpSpan::new(p, n * n); max_level as usize];
    let mut work: VecDeque<(u32, Mat)> = VecDeque::new();

    let insert = |levels: &mut Vec<FpSpan>,
                      work: &mut VecDeque<(u32, Mat)>,
                      l: u32,
                      m: Mat| {
        if l >= 1 && l <= max_level && levels[(l - 1) as usize].insert(&mat_to_vec(&m)) {
            work.push_back((l, m));
        }
    };

    for (l, seed) in seeds {
        if seed.modulus() != modulus || seed.n() != n {
            return Err(Error::ShapeMismatch(
                "seed does not match sigma_bar's size or modulus".into(),
            ));
        }
        insert(&mut levels, &mut work, *l, seed.clone());
    }

    while let Some((a, v)) = work.pop_front() {
        // Ad-stability within the level.
        let conj = sigma_bar.clone() * v.clone() * sigma_inv.clone();
        insert(&mut levels, &mut work, a, conj);
        // Brackets with current basis vectors of complementary levels.
        for b in 1..=max_level.saturating_sub(a) {
            let partners: Vec<Mat> = levels[(b - 1) as usize]
                .basis()
                .iter()
                .map(|row| {
                    Mat::from_entries(n, modulus, row.clone()).expect("basis rows are canonical")
                })
                .collect();
            for w in partners {
                insert(&mut levels, &mut work, a + b, v.bracket(&w));
            }
        }
    }

    Ok(GradedClosure {
        p,
        n,
        max_level,
        levels,
    })
}

/// Independent audit of a closure result: every seed present, every level
/// Ad-stable, every in-range bracket of basis vectors contained. This
/// re-checks the defining properties directly rather than trusting the
/// worklist bookkeeping.
pub fn verify_filtration(
    closure: &GradedClosure,
    sigma_bar: &Mat,
    seeds: &[(u32, Mat)],
) -> Result<bool> {
    let modulus = sigma_bar.modulus();
    let n = sigma_bar.n();
    let sigma_inv = sigma_bar.inverse()?;
    for (l, seed) in seeds {
        if !closure.level(*l).contains(seed.entries()) {
            return Ok(false);
        }
    }
    let basis_mats = |l: u32| -> Vec<Mat> {
        closure
            .level(l)
            .basis()
            .iter()
            .map(|row| Mat::from_entries(n, modulus, row.clone()).expect("canonical"))
            .collect()
    };
    for a in 1..=closure.max_level() {
        for v in basis_mats(a) {
            let conj = sigma_bar.clone() * v.clone() * sigma_inv.clone();
            if !closure.level(a).contains(conj.entries()) {
                return Ok(false);
            }
            for b in a..=closure.max_level().saturating_sub(a) {
                for w in basis_mats(b) {
                    if !closure.level(a + b).contains(v.bracket(&w).entries()) {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

/// Exhaustive closure of a generating set under right multiplication,
/// starting from the identity. Deterministic: elements are kept as sorted
/// entry vectors. Hitting `bound` sets `overflowed` instead of erroring,
/// since partial closures are still useful as certificates of size.
#[derive(Debug, Clone)]
pub struct SubgroupBfs {
    pub elements: BTreeSet<Vec<u64>>,
    pub overflowed: bool,
    pub bound: usize,
}

pub const DEFAULT_BFS_BOUND: usize = 2_000_000;

impl SubgroupBfs {
    pub fn order(&self) -> Option<usize> {
        (!self.overflowed).then_some(self.elements.len())
    }

    pub fn contains(&self, m: &Mat) -> bool {
        self.elements.contains(m.entries())
    }
}

pub fn subgroup_bfs(generators: &[Mat], bound: usize) -> Result<SubgroupBfs> {
    let Some(first) = generators.first() else {
        return Err(Error::ShapeMismatch("empty generator set".into()));
    };
    let n = first.n();
    let modulus = first.modulus();
    for g in generators {
        if g.n() != n || g.modulus() != modulus {
            return Err(Error::ShapeMismatch("mixed generator shapes".into()));
        }
        // Monoid closure equals group closure only for invertible elements.
        g.inverse()?;
    }
    let id = Mat::identity(n, modulus);
    let mut elements = BTreeSet::from([mat_to_vec(&id)]);
    let mut queue = VecDeque::from([id]);
    let mut overflowed = false;
    'bfs: while let Some(x) = queue.pop_front() {
        for g in generators {
            let y = x.clone() * g.clone();
            if elements.insert(mat_to_vec(&y)) {
                if elements.len() > bound {
                    overflowed = true;
                    break 'bfs;
                }
                queue.push_back(y);
            }
        }
    }
    Ok(SubgroupBfs {
        elements,
        overflowed,
        bound,
    })
}

/// |ker(SL_n(Z/p^m) -> SL_n(Z/p^k))| = p^{(m-k)(n^2-1)}.
pub fn congruence_kernel_order(p: u64, m: u32, k: u32, n: usize) -> u128 {
    (p as u128).pow((m - k) * (n * n - 1) as u32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelMethod {
    /// Every kernel element was enumerated and looked up.
    Enumeration,
    /// Kernel generators were looked up; the closed set then contains the
    /// whole kernel (valid for odd p and k >= 1).
    Generators,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelCheck {
    pub contained: bool,
    pub method: KernelMethod,
    pub kernel_order: u128,
    /// First missing element when not contained (entry vector).
    pub missing: Option<Vec<u64>>,
}

/// Does the (complete) closure contain the full congruence kernel at
/// depth k, i.e. all of Id + p^k·sl directions down to level m? Kernels up
/// to `enumeration_bound` elements are enumerated outright; larger ones
/// are certified through their generators, using that a complete BFS set
/// is multiplication-closed and finite, hence a subgroup.
pub fn contains_congruence_kernel(
    bfs: &SubgroupBfs,
    modulus: Modulus,
    k: u32,
    n: usize,
    enumeration_bound: u128,
) -> Result<KernelCheck> {
    let m = modulus.m();
    if k == 0 || k >= m {
        return Err(Error::KernelLevel { k, m });
    }
    if bfs.overflowed {
        return Err(Error::ClosureOverflow);
    }
    let p = modulus.p();
    let kernel_order = congruence_kernel_order(p, m, k, n);

    if kernel_order <= enumeration_bound {
        // Walk Y over M_n(Z/p^{m-k}), keep det(Id + p^k Y) = 1.
        let digits = modulus.pm() / p.pow(k); // p^{m-k}
        let cells = n * n;
        let mut counter = vec![0u64; cells];
        let pk = modulus.reduce((p as i128).pow(k));
        let mut seen = 0u128;
        loop {
            let y = Mat::from_fn(n, modulus, |i, j| counter[i * n + j] as i128);
            let candidate = Mat::identity(n, modulus) + y.scale(pk);
            if candidate.det() == modulus.one() {
                seen += 1;
                if !bfs.contains(&candidate) {
                    return Ok(KernelCheck {
                        contained: false,
                        method: KernelMethod::Enumeration,
                        kernel_order,
                        missing: Some(mat_to_vec(&candidate)),
                    });
                }
            }
            // Odometer over base-p^{m-k} digits.
            let mut pos = 0;
            loop {
                if pos == cells {
                    debug_assert_eq!(seen, kernel_order, "kernel order formula");
                    return Ok(KernelCheck {
                        contained: true,
                        method: KernelMethod::Enumeration,
                        kernel_order,
                        missing: None,
                    });
                }
                counter[pos] += 1;
                if counter[pos] < digits {
                    break;
                }
                counter[pos] = 0;
                pos += 1;
            }
        }
    }

    let pk = modulus.reduce((p as i128).pow(k));
    for x in sl_basis(n, modulus) {
        let generator = Mat::identity(n, modulus) + x.scale(pk);
        if !bfs.contains(&generator) {
            return Ok(KernelCheck {
                contained: false,
                method: KernelMethod::Generators,
                kernel_order,
                missing: Some(mat_to_vec(&generator)),
            });
        }
    }
    Ok(KernelCheck {
        contained: true,
        method: KernelMethod::Generators,
        kernel_order,
        missing: None,
    })
}
