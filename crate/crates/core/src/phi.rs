//! The graded image pieces Φ_k of a lift: the subspace of n×n matrices
//! over F_p cut out by image elements that are trivial at level k, read
//! off at level k+1 via y ↦ (y - Id)/p^k.
//!
//! Two methods with different trust profiles:
//!
//! * `ModuleClosure` — seed with the pro-p generators whose images are
//!   trivial at level k and close under the adjoint action of the
//!   torsion image. Cheap and certified, but only a lower bound for Φ_k
//!   (group products can land deeper in the filtration than any single
//!   generator).
//! * `Bfs` — enumerate the full image subgroup at level k+1 and collect
//!   everything in the reduction kernel. Exact but only viable when the
//!   image is small; overflowing the bound is an explicit error so
//!   callers can fall back to the lower bound.

use serde::{Deserialize, Serialize};

use crate::deform::LiftRep;
use crate::error::{Error, Result};
use crate::linalg::FpSpan;
use crate::matrix::Mat;
use crate::model::GeneratorKind;
use crate::adjoint::subgroup_bfs;
use crate::zp::Modulus;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiMethod {
    ModuleClosure,
    Bfs { bound: usize },
}

/// A seed contribution with its provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhiSeed {
    pub generator: String,
    /// (image - Id)/p^k over F_p, row-major.
    pub entries: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct PhiModule {
    pub k: u32,
    pub method: PhiMethod,
    /// Generator seeds (module-closure method; empty for BFS).
    pub seeds: Vec<PhiSeed>,
    pub span: FpSpan,
}

impl PhiModule {
    pub fn dim(&self) -> usize {
        self.span.dim()
    }

    pub fn contains(&self, entries: &[u64]) -> bool {
        self.span.contains(entries)
    }

    /// Whether every element of the space is trace-zero (true for paper
    /// determinant mode, where the one-unit determinant part is pushed
    /// out of the image).
    pub fn is_trace_zero(&self, n: usize) -> bool {
        self.span.basis().iter().all(|v| {
            let mut tr: u64 = 0;
            for i in 0..n {
                tr = (tr + v[i * n + i]) % self.span.p();
            }
            tr == 0
        })
    }
}

fn strip_identity(m: &Mat, k: u32) -> Result<Vec<u64>> {
    let p = m.modulus().p();
    let pm = m.modulus().pm();
    let step = p.pow(k);
    let n = m.n();
    m.entries()
        .iter()
        .enumerate()
        .map(|(idx, &v)| {
            let delta = u64::from(idx / n == idx % n);
            let diff = (v + pm - delta) % pm;
            if diff % step != 0 {
                return Err(Error::ShapeMismatch(
                    "element is not trivial at the requested level".into(),
                ));
            }
            Ok((diff / step) % p)
        })
        .collect()
}

/// Compute (a lower bound for, or exactly) Φ_k of a lift at level ≥ k+1.
pub fn phi(rep: &LiftRep, k: u32, method: PhiMethod) -> Result<PhiModule> {
    if k < 1 || k + 1 > rep.level() {
        return Err(Error::KernelLevel {
            k,
            m: rep.level(),
        });
    }
    let p = rep.model().p;
    let n = rep.n();
    let images: Vec<Mat> = rep
        .images()
        .iter()
        .map(|img| img.reduce_to(k + 1))
        .collect::<Result<_>>()?;

    match method {
        PhiMethod::ModuleClosure => {
            let mut seeds = Vec::new();
            let mut span = FpSpan::new(p, n * n);
            let mut work: Vec<Vec<u64>> = Vec::new();
            for (gen, img) in rep.model().generators.iter().zip(&images) {
                if !matches!(gen.kind, GeneratorKind::ProP { .. }) {
                    continue;
                }
                if !img.reduce_to(k)?.is_identity() {
                    continue;
                }
                let entry = strip_identity(img, k)?;
                if entry.iter().any(|&v| v != 0) {
                    seeds.push(PhiSeed {
                        generator: gen.name.clone(),
                        entries: entry.clone(),
                    });
                }
                if span.insert(&entry) {
                    work.push(entry);
                }
            }
            // Close under u ↦ σ̄ u σ̄^{-1}.
            let fp = Modulus::new(p, 1)?;
            let sigma = images[0].reduce_to(1)?;
            let sigma_inv = sigma.inverse()?;
            while let Some(v) = work.pop() {
                let u = Mat::from_entries(n, fp, v)?;
                let image = sigma.clone() * u * sigma_inv.clone();
                let w = image.entries().to_vec();
                if span.insert(&w) {
                    work.push(w);
                }
            }
            Ok(PhiModule {
                k,
                method,
                seeds,
                span,
            })
        }
        PhiMethod::Bfs { bound } => {
            let bfs = subgroup_bfs(&images, bound)?;
            if bfs.overflowed {
                return Err(Error::ClosureOverflow);
            }
            let modulus = Modulus::new(p, k + 1)?;
            let mut span = FpSpan::new(p, n * n);
            for entries in &bfs.elements {
                let m = Mat::from_entries(n, modulus, entries.clone())?;
                if m.reduce_to(k)?.is_identity() {
                    span.insert(&strip_identity(&m, k)?);
                }
            }
            Ok(PhiModule {
                k,
                method,
                seeds: Vec::new(),
                span,
            })
        }
    }
}

/// The seed audit behind the closure argument: the space must contain
/// e_{i,j} for every 1-based pair with i+j odd, plus a diagonal element
/// with pairwise-distinct entries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedCheck {
    pub off_diagonal_ok: bool,
    /// 1-based (i, j) pairs with i+j odd missing from the space.
    pub missing: Vec<(usize, usize)>,
    pub diagonal_ok: bool,
    /// A witness diagonal with distinct entries, if found.
    pub diagonal: Option<Vec<u64>>,
}

impl SeedCheck {
    pub fn ok(&self) -> bool {
        self.off_diagonal_ok && self.diagonal_ok
    }
}

pub fn seed_check(module: &PhiModule, n: usize) -> SeedCheck {
    let p = module.span.p();
    let mut missing = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && (i + j) % 2 == 1 {
                let mut e = vec![0u64; n * n];
                e[i * n + j] = 1;
                if !module.contains(&e) {
                    missing.push((i + 1, j + 1));
                }
            }
        }
    }
    // Look for a diagonal element with distinct entries among the basis
    // and the seeds.
    let mut diagonal = None;
    let candidates = module
        .seeds
        .iter()
        .map(|s| &s.entries)
        .chain(module.span.basis().iter());
    for v in candidates {
        let off_diag_zero = (0..n * n).all(|idx| idx / n == idx % n || v[idx] == 0);
        if !off_diag_zero {
            continue;
        }
        let diag: Vec<u64> = (0..n).map(|i| v[i * n + i] % p).collect();
        let mut sorted = diag.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() == n {
            diagonal = Some(diag);
            break;
        }
    }
    SeedCheck {
        off_diagonal_ok: missing.is_empty(),
        missing,
        diagonal_ok: diagonal.is_some(),
        diagonal,
    }
}
