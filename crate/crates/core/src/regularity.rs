//! Irregularity bookkeeping for odd primes: which even Bernoulli indices
//! vanish mod p, what that says about the eigenspaces of the p-part of
//! the class group of Q(ζ_p), and bulk scans with caching.
//!
//! The eigenspace verdicts encode the classical bridges:
//! * the ω^1-eigenspace is trivial unconditionally;
//! * for odd i ≠ 1, the ω^i-eigenspace is nontrivial exactly when
//!   p | B_{p-i} (both directions of Herbrand-Ribet);
//! * for even i (including i = 0) triviality is Vandiver's conjecture,
//!   which we *assume* and always flag as an assumption.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bernoulli::{bernoulli_mod_p, vanishing_even_indices};
use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::zp::is_prime;

/// Tag carried by every result that leans on Vandiver's conjecture.
pub const ASSUMPTION_VANDIVER: &str = "vandiver";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrregularityProfile {
    pub p: u64,
    /// Even k with 2 <= k <= p-3 and B_k ≡ 0 mod p, increasing.
    pub irregular_indices: Vec<u64>,
    /// Index of irregularity: how many such k there are.
    pub e_p: usize,
    /// Assumptions any downstream consumer inherits.
    pub assumptions: Vec<String>,
}

/// What we can certify about the ω^i-eigenspace of the p-class group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EigenspaceVerdict {
    /// Provably trivial from the Bernoulli data (or i = 1).
    ZeroCertified,
    /// Provably nontrivial: p divides the matching Bernoulli number.
    NonzeroCertified,
    /// Trivial only under Vandiver's conjecture.
    ZeroAssumedVandiver,
}

impl IrregularityProfile {
    /// Compute the profile from the Bernoulli table.
    pub fn compute(p: u64, budget: &Budget) -> Result<IrregularityProfile> {
        let table = bernoulli_mod_p(p, budget)?;
        Ok(Self::from_indices(p, vanishing_even_indices(p, &table)))
    }

    /// Assemble a profile from already-known indices (cache hits).
    pub fn from_indices(p: u64, irregular_indices: Vec<u64>) -> IrregularityProfile {
        let e_p = irregular_indices.len();
        IrregularityProfile {
            p,
            irregular_indices,
            e_p,
            assumptions: vec![ASSUMPTION_VANDIVER.to_string()],
        }
    }

    pub fn is_regular(&self) -> bool {
        self.e_p == 0
    }

    /// Verdict for the ω^i-eigenspace, i a character exponent mod p-1.
    pub fn eigenspace_verdict(&self, i: u64) -> Result<EigenspaceVerdict> {
        if i > self.p - 2 {
            return Err(Error::EigenspaceIndexRange {
                i,
                max: self.p - 2,
            });
        }
        if i % 2 == 0 {
            return Ok(EigenspaceVerdict::ZeroAssumedVandiver);
        }
        if i == 1 {
            return Ok(EigenspaceVerdict::ZeroCertified);
        }
        if self.irregular_indices.binary_search(&(self.p - i)).is_ok() {
            Ok(EigenspaceVerdict::NonzeroCertified)
        } else {
            Ok(EigenspaceVerdict::ZeroCertified)
        }
    }
}

/// Result of scanning all primes in [lo, hi). When the budget runs out the
/// scan stops cleanly after the last finished prime and sets `partial`:
/// everything present is exactly what an unbudgeted scan would have
/// produced for the same prefix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub lo: u64,
    pub hi: u64,
    pub profiles: Vec<IrregularityProfile>,
    /// histogram[r] = number of scanned primes with index of irregularity r.
    pub histogram: BTreeMap<usize, usize>,
    pub primes_scanned: usize,
    pub regular_fraction: f64,
    pub partial: bool,
}

/// Heuristic density of primes with index of irregularity exactly r,
/// treating the B_k mod p as independent uniform values: e^{-1/2}/(2^r r!).
pub fn expected_index_fraction(r: usize) -> f64 {
    let mut denom = 1.0;
    for k in 1..=r {
        denom *= 2.0 * k as f64;
    }
    (-0.5f64).exp() / denom
}

/// Scan primes in [lo, hi) in increasing order, using `cache` for lookups
/// and recording anything newly computed back into it.
pub fn scan_range(
    lo: u64,
    hi: u64,
    budget: &Budget,
    cache: &mut RegularityCache,
) -> Result<ScanReport> {
    let mut profiles = Vec::new();
    let mut partial = false;
    for p in lo.max(3)..hi {
        if !is_prime(p) || p == 2 {
            continue;
        }
        if budget.is_exceeded() {
            partial = true;
            break;
        }
        let profile = match cache.get(p) {
            Some(indices) => IrregularityProfile::from_indices(p, indices.to_vec()),
            None => match IrregularityProfile::compute(p, budget) {
                Ok(profile) => {
                    cache.insert(p, profile.irregular_indices.clone());
                    profile
                }
                // Deadline hit mid-computation: the completed prefix is
                // still a valid (partial) result.
                Err(Error::BudgetExceeded { .. }) => {
                    partial = true;
                    break;
                }
                Err(other) => return Err(other),
            },
        };
        profiles.push(profile);
    }
    let mut histogram = BTreeMap::new();
    for profile in &profiles {
        *histogram.entry(profile.e_p).or_insert(0usize) += 1;
    }
    let primes_scanned = profiles.len();
    let regular = histogram.get(&0).copied().unwrap_or(0);
    let regular_fraction = if primes_scanned == 0 {
        0.0
    } else {
        regular as f64 / primes_scanned as f64
    };
    Ok(ScanReport {
        lo,
        hi,
        profiles,
        histogram,
        primes_scanned,
        regular_fraction,
        partial,
    })
}

/// On-disk memo of irregular indices, one line per prime:
/// `p: k1,k2,...` with an empty list written as `p:`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RegularityCache {
    map: BTreeMap<u64, Vec<u64>>,
}

impl RegularityCache {
    pub fn new() -> RegularityCache {
        RegularityCache::default()
    }

    pub fn get(&self, p: u64) -> Option<&[u64]> {
        self.map.get(&p).map(|v| v.as_slice())
    }

    pub fn insert(&mut self, p: u64, mut indices: Vec<u64>) {
        indices.sort_unstable();
        self.map.insert(p, indices);
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Parse a cache file; a missing file is an empty cache.
    pub fn load(path: &Path) -> Result<RegularityCache> {
        let mut cache = RegularityCache::new();
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(cache),
            Err(e) => return Err(e.into()),
        };
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (p_str, rest) = line.split_once(':').ok_or_else(|| {
                Error::Io(format!("cache line {} has no colon: {line:?}", lineno + 1))
            })?;
            let p: u64 = p_str.trim().parse().map_err(|_| {
                Error::Io(format!("cache line {}: bad prime {p_str:?}", lineno + 1))
            })?;
            let mut indices = Vec::new();
            for tok in rest.split(',') {
                let tok = tok.trim();
                if tok.is_empty() {
                    continue;
                }
                indices.push(tok.parse().map_err(|_| {
                    Error::Io(format!("cache line {}: bad index {tok:?}", lineno + 1))
                })?);
            }
            indices.sort_unstable();
            cache.map.insert(p, indices);
        }
        Ok(cache)
    }

    /// Write every entry, sorted by prime.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (p, indices) in &self.map {
            if indices.is_empty() {
                out.push_str(&format!("{p}:\n"));
            } else {
                let list: Vec<String> = indices.iter().map(|k| k.to_string()).collect();
                out.push_str(&format!("{p}: {}\n", list.join(",")));
            }
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}
