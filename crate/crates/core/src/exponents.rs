//! Construction and verification of diagonal exponent tuples.
//!
//! A tuple (k_1, ..., k_n) drives the residual representation
//! σ ↦ diag(g^{k_1}, ..., g^{k_n}) and must satisfy five conditions for
//! the later lifting and closure arguments to go through:
//!
//! 1. 0 < k_i < (p-1)/2 for every i;
//! 2. alternating parity: k_i even for odd positions i, odd for even i
//!    (positions 1-based);
//! 3. no ordered difference k_i - k_j ≡ 1 mod p-1;
//! 4. the tuple is Sidon mod p-1: ordered differences are nonzero and
//!    pairwise distinct;
//! 5. no ordered difference points at an eigenspace that is certified
//!    nontrivial (which would obstruct unramified-everywhere lifting).
//!
//! [`select_ks`] builds a tuple deterministically from the doubling
//! sequence m_j = 2^{j+1} + [j even]; [`search_ks`] enumerates or samples
//! the full space instead.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result, SelectionError};
use crate::regularity::{EigenspaceVerdict, IrregularityProfile, ASSUMPTION_VANDIVER};

/// m_j = 2^{j+1} + 1 for even j, 2^{j+1} for odd j (j = 1..=t). Even
/// positions carry odd values and vice versa, and the sequence is Sidon
/// over the integers.
pub fn m_sequence(t: usize) -> Vec<u64> {
    (1..=t as u32)
        .map(|j| (1u64 << (j + 1)) + u64::from(j % 2 == 0))
        .collect()
}

/// How a sequence fails to be Sidon. Positions are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SidonViolation {
    /// Entries at these positions are congruent.
    ZeroDifference { i: usize, j: usize },
    /// Two ordered pairs share a difference value.
    EqualDifferences {
        first: (usize, usize),
        second: (usize, usize),
        value: u64,
    },
}

/// Check the Sidon property of ordered differences mod `modulus`:
/// all nonzero, all distinct. Returns the first violation met when pairs
/// (i, j), i ≠ j, are visited in lexicographic order.
pub fn sidon_check(seq: &[u64], modulus: u64) -> Option<SidonViolation> {
    let mut seen: BTreeMap<u64, (usize, usize)> = BTreeMap::new();
    for i in 0..seq.len() {
        for j in 0..seq.len() {
            if i == j {
                continue;
            }
            let d = (seq[i] as i128 - seq[j] as i128).rem_euclid(modulus as i128) as u64;
            if d == 0 {
                return Some(SidonViolation::ZeroDifference { i: i + 1, j: j + 1 });
            }
            if let Some(&first) = seen.get(&d) {
                return Some(SidonViolation::EqualDifferences {
                    first,
                    second: (i + 1, j + 1),
                    value: d,
                });
            }
            seen.insert(d, (i + 1, j + 1));
        }
    }
    None
}

/// Sidon property over the integers (no modulus).
pub fn sidon_check_absolute(seq: &[u64]) -> Option<SidonViolation> {
    let mut seen: BTreeMap<i128, (usize, usize)> = BTreeMap::new();
    for i in 0..seq.len() {
        for j in 0..seq.len() {
            if i == j {
                continue;
            }
            let d = seq[i] as i128 - seq[j] as i128;
            if d == 0 {
                return Some(SidonViolation::ZeroDifference { i: i + 1, j: j + 1 });
            }
            if let Some(&first) = seen.get(&d) {
                return Some(SidonViolation::EqualDifferences {
                    first,
                    second: (i + 1, j + 1),
                    value: d.unsigned_abs() as u64,
                });
            }
            seen.insert(d, (i + 1, j + 1));
        }
    }
    None
}

/// Witness for a failed condition. Positions are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConditionWitness {
    /// Condition 1: k at position i escapes (0, (p-1)/2).
    OutOfRange { i: usize, k: u64 },
    /// Condition 2: k at position i has the wrong parity.
    WrongParity { i: usize, k: u64 },
    /// Condition 3: k_i - k_j ≡ 1 mod p-1.
    AdjacentDifference { i: usize, j: usize },
    /// Condition 4.
    Sidon(SidonViolation),
    /// Condition 5: the difference (i, j) points at eigenspace
    /// `index` which is certified nontrivial.
    BadEigenspace { i: usize, j: usize, index: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionVerdict {
    pub number: usize,
    pub passed: bool,
    pub witness: Option<ConditionWitness>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub p: u64,
    pub ks: Vec<u64>,
    pub conditions: Vec<ConditionVerdict>,
    pub ok: bool,
    /// Nonempty iff some condition-5 verdict relied on an assumption.
    pub assumptions: Vec<String>,
}

/// Eigenspace index attacked by the ordered difference d = k_i - k_j:
/// (p - d) mod (p-1), i.e. the character exponent whose triviality the
/// lifting argument needs for this pair.
pub fn difference_eigenspace_index(p: u64, ki: u64, kj: u64) -> u64 {
    let d = (ki as i128 - kj as i128).rem_euclid((p - 1) as i128) as u64;
    (p - d) % (p - 1)
}

/// Evaluate all five conditions. Every condition is checked even after an
/// earlier one fails, so the report is complete.
pub fn check_conditions(profile: &IrregularityProfile, ks: &[u64]) -> Result<ConditionReport> {
    let p = profile.p;
    let half = (p - 1) / 2;
    let mut conditions = Vec::with_capacity(5);

    // (1) range
    let witness1 = ks
        .iter()
        .enumerate()
        .find(|&(_, &k)| k == 0 || k >= half)
        .map(|(i, &k)| ConditionWitness::OutOfRange { i: i + 1, k });
    conditions.push(ConditionVerdict {
        number: 1,
        passed: witness1.is_none(),
        witness: witness1,
    });

    // (2) alternating parity: odd positions even, even positions odd
    let witness2 = ks
        .iter()
        .enumerate()
        .find(|&(i, &k)| k % 2 != (i as u64) % 2)
        .map(|(i, &k)| ConditionWitness::WrongParity { i: i + 1, k });
    conditions.push(ConditionVerdict {
        number: 2,
        passed: witness2.is_none(),
        witness: witness2,
    });

    // (3) no ordered difference ≡ 1 mod p-1
    let mut witness3 = None;
    'outer3: for i in 0..ks.len() {
        for j in 0..ks.len() {
            if i == j {
                continue;
            }
            let d = (ks[i] as i128 - ks[j] as i128).rem_euclid((p - 1) as i128);
            if d == 1 {
                witness3 = Some(ConditionWitness::AdjacentDifference { i: i + 1, j: j + 1 });
                break 'outer3;
            }
        }
    }
    conditions.push(ConditionVerdict {
        number: 3,
        passed: witness3.is_none(),
        witness: witness3,
    });

    // (4) Sidon mod p-1
    let witness4 = sidon_check(ks, p - 1).map(ConditionWitness::Sidon);
    conditions.push(ConditionVerdict {
        number: 4,
        passed: witness4.is_none(),
        witness: witness4,
    });

    // (5) no certified-nontrivial eigenspace among the differences
    let mut witness5 = None;
    let mut used_assumption = false;
    'outer5: for i in 0..ks.len() {
        for j in 0..ks.len() {
            if i == j {
                continue;
            }
            let index = difference_eigenspace_index(p, ks[i], ks[j]);
            match profile.eigenspace_verdict(index)? {
                EigenspaceVerdict::NonzeroCertified => {
                    witness5 = Some(ConditionWitness::BadEigenspace {
                        i: i + 1,
                        j: j + 1,
                        index,
                    });
                    break 'outer5;
                }
                EigenspaceVerdict::ZeroAssumedVandiver => used_assumption = true,
                EigenspaceVerdict::ZeroCertified => {}
            }
        }
    }
    conditions.push(ConditionVerdict {
        number: 5,
        passed: witness5.is_none(),
        witness: witness5,
    });

    let ok = conditions.iter().all(|c| c.passed);
    let assumptions = if used_assumption {
        vec![ASSUMPTION_VANDIVER.to_string()]
    } else {
        Vec::new()
    };
    Ok(ConditionReport {
        p,
        ks: ks.to_vec(),
        conditions,
        ok,
        assumptions,
    })
}

/// An element dropped during selection, with the pair that condemned it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discard {
    pub value: u64,
    /// 1-based positions in the m-sequence forming the offending pair.
    pub pair: (usize, usize),
    pub eigenspace_index: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub ks: Vec<u64>,
    pub t: usize,
    pub m_sequence: Vec<u64>,
    pub discarded: Vec<Discard>,
    pub report: ConditionReport,
    pub assumptions: Vec<String>,
}

/// Deterministic tuple construction: take t = n + 2e terms of the doubling
/// sequence, drop the later element of every pair whose difference points
/// at a certified-nontrivial eigenspace, then pick the first n survivors
/// in the alternating-parity pattern. The result is final-checked with
/// [`check_conditions`]; e must be at least the index of irregularity.
pub fn select_ks(profile: &IrregularityProfile, n: usize, e: u64) -> Result<Selection> {
    let p = profile.p;
    if (profile.e_p as u64) > e {
        return Err(SelectionError::NotEnoughSpares {
            e_p: profile.e_p,
            e,
        }
        .into());
    }
    let t = n + 2 * e as usize;
    let m = m_sequence(t);
    let half = (p - 1) / 2;
    if m[t - 1] >= half {
        return Err(SelectionError::Boundary {
            t,
            value: m[t - 1],
            limit: half,
        }
        .into());
    }

    // Discard pass: visit ordered pairs lexicographically, dropping the
    // later element of each certified-bad pair as soon as it is seen.
    let mut alive = vec![true; t];
    let mut discarded = Vec::new();
    for i in 0..t {
        for j in 0..t {
            if i == j || !alive[i] || !alive[j] {
                continue;
            }
            let index = difference_eigenspace_index(p, m[i], m[j]);
            if profile.eigenspace_verdict(index)? == EigenspaceVerdict::NonzeroCertified {
                let victim = i.max(j);
                alive[victim] = false;
                discarded.push(Discard {
                    value: m[victim],
                    pair: (i + 1, j + 1),
                    eigenspace_index: index,
                });
            }
        }
    }

    // Survivors by value parity, ascending (the sequence is increasing).
    let evens: Vec<u64> = (0..t).filter(|&j| alive[j] && m[j] % 2 == 0).map(|j| m[j]).collect();
    let odds: Vec<u64> = (0..t).filter(|&j| alive[j] && m[j] % 2 == 1).map(|j| m[j]).collect();
    let need_even = n - n / 2;
    let need_odd = n / 2;
    if evens.len() < need_even || odds.len() < need_odd {
        return Err(SelectionError::InsufficientParity {
            need_odd,
            need_even,
            have_odd: odds.len(),
            have_even: evens.len(),
        }
        .into());
    }
    let mut ks = Vec::with_capacity(n);
    let (mut ei, mut oi) = (0usize, 0usize);
    for pos in 0..n {
        if pos % 2 == 0 {
            ks.push(evens[ei]);
            ei += 1;
        } else {
            ks.push(odds[oi]);
            oi += 1;
        }
    }

    let report = check_conditions(profile, &ks)?;
    if !report.ok {
        let condition = report
            .conditions
            .iter()
            .find(|c| !c.passed)
            .map(|c| c.number)
            .unwrap_or(0);
        return Err(SelectionError::FinalCheck { condition }.into());
    }
    let assumptions = report.assumptions.clone();
    Ok(Selection {
        ks,
        t,
        m_sequence: m,
        discarded,
        report,
        assumptions,
    })
}

/// Options for [`search_ks`]. The exhaustive walk refuses spaces larger
/// than `bound`; switch to `randomized` sampling for those.
#[derive(Debug, Clone)]
pub struct SearchOptions {
    pub bound: u64,
    pub randomized: Option<RandomSearch>,
}

#[derive(Debug, Clone, Copy)]
pub struct RandomSearch {
    pub seed: u64,
    pub trials: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            bound: 1_000_000,
            randomized: None,
        }
    }
}

/// Find any tuple passing [`check_conditions`], either by lexicographic
/// exhaustion over the alternating-parity candidate space or, when
/// `randomized` is set, by seeded sampling of that space. Returns Ok(None)
/// when the space is exhausted (or the trial budget spent) without a hit.
pub fn search_ks(
    profile: &IrregularityProfile,
    n: usize,
    opts: &SearchOptions,
) -> Result<Option<Vec<u64>>> {
    let p = profile.p;
    let half = (p - 1) / 2;
    // Candidate values by position parity (condition 2 built in).
    let evens: Vec<u64> = (2..half).step_by(2).collect();
    let odds: Vec<u64> = (1..half).step_by(2).collect();
    let pools: Vec<&[u64]> = (0..n)
        .map(|pos| {
            if pos % 2 == 0 {
                evens.as_slice()
            } else {
                odds.as_slice()
            }
        })
        .collect();
    if pools.iter().any(|pool| pool.is_empty()) {
        return Ok(None);
    }

    if let Some(random) = opts.randomized {
        let mut rng = ChaCha20Rng::seed_from_u64(random.seed);
        for _ in 0..random.trials {
            let ks: Vec<u64> = pools
                .iter()
                .map(|pool| pool[rng.gen_range(0..pool.len())])
                .collect();
            if check_conditions(profile, &ks)?.ok {
                return Ok(Some(ks));
            }
        }
        return Ok(None);
    }

    let space: u64 = pools
        .iter()
        .try_fold(1u64, |acc, pool| acc.checked_mul(pool.len() as u64))
        .unwrap_or(u64::MAX);
    if space > opts.bound {
        return Err(Error::SearchBound { bound: opts.bound });
    }
    // Odometer over the candidate pools, lexicographic.
    let mut idx = vec![0usize; n];
    loop {
        let ks: Vec<u64> = idx.iter().zip(&pools).map(|(&i, pool)| pool[i]).collect();
        if check_conditions(profile, &ks)?.ok {
            return Ok(Some(ks));
        }
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(None);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < pools[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::Budget;
    use proptest::prelude::*;

    fn profile(p: u64) -> IrregularityProfile {
        IrregularityProfile::compute(p, &Budget::unlimited()).unwrap()
    }

    #[test]
    fn m_sequence_matches_doubling_pattern() {
        assert_eq!(m_sequence(2), vec![4, 9]);
        assert_eq!(m_sequence(4), vec![4, 9, 16, 33]);
        assert_eq!(m_sequence(5), vec![4, 9, 16, 33, 64]);
        // Parity alternates starting even.
        for (j, &m) in m_sequence(10).iter().enumerate() {
            assert_eq!(m % 2, (j as u64) % 2);
        }
    }

    #[test]
    fn m_sequence_is_absolutely_sidon() {
        for t in 1..=20 {
            assert_eq!(sidon_check_absolute(&m_sequence(t)), None, "t = {t}");
        }
    }

    #[test]
    fn sidon_violations_are_witnessed() {
        // 2-1 = 3-2, first seen as (1,2) and (2,3) (differences -1).
        assert_eq!(
            sidon_check(&[1, 2, 3], 100),
            Some(SidonViolation::EqualDifferences {
                first: (1, 2),
                second: (2, 3),
                value: 99,
            })
        );
        assert_eq!(
            sidon_check(&[5, 5], 100),
            Some(SidonViolation::ZeroDifference { i: 1, j: 2 })
        );
        // Congruent mod the modulus even though distinct as integers.
        assert_eq!(
            sidon_check(&[3, 25], 22),
            Some(SidonViolation::ZeroDifference { i: 1, j: 2 })
        );
        assert_eq!(sidon_check(&[4, 9, 16], 100), None);
    }

    #[test]
    fn conditions_pass_for_reference_tuples() {
        let report = check_conditions(&profile(23), &[4, 9]).unwrap();
        assert!(report.ok, "{report:?}");
        assert_eq!(report.assumptions, vec!["vandiver"]);
        let report = check_conditions(&profile(37), &[4, 9, 16]).unwrap();
        assert!(report.ok, "{report:?}");
    }

    #[test]
    fn condition_one_catches_boundary() {
        // (19-1)/2 = 9 and k_2 = 9 is not strictly below it.
        let report = check_conditions(&profile(19), &[4, 9]).unwrap();
        assert!(!report.ok);
        assert_eq!(
            report.conditions[0].witness,
            Some(ConditionWitness::OutOfRange { i: 2, k: 9 })
        );
        assert!(report.conditions[2].passed);
    }

    #[test]
    fn condition_two_catches_parity() {
        let report = check_conditions(&profile(23), &[3, 9]).unwrap();
        assert_eq!(
            report.conditions[1].witness,
            Some(ConditionWitness::WrongParity { i: 1, k: 3 })
        );
    }

    #[test]
    fn condition_three_catches_adjacent_difference() {
        let report = check_conditions(&profile(23), &[4, 5]).unwrap();
        assert!(!report.ok);
        assert_eq!(
            report.conditions[2].witness,
            Some(ConditionWitness::AdjacentDifference { i: 2, j: 1 })
        );
    }

    #[test]
    fn condition_five_catches_certified_eigenspace() {
        // p = 37 has irregular index 32, so eigenspace 5 = 37 - 32 is
        // certified nonzero; the difference k_1 - k_3 = -4 ≡ 32 points at it.
        let report = check_conditions(&profile(37), &[2, 9, 6]).unwrap();
        assert!(report.conditions[0].passed);
        assert!(report.conditions[1].passed);
        assert!(report.conditions[2].passed);
        assert!(report.conditions[3].passed);
        assert_eq!(
            report.conditions[4].witness,
            Some(ConditionWitness::BadEigenspace {
                i: 1,
                j: 3,
                index: 5
            })
        );
        assert_eq!(
            difference_eigenspace_index(37, 2, 6),
            5,
        );
    }

    #[test]
    fn select_smallest_reference_case() {
        let sel = select_ks(&profile(23), 2, 0).unwrap();
        assert_eq!(sel.ks, vec![4, 9]);
        assert_eq!(sel.t, 2);
        assert!(sel.discarded.is_empty());
        assert!(sel.report.ok);
        assert_eq!(sel.assumptions, vec!["vandiver"]);
    }

    #[test]
    fn select_fails_at_the_boundary_prime() {
        let err = select_ks(&profile(19), 2, 0).unwrap_err();
        assert_eq!(
            err,
            Error::Selection(SelectionError::Boundary {
                t: 2,
                value: 9,
                limit: 9
            })
        );
    }

    #[test]
    fn select_requires_enough_spares() {
        let err = select_ks(&profile(37), 2, 0).unwrap_err();
        assert_eq!(
            err,
            Error::Selection(SelectionError::NotEnoughSpares { e_p: 1, e: 0 })
        );
    }

    #[test]
    fn select_for_irregular_prime_without_collisions() {
        // 131 is irregular (index 22) but no difference of the doubling
        // sequence hits it, so nothing is discarded.
        let sel = select_ks(&profile(131), 3, 1).unwrap();
        assert_eq!(sel.ks, vec![4, 9, 16]);
        assert_eq!(sel.m_sequence, vec![4, 9, 16, 33, 64]);
        assert!(sel.discarded.is_empty());
    }

    #[test]
    fn select_discards_on_certified_collision() {
        // 103 is irregular at index 24 and 33 - 9 = 24, so the pair (4, 2)
        // of the m-sequence [4, 9, 16, 33] is bad: 33 gets dropped.
        let sel = select_ks(&profile(103), 2, 1).unwrap();
        assert_eq!(sel.ks, vec![4, 9]);
        assert_eq!(
            sel.discarded,
            vec![Discard {
                value: 33,
                pair: (4, 2),
                eigenspace_index: 79,
            }]
        );
    }

    #[test]
    fn search_finds_lexicographic_first() {
        let ks = search_ks(&profile(23), 2, &SearchOptions::default())
            .unwrap()
            .unwrap();
        assert_eq!(ks, vec![2, 5]);
    }

    #[test]
    fn search_exhausts_tiny_space() {
        // (7-1)/2 = 3 leaves candidates {1, 2}: no 3-tuple can alternate.
        let found = search_ks(&profile(7), 3, &SearchOptions::default()).unwrap();
        assert_eq!(found, None);
    }

    #[test]
    fn search_respects_bound() {
        let opts = SearchOptions {
            bound: 10,
            randomized: None,
        };
        let err = search_ks(&profile(23), 2, &opts).unwrap_err();
        assert_eq!(err, Error::SearchBound { bound: 10 });
    }

    #[test]
    fn randomized_search_is_seed_deterministic() {
        let opts = |seed| SearchOptions {
            bound: 0,
            randomized: Some(RandomSearch { seed, trials: 500 }),
        };
        let a = search_ks(&profile(37), 2, &opts(7)).unwrap().unwrap();
        let b = search_ks(&profile(37), 2, &opts(7)).unwrap().unwrap();
        assert_eq!(a, b);
        assert!(check_conditions(&profile(37), &a).unwrap().ok);
    }

    proptest! {
        #[test]
        fn selection_output_always_passes_checks(
            p_idx in 0usize..6,
            n in 2usize..5,
            e in 0u64..3,
        ) {
            let p = [23u64, 31, 43, 47, 53, 131][p_idx];
            let prof = profile(p);
            if let Ok(sel) = select_ks(&prof, n, e) {
                let report = check_conditions(&prof, &sel.ks).unwrap();
                prop_assert!(report.ok);
                prop_assert_eq!(sel.ks.len(), n);
            }
        }

        #[test]
        fn random_search_hits_valid_tuples(seed in 0u64..50) {
            let prof = profile(31);
            let opts = SearchOptions {
                bound: 0,
                randomized: Some(RandomSearch { seed, trials: 200 }),
            };
            if let Some(ks) = search_ks(&prof, 2, &opts).unwrap() {
                prop_assert!(check_conditions(&prof, &ks).unwrap().ok);
            }
        }
    }
}
