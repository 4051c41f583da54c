//! Step-by-step lifting of the residual diagonal representation through
//! the congruence tower Z/p^2 → ... → Z/p^m.
//!
//! A lift at level l assigns an invertible matrix over Z/p^l to each model
//! generator so that every relator evaluates to the identity exactly, the
//! determinant equals a fixed character ψ, pro-p generators map into the
//! principal congruence subgroup, and the mod-p reduction is the diagonal
//! torus representation picked out by the exponent tuple.
//!
//! One lifting step works in three moves:
//!   1. lift every image entrywise (any set-theoretic lift will do),
//!   2. restore det = ψ by a scalar factor 1 + p^l s_g per generator
//!      (possible when p ∤ n),
//!   3. cancel the relator defects by one joint linear solve: perturbing
//!      images by (Id + p^l u_g) with u_g trace-zero changes each relator
//!      value by the linearized rows of [`cohomology::relator_rows`], so
//!      the defects z_r give an F_p system L(u) = -z. Trace-zero unknowns
//!      keep move 2 intact; the defects are trace-zero because ψ kills
//!      every relator.
//!
//! With the standard presentation the system is always consistent; custom
//! relators (say x_1^p = 1) can make it unsolvable, which is reported as a
//! genuine obstruction naming the offending relator.

use serde::{Deserialize, Serialize};

use crate::adjoint::sl_basis;
use crate::cohomology::{is_cocycle, relator_rows, ActionData};
use crate::error::{Error, Result};
use crate::linalg::{null_space, solve};
use crate::matrix::Mat;
use crate::model::{evaluate_word, Character, GeneratorKind, ModelGroup};
use crate::zp::{omega_pow, pow_mod, primitive_root, Modulus};

/// Which determinant character the lift should hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetMode {
    /// det = τ̃: pure Teichmüller on σ, trivial on γ. The one-unit part
    /// of the determinant is pushed into the trace-zero frame, so the
    /// Φ-modules land inside trace-zero matrices.
    Paper,
    /// det = τ = χ^{Σk}: the raw determinant of the diagonal weight
    /// tuple, (1+p)^{Σk} on γ.
    Plain,
}

impl DetMode {
    pub fn character(self, model: &ModelGroup, ks: &[u64]) -> Result<Character> {
        match self {
            DetMode::Paper => Character::tau_tilde(model, ks),
            DetMode::Plain => Character::tau(model, ks),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DetMode::Paper => "paper",
            DetMode::Plain => "plain",
        }
    }
}

/// A verified lift: images, level, determinant character, and weights.
/// Construction re-checks every invariant, so a `LiftRep` in hand is a
/// certificate that the relators hold exactly at its level.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftRep {
    model: ModelGroup,
    level: u32,
    images: Vec<Mat>,
    psi: Character,
    ks: Vec<u64>,
}

impl LiftRep {
    pub fn new(
        model: ModelGroup,
        level: u32,
        images: Vec<Mat>,
        psi: Character,
        ks: Vec<u64>,
    ) -> Result<LiftRep> {
        if level < 1 || level > model.level {
            return Err(Error::InvalidRep(format!(
                "level {level} outside 1..={}",
                model.level
            )));
        }
        if images.len() != model.generators.len() {
            return Err(Error::InvalidRep(format!(
                "{} images for {} generators",
                images.len(),
                model.generators.len()
            )));
        }
        let n = ks.len();
        let modulus = Modulus::new(model.p, level)?;
        for (gen, img) in model.generators.iter().zip(&images) {
            if img.n() != n || img.modulus() != modulus {
                return Err(Error::InvalidRep(format!(
                    "image of {} has wrong shape or modulus",
                    gen.name
                )));
            }
        }

        // Pro-p generators land in the principal congruence subgroup.
        for (gen, img) in model.generators.iter().zip(&images) {
            if matches!(gen.kind, GeneratorKind::ProP { .. })
                && !img.reduce_to(1)?.is_identity()
            {
                return Err(Error::InvalidRep(format!(
                    "image of pro-p generator {} is not ≡ Id mod p",
                    gen.name
                )));
            }
        }

        // The torsion generator reduces to the diagonal torus rep.
        let p = model.p;
        let g = primitive_root(p);
        let fp = Modulus::new(p, 1)?;
        let expected =
            Mat::diag(&ks.iter().map(|&k| fp.reduce(pow_mod(g, k % (p - 1), p) as i128)).collect::<Vec<_>>());
        if images[0].reduce_to(1)? != expected {
            return Err(Error::InvalidRep(
                "torsion image does not reduce to diag(g^{k_i}) mod p".into(),
            ));
        }

        // Relators evaluate to the identity exactly at this level.
        for relator in &model.relators {
            let value = evaluate_word(&images, &relator.word)?;
            if !value.is_identity() {
                return Err(Error::InvalidRep(format!(
                    "relator {} is not exact at level {level}",
                    relator.name
                )));
            }
        }

        // Determinant equals ψ, reduced to this level.
        for (idx, (gen, img)) in model.generators.iter().zip(&images).enumerate() {
            let want = psi.value(idx).ring().reduce_to(level)?;
            if img.det() != want {
                return Err(Error::InvalidRep(format!(
                    "det of {} image is {} but ψ demands {}",
                    gen.name,
                    img.det().value(),
                    want.value()
                )));
            }
        }

        Ok(LiftRep {
            model,
            level,
            images,
            psi,
            ks,
        })
    }

    pub fn model(&self) -> &ModelGroup {
        &self.model
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn images(&self) -> &[Mat] {
        &self.images
    }

    pub fn image(&self, g: usize) -> &Mat {
        &self.images[g]
    }

    pub fn psi(&self) -> &Character {
        &self.psi
    }

    pub fn ks(&self) -> &[u64] {
        &self.ks
    }

    pub fn n(&self) -> usize {
        self.ks.len()
    }
}

/// The level-1 representation: σ ↦ diag(g^{k_i}), everything pro-p ↦ Id.
pub fn residual_rep(model: &ModelGroup, ks: &[u64], psi: Character) -> Result<LiftRep> {
    let p = model.p;
    let g = primitive_root(p);
    let fp = Modulus::new(p, 1)?;
    let diag: Vec<_> = ks
        .iter()
        .map(|&k| fp.reduce(pow_mod(g, k % (p - 1), p) as i128))
        .collect();
    let mut images = vec![Mat::diag(&diag)];
    for _ in 1..model.generators.len() {
        images.push(Mat::identity(ks.len(), fp));
    }
    LiftRep::new(model.clone(), 1, images, psi, ks.to_vec())
}

/// The explicit level-2 lift: σ as the exact Teichmüller diagonal, γ as
/// the shifted weight diagonal diag(1 + p(k_i - δ)) with δ chosen so the
/// determinant matches ψ(γ) mod p², and x_d ↦ Id + p e_{ij} for the
/// unique ordered pair with k_i - k_j ≡ d mod p-1 (identity when none).
pub fn build_rho2(model: &ModelGroup, ks: &[u64], psi: Character) -> Result<LiftRep> {
    let p = model.p;
    let n = ks.len();
    let z2 = Modulus::new(p, 2)?;
    let fp = Modulus::new(p, 1)?;

    // Distinct ordered differences mod p-1 make the e_{ij} assignment
    // well-posed.
    let mut seen = std::collections::BTreeSet::new();
    for (i, &ki) in ks.iter().enumerate() {
        for (j, &kj) in ks.iter().enumerate() {
            if i != j {
                let d = (ki as i128 - kj as i128).rem_euclid((p - 1) as i128) as u64;
                if d == 0 || !seen.insert(d) {
                    return Err(Error::IndistinctCharacters);
                }
            }
        }
    }

    let mut images = Vec::with_capacity(model.generators.len());
    for (idx, gen) in model.generators.iter().enumerate() {
        let img = match gen.kind {
            GeneratorKind::Torsion => {
                let diag: Vec<_> = ks
                    .iter()
                    .map(|&k| omega_pow(z2, k))
                    .collect::<Result<Vec<_>>>()?;
                Mat::diag(&diag)
            }
            GeneratorKind::ProP { exponent: 0 } => {
                // ψ(γ) mod p² = 1 + p w; solve n δ ≡ Σk - w for the shift.
                let w = {
                    let v = psi.value(idx).ring().reduce_to(2)?.value();
                    debug_assert_eq!(v % p, 1);
                    (v - 1) / p
                };
                let s: u64 = ks.iter().sum::<u64>() % p;
                let target = fp.reduce(s as i128 - w as i128);
                let delta = if n as u64 % p == 0 {
                    if !target.is_zero() {
                        return Err(Error::DetFixNeedsPCoprimeN { p, n });
                    }
                    fp.zero()
                } else {
                    target * fp.reduce(n as i128).inverse()?
                };
                let diag: Vec<_> = ks
                    .iter()
                    .map(|&k| {
                        let c = (fp.reduce(k as i128) - delta).value();
                        z2.reduce(1 + (p * c) as i128)
                    })
                    .collect();
                Mat::diag(&diag)
            }
            GeneratorKind::ProP { exponent } => {
                let d = exponent % (p - 1);
                let mut img = Mat::identity(n, z2);
                'outer: for (i, &ki) in ks.iter().enumerate() {
                    for (j, &kj) in ks.iter().enumerate() {
                        if i != j
                            && (ki as i128 - kj as i128).rem_euclid((p - 1) as i128) as u64 == d
                        {
                            img.set(i, j, z2.reduce(p as i128));
                            break 'outer;
                        }
                    }
                }
                img
            }
        };
        images.push(img);
    }
    LiftRep::new(model.clone(), 2, images, psi, ks.to_vec())
}

/// One lifting step, level l → l+1.
pub fn lift_step(rep: &LiftRep) -> Result<LiftRep> {
    let l = rep.level;
    let next = l + 1;
    if next > rep.model.level {
        return Err(Error::InvalidRep(format!(
            "cannot lift past working level {}",
            rep.model.level
        )));
    }
    let p = rep.model.p;
    let n = rep.n();
    let modulus = Modulus::new(p, next)?;
    let fp = Modulus::new(p, 1)?;
    let step = p.pow(l);

    // 1. Entrywise lift.
    let mut images: Vec<Mat> = rep
        .images
        .iter()
        .map(|img| img.lift_to(next))
        .collect::<Result<_>>()?;

    // 2. Scalar determinant fix: det is off ψ by 1 + p^l d_g; multiply by
    //    1 + p^l s_g with n s_g ≡ -d_g mod p.
    for (idx, img) in images.iter_mut().enumerate() {
        let want = rep.psi.value(idx).ring().reduce_to(next)?;
        let have = img.det();
        let ratio = (have * want.inverse()?).value();
        debug_assert_eq!(ratio % step, 1 % step);
        let d = (ratio / step) % p;
        if d != 0 {
            if n as u64 % p == 0 {
                return Err(Error::DetFixNeedsPCoprimeN { p, n });
            }
            let s = (fp.reduce(-(d as i128)) * fp.reduce(n as i128).inverse()?).value();
            *img = img.scale(modulus.reduce(1 + (step * s) as i128));
        }
    }

    // 3. Joint defect solve over trace-zero perturbations.
    let action = ActionData::adjoint(&rep.model, &images)?;
    let basis = sl_basis(n, fp);
    let bdim = basis.len();
    let gens = images.len();
    let dim = n * n;

    let mut a_rows: Vec<Vec<u64>> = Vec::new();
    let mut rhs: Vec<u64> = Vec::new();
    let mut spans: Vec<(usize, usize)> = Vec::new(); // row ranges per relator
    for relator in &rep.model.relators {
        let rows = relator_rows(&action, &relator.word)?;
        let value = evaluate_word(&images, &relator.word)?;
        let start = a_rows.len();
        for (r, full_row) in rows.iter().enumerate() {
            let mut row = vec![0u64; gens * bdim];
            for g in 0..gens {
                for (b, x) in basis.iter().enumerate() {
                    let mut acc: u128 = 0;
                    for c in 0..dim {
                        acc += (full_row[g * dim + c] as u128) * (x.entries()[c] as u128);
                    }
                    row[g * bdim + b] = (acc % p as u128) as u64;
                }
            }
            a_rows.push(row);

            let (i, j) = (r / n, r % n);
            let have = value.get(i, j).value();
            let delta = u64::from(i == j);
            let diff = (have + modulus.pm() - delta) % modulus.pm();
            debug_assert_eq!(diff % step, 0, "relator {} broken at level {l}", relator.name);
            let z = (diff / step) % p;
            rhs.push((p - z) % p);
        }
        spans.push((start, a_rows.len()));
    }

    let solution = match solve(&a_rows, &rhs, p) {
        Some(x) => x,
        None => {
            // Name a single offending relator if one is individually
            // unsolvable; otherwise the inconsistency is joint.
            for (relator, &(lo, hi)) in rep.model.relators.iter().zip(&spans) {
                if solve(&a_rows[lo..hi], &rhs[lo..hi], p).is_none() {
                    return Err(Error::Obstructed {
                        relator: relator.name.clone(),
                    });
                }
            }
            return Err(Error::Obstructed {
                relator: "joint system".into(),
            });
        }
    };

    // 4. Apply the perturbations.
    for (g, img) in images.iter_mut().enumerate() {
        let coeffs = &solution[g * bdim..(g + 1) * bdim];
        if coeffs.iter().all(|&c| c == 0) {
            continue;
        }
        let mut u = Mat::zero(n, fp);
        for (b, x) in basis.iter().enumerate() {
            if coeffs[b] != 0 {
                u = u + x.scale(fp.reduce(coeffs[b] as i128));
            }
        }
        let perturb = Mat::from_fn(n, modulus, |i, j| {
            let base = u64::from(i == j);
            (base + step * u.get(i, j).value()) as i128
        });
        *img = perturb * img.clone();
    }

    LiftRep::new(
        rep.model.clone(),
        next,
        images,
        rep.psi.clone(),
        rep.ks.clone(),
    )
}

/// Lift to the target level by repeated steps.
pub fn lift_to(rep: &LiftRep, level: u32) -> Result<LiftRep> {
    if level < rep.level {
        return Err(Error::InvalidRep(format!(
            "target level {level} below current level {}",
            rep.level
        )));
    }
    let mut current = rep.clone();
    while current.level < level {
        current = lift_step(&current)?;
    }
    Ok(current)
}

/// Per-relator defect vectors of a candidate set-lift one level up: the
/// candidate images must reduce to the lift's, so each relator evaluates
/// to Id + p^l z_r; the flattened z_r over F_p are returned in relator
/// order. All zero exactly when the candidate is already a homomorphism;
/// these are the right-hand sides the lifting solve cancels.
pub fn obstruction(rep: &LiftRep, candidate: &[Mat]) -> Result<Vec<Vec<u64>>> {
    let next = rep.level + 1;
    if next > rep.model.level {
        return Err(Error::InvalidRep(format!(
            "candidate level {next} past working level {}",
            rep.model.level
        )));
    }
    if candidate.len() != rep.images.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} candidate images for {} generators",
            candidate.len(),
            rep.images.len()
        )));
    }
    let p = rep.model.p;
    let modulus = Modulus::new(p, next)?;
    let step = p.pow(rep.level);
    let n = rep.n();
    for (c, img) in candidate.iter().zip(&rep.images) {
        if c.modulus() != modulus || c.n() != n {
            return Err(Error::ShapeMismatch(
                "candidate image has wrong shape or modulus".into(),
            ));
        }
        if c.reduce_to(rep.level)? != *img {
            return Err(Error::BadCandidateReduction { level: rep.level });
        }
    }
    let mut defects = Vec::with_capacity(rep.model.relators.len());
    for relator in &rep.model.relators {
        let value = evaluate_word(candidate, &relator.word)?;
        let mut z = Vec::with_capacity(n * n);
        for (idx, &v) in value.entries().iter().enumerate() {
            let delta = u64::from(idx / n == idx % n);
            let diff = (v + modulus.pm() - delta) % modulus.pm();
            debug_assert_eq!(diff % step, 0);
            z.push((diff / step) % p);
        }
        defects.push(z);
    }
    Ok(defects)
}

/// The difference of two lifts at the same level L that agree mod
/// p^{L-1}: a(g) = (Id + p^{L-1} h(g)) b(g) defines an F_p cochain h,
/// returned flat (generator-blocked, row-major). If both are valid lifts
/// with the same ψ, h is automatically a trace-zero cocycle.
pub fn lift_difference(a: &LiftRep, b: &LiftRep) -> Result<Vec<u64>> {
    if a.model != b.model || a.level != b.level || a.ks != b.ks {
        return Err(Error::ShapeMismatch(
            "lift difference needs matching model, level, and weights".into(),
        ));
    }
    let level = a.level;
    if level < 2 {
        return Err(Error::ShapeMismatch(
            "lift difference needs level at least 2".into(),
        ));
    }
    let p = a.model.p;
    let step = p.pow(level - 1);
    let pm = p.pow(level);
    let n = a.n();
    let mut h = Vec::with_capacity(a.images.len() * n * n);
    for (ia, ib) in a.images.iter().zip(&b.images) {
        if ia.reduce_to(level - 1)? != ib.reduce_to(level - 1)? {
            return Err(Error::BadCandidateReduction { level: level - 1 });
        }
        let ratio = ia.clone() * ib.inverse()?;
        for (idx, &v) in ratio.entries().iter().enumerate() {
            let delta = u64::from(idx / n == idx % n);
            let diff = (v + pm - delta) % pm;
            debug_assert_eq!(diff % step, 0);
            h.push((diff / step) % p);
        }
    }
    Ok(h)
}

/// Twist a level-L lift by a trace-zero adjoint cocycle at the top scale:
/// images become (Id + p^{L-1} h(g)) · image. The result is again a valid
/// lift with the same ψ and the same reduction mod p^{L-1}.
pub fn twist_by_cocycle(rep: &LiftRep, h: &[u64]) -> Result<LiftRep> {
    let n = rep.n();
    let dim = n * n;
    let gens = rep.images.len();
    if h.len() != gens * dim {
        return Err(Error::ShapeMismatch(format!(
            "cochain length {} != gens·n² = {}",
            h.len(),
            gens * dim
        )));
    }
    if rep.level < 2 {
        return Err(Error::ShapeMismatch("twisting needs level at least 2".into()));
    }
    let p = rep.model.p;
    for g in 0..gens {
        let trace: u64 = (0..n).map(|i| h[g * dim + i * n + i] % p).sum::<u64>() % p;
        if trace != 0 {
            return Err(Error::NotACocycle(format!(
                "block for generator {} has nonzero trace",
                rep.model.generators[g].name
            )));
        }
    }
    let action = ActionData::adjoint(&rep.model, &rep.images)?;
    if !is_cocycle(&rep.model, &action, h)? {
        return Err(Error::NotACocycle("relator condition fails".into()));
    }
    let modulus = Modulus::new(p, rep.level)?;
    let step = p.pow(rep.level - 1);
    let images: Vec<Mat> = rep
        .images
        .iter()
        .enumerate()
        .map(|(g, img)| {
            let perturb = Mat::from_fn(n, modulus, |i, j| {
                (u64::from(i == j) + step * (h[g * dim + i * n + j] % p)) as i128
            });
            perturb * img.clone()
        })
        .collect();
    LiftRep::new(
        rep.model.clone(),
        rep.level,
        images,
        rep.psi.clone(),
        rep.ks.clone(),
    )
}

/// Basis of the trace-zero adjoint cocycles Z¹(Ad⁰) for the residual
/// action of a lift: the twists available at each step.
pub fn ad0_cocycle_basis(rep: &LiftRep) -> Result<Vec<Vec<u64>>> {
    let action = ActionData::adjoint(&rep.model, &rep.images)?;
    let n = rep.n();
    let dim = n * n;
    let gens = rep.images.len();
    let mut stacked = Vec::new();
    for relator in &rep.model.relators {
        stacked.extend(relator_rows(&action, &relator.word)?);
    }
    // One trace row per generator.
    for g in 0..gens {
        let mut row = vec![0u64; gens * dim];
        for i in 0..n {
            row[g * dim + i * n + i] = 1;
        }
        stacked.push(row);
    }
    Ok(null_space(&stacked, rep.model.p))
}
