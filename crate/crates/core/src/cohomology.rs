//! First cohomology of the model group on finite F_p-modules, computed
//! straight from the presentation.
//!
//! A 1-cocycle is determined by its values on generators; the relators cut
//! out the linear conditions. For a relator w = g_1^{e_1} ... g_k^{e_k} the
//! condition comes from linearizing: perturb each image by (1 + ε f(g)) on
//! the left, expand w to first order in ε, and collect the coefficient of
//! each f(g). The bookkeeping only involves the *action* matrices A_g (not
//! the images themselves): walking the word left to right with prefix
//! action P, a letter (g, e) contributes P · S_e(A_g) to the block of
//! f(g), where S_e is the geometric sum
//!
//!   S_e(A) = Id + A + ... + A^{e-1}        (e >= 0)
//!   S_e(A) = -(A^e + ... + A^{-1})         (e < 0).
//!
//! Coboundaries are the cocycles g ↦ (Id - A_g) v. The same row machinery
//! feeds the deformation solver, which equates these linear forms with
//! explicit relator defects.

use crate::error::{Error, Result};
use crate::linalg::{null_space, FpSpan};
use crate::matrix::Mat;
use crate::model::{GeneratorKind, ModelGroup};
use crate::zp::{pow_mod, Modulus};

/// An action of the model group on F_p^dim: one invertible matrix per
/// generator, over Z/p (level-1 `Mat`s).
#[derive(Debug, Clone)]
pub struct ActionData {
    p: u64,
    dim: usize,
    mats: Vec<Mat>,
}

impl ActionData {
    pub fn new(p: u64, mats: Vec<Mat>) -> Result<ActionData> {
        let first = mats
            .first()
            .ok_or_else(|| Error::ShapeMismatch("action needs at least one generator".into()))?;
        let dim = first.n();
        let fp = Modulus::new(p, 1)?;
        for m in &mats {
            if m.modulus() != fp || m.n() != dim {
                return Err(Error::ShapeMismatch(
                    "action matrices must share one size over Z/p".into(),
                ));
            }
            m.inverse()?;
        }
        Ok(ActionData { p, dim, mats })
    }

    /// The one-dimensional twist F_p(χ̄^d): σ acts by g^d, pro-p
    /// generators act trivially (their residual character values are 1).
    pub fn scalar_twist(model: &ModelGroup, d: u64) -> Result<ActionData> {
        let p = model.p;
        let fp = Modulus::new(p, 1)?;
        let g = crate::zp::primitive_root(p);
        let mats = model
            .generators
            .iter()
            .map(|gen| match gen.kind {
                GeneratorKind::Torsion => {
                    Mat::from_entries(1, fp, vec![pow_mod(g, d % (p - 1), p)]).unwrap()
                }
                GeneratorKind::ProP { .. } => Mat::identity(1, fp),
            })
            .collect();
        ActionData::new(p, mats)
    }

    /// The adjoint action on n×n matrices: A_g = (u ↦ M̄_g u M̄_g^{-1})
    /// flattened row-major to n²×n², from the mod-p reductions of the
    /// given images.
    pub fn adjoint(model: &ModelGroup, images: &[Mat]) -> Result<ActionData> {
        if images.len() != model.generators.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} images for {} generators",
                images.len(),
                model.generators.len()
            )));
        }
        let p = model.p;
        let fp = Modulus::new(p, 1)?;
        let mut mats = Vec::with_capacity(images.len());
        for image in images {
            let m = image.reduce_to(1)?;
            let minv = m.inverse()?;
            let n = m.n();
            let conj = Mat::from_fn(n * n, fp, |row, col| {
                let (i, j) = (row / n, row % n);
                let (k, l) = (col / n, col % n);
                (m.get(i, k).value() as i128) * (minv.get(l, j).value() as i128)
            });
            mats.push(conj);
        }
        ActionData::new(p, mats)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generator_count(&self) -> usize {
        self.mats.len()
    }

    pub fn matrix(&self, g: usize) -> &Mat {
        &self.mats[g]
    }
}

/// S_e(A) by binary doubling: S_{2k} = (Id + A^k) S_k, S_{k+1} = S_k + A^k.
pub fn geometric_sum(a: &Mat, e: i64) -> Result<Mat> {
    if e < 0 {
        let ainv = a.inverse()?;
        let pos = geometric_sum(&ainv, -e)?;
        return Ok(-(ainv * pos));
    }
    let n = a.n();
    let modulus = a.modulus();
    let mut sum = Mat::zero(n, modulus);
    let mut power = Mat::identity(n, modulus);
    if e == 0 {
        return Ok(sum);
    }
    let bits = 63 - e.leading_zeros();
    for bit in (0..=bits).rev() {
        sum = sum.clone() + power.clone() * sum;
        power = power.clone() * power;
        if (e >> bit) & 1 == 1 {
            sum = sum + power.clone();
            power = power * a.clone();
        }
    }
    Ok(sum)
}

/// The linearized relator condition as a dim × (gens·dim) row block: the
/// rows of the matrix L with L · (f(g_0), ..., f(g_last)) = defect
/// coefficient of the relator. Cocycles are exactly the null space of the
/// stacked rows over all relators.
pub fn relator_rows(action: &ActionData, word: &[(usize, i64)]) -> Result<Vec<Vec<u64>>> {
    let d = action.dim;
    let gens = action.generator_count();
    let fp = action.mats[0].modulus();
    let mut blocks = vec![Mat::zero(d, fp); gens];
    let mut prefix = Mat::identity(d, fp);
    for &(g, e) in word {
        let s = geometric_sum(&action.mats[g], e)?;
        blocks[g] = blocks[g].clone() + prefix.clone() * s;
        prefix = prefix * action.mats[g].pow(e as i128)?;
    }
    let mut rows = vec![vec![0u64; gens * d]; d];
    for (g, block) in blocks.iter().enumerate() {
        for r in 0..d {
            for c in 0..d {
                rows[r][g * d + c] = block.get(r, c).value();
            }
        }
    }
    Ok(rows)
}

/// Cocycles, coboundaries, and their dimensions for one action. Cocycles
/// are flat vectors of length gens·dim, blocked by generator.
#[derive(Debug, Clone)]
pub struct CocycleSpace {
    p: u64,
    dim: usize,
    z_basis: Vec<Vec<u64>>,
    b_span: FpSpan,
}

pub fn cocycle_space(model: &ModelGroup, action: &ActionData) -> Result<CocycleSpace> {
    if action.generator_count() != model.generators.len() {
        return Err(Error::ShapeMismatch(
            "action does not match the model's generators".into(),
        ));
    }
    let d = action.dim;
    let gens = action.generator_count();
    let mut stacked = Vec::new();
    for relator in &model.relators {
        stacked.extend(relator_rows(action, &relator.word)?);
    }
    let z_basis = null_space(&stacked, action.p);

    let mut b_span = FpSpan::new(action.p, gens * d);
    let fp = Modulus::new(action.p, 1)?;
    for basis_idx in 0..d {
        let mut cob = vec![0u64; gens * d];
        for g in 0..gens {
            let a = action.matrix(g);
            for r in 0..d {
                // (Id - A_g) e_{basis_idx}, row r.
                let mut entry = fp.reduce(-(a.get(r, basis_idx).value() as i128));
                if r == basis_idx {
                    entry = entry + fp.one();
                }
                cob[g * d + r] = entry.value();
            }
        }
        b_span.insert(&cob);
    }

    Ok(CocycleSpace {
        p: action.p,
        dim: d,
        z_basis,
        b_span,
    })
}

impl CocycleSpace {
    pub fn z1_dim(&self) -> usize {
        self.z_basis.len()
    }

    pub fn b1_dim(&self) -> usize {
        self.b_span.dim()
    }

    pub fn h1_dim(&self) -> usize {
        self.z1_dim() - self.b1_dim()
    }

    pub fn z_basis(&self) -> &[Vec<u64>] {
        &self.z_basis
    }

    /// The f(g) block of a flat cocycle vector.
    pub fn block<'a>(&self, f: &'a [u64], g: usize) -> &'a [u64] {
        &f[g * self.dim..(g + 1) * self.dim]
    }

    pub fn is_coboundary(&self, f: &[u64]) -> bool {
        self.b_span.contains(f)
    }

    /// Whether f1 and f2 differ by a coboundary.
    pub fn cohomologous(&self, f1: &[u64], f2: &[u64]) -> bool {
        let fp = Modulus::new(self.p, 1).unwrap();
        let diff: Vec<u64> = f1
            .iter()
            .zip(f2)
            .map(|(&a, &b)| (fp.reduce(a as i128) - fp.reduce(b as i128)).value())
            .collect();
        self.is_coboundary(&diff)
    }
}

/// Check the relator conditions for one explicit cochain.
pub fn is_cocycle(model: &ModelGroup, action: &ActionData, f: &[u64]) -> Result<bool> {
    if f.len() != action.generator_count() * action.dim {
        return Err(Error::ShapeMismatch(format!(
            "cochain length {} != gens·dim = {}",
            f.len(),
            action.generator_count() * action.dim
        )));
    }
    let p = action.p;
    for relator in &model.relators {
        for row in relator_rows(action, &relator.word)? {
            let mut acc: u128 = 0;
            for (a, b) in row.iter().zip(f) {
                acc = (acc + (*a as u128) * (*b as u128)) % p as u128;
            }
            if acc != 0 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
