//! A desk-scale finitely presented stand-in for the Galois group of the
//! maximal extension unramified outside p.
//!
//! The standard model at working level m has one torsion generator σ of
//! order p-1, one "cyclotomic-direction" pro-p generator γ, and one pro-p
//! generator x_d for each odd d in [1, p-2] — (p+1)/2 pro-p generators in
//! all. The relators are
//!
//!   σ^{p-1} = 1,   σ y σ^{-1} = y^{c(a)}   for each pro-p generator y,
//!
//! where a is the generator's twist exponent (0 for γ, d for x_d) and
//! c(a) = ω(g)^a mod p^{m-1} is a fixed integer: since pro-p images are
//! ≡ Id mod p, their exponents only matter mod p^{m-1}, so this one c(a)
//! is consistent at every lift level up to m.
//!
//! Characters of the model take units of Z/p^m as values: torsion values
//! on σ, one-units on the pro-p generators, constrained by the relators
//! (which force every x_d to 1 and leave γ free).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::zp::{omega_pow, one_unit_pow, unit_decompose, Modulus, RingElem, UnitElem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    /// Finite order p-1; the tame quotient.
    Torsion,
    /// Pro-p generator on which σ acts through the exponent-a power of
    /// the Teichmüller character.
    ProP { exponent: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generator {
    pub name: String,
    pub kind: GeneratorKind,
}

/// A relator as a word in the generators: (generator index, power).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relator {
    pub name: String,
    pub word: Vec<(usize, i64)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelGroup {
    pub p: u64,
    /// Working level m: representations live over Z/p^l for l <= m.
    pub level: u32,
    pub generators: Vec<Generator>,
    pub relators: Vec<Relator>,
}

/// c(a) = ω(g)^a reduced mod p^{m-1}, as a plain integer exponent.
pub fn conj_exponent(p: u64, m: u32, a: u64) -> Result<u64> {
    let lower = Modulus::new(p, m - 1)?;
    Ok(omega_pow(lower, a)?.value())
}

impl ModelGroup {
    /// The standard presentation at working level m >= 2.
    pub fn standard(p: u64, m: u32) -> Result<ModelGroup> {
        if m < 2 {
            return Err(Error::InvalidModel(
                "working level must be at least 2".into(),
            ));
        }
        Modulus::new(p, m)?;
        let mut generators = vec![
            Generator {
                name: "sigma".into(),
                kind: GeneratorKind::Torsion,
            },
            Generator {
                name: "gamma".into(),
                kind: GeneratorKind::ProP { exponent: 0 },
            },
        ];
        for d in (1..p - 1).step_by(2) {
            generators.push(Generator {
                name: format!("x_{d}"),
                kind: GeneratorKind::ProP { exponent: d },
            });
        }
        let mut relators = vec![Relator {
            name: "sigma_order".into(),
            word: vec![(0, (p - 1) as i64)],
        }];
        for (idx, generator) in generators.iter().enumerate().skip(1) {
            let GeneratorKind::ProP { exponent } = generator.kind else {
                unreachable!()
            };
            let c = conj_exponent(p, m, exponent)?;
            relators.push(Relator {
                name: format!("conj_{}", generator.name),
                word: vec![(0, 1), (idx, 1), (0, -1), (idx, -(c as i64))],
            });
        }
        let model = ModelGroup {
            p,
            level: m,
            generators,
            relators,
        };
        model.validate()?;
        Ok(model)
    }

    /// Add a custom relator (word in existing generators).
    pub fn with_extra_relator(mut self, name: &str, word: Vec<(usize, i64)>) -> Result<ModelGroup> {
        self.relators.push(Relator {
            name: name.into(),
            word,
        });
        self.validate()?;
        Ok(self)
    }

    pub fn modulus(&self) -> Modulus {
        Modulus::new(self.p, self.level).expect("validated at construction")
    }

    pub fn validate(&self) -> Result<()> {
        Modulus::new(self.p, self.level)?;
        if self.level < 2 {
            return Err(Error::InvalidModel("working level below 2".into()));
        }
        if self.generators.is_empty() {
            return Err(Error::InvalidModel("no generators".into()));
        }
        let torsion_count = self
            .generators
            .iter()
            .filter(|g| g.kind == GeneratorKind::Torsion)
            .count();
        if torsion_count != 1 || self.generators[0].kind != GeneratorKind::Torsion {
            return Err(Error::InvalidModel(
                "exactly one torsion generator is required, listed first".into(),
            ));
        }
        let mut names = std::collections::BTreeSet::new();
        for g in &self.generators {
            if g.name.is_empty() || !names.insert(&g.name) {
                return Err(Error::InvalidModel(format!(
                    "generator name {:?} is empty or repeated",
                    g.name
                )));
            }
        }
        for r in &self.relators {
            if r.word.is_empty() {
                return Err(Error::InvalidModel(format!("relator {} is empty", r.name)));
            }
            for &(idx, _) in &r.word {
                if idx >= self.generators.len() {
                    return Err(Error::InvalidModel(format!(
                        "relator {} references generator #{idx}, but there are only {}",
                        r.name,
                        self.generators.len()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn generator_index(&self, name: &str) -> Option<usize> {
        self.generators.iter().position(|g| g.name == name)
    }

    /// Indices of the pro-p generators, in declaration order.
    pub fn pro_p_indices(&self) -> Vec<usize> {
        self.generators
            .iter()
            .enumerate()
            .filter(|(_, g)| matches!(g.kind, GeneratorKind::ProP { .. }))
            .map(|(i, _)| i)
            .collect()
    }

    /// The pro-p generator matching the twist exponent d mod p-1, if any.
    pub fn pro_p_by_exponent(&self, d: u64) -> Option<usize> {
        self.generators.iter().position(|g| {
            matches!(g.kind, GeneratorKind::ProP { exponent } if exponent % (self.p - 1) == d % (self.p - 1))
        })
    }
}

/// Evaluate a relator word on concrete matrix images.
pub fn evaluate_word(images: &[Mat], word: &[(usize, i64)]) -> Result<Mat> {
    let first = images.first().ok_or_else(|| {
        Error::ShapeMismatch("cannot evaluate a word with no images".into())
    })?;
    let mut acc = Mat::identity(first.n(), first.modulus());
    for &(idx, e) in word {
        acc = acc * images[idx].pow(e as i128)?;
    }
    Ok(acc)
}

/// A character of the model with values in (Z/p^m)^*: torsion values on
/// σ, one-unit values on pro-p generators, trivial on every relator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Character {
    values: Vec<UnitElem>,
}

impl Character {
    pub fn from_values(model: &ModelGroup, values: Vec<RingElem>) -> Result<Character> {
        if values.len() != model.generators.len() {
            return Err(Error::InvalidCharacter(format!(
                "{} values for {} generators",
                values.len(),
                model.generators.len()
            )));
        }
        let modulus = model.modulus();
        let mut units = Vec::with_capacity(values.len());
        for (generator, &value) in model.generators.iter().zip(&values) {
            if value.modulus() != modulus {
                return Err(Error::InvalidCharacter(format!(
                    "value for {} lives over the wrong modulus",
                    generator.name
                )));
            }
            let unit = unit_decompose(value).map_err(|_| {
                Error::InvalidCharacter(format!(
                    "value {} for {} is not a unit",
                    value.value(),
                    generator.name
                ))
            })?;
            match generator.kind {
                GeneratorKind::Torsion => {
                    if unit.one_unit_log() != 0 {
                        return Err(Error::InvalidCharacter(format!(
                            "torsion generator {} must take a Teichmüller value, got {}",
                            generator.name,
                            value.value()
                        )));
                    }
                }
                GeneratorKind::ProP { .. } => {
                    if unit.teich_exponent() != 0 {
                        return Err(Error::InvalidCharacter(format!(
                            "pro-p generator {} must take a one-unit value, got {}",
                            generator.name,
                            value.value()
                        )));
                    }
                }
            }
            units.push(unit);
        }
        let character = Character { values: units };
        for relator in &model.relators {
            let v = character.evaluate_word(&relator.word)?;
            if v != modulus.one() {
                return Err(Error::InvalidCharacter(format!(
                    "relator {} maps to {} instead of 1",
                    relator.name,
                    v.value()
                )));
            }
        }
        Ok(character)
    }

    pub fn value(&self, generator: usize) -> UnitElem {
        self.values[generator]
    }

    pub fn values(&self) -> &[UnitElem] {
        &self.values
    }

    pub fn evaluate_word(&self, word: &[(usize, i64)]) -> Result<RingElem> {
        let modulus = self.values[0].modulus();
        let mut acc = modulus.one();
        for &(idx, e) in word {
            acc = acc * self.values[idx].ring().pow(e)?;
        }
        Ok(acc)
    }

    /// The cyclotomic-like character: σ ↦ ω(g), γ ↦ 1+p, x_d ↦ 1.
    pub fn chi(model: &ModelGroup) -> Result<Character> {
        Self::by_kind(model, 1, 1)
    }

    /// The Teichmüller character: σ ↦ ω(g), everything pro-p ↦ 1.
    pub fn omega(model: &ModelGroup) -> Result<Character> {
        Self::by_kind(model, 1, 0)
    }

    /// χ^s with s = Σ k_i: the raw determinant of a diagonal lift.
    pub fn tau(model: &ModelGroup, ks: &[u64]) -> Result<Character> {
        let s = ks.iter().sum::<u64>();
        Self::by_kind(model, s, s)
    }

    /// The normalized determinant target: σ ↦ ω(g)^{Σk}, γ ↦ 1, x_d ↦ 1.
    /// Agrees with τ mod p and is what the trace-zero-lift convention
    /// produces exactly.
    pub fn tau_tilde(model: &ModelGroup, ks: &[u64]) -> Result<Character> {
        Self::by_kind(model, ks.iter().sum::<u64>(), 0)
    }

    /// σ ↦ ω(g)^{teich}, γ ↦ (1+p)^{one_unit}, x_d ↦ 1.
    fn by_kind(model: &ModelGroup, teich: u64, one_unit: u64) -> Result<Character> {
        let modulus = model.modulus();
        let values = model
            .generators
            .iter()
            .map(|g| {
                Ok(match g.kind {
                    GeneratorKind::Torsion => omega_pow(modulus, teich)?,
                    GeneratorKind::ProP { exponent: 0 } => one_unit_pow(modulus, one_unit),
                    GeneratorKind::ProP { .. } => modulus.one(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Character::from_values(model, values)
    }
}

/// All determinant characters available for lifting with the given tuple:
/// ψ_a agrees with τ̃ except ψ_a(γ) = (1 + p^2 a), a = 0..count-1. At
/// working level m exactly p^{m-2} distinct choices exist; asking for more
/// is an error. (At m = 2 the only choice is τ̃ itself.)
pub fn enumerate_psi(model: &ModelGroup, ks: &[u64], count: u64) -> Result<Vec<Character>> {
    let modulus = model.modulus();
    let p = model.p;
    let available = p.pow(model.level - 2);
    if count > available {
        return Err(Error::CharacterCount {
            requested: count,
            available,
        });
    }
    let gamma = model
        .generator_index("gamma")
        .ok_or_else(|| Error::InvalidModel("no gamma generator".into()))?;
    let base = Character::tau_tilde(model, ks)?;
    let mut out = Vec::with_capacity(count as usize);
    for a in 0..count {
        let mut values: Vec<RingElem> = base.values().iter().map(|u| u.ring()).collect();
        values[gamma] = modulus.reduce(1 + (p as i128) * (p as i128) * a as i128);
        out.push(Character::from_values(model, values)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zp::teichmuller;

    #[test]
    fn standard_model_shape() {
        let model = ModelGroup::standard(7, 2).unwrap();
        let names: Vec<&str> = model.generators.iter().map(|g| g.name.as_str()).collect();
        assert_eq!(names, vec!["sigma", "gamma", "x_1", "x_3", "x_5"]);
        assert_eq!(model.generators.len(), 1 + (7 + 1) / 2);
        assert_eq!(model.relators.len(), 5);
        assert_eq!(model.relators[0].word, vec![(0, 6)]);

        let model23 = ModelGroup::standard(23, 3).unwrap();
        assert_eq!(model23.generators.len(), 13);
    }

    #[test]
    fn conjugation_exponents() {
        // m = 2 reduces mod p: c(3) = 3^3 mod 7.
        assert_eq!(conj_exponent(7, 2, 3).unwrap(), 6);
        assert_eq!(conj_exponent(7, 2, 1).unwrap(), 3);
        // m = 3 reduces mod 49: ω(3)^3 = ω(-1) = -1.
        assert_eq!(conj_exponent(7, 3, 3).unwrap(), 48);
        // The relator for x_3 carries -c(3).
        let model = ModelGroup::standard(7, 2).unwrap();
        let x3 = model.generator_index("x_3").unwrap();
        let conj = model
            .relators
            .iter()
            .find(|r| r.name == "conj_x_3")
            .unwrap();
        assert_eq!(conj.word, vec![(0, 1), (x3, 1), (0, -1), (x3, -6)]);
    }

    #[test]
    fn validation_rejects_malformed_models() {
        let mut model = ModelGroup::standard(7, 2).unwrap();
        model.relators[1].word[0].0 = 99;
        assert!(model.validate().is_err());

        let mut model = ModelGroup::standard(7, 2).unwrap();
        model.generators[0].kind = GeneratorKind::ProP { exponent: 1 };
        assert!(model.validate().is_err());

        assert!(ModelGroup::standard(7, 1).is_err());
        assert!(ModelGroup::standard(8, 2).is_err());
    }

    #[test]
    fn model_serde_round_trip() {
        let model = ModelGroup::standard(11, 3).unwrap();
        let json = serde_json::to_string_pretty(&model).unwrap();
        let back: ModelGroup = serde_json::from_str(&json).unwrap();
        assert_eq!(model, back);
        back.validate().unwrap();
    }

    #[test]
    fn distinguished_characters_are_valid() {
        let model = ModelGroup::standard(7, 3).unwrap();
        let z = model.modulus();
        let chi = Character::chi(&model).unwrap();
        let sigma = model.generator_index("sigma").unwrap();
        let gamma = model.generator_index("gamma").unwrap();
        assert_eq!(chi.value(sigma).ring(), teichmuller(3, z).unwrap());
        assert_eq!(chi.value(gamma).ring().value(), 8);
        let omega = Character::omega(&model).unwrap();
        assert_eq!(omega.value(gamma).ring(), z.one());
        let tau = Character::tau(&model, &[4, 9]).unwrap();
        assert_eq!(
            tau.value(sigma).ring(),
            teichmuller(3, z).unwrap().powu(13)
        );
        assert_eq!(tau.value(gamma).ring(), z.reduce(8).powu(13));
        let tt = Character::tau_tilde(&model, &[4, 9]).unwrap();
        assert_eq!(tt.value(sigma).ring(), tau.value(sigma).ring());
        assert_eq!(tt.value(gamma).ring(), z.one());
    }

    #[test]
    fn character_validation_enforces_relators_and_kinds() {
        let model = ModelGroup::standard(7, 2).unwrap();
        let z = model.modulus();
        let base: Vec<RingElem> = Character::tau_tilde(&model, &[4, 9])
            .unwrap()
            .values()
            .iter()
            .map(|u| u.ring())
            .collect();

        // A nontrivial value on x_1 violates its conjugation relator.
        let mut bad = base.clone();
        let x1 = model.generator_index("x_1").unwrap();
        bad[x1] = z.reduce(8);
        assert!(matches!(
            Character::from_values(&model, bad),
            Err(Error::InvalidCharacter(_))
        ));

        // A one-unit on σ is not torsion.
        let mut bad = base.clone();
        bad[0] = z.reduce(8);
        assert!(Character::from_values(&model, bad).is_err());

        // A torsion value on γ is not pro-p.
        let mut bad = base.clone();
        let gamma = model.generator_index("gamma").unwrap();
        bad[gamma] = z.reduce(teichmuller(3, z).unwrap().value() as i128);
        assert!(Character::from_values(&model, bad).is_err());

        // A non-unit anywhere is rejected.
        let mut bad = base;
        bad[gamma] = z.reduce(7);
        assert!(Character::from_values(&model, bad).is_err());
    }

    #[test]
    fn psi_enumeration_counts_by_level() {
        let model2 = ModelGroup::standard(5, 2).unwrap();
        let psis = enumerate_psi(&model2, &[2, 1], 1).unwrap();
        assert_eq!(psis.len(), 1);
        assert_eq!(psis[0], Character::tau_tilde(&model2, &[2, 1]).unwrap());
        assert!(enumerate_psi(&model2, &[2, 1], 2).is_err());

        let model4 = ModelGroup::standard(5, 4).unwrap();
        let gamma = model4.generator_index("gamma").unwrap();
        let psis = enumerate_psi(&model4, &[2, 1], 25).unwrap();
        assert_eq!(psis.len(), 25);
        // All distinct, all valid, γ-values as advertised.
        for (a, psi) in psis.iter().enumerate() {
            assert_eq!(
                psi.value(gamma).ring().value(),
                (1 + 25 * a as u64) % 625
            );
        }
        assert!(enumerate_psi(&model4, &[2, 1], 26).is_err());
    }

    #[test]
    fn word_evaluation_on_matrices() {
        let z = Modulus::new(5, 2).unwrap();
        let a = Mat::from_rows(&[vec![1, 1], vec![0, 1]], z);
        let b = Mat::diag(&[z.reduce(2), z.reduce(3)]);
        // a b a^{-1} b^{-1} with explicit word.
        let word = vec![(0usize, 1i64), (1, 1), (0, -1), (1, -1)];
        let value = evaluate_word(&[a.clone(), b.clone()], &word).unwrap();
        assert_eq!(value, a.group_commutator(&b).unwrap());
        // Commuting diagonals give the identity.
        let c = Mat::diag(&[z.reduce(4), z.reduce(7)]);
        let value = evaluate_word(&[c, b], &word).unwrap();
        assert!(value.is_identity());
    }

    #[test]
    fn extra_relators_attach_and_validate() {
        let model = ModelGroup::standard(7, 2).unwrap();
        let x1 = model.generator_index("x_1").unwrap();
        let extended = model
            .clone()
            .with_extra_relator("x1_torsion", vec![(x1, 7)])
            .unwrap();
        assert_eq!(extended.relators.len(), model.relators.len() + 1);
        assert!(model
            .with_extra_relator("oob", vec![(42, 1)])
            .is_err());
    }
}
