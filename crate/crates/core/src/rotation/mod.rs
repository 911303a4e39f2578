//! The rotation family induced by a filling on the subdivided Bass–Serre tree.
//!
//! Each coset apex `t·Pᵢ` carries the rotation group `t Nᵢ t⁻¹`.

mod axioms;
mod quotient;

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{Element, Factor, Filling, Presentation};
use crate::tree::{TreeKind, TruncatedTree, Vertex};
use crate::rational::Rational;

pub use axioms::{verify_axioms, verify_rotation_lemmas, AxiomConfig};
pub use quotient::{proper_action_off_apices, quotient_hyperbolicity, QuotientReport};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RotationPair {
    pub factor: usize,
    /// Coset representative of the apex, as stored in the tree.
    #[serde(skip)]
    pub conjugator: Element,
    /// Index of the apex `t·Pᵢ` in the tree.
    pub apex: usize,
}

#[derive(Clone, Debug)]
pub struct RotationFamily {
    pairs: Vec<RotationPair>,
    by_apex: HashMap<usize, usize>,
    sigma: Rational,
    filling: Filling,
    /// Elements excluded from the filling; always empty in this model.
    exclusion: Vec<Element>,
}

impl RotationFamily {
    /// One pair per apex of the ball.
    pub fn build(tree: &TruncatedTree, filling: &Filling, sigma: Rational) -> Result<Self> {
        let pres = tree.presentation();
        if sigma <= Rational::from_integer(0) {
            return Err(Error::input("sigma must be positive"));
        }
        if tree.kind() == TreeKind::Plain && pres.rank() > 1 {
            return Err(Error::precondition(
                "rotation families need the subdivided tree: adjacent apices of the plain tree are one edge apart",
            ));
        }
        for i in 0..pres.rank() {
            if filling.is_trivial_subgroup(pres, i) {
                return Err(Error::precondition(format!(
                    "filling index {} makes N{} trivial; rotation groups must be nontrivial",
                    filling.index(i),
                    i + 1
                )));
            }
        }
        let mut pairs = Vec::new();
        for apex in tree.apices() {
            let Vertex::Coset { factor, rep } = tree.vertex(apex) else { unreachable!() };
            pairs.push(RotationPair {
                factor: *factor,
                conjugator: rep.clone(),
                apex,
            });
        }
        Ok(Self::from_pairs(pairs, sigma, filling.clone()))
    }

    fn from_pairs(pairs: Vec<RotationPair>, sigma: Rational, filling: Filling) -> Self {
        let by_apex = pairs.iter().enumerate().map(|(k, p)| (p.apex, k)).collect();
        RotationFamily {
            pairs,
            by_apex,
            sigma,
            filling,
            exclusion: Vec::new(),
        }
    }

    /// The family with the pair at `apex` removed; used to exercise the
    /// invariance check.
    pub fn without_pair(&self, apex: usize) -> Self {
        let pairs = self.pairs.iter().filter(|p| p.apex != apex).cloned().collect();
        Self::from_pairs(pairs, self.sigma, self.filling.clone())
    }

    pub fn with_sigma(&self, sigma: Rational) -> Self {
        Self::from_pairs(self.pairs.clone(), sigma, self.filling.clone())
    }

    pub fn pairs(&self) -> &[RotationPair] {
        &self.pairs
    }

    pub fn pair_at(&self, apex: usize) -> Option<&RotationPair> {
        self.by_apex.get(&apex).map(|&k| &self.pairs[k])
    }

    pub fn sigma(&self) -> Rational {
        self.sigma
    }

    pub fn filling(&self) -> &Filling {
        &self.filling
    }

    pub fn exclusion(&self) -> &[Element] {
        &self.exclusion
    }

    /// Conjugates `t nᵢ t⁻¹` of the filling generators, for apices whose
    /// generator has word length at most `bound`.
    pub fn kernel_generators(&self, pres: &Presentation, bound: u64) -> Vec<Element> {
        let mut out: Vec<Element> = self
            .pairs
            .iter()
            .map(|p| generator(pres, &self.filling, p.factor, &p.conjugator))
            .filter(|g| g.word_length(pres) <= bound)
            .collect();
        out.sort_by(|a, b| a.shortlex_cmp(b, pres));
        out.dedup();
        out
    }
}

/// `t · pᵢ^{kᵢ} · t⁻¹`.
pub fn generator(pres: &Presentation, filling: &Filling, factor: usize, t: &Element) -> Element {
    t.conjugate(&Element::power_of_generator(pres, factor, filling.index(factor) as i64), pres)
}

/// Non-trivial elements `t pᵢ^{j kᵢ} t⁻¹`, |j| ≤ `cap`, of the rotation group at `(factor, t)`.
pub fn rotation_elements(pres: &Presentation, filling: &Filling, factor: usize, t: &Element, cap: i64) -> Vec<Element> {
    let k = filling.index(factor) as i64;
    let mut exps: Vec<i64> = (1..=cap).flat_map(|j| [j * k, -j * k]).collect();
    if let Factor::Finite { m } = pres.factor(factor) {
        exps.retain(|e| e.rem_euclid(m as i64) != 0);
        exps.sort_by_key(|e| e.rem_euclid(m as i64));
        exps.dedup_by_key(|e| e.rem_euclid(m as i64));
    }
    exps.into_iter()
        .map(|e| t.conjugate(&Element::power_of_generator(pres, factor, e), pres))
        .collect()
}

/// Whether `g ∈ t Nᵢ t⁻¹`.
pub fn in_rotation_group(pres: &Presentation, filling: &Filling, factor: usize, t: &Element, g: &Element) -> bool {
    let c = t.inverse(pres).mul(g, pres).mul(t, pres);
    match c.syllables() {
        [] => true,
        [s] => s.factor == factor && s.exp.rem_euclid(filling.index(factor) as i64) == 0,
        _ => false,
    }
}
