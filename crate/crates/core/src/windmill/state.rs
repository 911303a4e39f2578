use std::collections::BTreeSet;

use serde::Serialize;
use serde_json::{json, Value};

use super::subtree::MetricSubtree;
use crate::error::{Error, Result};
use crate::group::{Element, Presentation};
use crate::oracle::FormalFreeProduct;
use crate::rational::{Rational, Q};
use crate::rotation::{generator, in_rotation_group, RotationFamily};
use crate::tree::{TruncatedTree, Vertex};

#[derive(Clone, Debug, Serialize)]
pub struct WindmillConfig {
    /// Rounds of rotation generators applied when closing `K_A·S`.
    pub closure_syllables: usize,
    /// Largest power of each rotation generator used in the closure.
    pub closure_exponent: i64,
    pub stage_cap: usize,
    /// Sampled tuples per randomized check.
    pub samples: usize,
    pub seed: u64,
    /// Powers `gʲ`, `|j| ≤ base_power_cap`, scanned for fixed apices.
    pub base_power_cap: i64,
    /// Hyperbolicity constant the `C·δ` bounds are measured against.
    pub delta: Q,
}

impl Default for WindmillConfig {
    fn default() -> Self {
        WindmillConfig {
            closure_syllables: 4,
            closure_exponent: 2,
            stage_cap: 200,
            samples: 64,
            seed: 0,
            base_power_cap: 6,
            delta: Q(Rational::new(1, 100_000_000_000)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LedgerEntry {
    pub factor: usize,
    #[serde(skip)]
    pub conjugator: Element,
    /// Tree index of the apex `t·Pᵢ`.
    pub apex: usize,
    /// Growth step that absorbed the apex.
    pub stage: usize,
}

/// The base `N` and one rotation group per absorbed orbit of apices.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct FreeFactorLedger {
    pub base: Option<Element>,
    pub entries: Vec<LedgerEntry>,
}

impl FreeFactorLedger {
    pub fn to_json(&self, pres: &Presentation, filling: &crate::group::Filling) -> Value {
        let base = match &self.base {
            None => Value::String("trivial".into()),
            Some(g) => Value::String(format!("<{}>", g.display(pres))),
        };
        let factors: Vec<Value> = self
            .entries
            .iter()
            .map(|e| {
                json!({
                    "factor": pres.name(e.factor).to_string(),
                    "conjugator": e.conjugator.display(pres).to_string(),
                    "generator": generator(pres, filling, e.factor, &e.conjugator).display(pres).to_string(),
                    "stage": e.stage,
                })
            })
            .collect();
        json!({ "base": base, "factors": factors })
    }

    pub fn formal_product(&self, pres: &Presentation, filling: &crate::group::Filling) -> Result<FormalFreeProduct> {
        let factors: Vec<(usize, Element, u64)> = self
            .entries
            .iter()
            .map(|e| (e.factor, e.conjugator.clone(), filling.index(e.factor)))
            .collect();
        FormalFreeProduct::new(pres, self.base.clone(), &factors)
    }

    /// Entries sorted by word length of the conjugator, so that bounded
    /// certification looks at the factors nearest the base first.
    pub fn nearest_first(&self, pres: &Presentation) -> FreeFactorLedger {
        let mut entries = self.entries.clone();
        entries.sort_by(|x, y| {
            x.conjugator
                .word_length(pres)
                .cmp(&y.conjugator.word_length(pres))
                .then(x.apex.cmp(&y.apex))
        });
        FreeFactorLedger {
            base: self.base.clone(),
            entries,
        }
    }
}

#[derive(Clone, Debug)]
pub struct WindmillState {
    pub w: MetricSubtree,
    /// Empty, or one loxodromic generator of `N`.
    pub n_gens: Vec<Element>,
    pub v: BTreeSet<usize>,
    pub ledger: FreeFactorLedger,
    pub stage: usize,
    /// The initial subset the windmill was started from.
    pub seed_set: MetricSubtree,
}

impl WindmillState {
    /// Generators of `L = ⟨N, K_V⟩`: the base generator and one rotation
    /// generator per absorbed apex of the ball.
    pub fn l_generators(&self, tree: &TruncatedTree, family: &RotationFamily) -> Vec<(Option<usize>, Element)> {
        let pres = tree.presentation();
        let mut out: Vec<(Option<usize>, Element)> = self.n_gens.iter().map(|g| (None, g.clone())).collect();
        for &v in &self.v {
            let p = family.pair_at(v).expect("absorbed apices carry a rotation pair");
            out.push((Some(v), generator(pres, family.filling(), p.factor, &p.conjugator)));
        }
        out
    }

    pub fn ledger_json(&self, tree: &TruncatedTree, family: &RotationFamily) -> Value {
        self.ledger.to_json(tree.presentation(), family.filling())
    }
}

/// The unique apex fixed by a non-trivial elliptic element, as a vertex of
/// the full tree; `None` for loxodromic elements and the identity.
pub fn fixed_apex(g: &Element, pres: &Presentation) -> Option<Vertex> {
    let (c, core) = g.cyclic_reduction(pres);
    match core.syllables() {
        [s] => Some(Vertex::coset(s.factor, &c)),
        _ => None,
    }
}

/// The element `h` with `h·[y] = [x]` when it lies in the rotation group at
/// `v`; used to detect two exits of a subset in one orbit of that group.
pub(crate) fn rotation_between(
    tree: &TruncatedTree,
    family: &RotationFamily,
    v: usize,
    x: usize,
    y: usize,
) -> Option<Element> {
    let pres = tree.presentation();
    let (Vertex::Elem(ex), Vertex::Elem(ey)) = (tree.vertex(x), tree.vertex(y)) else {
        return None;
    };
    let p = family.pair_at(v)?;
    let h = ex.mul(&ey.inverse(pres), pres);
    (!h.is_identity() && in_rotation_group(pres, family.filling(), p.factor, &p.conjugator, &h)).then_some(h)
}

/// Stage-0 windmill `(Y, N, ∅)` after checking the hypotheses on the ball:
/// Y convex, `N·Y = Y` on in-ball images, no non-trivial element of N
/// fixing an apex, and no apex seeing two points of Y in one orbit of its
/// rotation group.
pub fn init_windmill(
    tree: &TruncatedTree,
    family: &RotationFamily,
    y: MetricSubtree,
    n_gens: Vec<Element>,
    cfg: &WindmillConfig,
) -> Result<WindmillState> {
    let pres = tree.presentation();
    if y.is_empty() {
        return Err(Error::input("the initial windmill set is empty"));
    }
    if let Some(defect) = y.connectivity_defect(tree) {
        return Err(Error::precondition(format!("initial set is not convex: {defect}")));
    }
    if n_gens.len() > 1 {
        return Err(Error::input("N must be trivial or cyclic"));
    }
    for g in &n_gens {
        for j in (-cfg.base_power_cap..=cfg.base_power_cap).filter(|&j| j != 0) {
            let gj = g.pow(j, pres);
            if gj.is_identity() {
                return Err(Error::precondition(format!("{} has finite order", g.display(pres))));
            }
            if let Some(apex) = fixed_apex(&gj, pres) {
                return Err(Error::precondition(format!(
                    "{} fixes the apex {}",
                    gj.display(pres),
                    apex.label(pres)
                )));
            }
        }
        for gi in [g.clone(), g.inverse(pres)] {
            let (moved, _) = y.translate(tree, &gi);
            if let Some(p) = y.missing_from(&moved, tree) {
                return Err(Error::precondition(format!(
                    "initial set is not invariant under {}: {p}",
                    gi.display(pres)
                )));
            }
        }
    }
    let field = y.distance_field(tree);
    for v in tree.apices() {
        let exits = y.exits(tree, &field, v);
        for &x in &exits {
            for &x2 in &exits {
                if let Some(h) = rotation_between(tree, family, v, x, x2) {
                    return Err(Error::precondition(format!(
                        "the apex {} sees {} and {} in one orbit of its rotation group (h = {}); \
                         the Gromov product at the apex is positive",
                        tree.label(v),
                        tree.label(x),
                        tree.label(x2),
                        h.display(pres)
                    )));
                }
            }
        }
    }
    Ok(WindmillState {
        seed_set: y.clone(),
        w: y,
        ledger: FreeFactorLedger {
            base: n_gens.first().cloned(),
            entries: Vec::new(),
        },
        n_gens,
        v: BTreeSet::new(),
        stage: 0,
    })
}
