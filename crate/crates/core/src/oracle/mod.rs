//! Formal free products of the ledger factors, and bounded certification that
//! their evaluation map into the ambient group is injective.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{Element, Factor, Presentation};
use crate::report::Status;

/// Largest number of formal words enumerated by one certification.
pub const WORD_CAP: u64 = 5_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Base {
    Trivial,
    /// ⟨g⟩ for a loxodromic g.
    Cyclic { generator: String, #[serde(skip)] element: Element },
}

/// The rotation group `t Nᵢ t⁻¹`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RotationFactor {
    pub factor: usize,
    pub conjugator: String,
    #[serde(skip)]
    pub conjugator_element: Element,
    pub index: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FormalFreeProduct {
    pub base: Base,
    pub factors: Vec<RotationFactor>,
    #[serde(skip)]
    slots: Vec<Slot>,
}

#[derive(Clone, Debug)]
struct Slot {
    generator: Element,
    /// Order of the generator, when finite.
    order: Option<i64>,
    label: String,
}

impl FormalFreeProduct {
    pub fn new(pres: &Presentation, base: Option<Element>, factors: &[(usize, Element, u64)]) -> Result<Self> {
        let mut slots = Vec::new();
        let base = match base {
            Some(g) => {
                if g.is_identity() {
                    return Err(Error::input("the base of a formal free product must be nontrivial"));
                }
                let name = g.display(pres).to_string();
                slots.push(Slot {
                    generator: g.clone(),
                    order: None,
                    label: format!("<{name}>"),
                });
                Base::Cyclic {
                    generator: name,
                    element: g,
                }
            }
            None => Base::Trivial,
        };
        let mut out = Vec::new();
        for (factor, t, k) in factors {
            if *factor >= pres.rank() {
                return Err(Error::input(format!("factor index {factor} out of range")));
            }
            let n = Element::power_of_generator(pres, *factor, *k as i64);
            if n.is_identity() {
                return Err(Error::input("rotation factors must be nontrivial"));
            }
            let order = match pres.factor(*factor) {
                Factor::Finite { m } => Some((m / k) as i64),
                Factor::Infinite => None,
            };
            slots.push(Slot {
                generator: t.conjugate(&n, pres),
                order,
                label: format!("{}<{}^{}>", t.display(pres), pres.name(*factor), k),
            });
            out.push(RotationFactor {
                factor: *factor,
                conjugator: t.display(pres).to_string(),
                conjugator_element: t.clone(),
                index: *k,
            });
        }
        Ok(FormalFreeProduct {
            base,
            factors: out,
            slots,
        })
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    pub fn has_base(&self) -> bool {
        matches!(self.base, Base::Cyclic { .. })
    }

    /// Number of rotation-factor syllables of a normalized word.
    pub fn rotation_syllables(&self, w: &FormalWord) -> usize {
        let first = self.has_base() as usize;
        w.syllables().iter().filter(|s| s.0 >= first).count()
    }

    pub fn normalize(&self, raw: &[(usize, i64)]) -> Result<FormalWord> {
        let mut out: Vec<(usize, i64)> = Vec::new();
        for &(slot, e) in raw {
            let s = self
                .slots
                .get(slot)
                .ok_or_else(|| Error::input(format!("slot {slot} out of range")))?;
            let reduce = |e: i64| match s.order {
                Some(m) => e.rem_euclid(m),
                None => e,
            };
            match out.last_mut() {
                Some(last) if last.0 == slot => {
                    last.1 = reduce(last.1 + e);
                    if last.1 == 0 {
                        out.pop();
                    }
                }
                _ => {
                    if reduce(e) != 0 {
                        out.push((slot, reduce(e)));
                    }
                }
            }
        }
        Ok(FormalWord(out))
    }

    pub fn evaluate(&self, w: &FormalWord, pres: &Presentation) -> Element {
        let mut g = Element::identity();
        for &(slot, e) in &w.0 {
            g = g.mul(&self.slots[slot].generator.pow(e, pres), pres);
        }
        g
    }

    pub fn describe(&self, w: &FormalWord) -> String {
        if w.0.is_empty() {
            return "1".into();
        }
        w.0.iter()
            .map(|&(s, e)| format!("{}^{}", self.slots[s].label, e))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn exponents(&self, slot: usize, max_exponent: i64) -> Vec<i64> {
        (-max_exponent..=max_exponent)
            .filter(|&e| e != 0)
            .filter(|&e| self.slots[slot].order.is_none_or(|m| e.rem_euclid(m) != 0))
            .collect()
    }
}

/// A reduced alternating word in the slots: no zero exponents, no two
/// consecutive syllables in one slot.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct FormalWord(Vec<(usize, i64)>);

impl FormalWord {
    pub fn syllables(&self) -> &[(usize, i64)] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &FormalWord) -> Vec<(usize, i64)> {
        self.0.iter().chain(&other.0).copied().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub max_syllables: usize,
    pub max_exponent: i64,
    /// Slots enumerated exhaustively, out of `total_slots`.
    pub slots_enumerated: usize,
    pub total_slots: usize,
    pub words_checked: u64,
    pub sampled_words: u64,
    pub status: Status,
    pub counterexample: Option<String>,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// Evaluates every nonempty reduced word over the first `slot_limit` slots
/// with at most `max_syllables` syllables and exponents bounded by
/// `max_exponent`, in order of syllable count, then slot, then exponent;
/// then `samples` random words over all slots. Stops at the first word
/// that evaluates to the identity.
pub fn certify_injectivity(
    product: &FormalFreeProduct,
    pres: &Presentation,
    max_syllables: usize,
    max_exponent: i64,
    slot_limit: usize,
    samples: u64,
    seed: u64,
) -> Result<Certificate> {
    if max_exponent < 1 || max_syllables < 1 {
        return Err(Error::input("certification bounds must be positive"));
    }
    let slots = slot_limit.min(product.slot_count());
    let exps: Vec<Vec<i64>> = (0..product.slot_count()).map(|s| product.exponents(s, max_exponent)).collect();
    let per = (2 * max_exponent) as u64;
    let mut estimate = 0u64;
    for s in 1..=max_syllables as u32 {
        let shapes = (slots as u64).saturating_mul((slots.saturating_sub(1) as u64).saturating_pow(s - 1));
        estimate = estimate.saturating_add(shapes.saturating_mul(per.saturating_pow(s)));
    }
    if estimate.saturating_add(samples) > WORD_CAP {
        return Err(Error::resource("formal words per certification", WORD_CAP as usize));
    }
    let mut cert = Certificate {
        max_syllables,
        max_exponent,
        slots_enumerated: slots,
        total_slots: product.slot_count(),
        words_checked: 0,
        sampled_words: 0,
        status: Status::Pass,
        counterexample: None,
    };
    let mut fail = |w: &FormalWord, cert: &mut Certificate| {
        cert.status = Status::Fail;
        cert.counterexample = Some(product.describe(w));
    };
    for len in 1..=max_syllables {
        let mut word: Vec<(usize, i64)> = Vec::with_capacity(len);
        if !enumerate(product, pres, &exps, slots, len, &mut word, &mut cert, &mut fail) {
            return Ok(cert);
        }
    }
    if product.slot_count() > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let len = rng.gen_range(1..=max_syllables);
            let mut raw: Vec<(usize, i64)> = Vec::with_capacity(len);
            while raw.len() < len {
                let s = rng.gen_range(0..product.slot_count());
                if raw.last().is_some_and(|l| l.0 == s) || exps[s].is_empty() {
                    if product.slot_count() == 1 && !raw.is_empty() {
                        break;
                    }
                    continue;
                }
                raw.push((s, exps[s][rng.gen_range(0..exps[s].len())]));
            }
            let w = FormalWord(raw);
            cert.sampled_words += 1;
            if product.evaluate(&w, pres).is_identity() {
                fail(&w, &mut cert);
                return Ok(cert);
            }
        }
    }
    Ok(cert)
}

#[allow(clippy::too_many_arguments)]
fn enumerate(
    product: &FormalFreeProduct,
    pres: &Presentation,
    exps: &[Vec<i64>],
    slots: usize,
    len: usize,
    word: &mut Vec<(usize, i64)>,
    cert: &mut Certificate,
    fail: &mut impl FnMut(&FormalWord, &mut Certificate),
) -> bool {
    if word.len() == len {
        let w = FormalWord(word.clone());
        cert.words_checked += 1;
        if product.evaluate(&w, pres).is_identity() {
            fail(&w, cert);
            return false;
        }
        return true;
    }
    for s in 0..slots {
        if word.last().is_some_and(|l| l.0 == s) {
            continue;
        }
        for &e in &exps[s] {
            word.push((s, e));
            let ok = enumerate(product, pres, exps, slots, len, word, cert, fail);
            word.pop();
            if !ok {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupWord;
    use proptest::prelude::*;

    fn zz() -> Presentation {
        Presentation::free(2).unwrap()
    }

    fn el(s: &str) -> Element {
        Element::from_word(&GroupWord::parse(s, &zz()).unwrap(), &zz())
    }

    fn kernel_ledger() -> FormalFreeProduct {
        FormalFreeProduct::new(&zz(), None, &[(0, el("1"), 3), (1, el("1"), 3), (1, el("a"), 3)]).unwrap()
    }

    #[test]
    fn normalization_examples() {
        let f = kernel_ledger();
        assert_eq!(f.normalize(&[(0, 1), (0, 2)]).unwrap().syllables(), &[(0, 3)]);
        assert!(f.normalize(&[(0, 1), (0, -1)]).unwrap().is_empty());
        assert_eq!(f.normalize(&[(0, 1), (1, 2), (1, -2), (0, 1)]).unwrap().syllables(), &[(0, 2)]);
        assert!(f.normalize(&[(7, 1)]).is_err());
        let w = f.normalize(&[(2, 1), (0, 1), (0, 0)]).unwrap();
        assert_eq!(f.normalize(w.syllables()).unwrap(), w);
    }

    #[test]
    fn evaluation_examples() {
        let p = zz();
        let f = kernel_ledger();
        assert_eq!(f.evaluate(&f.normalize(&[(0, 2)]).unwrap(), &p), el("a^6"));
        assert!(f.evaluate(&FormalWord::default(), &p).is_identity());
        let g = FormalFreeProduct::new(&p, Some(el("a b")), &[(0, el("1"), 3)]).unwrap();
        assert_eq!(g.evaluate(&g.normalize(&[(0, 1), (1, 1)]).unwrap(), &p), el("a b a^3"));
        assert_eq!(g.rotation_syllables(&g.normalize(&[(0, 1), (1, 1)]).unwrap()), 1);
    }

    #[test]
    fn certification() {
        let p = zz();
        let c = certify_injectivity(&kernel_ledger(), &p, 4, 3, 4, 200, 0).unwrap();
        assert!(c.passed());
        assert_eq!(c.words_checked, 18 + 3 * 2 * 36 + 3 * 4 * 216 + 3 * 8 * 1296);
        let bad = FormalFreeProduct::new(&p, None, &[(0, el("1"), 3), (0, el("1"), 3)]).unwrap();
        let c = certify_injectivity(&bad, &p, 4, 3, 4, 0, 0).unwrap();
        assert_eq!(c.status, Status::Fail);
        assert_eq!(c.counterexample.as_deref(), Some("1<a^3>^-3 1<a^3>^3"));
        let base = FormalFreeProduct::new(&p, Some(el("a b")), &[]).unwrap();
        assert!(certify_injectivity(&base, &p, 4, 3, 4, 10, 0).unwrap().passed());
        assert_eq!(certify_injectivity(&kernel_ledger(), &p, 12, 3, 4, 0, 0).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn finite_order_slots_skip_trivial_powers() {
        let p = Presentation::new(vec![Factor::Finite { m: 4 }, Factor::Infinite]).unwrap();
        let f = FormalFreeProduct::new(&p, None, &[(0, Element::identity(), 2)]).unwrap();
        assert_eq!(f.exponents(0, 3), vec![-3, -1, 1, 3]);
        assert!(f.normalize(&[(0, 1), (0, 1)]).unwrap().is_empty());
    }

    fn formal() -> impl Strategy<Value = Vec<(usize, i64)>> {
        proptest::collection::vec((0usize..3, -3i64..4), 0..6)
    }

    proptest! {
        #[test]
        fn evaluation_is_a_homomorphism(u in formal(), v in formal()) {
            let p = zz();
            let f = kernel_ledger();
            let (nu, nv) = (f.normalize(&u).unwrap(), f.normalize(&v).unwrap());
            let uv = f.normalize(&nu.concat(&nv)).unwrap();
            prop_assert_eq!(f.evaluate(&uv, &p), f.evaluate(&nu, &p).mul(&f.evaluate(&nv, &p), &p));
            prop_assert_eq!(f.normalize(nu.syllables()).unwrap(), nu);
        }
    }
}
