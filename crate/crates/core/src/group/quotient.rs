use serde::Serialize;

use super::{Element, Factor, Order, Presentation};
use crate::error::{Error, Result};

/// Finite-index normal subgroups Nᵢ ⊴ Pᵢ, each given by its index kᵢ: Nᵢ = kᵢℤ
/// in ℤ, or the subgroup of order m/kᵢ in ℤ/m.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Filling {
    k: Vec<u64>,
    #[serde(skip)]
    quotient: Presentation,
}

impl Filling {
    pub fn new(pres: &Presentation, k: Vec<u64>) -> Result<Self> {
        if k.len() != pres.rank() {
            return Err(Error::input(format!(
                "filling lists {} indices for {} factors",
                k.len(),
                pres.rank()
            )));
        }
        for (i, (&ki, f)) in k.iter().zip(pres.factors()).enumerate() {
            if ki == 0 {
                return Err(Error::input(format!("filling index of factor {i} must be at least 1")));
            }
            if let Factor::Finite { m } = f {
                if m % ki != 0 {
                    return Err(Error::input(format!(
                        "filling index {ki} of factor {i} does not divide its order {m}"
                    )));
                }
            }
        }
        let quotient = Presentation::quotient_of(k.iter().map(|&m| Factor::Finite { m }).collect());
        Ok(Filling { k, quotient })
    }

    pub fn indices(&self) -> &[u64] {
        &self.k
    }

    pub fn index(&self, i: usize) -> u64 {
        self.k[i]
    }

    /// The filled group ∗ ℤ/kᵢ, possibly with trivial factors.
    pub fn quotient(&self) -> &Presentation {
        &self.quotient
    }

    /// Nᵢ = {1}: only possible in a finite factor filled at its full order.
    pub fn is_trivial_subgroup(&self, pres: &Presentation, i: usize) -> bool {
        matches!(pres.factor(i), Factor::Finite { m } if m == self.k[i])
    }

    /// Every kᵢ = 1, so the filled group is trivial.
    pub fn kills_everything(&self) -> bool {
        self.k.iter().all(|&k| k == 1)
    }

    /// Image in the filled group.
    pub fn project(&self, g: &Element) -> Element {
        Element::from_syllables(&self.quotient, g.syllables().iter().map(|s| (s.factor, s.exp)))
    }
}

/// Whether `g` lies in K, the normal closure of the Nᵢ, that is the kernel of
/// the map onto the filled group.
pub fn kernel_membership(g: &Element, filling: &Filling) -> bool {
    filling.project(g).is_identity()
}

/// Order of the image of `g` in the filled group.
pub fn image_order(g: &Element, filling: &Filling) -> Order {
    filling.project(g).order(filling.quotient())
}

#[cfg(test)]
mod tests {
    use super::super::GroupWord;
    use super::*;
    use proptest::prelude::*;

    fn zz() -> Presentation {
        Presentation::free(2).unwrap()
    }

    fn el(s: &str, p: &Presentation) -> Element {
        Element::from_word(&GroupWord::parse(s, p).unwrap(), p)
    }

    #[test]
    fn membership_examples() {
        let p = zz();
        let f = Filling::new(&p, vec![3, 3]).unwrap();
        assert!(kernel_membership(&el("a^3", &p), &f));
        assert!(!kernel_membership(&el("a b", &p), &f));
        assert!(kernel_membership(&el("a^3 b^3 a^-3 b^-3", &p), &f));
        assert!(kernel_membership(&el("b a^3 B", &p), &f));
    }

    #[test]
    fn order_examples() {
        let p = zz();
        let f = Filling::new(&p, vec![3, 1]).unwrap();
        assert_eq!(image_order(&el("a", &p), &f), Order::Finite(3));
        assert_eq!(image_order(&el("a^3", &p), &f), Order::Finite(1));
        assert_eq!(image_order(&el("a b", &p), &f), Order::Finite(3));
        let f = Filling::new(&p, vec![3, 3]).unwrap();
        assert_eq!(image_order(&el("a b", &p), &f), Order::Infinite);
        assert_eq!(image_order(&el("b a^2 b^4 B^4 B", &p), &f), Order::Finite(3));
    }

    #[test]
    fn fillings_validate() {
        let p = Presentation::new(vec![Factor::Finite { m: 6 }, Factor::Infinite]).unwrap();
        assert!(Filling::new(&p, vec![4, 2]).is_err());
        assert!(Filling::new(&p, vec![3, 0]).is_err());
        assert!(Filling::new(&p, vec![3]).is_err());
        let f = Filling::new(&p, vec![6, 1]).unwrap();
        assert!(f.is_trivial_subgroup(&p, 0));
        assert!(!f.is_trivial_subgroup(&p, 1));
        assert!(!f.kills_everything());
        // N₁ = {0,3} inside ℤ/6
        let f = Filling::new(&p, vec![3, 2]).unwrap();
        assert!(kernel_membership(&el("a^3", &p), &f));
        assert!(!kernel_membership(&el("a^2", &p), &f));
    }

    fn element() -> impl Strategy<Value = Element> {
        proptest::collection::vec((0usize..2, -5i64..6), 0..7)
            .prop_map(|raw| Element::from_syllables(&zz(), raw))
    }

    proptest! {
        #[test]
        fn kernel_is_normal(w in element(), v in element(), g in element(), k1 in 1u64..5, k2 in 1u64..5) {
            let p = zz();
            let f = Filling::new(&p, vec![k1, k2]).unwrap();
            let (wk, vk) = (kernel_membership(&w, &f), kernel_membership(&v, &f));
            if wk && vk {
                prop_assert!(kernel_membership(&w.mul(&v, &p), &f));
            }
            prop_assert_eq!(kernel_membership(&g.conjugate(&w, &p), &f), wk);
            prop_assert_eq!(image_order(&w, &f) == Order::Finite(1), wk);
        }
    }
}
