use std::cmp::Ordering;
use std::fmt;

use num_integer::Integer;
use serde::Serialize;

use super::word::{reduce, GroupWord, Letter};
use super::{Order, Presentation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Syllable {
    pub factor: usize,
    pub exp: i64,
}

/// An element of a free product in syllable normal form: adjacent syllables
/// lie in distinct factors and exponents are non-trivial residues (in
/// `1..m` for ℤ/m).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(transparent)]
pub struct Element {
    syl: Vec<Syllable>,
}

impl Element {
    pub fn identity() -> Self {
        Self::default()
    }

    /// Normalizes an arbitrary syllable list.
    pub fn from_syllables(pres: &Presentation, raw: impl IntoIterator<Item = (usize, i64)>) -> Self {
        let mut out = Element::identity();
        for (factor, exp) in raw {
            out.push(pres, factor, exp);
        }
        out
    }

    pub fn power_of_generator(pres: &Presentation, factor: usize, exp: i64) -> Self {
        Self::from_syllables(pres, [(factor, exp)])
    }

    pub fn from_word(word: &GroupWord, pres: &Presentation) -> Self {
        Self::from_syllables(
            pres,
            word.letters().iter().map(|l| (l.gen, if l.inv { -1 } else { 1 })),
        )
    }

    /// Right multiplication by one syllable, merging with the last one.
    fn push(&mut self, pres: &Presentation, factor: usize, exp: i64) {
        let f = pres.factor(factor);
        match self.syl.last_mut() {
            Some(last) if last.factor == factor => match f.normalize(last.exp + exp) {
                Some(e) => last.exp = e,
                None => {
                    self.syl.pop();
                }
            },
            _ => {
                if let Some(e) = f.normalize(exp) {
                    self.syl.push(Syllable { factor, exp: e });
                }
            }
        }
    }

    pub fn syllables(&self) -> &[Syllable] {
        &self.syl
    }

    pub fn is_identity(&self) -> bool {
        self.syl.is_empty()
    }

    /// Number of syllables.
    pub fn syllable_count(&self) -> usize {
        self.syl.len()
    }

    /// Length of the shortest spelling over the generators.
    pub fn word_length(&self, pres: &Presentation) -> u64 {
        self.syl.iter().map(|s| pres.factor(s.factor).syllable_len(s.exp)).sum()
    }

    pub fn mul(&self, other: &Element, pres: &Presentation) -> Element {
        let mut out = self.clone();
        for s in &other.syl {
            out.push(pres, s.factor, s.exp);
        }
        out
    }

    pub fn inverse(&self, pres: &Presentation) -> Element {
        Self::from_syllables(pres, self.syl.iter().rev().map(|s| (s.factor, -s.exp)))
    }

    /// `self · x · self⁻¹`.
    pub fn conjugate(&self, x: &Element, pres: &Presentation) -> Element {
        self.mul(x, pres).mul(&self.inverse(pres), pres)
    }

    pub fn pow(&self, n: i64, pres: &Presentation) -> Element {
        let base = if n < 0 { self.inverse(pres) } else { self.clone() };
        let mut out = Element::identity();
        for _ in 0..n.unsigned_abs() {
            out = out.mul(&base, pres);
        }
        out
    }

    /// Shortest spelling; ties in a finite factor spell the positive power.
    pub fn to_word(&self, pres: &Presentation) -> GroupWord {
        let mut raw = Vec::new();
        for s in &self.syl {
            let e = pres.factor(s.factor).spelled(s.exp);
            for _ in 0..e.unsigned_abs() {
                raw.push(Letter {
                    gen: s.factor,
                    inv: e < 0,
                });
            }
        }
        reduce(raw)
    }

    pub fn shortlex_cmp(&self, other: &Element, pres: &Presentation) -> Ordering {
        self.to_word(pres).shortlex_key().cmp(&other.to_word(pres).shortlex_key())
    }

    /// Drops a last syllable lying in `factor`.
    pub fn strip_trailing(&self, factor: usize) -> Element {
        let mut out = self.clone();
        if out.syl.last().is_some_and(|s| s.factor == factor) {
            out.syl.pop();
        }
        out
    }

    /// Drops a first syllable lying in `factor`.
    pub fn strip_leading(&self, factor: usize) -> Element {
        let mut out = self.clone();
        if out.syl.first().is_some_and(|s| s.factor == factor) {
            out.syl.remove(0);
        }
        out
    }

    /// Writes `self = c · core · c⁻¹` with `core` cyclically reduced: either at
    /// most one syllable, or first and last syllables in different factors.
    pub fn cyclic_reduction(&self, pres: &Presentation) -> (Element, Element) {
        let mut c = Element::identity();
        let mut core = self.clone();
        while core.syl.len() >= 2 && core.syl[0].factor == core.syl[core.syl.len() - 1].factor {
            let s = Element { syl: vec![core.syl[0]] };
            c = c.mul(&s, pres);
            core = s.inverse(pres).mul(&core, pres).mul(&s, pres);
        }
        (c, core)
    }

    /// Order in the group presented by `pres`.
    pub fn order(&self, pres: &Presentation) -> Order {
        let (_, core) = self.cyclic_reduction(pres);
        match core.syl.as_slice() {
            [] => Order::Finite(1),
            [s] => match pres.factor(s.factor).order() {
                Order::Finite(m) => Order::Finite(m / (s.exp.unsigned_abs()).gcd(&m)),
                Order::Infinite => Order::Infinite,
            },
            _ => Order::Infinite,
        }
    }

    pub fn display<'a>(&'a self, pres: &'a Presentation) -> impl fmt::Display + 'a {
        ElementDisplay { el: self, pres }
    }
}

struct ElementDisplay<'a> {
    el: &'a Element,
    pres: &'a Presentation,
}

impl fmt::Display for ElementDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.el.to_word(self.pres).display(self.pres))
    }
}
