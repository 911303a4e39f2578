use std::fmt;

use super::Presentation;
use crate::error::{Error, Result};

/// Largest exponent accepted when parsing `x^n`.
pub const MAX_PARSED_EXPONENT: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub gen: usize,
    pub inv: bool,
}

impl Letter {
    pub fn inverse(self) -> Letter {
        Letter {
            gen: self.gen,
            inv: !self.inv,
        }
    }

    /// Position in the order a < a⁻¹ < b < b⁻¹ < ….
    pub fn rank(self) -> usize {
        2 * self.gen + self.inv as usize
    }
}

/// A freely reduced word.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct GroupWord {
    letters: Vec<Letter>,
}

/// Free reduction of a raw letter sequence.
pub fn reduce(raw: impl IntoIterator<Item = Letter>) -> GroupWord {
    let mut out: Vec<Letter> = Vec::new();
    for l in raw {
        if out.last() == Some(&l.inverse()) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    GroupWord { letters: out }
}

impl GroupWord {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn mul(&self, other: &GroupWord) -> GroupWord {
        reduce(self.letters.iter().chain(&other.letters).copied())
    }

    pub fn inverse(&self) -> GroupWord {
        GroupWord {
            letters: self.letters.iter().rev().map(|l| l.inverse()).collect(),
        }
    }

    /// Shortlex comparison key.
    pub fn shortlex_key(&self) -> (usize, Vec<usize>) {
        (self.letters.len(), self.letters.iter().map(|l| l.rank()).collect())
    }

    /// Parses `a^3 b A b^-2` style input: a generator letter, uppercase for
    /// the inverse, optionally followed by `^n`. `1` is the identity.
    pub fn parse(text: &str, pres: &Presentation) -> Result<GroupWord> {
        let mut raw = Vec::new();
        let chars: Vec<char> = text.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            i += 1;
            if c.is_whitespace() || c == '*' || c == '.' || c == '1' {
                continue;
            }
            if !c.is_ascii_alphabetic() {
                return Err(Error::input(format!("unexpected character {c:?} at position {} in {text:?}", i - 1)));
            }
            let gen = pres
                .generator_index(c)
                .ok_or_else(|| Error::input(format!("unknown generator {c:?} in {text:?}")))?;
            let mut exp: i64 = 1;
            if i < chars.len() && chars[i] == '^' {
                i += 1;
                let neg = i < chars.len() && chars[i] == '-';
                if neg {
                    i += 1;
                }
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[start..i].iter().collect();
                let n: u64 = digits
                    .parse()
                    .map_err(|_| Error::input(format!("missing exponent after '^' in {text:?}")))?;
                if n > MAX_PARSED_EXPONENT {
                    return Err(Error::input(format!("exponent {n} exceeds {MAX_PARSED_EXPONENT}")));
                }
                exp = if neg { -(n as i64) } else { n as i64 };
            }
            let inv = c.is_ascii_uppercase() != (exp < 0);
            for _ in 0..exp.unsigned_abs() {
                raw.push(Letter { gen, inv });
            }
        }
        Ok(reduce(raw))
    }

    pub fn display<'a>(&'a self, pres: &'a Presentation) -> impl fmt::Display + 'a {
        WordDisplay { word: self, pres }
    }
}

struct WordDisplay<'a> {
    word: &'a GroupWord,
    pres: &'a Presentation,
}

impl fmt::Display for WordDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ls = self.word.letters();
        if ls.is_empty() {
            return write!(f, "1");
        }
        let mut i = 0;
        let mut first = true;
        while i < ls.len() {
            let mut j = i;
            while j < ls.len() && ls[j] == ls[i] {
                j += 1;
            }
            if !first {
                write!(f, " ")?;
            }
            first = false;
            let name = self.pres.name(ls[i].gen);
            let n = (j - i) as i64;
            let e = if ls[i].inv { -n } else { n };
            if e == 1 {
                write!(f, "{name}")?;
            } else {
                write!(f, "{name}^{e}")?;
            }
            i = j;
        }
        Ok(())
    }
}
