//! Free products of cyclic groups: words, syllable normal forms, fillings
//! and the quotient map onto the filled group.

mod element;
mod enumerate;
mod quotient;
mod word;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use element::{Element, Syllable};
pub use enumerate::{enumerate_ball, BALL_RADIUS_CAP};
pub use quotient::{image_order, kernel_membership, Filling};
pub use word::{reduce, GroupWord, Letter};

/// A cyclic free factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Factor {
    #[serde(rename = "Z")]
    Infinite,
    /// ℤ/m. Order 1 only appears inside quotients.
    #[serde(rename = "Z/m")]
    Finite { m: u64 },
}

impl Factor {
    pub fn order(self) -> Order {
        match self {
            Factor::Infinite => Order::Infinite,
            Factor::Finite { m } => Order::Finite(m),
        }
    }

    /// Canonical exponent of the residue of `e`, or `None` if it is trivial.
    pub fn normalize(self, e: i64) -> Option<i64> {
        let r = match self {
            Factor::Infinite => e,
            Factor::Finite { m } => e.rem_euclid(m as i64),
        };
        (r != 0).then_some(r)
    }

    /// Letters needed to spell the power `e` of the generator.
    pub fn syllable_len(self, e: i64) -> u64 {
        match self {
            Factor::Infinite => e.unsigned_abs(),
            Factor::Finite { m } => {
                let r = e.rem_euclid(m as i64) as u64;
                r.min(m - r)
            }
        }
    }

    /// The signed power of the generator spelling `e` with fewest letters,
    /// preferring the positive one on ties.
    pub fn spelled(self, e: i64) -> i64 {
        match self {
            Factor::Infinite => e,
            Factor::Finite { m } => {
                let r = e.rem_euclid(m as i64);
                if r as u64 <= m - r as u64 {
                    r
                } else {
                    r - m as i64
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Order {
    Finite(u64),
    Infinite,
}

impl std::fmt::Display for Order {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Order::Finite(n) => write!(f, "{n}"),
            Order::Infinite => write!(f, "infinite"),
        }
    }
}

/// G = P₁ ∗ ⋯ ∗ Pₙ with one single-letter generator per factor.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Presentation {
    factors: Vec<Factor>,
    names: Vec<char>,
}

impl Presentation {
    /// Generators are named `a`, `b`, `c`, … in factor order.
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::input("a presentation needs at least one factor"));
        }
        if factors.len() > 26 {
            return Err(Error::input("at most 26 factors are supported"));
        }
        for f in &factors {
            if let Factor::Finite { m } = f {
                if *m < 2 {
                    return Err(Error::input(format!("finite factor order must be at least 2, got {m}")));
                }
            }
        }
        let names = (0..factors.len()).map(|i| (b'a' + i as u8) as char).collect();
        Ok(Presentation { factors, names })
    }

    /// Builds a presentation allowing trivial factors; used for quotients.
    pub(crate) fn quotient_of(factors: Vec<Factor>) -> Self {
        let names = (0..factors.len()).map(|i| (b'a' + i as u8) as char).collect();
        Presentation { factors, names }
    }

    pub fn free(rank: usize) -> Result<Self> {
        Self::new(vec![Factor::Infinite; rank])
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn factor(&self, i: usize) -> Factor {
        self.factors[i]
    }

    pub fn rank(&self) -> usize {
        self.factors.len()
    }

    pub fn name(&self, i: usize) -> char {
        self.names[i]
    }

    pub fn generator_index(&self, c: char) -> Option<usize> {
        self.names.iter().position(|&n| n == c.to_ascii_lowercase())
    }

    /// Compact description such as `Z*Z/3`.
    pub fn describe(&self) -> String {
        self.factors
            .iter()
            .map(|f| match f {
                Factor::Infinite => "Z".to_string(),
                Factor::Finite { m } => format!("Z/{m}"),
            })
            .collect::<Vec<_>>()
            .join("*")
    }
}
