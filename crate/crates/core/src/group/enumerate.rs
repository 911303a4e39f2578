use super::{Element, Factor, Presentation};
use crate::error::{Error, Result};

pub const BALL_RADIUS_CAP: u64 = 10;

/// Exponents of factor `f` spelled with at most `budget` letters, as
/// canonical residues.
pub(crate) fn exponents_within(f: Factor, budget: u64) -> Vec<i64> {
    match f {
        Factor::Infinite => {
            let b = budget as i64;
            (-b..=b).filter(|&e| e != 0).collect()
        }
        Factor::Finite { m } => (1..m as i64).filter(|&e| f.syllable_len(e) <= budget).collect(),
    }
}

/// Group elements of word length at most `radius`, in shortlex order of their
/// shortest spellings.
pub fn enumerate_ball(pres: &Presentation, radius: u64) -> Result<Vec<Element>> {
    if radius > BALL_RADIUS_CAP {
        return Err(Error::resource("word-length ball radius", BALL_RADIUS_CAP as usize));
    }
    let mut out = Vec::new();
    let mut stack = vec![(Element::identity(), None::<usize>, radius)];
    while let Some((g, last, budget)) = stack.pop() {
        for i in 0..pres.rank() {
            if Some(i) == last {
                continue;
            }
            for e in exponents_within(pres.factor(i), budget) {
                let len = pres.factor(i).syllable_len(e);
                let h = g.mul(&Element::power_of_generator(pres, i, e), pres);
                stack.push((h, Some(i), budget - len));
            }
        }
        out.push(g);
    }
    let mut keyed: Vec<_> = out.into_iter().map(|g| (g.to_word(pres).shortlex_key(), g)).collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(keyed.into_iter().map(|(_, g)| g).collect())
}
