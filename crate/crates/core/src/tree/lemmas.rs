use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{stable_translation_length, translation_length, Axis, TruncatedTree};
use crate::error::{Error, Result};
use crate::group::enumerate_ball;
use crate::rational::{format_rational, Rational};
use crate::report::{Check, Report, Tally};

/// Powers used for stable translation lengths.
const STABLE_POWERS: u64 = 8;

/// Translation-length window and displacement bounds for the elements of
/// word length at most `max_len`. Elements whose translation length the
/// ball cannot certify are counted as not applicable; `samples` loxodromic
/// elements are drawn for the displacement checks.
pub fn verify_translation_lemmas(
    tree: &TruncatedTree,
    delta: Rational,
    max_len: u64,
    samples: usize,
    seed: u64,
) -> Result<Report> {
    let pres = tree.presentation();
    let elements = enumerate_ball(pres, max_len)?;
    let sixteen = Rational::from_integer(16) * delta;
    let mut window = Tally::new("translation_length_window").with_allowance(sixteen);
    let mut lox = Vec::new();
    for g in elements.iter().skip(1) {
        let (l, linf) = match (translation_length(tree, g), stable_translation_length(tree, g, STABLE_POWERS)) {
            (Ok(l), Ok(s)) => (l, s),
            (Err(Error::Precondition(_)), _) | (_, Err(Error::Precondition(_))) => {
                window.skip();
                continue;
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        let name = || g.display(pres).to_string();
        window.observe(linf, l, l, name);
        window.observe(l, linf, linf + sixteen, name);
        if l > Rational::from_integer(0) {
            lox.push((g.clone(), l));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    lox.shuffle(&mut rng);
    lox.truncate(samples);
    let bound = Rational::from_integer(112) * delta;
    let mut displacement = Tally::new("displacement_bound").with_allowance(bound);
    let mut identity = Tally::new("displacement_identity");
    let two = Rational::from_integer(2);
    for (g, l) in &lox {
        let axis = Axis::build(tree, g, delta)?;
        let line = axis.vertex_set(tree);
        for x in (0..tree.len()).filter(|&x| tree.is_interior(x)) {
            let Some(gx) = tree.act(g, x).in_ball() else { continue };
            let d = tree.dist(x, gx);
            let to_cyl = tree.space().to_length(axis.cylinder.units_from(tree.space(), x));
            let to_axis = tree.space().to_length(line.units_from(tree.space(), x));
            let sharp = *l + two * to_cyl;
            let wit = || format!("g={} x={}", g.display(pres), tree.label(x));
            displacement.observe(d, sharp, sharp + bound, wit);
            identity.observe_bool(d == *l + two * to_axis, || {
                format!("{}: d(gx,x) = {}", wit(), format_rational(&d))
            });
        }
    }
    let mut report = Report::new("translation");
    report.push(window.finish());
    report.push(displacement.finish());
    report.push(identity.finish());
    if lox.is_empty() {
        report.push(Check::not_applicable("loxodromic_sample", "no loxodromic element fits the ball"));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::super::TreeKind;
    use super::*;
    use crate::group::Presentation;
    use crate::rational::{frac, int};
    use crate::report::Status;

    #[test]
    fn trees_are_sharp() {
        let p = Presentation::free(2).unwrap();
        let t = TruncatedTree::build(&p, 4, int(1), TreeKind::Subdivided).unwrap();
        let r = verify_translation_lemmas(&t, frac(1, 100_000_000_000), 3, 12, 0).unwrap();
        assert!(r.all_pass(), "{:?}", r.failures().collect::<Vec<_>>());
        for c in &r.checks {
            assert_eq!(c.status, Status::Pass, "{}", c.name);
            if let Some(w) = &c.worst_slack {
                assert_eq!(w.0, int(0));
            }
        }
    }
}
