use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{generator, in_rotation_group, rotation_elements, RotationFamily};
use crate::error::{Error, Result};
use crate::group::{enumerate_ball, Element};
use crate::metric::{neighborhood, quasiconvexity_defect, PointSubset};
use crate::rational::{format_rational, Rational};
use crate::report::{Check, Report, Tally};
use crate::tree::{Axis, Image, TreeKind, TruncatedTree, Vertex};

#[derive(Clone, Debug)]
pub struct AxiomConfig {
    /// Rotation elements t pᵢ^{j kᵢ} t⁻¹ with |j| up to this cap.
    pub rotation_exponent_cap: i64,
    /// Radius around each apex for the global form of the rotation identity.
    pub extended_radius: Rational,
    /// Word length of the translating elements in the invariance check.
    pub invariance_word_len: u64,
    /// Pairs sampled for the costlier checks.
    pub samples: usize,
    pub seed: u64,
}

impl Default for AxiomConfig {
    fn default() -> Self {
        AxiomConfig {
            rotation_exponent_cap: 3,
            extended_radius: Rational::from_integer(4),
            invariance_word_len: 3,
            samples: 64,
            seed: 0,
        }
    }
}

fn full_gromov(tree: &TruncatedTree, x: &Vertex, y: &Vertex, z: &Vertex) -> Rational {
    (tree.full_distance(x, z) + tree.full_distance(y, z) - tree.full_distance(x, y)) / Rational::from_integer(2)
}

fn sample_pairs(family: &RotationFamily, cfg: &AxiomConfig, salt: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..family.pairs().len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ salt);
    idx.shuffle(&mut rng);
    idx.truncate(cfg.samples);
    idx.sort_unstable();
    idx
}

fn check_margin(family: &RotationFamily, tree: &TruncatedTree) -> Result<()> {
    let sigma = family.sigma();
    let needed = sigma / Rational::from_integer(10) + sigma;
    let per_depth = match tree.kind() {
        TreeKind::Subdivided => Rational::from_integer(2),
        TreeKind::Plain => Rational::from_integer(1),
    } * tree.edge_scale();
    if per_depth * Rational::from_integer(tree.radius() as i128) < needed && tree.presentation().rank() > 1 {
        return Err(Error::precondition(format!(
            "ball of radius {} leaves less than σ/10 + σ = {} around the base apices",
            tree.radius(),
            format_rational(&needed)
        )));
    }
    Ok(())
}

/// The three axioms of a σ-rotation family, and normality of each rotation
/// group in its apex stabilizer.
pub fn verify_axioms(family: &RotationFamily, tree: &TruncatedTree, cfg: &AxiomConfig) -> Result<Report> {
    check_margin(family, tree)?;
    let pres = tree.presentation();
    let filling = family.filling();
    let space = tree.space();
    let sigma = family.sigma();
    let tenth = sigma / Rational::from_integer(10);
    let two = Rational::from_integer(2);
    let mut report = Report::new("rotation_axioms");

    let mut r1 = Tally::new("rotation_displacement");
    // exhaustive over apices: B(v, σ/10) is the apex itself when σ/10 is below one edge
    for p in family.pairs() {
        let v = tree.vertex(p.apex);
        let hs = rotation_elements(pres, filling, p.factor, &p.conjugator, cfg.rotation_exponent_cap);
        let near = (0..tree.len()).filter(|&x| tree.dist(p.apex, x) <= tenth && tree.is_interior(x));
        for x in near {
            let xv = tree.vertex(x);
            for h in hs.iter().filter(|h| !family.exclusion().contains(h)) {
                let d = tree.full_distance(&xv.translate(h, pres), xv);
                r1.observe_bool(d == two * tree.full_distance(v, xv), || {
                    format!("h={} x={}", h.display(pres), tree.label(x))
                });
            }
        }
    }
    report.push(r1.finish());

    let mut r1x = Tally::new("rotation_displacement_extended");
    for k in sample_pairs(family, cfg, 1) {
        let p = &family.pairs()[k];
        let v = tree.vertex(p.apex);
        let hs = rotation_elements(pres, filling, p.factor, &p.conjugator, cfg.rotation_exponent_cap);
        for x in (0..tree.len()).filter(|&x| tree.dist(p.apex, x) <= cfg.extended_radius) {
            let xv = tree.vertex(x);
            for h in &hs {
                let d = tree.full_distance(&xv.translate(h, pres), xv);
                r1x.observe_bool(d == two * tree.full_distance(v, xv), || {
                    format!("h={} x={}", h.display(pres), tree.label(x))
                });
            }
        }
    }
    report.push(r1x.finish());

    let apices: Vec<usize> = family.pairs().iter().map(|p| p.apex).collect();
    let mut closest: Option<(i64, usize, usize)> = None;
    let mut pairs_checked = 0u64;
    for (i, &a) in apices.iter().enumerate() {
        for &b in &apices[i + 1..] {
            pairs_checked += 1;
            let d = space.units(a, b);
            if closest.is_none_or(|c| d < c.0) {
                closest = Some((d, a, b));
            }
        }
    }
    let r2 = match closest {
        Some((d, a, b)) => {
            let d = space.to_length(d);
            Check::simple(
                "apex_separation",
                d >= sigma,
                pairs_checked,
                Some(format!(
                    "closest apices {} and {} at distance {} (σ = {})",
                    tree.label(a),
                    tree.label(b),
                    format_rational(&d),
                    format_rational(&sigma)
                )),
            )
        }
        None => Check::not_applicable("apex_separation", "fewer than two apices"),
    };
    report.push(r2);

    let mut r3 = Tally::new("family_invariance");
    for g in enumerate_ball(pres, cfg.invariance_word_len)? {
        for p in family.pairs() {
            let Image::InBall(gv) = tree.act(&g, p.apex) else {
                r3.skip();
                continue;
            };
            let gt = g.mul(&p.conjugator, pres);
            let ok = family.pair_at(gv).is_some_and(|q| {
                q.factor == p.factor
                    && in_rotation_group(pres, filling, q.factor, &q.conjugator, &generator(pres, filling, p.factor, &gt))
                    && in_rotation_group(pres, filling, p.factor, &gt, &generator(pres, filling, q.factor, &q.conjugator))
            });
            r3.observe_bool(ok, || {
                format!(
                    "translate of the pair at {} by {} has no matching pair at {}",
                    tree.label(p.apex),
                    g.display(pres),
                    tree.label(gv)
                )
            });
        }
    }
    report.push(r3.finish());

    let mut normal = Tally::new("rotation_group_normal");
    for k in sample_pairs(family, cfg, 2) {
        let p = &family.pairs()[k];
        let hs = rotation_elements(pres, filling, p.factor, &p.conjugator, cfg.rotation_exponent_cap);
        for e in [1, 2, -1] {
            let s = p.conjugator.conjugate(&Element::power_of_generator(pres, p.factor, e), pres);
            for h in &hs {
                normal.observe_bool(in_rotation_group(pres, filling, p.factor, &p.conjugator, &s.conjugate(h, pres)), || {
                    format!("s={} h={}", s.display(pres), h.display(pres))
                });
            }
        }
    }
    report.push(normal.finish());
    Ok(report)
}

/// Small Gromov products at an apex, and against quasi-convex sets far from it.
pub fn verify_rotation_lemmas(
    family: &RotationFamily,
    tree: &TruncatedTree,
    delta: Rational,
    cfg: &AxiomConfig,
) -> Result<Report> {
    check_margin(family, tree)?;
    let pres = tree.presentation();
    let filling = family.filling();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 3);
    let two_delta = Rational::from_integer(2) * delta;
    let three_delta = Rational::from_integer(3) * delta;
    let zero = Rational::from_integer(0);

    let mut at_apex = Tally::new("apex_gromov_product").with_allowance(two_delta);
    let mut xs: Vec<usize> = (0..tree.len()).collect();
    xs.shuffle(&mut rng);
    xs.truncate(cfg.samples.max(1) * 4);
    for k in sample_pairs(family, cfg, 4) {
        let p = &family.pairs()[k];
        let v = tree.vertex(p.apex);
        let hs = rotation_elements(pres, filling, p.factor, &p.conjugator, cfg.rotation_exponent_cap);
        for &x in xs.iter().chain(std::iter::once(&p.apex)) {
            let xv = tree.vertex(x);
            for h in &hs {
                let lhs = full_gromov(tree, xv, &xv.translate(h, pres), v);
                at_apex.observe(lhs, zero, two_delta, || format!("v={} x={} h={}", tree.label(p.apex), tree.label(x), h.display(pres)));
            }
        }
    }

    // quasi-convex test sets: axes of short loxodromic elements and small balls
    let mut sets: Vec<(String, PointSubset)> = Vec::new();
    for g in enumerate_ball(pres, 3)?.iter().filter(|g| g.cyclic_reduction(pres).1.syllable_count() >= 2).take(6) {
        let ax = Axis::build(tree, g, delta)?;
        sets.push((format!("axis of {}", g.display(pres)), ax.cylinder));
    }
    let mut centers: Vec<usize> = (0..tree.len()).filter(|&i| tree.is_interior(i)).collect();
    centers.shuffle(&mut rng);
    for &c in centers.iter().take(4) {
        let ball = neighborhood(tree.space(), &PointSubset::new(tree.space(), [c])?, tree.edge_scale())?;
        sets.push((format!("ball at {}", tree.label(c)), ball));
    }
    let mut far = Tally::new("far_quasiconvex_product").with_allowance(three_delta);
    for (name, set) in &sets {
        let alpha = quasiconvexity_defect(tree.space(), set)?;
        for k in sample_pairs(family, cfg, 5) {
            let p = &family.pairs()[k];
            let dv = tree.space().to_length(set.units_from(tree.space(), p.apex));
            if dv <= alpha + three_delta {
                far.skip();
                continue;
            }
            let v = tree.vertex(p.apex);
            let hs = rotation_elements(pres, filling, p.factor, &p.conjugator, cfg.rotation_exponent_cap);
            for &y in set.members() {
                for &y2 in set.members() {
                    for h in &hs {
                        let hy2 = tree.vertex(y2).translate(h, pres);
                        let lhs = full_gromov(tree, tree.vertex(y), &hy2, v);
                        far.observe(lhs, zero, three_delta, || {
                            format!("{name}, v={} y={} y′={} h={}", tree.label(p.apex), tree.label(y), tree.label(y2), h.display(pres))
                        });
                    }
                }
            }
        }
    }
    let mut report = Report::new("rotation_lemmas");
    report.push(at_apex.finish());
    report.push(far.finish());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::super::tests::setup;
    use super::*;
    use crate::rational::{frac, int};
    use crate::report::Status;

    #[test]
    fn axioms_hold_for_the_three_three_filling() {
        let (_, t, r) = setup(3, vec![3, 3]);
        let rep = verify_axioms(&r, &t, &AxiomConfig::default()).unwrap();
        for c in &rep.checks {
            assert_eq!(c.status, Status::Pass, "{c:?}");
        }
        let lem = verify_rotation_lemmas(&r, &t, frac(1, 100_000_000_000), &AxiomConfig::default()).unwrap();
        for c in &lem.checks {
            assert_eq!(c.status, Status::Pass, "{c:?}");
            assert_eq!(c.worst_slack.as_ref().unwrap().0, int(0));
        }
    }

    #[test]
    fn forced_failures() {
        let (_, t, r) = setup(3, vec![3, 3]);
        let big = r.with_sigma(int(3));
        let rep = verify_axioms(&big, &t, &AxiomConfig::default()).unwrap();
        let c = rep.get("apex_separation").unwrap();
        assert_eq!(c.status, Status::Fail);
        assert!(c.witness.as_ref().unwrap().contains("distance 2"));
        let drop = t.index_of(&Vertex::coset(1, &crate::group::Element::power_of_generator(t.presentation(), 0, 1))).unwrap();
        let rep = verify_axioms(&r.without_pair(drop), &t, &AxiomConfig::default()).unwrap();
        let c = rep.get("family_invariance").unwrap();
        assert_eq!(c.status, Status::Fail);
        assert!(c.witness.as_ref().unwrap().contains("a<b>"), "{:?}", c.witness);
    }

    #[test]
    fn small_balls_fail_the_margin() {
        let (_, t, r) = setup(1, vec![3, 3]);
        assert_eq!(verify_axioms(&r, &t, &AxiomConfig::default()).unwrap_err().exit_code(), 3);
    }
}
