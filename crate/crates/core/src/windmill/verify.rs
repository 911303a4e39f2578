use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::grow::{sigma_fraction, GrowthCase, StageRecord};
use super::state::{fixed_apex, rotation_between, WindmillConfig, WindmillState};
use super::subtree::MetricSubtree;
use crate::error::Result;
use crate::group::Element;
use crate::rational::{int, Rational};
use crate::report::{Check, Report, Tally};
use crate::rotation::{rotation_elements, RotationFamily};
use crate::tree::{TruncatedTree, Vertex};

pub(crate) fn gromov(tree: &TruncatedTree, x: &Vertex, y: &Vertex, z: &Vertex) -> Rational {
    (tree.full_distance(x, z) + tree.full_distance(y, z) - tree.full_distance(x, y)) / int(2)
}

/// Axioms of an extended windmill on the state, and when the step that
/// produced it is given, the lemmas about that step. On the tree every
/// `C·δ` bound is asserted with zero slack.
pub fn verify_windmill(
    state: &WindmillState,
    record: Option<&StageRecord>,
    tree: &TruncatedTree,
    family: &RotationFamily,
    cfg: &WindmillConfig,
) -> Result<Report> {
    let delta = cfg.delta.0;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (state.stage as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut report = Report::new(format!("windmill stage {}", state.stage));

    let defect = state.w.connectivity_defect(tree);
    report.push(Check::simple("windmill_convex", defect.is_none(), 1, defect));

    report.push(invariance(state, tree, family, cfg, &mut rng));
    report.push(large_angle(state, tree, family, delta, cfg, &mut rng));
    report.push(free_stabilizers(state, tree, family, cfg, &mut rng));

    let field = state.w.distance_field(tree);
    let mut near = Tally::new("absorbed_apices_in_windmill").with_allowance(int(4) * delta);
    for &v in &state.v {
        let d = field.dist[v].unwrap_or_default();
        near.observe(d, int(0), int(4) * delta, || tree.label(v).to_string());
    }
    report.push(near.finish());

    if state.stage > 0 {
        let stray = tree.apices().find(|&x| state.w.contains_vertex(x) != state.v.contains(&x));
        report.push(Check::simple(
            "absorbed_apices_are_windmill_apices",
            stray.is_none(),
            tree.apices().count() as u64,
            stray.map(|x| tree.label(x).to_string()),
        ));
    }

    if let Some(rec) = record {
        let grown = rec.prev_w.neighborhood(tree, sigma_fraction(family, 1, 10));
        let missing = state.w.missing_from(&grown, tree);
        report.push(Check::simple("monotone_growth", missing.is_none(), 1, missing));
        stage_lemmas(&mut report, state, rec, tree, family, delta, cfg, &mut rng);
    }
    Ok(report)
}

fn invariance(
    state: &WindmillState,
    tree: &TruncatedTree,
    family: &RotationFamily,
    cfg: &WindmillConfig,
    rng: &mut ChaCha8Rng,
) -> Check {
    let pres = tree.presentation();
    let mut tally = Tally::new("windmill_invariant");
    let gens = state.l_generators(tree, family);
    if gens.is_empty() {
        return Check::not_applicable("windmill_invariant", "L is trivial");
    }
    let core: Vec<usize> = state.w.core().iter().copied().filter(|&x| tree.is_interior(x)).collect();
    let reach: Vec<((usize, usize), Rational)> = state.w.reaches().iter().map(|(k, r)| (*k, *r)).collect();
    // every generator of N against every vertex, sampled rotation generators
    let mut chosen: Vec<&Element> = gens.iter().filter(|(c, _)| c.is_none()).map(|(_, g)| g).collect();
    let rot: Vec<&Element> = gens.iter().filter(|(c, _)| c.is_some()).map(|(_, g)| g).collect();
    chosen.extend(rot.choose_multiple(rng, cfg.samples.min(rot.len())).copied());
    for g in chosen {
        for gi in [g.clone(), g.inverse(pres)] {
            let points: Vec<usize> = if gens.iter().any(|(c, h)| c.is_none() && h == g) {
                core.clone()
            } else {
                core.choose_multiple(rng, cfg.samples.min(core.len())).copied().collect()
            };
            for x in points {
                let Some(j) = tree.act(&gi, x).in_ball() else {
                    tally.skip();
                    continue;
                };
                if !tree.is_interior(j) {
                    tally.skip();
                    continue;
                }
                let ok = state.w.contains_vertex(j) && (state.v.contains(&x) == state.v.contains(&j));
                tally.observe_bool(ok, || format!("{} maps {} to {}", gi.display(pres), tree.label(x), tree.label(j)));
            }
            for &((u, w), r) in reach.choose_multiple(rng, cfg.samples.min(reach.len())) {
                let (Some(gu), Some(gw)) = (tree.act(&gi, u).in_ball(), tree.act(&gi, w).in_ball()) else {
                    tally.skip();
                    continue;
                };
                if !tree.is_interior(gu) || !tree.is_interior(gw) {
                    tally.skip();
                    continue;
                }
                let ok = state.w.contains_vertex(gw) || state.w.reaches().get(&(gu, gw)).is_some_and(|s| *s >= r);
                tally.observe_bool(ok, || {
                    format!("{} moves the partial edge at {} off the windmill", gi.display(pres), tree.label(u))
                });
            }
        }
    }
    tally.finish()
}

/// Apex exits of `set`: pairs of exits in one orbit of the rotation group.
fn exit_collision(
    set: &MetricSubtree,
    apices: impl Iterator<Item = usize>,
    tree: &TruncatedTree,
    family: &RotationFamily,
    tally: &mut Tally,
) {
    let field = set.distance_field(tree);
    for v in apices {
        let exits = set.exits(tree, &field, v);
        for &x in &exits {
            for &y in &exits {
                let h = rotation_between(tree, family, v, x, y);
                tally.observe_bool(h.is_none(), || {
                    format!(
                        "at {} the exits {} and {} differ by {}",
                        tree.label(v),
                        tree.label(x),
                        tree.label(y),
                        h.as_ref().map(|h| h.display(tree.presentation()).to_string()).unwrap_or_default()
                    )
                });
            }
        }
    }
}

/// Direct Gromov products `⟨x, h·y⟩_v` on sampled tuples.
#[allow(clippy::too_many_arguments)]
fn sampled_apex_products(
    set: &MetricSubtree,
    apices: &[usize],
    tree: &TruncatedTree,
    family: &RotationFamily,
    bound: Rational,
    samples: usize,
    rng: &mut ChaCha8Rng,
    tally: &mut Tally,
) {
    let pres = tree.presentation();
    let points: Vec<usize> = set.core().iter().copied().collect();
    if points.is_empty() || apices.is_empty() {
        return;
    }
    for _ in 0..samples {
        let v = apices[rng.gen_range(0..apices.len())];
        let (x, y) = (points[rng.gen_range(0..points.len())], points[rng.gen_range(0..points.len())]);
        let p = family.pair_at(v).expect("every apex carries a pair");
        let hs = rotation_elements(pres, family.filling(), p.factor, &p.conjugator, 2);
        let h = &hs[rng.gen_range(0..hs.len())];
        let (vx, vv) = (tree.vertex(x), tree.vertex(v));
        let hy = tree.vertex(y).translate(h, pres);
        tally.observe(gromov(tree, vx, &hy, vv), int(0), bound, || {
            format!("v = {}, x = {}, y = {}, h = {}", tree.label(v), tree.label(x), tree.label(y), h.display(pres))
        });
    }
}

fn large_angle(
    state: &WindmillState,
    tree: &TruncatedTree,
    family: &RotationFamily,
    delta: Rational,
    cfg: &WindmillConfig,
    rng: &mut ChaCha8Rng,
) -> Check {
    let bound = int(100) * delta;
    let mut tally = Tally::new("windmill_large_angle").with_allowance(bound);
    let outside: Vec<usize> = tree.apices().filter(|v| !state.v.contains(v)).collect();
    exit_collision(&state.w, outside.iter().copied(), tree, family, &mut tally);
    sampled_apex_products(&state.w, &outside, tree, family, bound, cfg.samples, rng, &mut tally);
    tally.finish()
}

fn free_stabilizers(
    state: &WindmillState,
    tree: &TruncatedTree,
    family: &RotationFamily,
    cfg: &WindmillConfig,
    rng: &mut ChaCha8Rng,
) -> Check {
    let pres = tree.presentation();
    let gens = state.l_generators(tree, family);
    if gens.is_empty() {
        return Check::not_applicable("windmill_free_stabilizers", "L is trivial");
    }
    let mut tally = Tally::new("windmill_free_stabilizers");
    let mut elements: Vec<Element> = gens.iter().map(|(_, g)| g.clone()).collect();
    for _ in 0..cfg.samples {
        let len = rng.gen_range(2..=3);
        let mut g = Element::identity();
        for _ in 0..len {
            let (_, h) = &gens[rng.gen_range(0..gens.len())];
            let h = if rng.gen_bool(0.5) { h.clone() } else { h.inverse(pres) };
            g = g.mul(&h, pres);
        }
        elements.push(g);
    }
    for g in elements.iter().filter(|g| !g.is_identity()) {
        let fixed = fixed_apex(g, pres).and_then(|v| tree.index_of(&v));
        let ok = fixed.is_none_or(|v| state.v.contains(&v));
        tally.observe_bool(ok, || {
            format!("{} fixes {}", g.display(pres), fixed.map(|v| tree.label(v).to_string()).unwrap_or_default())
        });
    }
    tally.finish()
}

#[allow(clippy::too_many_arguments)]
fn stage_lemmas(
    report: &mut Report,
    state: &WindmillState,
    rec: &StageRecord,
    tree: &TruncatedTree,
    family: &RotationFamily,
    delta: Rational,
    cfg: &WindmillConfig,
    rng: &mut ChaCha8Rng,
) {
    if rec.case == GrowthCase::Neighborhood {
        for name in ["apex_gromov_product_on_hull", "apices_near_hull", "closure_quasiconvex", "closure_saturated"] {
            report.push(Check::not_applicable(name, "no apex absorbed at this stage"));
        }
        return;
    }
    let bound = int(105) * delta;
    let mut angle = Tally::new("apex_gromov_product_on_hull").with_allowance(bound);
    exit_collision(&rec.s, rec.a.iter().copied(), tree, family, &mut angle);
    sampled_apex_products(&rec.s, &rec.a, tree, family, bound, cfg.samples, rng, &mut angle);
    report.push(angle.finish());

    let field = rec.s.distance_field(tree);
    let reach = sigma_fraction(family, 1, 5);
    let mut near = Tally::new("apices_near_hull");
    for v in tree.apices() {
        if field.dist[v].is_some_and(|d| d <= reach) {
            near.observe_bool(rec.prev_v.contains(&v) || rec.a.contains(&v), || tree.label(v).to_string());
        }
    }
    report.push(near.finish());

    let closure = rec.closure.connectivity_defect(tree);
    let convex = closure.is_none() && state.w.connectivity_defect(tree).is_none();
    report.push(Check::simple("closure_quasiconvex", convex, 1, closure));
    report.push(Check::simple(
        "closure_saturated",
        rec.saturated,
        1,
        (!rec.saturated).then(|| format!("still growing after {} rounds", cfg.closure_syllables)),
    ));
}
