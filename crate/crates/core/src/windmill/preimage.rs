use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::decompose::{chain_report, decompose_in, trichotomy, FundamentalRegion};
use super::grow::{run_windmill, WindmillRun};
use super::state::{init_windmill, WindmillConfig, WindmillState};
use super::subtree::MetricSubtree;
use super::verify::gromov;
use crate::error::{Error, Result};
use crate::group::{enumerate_ball, image_order, kernel_membership, Element, Order, Presentation};
use crate::oracle::{certify_injectivity, Certificate};
use crate::rational::{int, Q};
use crate::report::{Check, Report, Tally};
use crate::rotation::{rotation_elements, RotationFamily};
use crate::tree::{Axis, TruncatedTree};

/// Bounds for certifying the ledger's free product.
#[derive(Clone, Debug, Serialize)]
pub struct CertificationBounds {
    pub max_syllables: usize,
    pub max_exponent: i64,
    pub exhaustive_slots: usize,
    pub samples: u64,
}

impl Default for CertificationBounds {
    fn default() -> Self {
        CertificationBounds {
            max_syllables: 4,
            max_exponent: 3,
            exhaustive_slots: 4,
            samples: 20_000,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ReducedPreimage {
    #[serde(skip)]
    pub element: Element,
    pub word: String,
    pub translation_length: Q,
    pub candidates: u64,
    pub certificate: Check,
}

/// Translation length in edges of the subdivided tree, `None` when elliptic.
fn loxodromic_length(g: &Element, pres: &Presentation) -> Option<usize> {
    let (_, core) = g.cyclic_reduction(pres);
    (core.syllable_count() >= 2).then(|| 2 * core.syllable_count())
}

/// No apex sees two points of the cylinder of `g` in one orbit of its
/// rotation group: every `⟨h·y, y'⟩_v` vanishes.
fn reduced_check(tree: &TruncatedTree, family: &RotationFamily, g: &Element, cfg: &WindmillConfig) -> Result<(Check, Option<Element>)> {
    let pres = tree.presentation();
    let axis = Axis::build(tree, g, cfg.delta.0)?;
    let y = MetricSubtree::from_vertices(tree, axis.cylinder.members().iter().copied())?;
    let bound = int(100) * cfg.delta.0;
    let mut tally = Tally::new("reduced_axis").with_allowance(bound);
    let field = y.distance_field(tree);
    let mut offending = None;
    for v in tree.apices() {
        let exits = y.exits(tree, &field, v);
        for &x in &exits {
            for &x2 in &exits {
                let h = super::state::rotation_between(tree, family, v, x, x2);
                if offending.is_none() {
                    offending = h.clone();
                }
                tally.observe_bool(h.is_none(), || format!("the apex {} sees the axis at a small angle", tree.label(v)));
            }
        }
    }
    let pts: Vec<usize> = y.core().iter().copied().filter(|&i| tree.is_interior(i)).collect();
    let apices: Vec<usize> = tree.apices().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.samples {
        if pts.is_empty() {
            break;
        }
        let v = apices[rng.gen_range(0..apices.len())];
        let p = family.pair_at(v).expect("every apex carries a pair");
        let hs = rotation_elements(pres, family.filling(), p.factor, &p.conjugator, 2);
        let h = &hs[rng.gen_range(0..hs.len())];
        let (a, b) = (pts[rng.gen_range(0..pts.len())], pts[rng.gen_range(0..pts.len())]);
        let ha = tree.vertex(a).translate(h, pres);
        tally.observe(gromov(tree, &ha, tree.vertex(b), tree.vertex(v)), int(0), bound, || {
            format!("v = {}, y = {}, y' = {}", tree.label(v), tree.label(a), tree.label(b))
        });
    }
    Ok((tally.finish(), offending))
}

/// A loxodromic preimage `u·g₀` of `g_bar`, `u ∈ K` with `|u| ≤ search_len`,
/// of least translation length whose axis meets every apex at a large angle.
pub fn find_reduced_preimage(
    g_bar: &Element,
    tree: &TruncatedTree,
    family: &RotationFamily,
    search_len: u64,
    cfg: &WindmillConfig,
) -> Result<ReducedPreimage> {
    let pres = tree.presentation();
    let filling = family.filling();
    if let Order::Finite(k) = image_order(g_bar, filling) {
        return Err(Error::precondition(format!(
            "the image of {} in the quotient has finite order {k}",
            g_bar.display(pres)
        )));
    }
    // greedy shortening: strip a rotation that folds the axis onto itself
    let mut g0 = g_bar.clone();
    for _ in 0..8 {
        let (check, witness) = reduced_check(tree, family, &g0, cfg)?;
        match witness {
            Some(h) if !check.passed() => {
                let next = h.inverse(pres).mul(&g0, pres);
                if loxodromic_length(&next, pres).is_none() {
                    break;
                }
                g0 = next;
            }
            _ => break,
        }
    }
    let mut candidates: Vec<(usize, u64, Element)> = enumerate_ball(pres, search_len)?
        .into_iter()
        .filter(|u| kernel_membership(u, filling))
        .map(|u| u.mul(&g0, pres))
        .filter_map(|c| loxodromic_length(&c, pres).map(|l| (l, c.word_length(pres), c)))
        .collect();
    candidates.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.cmp(&y.1)).then_with(|| x.2.shortlex_cmp(&y.2, pres)));
    let total = candidates.len() as u64;
    for (l, _, c) in candidates {
        let (check, _) = reduced_check(tree, family, &c, cfg)?;
        if check.passed() {
            let word = c.display(pres).to_string();
            return Ok(ReducedPreimage {
                word,
                element: c,
                translation_length: Q(tree.edge_scale() * int(l as i128)),
                candidates: total,
                certificate: check,
            });
        }
    }
    Err(Error::precondition(format!(
        "no preimage of {} within {} kernel letters has an apex-transverse axis",
        g_bar.display(pres),
        search_len
    )))
}

/// A full windmill run with its certified ledger.
#[derive(Clone, Debug)]
pub struct StructureRun {
    pub preimage: Option<ReducedPreimage>,
    pub run: WindmillRun,
    pub certificate: Certificate,
    /// Per state: decompositions of sampled ledger words and the trichotomy.
    pub decomposition_reports: Vec<Report>,
}

impl StructureRun {
    pub fn all_pass(&self) -> bool {
        self.run.all_pass() && self.certificate.passed() && self.decomposition_reports.iter().all(Report::all_pass)
    }
}

/// Ledger words evaluated, decomposed, and checked against the peeling.
pub fn decomposition_checks(
    state: &WindmillState,
    tree: &TruncatedTree,
    family: &RotationFamily,
    cfg: &WindmillConfig,
    words: usize,
) -> Result<Report> {
    let pres = tree.presentation();
    let mut report = Report::new(format!("decompositions at stage {}", state.stage));
    let product = state.ledger.formal_product(pres, family.filling())?;
    if product.slot_count() == 0 {
        for name in ["decomposition_consistency", "rotation_number_consistency", "trichotomy"] {
            report.push(Check::not_applicable(name, "empty ledger"));
        }
        return Ok(report);
    }
    let region = FundamentalRegion::new(state, tree)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5EED ^ state.stage as u64);
    let mut consistent = Tally::new("decomposition_consistency");
    let mut count = Tally::new("rotation_number_consistency");
    let mut tri = Tally::new("trichotomy");
    let mut chain = Report::new("chains");
    for _ in 0..words {
        let len = rng.gen_range(1..=3);
        let raw: Vec<(usize, i64)> = (0..len)
            .map(|_| (rng.gen_range(0..product.slot_count()), rng.gen_range(1..=2) * if rng.gen_bool(0.5) { 1 } else { -1 }))
            .collect();
        let w = product.normalize(&raw)?;
        let g = product.evaluate(&w, pres);
        let dec = match decompose_in(&g, state, tree, family, &region) {
            Ok(d) => d,
            Err(Error::Resource { .. }) => {
                consistent.skip();
                continue;
            }
            Err(e) => {
                consistent.observe_bool(false, || format!("{}: {e}", product.describe(&w)));
                continue;
            }
        };
        consistent.observe_bool(dec.evaluate(pres) == g, || product.describe(&w));
        let m = product.rotation_syllables(&w);
        count.observe_bool(dec.m == m, || format!("{}: peeled {} rotations, formal word has {m}", product.describe(&w), dec.m));
        let cr = chain_report(&g, &dec, &region.hull, tree, family, region.y0, region.y0, cfg);
        chain.extend(cr.report);
        let outcome = trichotomy(&g, state, tree, family, cfg)?;
        tri.observe_bool(outcome.check.passed(), || {
            format!("{}: {}", product.describe(&w), outcome.check.witness.clone().unwrap_or_default())
        });
    }
    report.push(consistent.finish());
    report.push(count.finish());
    report.push(tri.finish());
    for name in ["chain_translates_in_region", "chain_gaps", "chain_gromov_products", "chain_quasigeodesic"] {
        let parts: Vec<&Check> = chain.checks.iter().filter(|c| c.name == name).collect();
        let failed = parts.iter().find(|c| !c.passed() && c.status == crate::report::Status::Fail);
        let checked = parts.iter().map(|c| c.checked).sum();
        if checked == 0 {
            report.push(Check::not_applicable(name, "no sampled word long enough"));
        } else {
            report.push(Check::simple(name, failed.is_none(), checked, failed.and_then(|c| c.witness.clone())));
        }
    }
    Ok(report)
}

fn finish_run(
    preimage: Option<ReducedPreimage>,
    init: WindmillState,
    tree: &TruncatedTree,
    family: &RotationFamily,
    cfg: &WindmillConfig,
    bounds: &CertificationBounds,
) -> Result<StructureRun> {
    let pres = tree.presentation();
    let run = run_windmill(tree, family, init, cfg)?;
    let mut decomposition_reports = Vec::new();
    for (k, state) in run.states.iter().enumerate() {
        let absorbed = k > 0 && !run.records[k - 1].new_factors.is_empty();
        let words = if k == 0 || absorbed || k + 1 == run.states.len() { 4 } else { 0 };
        if words == 0 {
            decomposition_reports.push(Report::new(format!("decompositions at stage {}", state.stage)));
        } else {
            decomposition_reports.push(decomposition_checks(state, tree, family, cfg, words)?);
        }
    }
    let product = run.ledger().nearest_first(pres).formal_product(pres, family.filling())?;
    let certificate = certify_injectivity(
        &product,
        pres,
        bounds.max_syllables,
        bounds.max_exponent,
        bounds.exhaustive_slots,
        bounds.samples,
        cfg.seed,
    )?;
    Ok(StructureRun {
        preimage,
        run,
        certificate,
        decomposition_reports,
    })
}

/// The windmill with trivial N started at the apex `P₁`: its ledger lists
/// free factors of the kernel.
pub fn kernel_structure(
    tree: &TruncatedTree,
    family: &RotationFamily,
    cfg: &WindmillConfig,
    bounds: &CertificationBounds,
) -> Result<StructureRun> {
    let start = *tree.base_vertices().first().ok_or_else(|| Error::input("the tree has no apex"))?;
    let y = MetricSubtree::from_vertices(tree, [start])?;
    let init = init_windmill(tree, family, y, Vec::new(), cfg)?;
    finish_run(None, init, tree, family, cfg, bounds)
}

/// The windmill with `N = ⟨g⟩` for a reduced preimage g of `g_bar`, started on
/// the cylinder of its axis.
pub fn preimage_structure(
    g_bar: &Element,
    tree: &TruncatedTree,
    family: &RotationFamily,
    search_len: u64,
    cfg: &WindmillConfig,
    bounds: &CertificationBounds,
) -> Result<StructureRun> {
    let pre = find_reduced_preimage(g_bar, tree, family, search_len, cfg)?;
    let axis = Axis::build(tree, &pre.element, cfg.delta.0)?;
    let y = MetricSubtree::from_vertices(tree, axis.cylinder.members().iter().copied())?;
    let init = init_windmill(tree, family, y, vec![pre.element.clone()], cfg)?;
    finish_run(Some(pre), init, tree, family, cfg, bounds)
}
