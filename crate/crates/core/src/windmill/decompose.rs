use std::collections::BTreeMap;

use serde::Serialize;

use super::state::{WindmillConfig, WindmillState};
use super::subtree::MetricSubtree;
use super::verify::gromov;
use crate::error::{Error, Result};
use crate::group::{Element, Presentation};
use crate::rational::{format_rational, int, Rational};
use crate::report::{Check, Report, Tally};
use crate::rotation::{in_rotation_group, RotationFamily};
use crate::tree::{TreeKind, TruncatedTree, Vertex};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RotationSyllable {
    /// Apex fixed by the syllable.
    pub apex: usize,
    #[serde(skip)]
    pub element: Element,
    /// The ledger entry whose apex is carried to `apex` by a power of the base.
    pub entry: usize,
    pub base_power: i64,
}

/// `g = h₁⋯h_m·u` with `hᵢ` fixing apices of the fundamental region and
/// `u ∈ N`; `m` is the rotation number.
#[derive(Clone, Debug, Serialize)]
pub struct RotationDecomposition {
    pub syllables: Vec<RotationSyllable>,
    #[serde(skip)]
    pub tail: Element,
    /// `u = gʲ` for the base generator g.
    pub tail_power: i64,
    pub m: usize,
}

impl RotationDecomposition {
    /// The product `h₁⋯h_m·u`.
    pub fn evaluate(&self, pres: &Presentation) -> Element {
        let mut out = Element::identity();
        for s in &self.syllables {
            out = out.mul(&s.element, pres);
        }
        out.mul(&self.tail, pres)
    }

    /// The decomposition as a raw word over the slots of the ledger's formal
    /// free product: slot 0 is the base when N is non-trivial.
    pub fn formal_word(&self, state: &WindmillState, pres: &Presentation, family: &RotationFamily) -> Vec<(usize, i64)> {
        let offset = usize::from(state.ledger.base.is_some());
        let base = state.n_gens.first();
        let mut out = Vec::new();
        let mut shift = 0i64;
        for s in &self.syllables {
            let e = &state.ledger.entries[s.entry];
            let conj = match base {
                Some(g) => g.pow(s.base_power, pres),
                None => Element::identity(),
            };
            let inner = conj.inverse(pres).mul(&s.element, pres).mul(&conj, pres);
            let core = e.conjugator.inverse(pres).mul(&inner, pres).mul(&e.conjugator, pres);
            let exp = core.syllables()[0].exp / family.filling().index(e.factor) as i64;
            if s.base_power != shift {
                out.push((0, s.base_power - shift));
            }
            out.push((s.entry + offset, exp));
            shift = s.base_power;
        }
        if self.tail_power != shift {
            out.push((0, self.tail_power - shift));
        }
        out
    }
}

/// Hull of the base point, the initial set and the ledger apices with their
/// in-ball base translates.
pub(crate) struct FundamentalRegion {
    pub y0: usize,
    pub hull: MetricSubtree,
    /// Apex → (ledger entry, power of the base carrying the entry's apex to it).
    pub rotation_points: BTreeMap<usize, (usize, i64)>,
}

impl FundamentalRegion {
    pub fn new(state: &WindmillState, tree: &TruncatedTree) -> Result<Self> {
        let pres = tree.presentation();
        if tree.kind() != TreeKind::Subdivided {
            return Err(Error::precondition("decompositions need the subdivided tree"));
        }
        let seed = state.seed_set.core();
        let y0 = seed
            .iter()
            .copied()
            .find(|&v| !tree.vertex(v).is_apex())
            .or_else(|| {
                seed.iter()
                    .flat_map(|&v| tree.neighbors(v).collect::<Vec<_>>())
                    .filter(|&v| !tree.vertex(v).is_apex())
                    .min()
            })
            .ok_or_else(|| Error::precondition("the initial set has no element vertex nearby"))?;
        let mut rotation_points = BTreeMap::new();
        let cap = 2 * tree.radius() as i64 + 2;
        for (k, e) in state.ledger.entries.iter().enumerate() {
            rotation_points.insert(e.apex, (k, 0));
            if let Some(g) = state.n_gens.first() {
                for j in (-cap..=cap).filter(|&j| j != 0) {
                    if let Some(x) = tree.act(&g.pow(j, pres), e.apex).in_ball() {
                        rotation_points.entry(x).or_insert((k, j));
                    }
                }
            }
        }
        let mut hull = MetricSubtree::from_vertices(tree, [y0])?;
        if state.n_gens.is_empty() {
            // the initial set may be large only when N is non-trivial
            hull.union_with(&MetricSubtree::from_vertices(tree, seed.iter().copied())?);
        } else {
            hull.union_with(&state.seed_set);
        }
        let field = hull.distance_field(tree);
        for &v in seed.iter().chain(rotation_points.keys()) {
            hull.absorb(&field, v);
        }
        Ok(FundamentalRegion {
            y0,
            hull,
            rotation_points,
        })
    }
}

/// Vertices of the geodesic from `[y]` to `[x]` in the full subdivided tree.
fn element_path(y: &Element, x: &Element, pres: &Presentation) -> Vec<Vertex> {
    let z = y.inverse(pres).mul(x, pres);
    let mut out = vec![Vertex::Elem(y.clone())];
    let mut prefix = y.clone();
    for s in z.syllables() {
        out.push(Vertex::coset(s.factor, &prefix));
        prefix = prefix.mul(&Element::power_of_generator(pres, s.factor, s.exp), pres);
        out.push(Vertex::Elem(prefix.clone()));
    }
    out
}

/// Peels rotations off `g` along the geodesic from the base point to its
/// image, each time the geodesic leaves the fundamental region at an apex.
pub fn decompose(
    g: &Element,
    state: &WindmillState,
    tree: &TruncatedTree,
    family: &RotationFamily,
) -> Result<RotationDecomposition> {
    let region = FundamentalRegion::new(state, tree)?;
    decompose_in(g, state, tree, family, &region)
}

/// Whether the image of `g` in the filled group lies in the image of the base.
fn image_in_base(g: &Element, state: &WindmillState, family: &RotationFamily) -> bool {
    let filling = family.filling();
    let qpres = filling.quotient();
    let image = filling.project(g);
    match state.n_gens.first() {
        None => image.is_identity(),
        Some(g0) => {
            let base = filling.project(g0);
            let cap = image.word_length(qpres) as i64 + 1;
            (-cap..=cap).any(|j| base.pow(j, qpres) == image)
        }
    }
}

pub(crate) fn decompose_in(
    g: &Element,
    state: &WindmillState,
    tree: &TruncatedTree,
    family: &RotationFamily,
    region: &FundamentalRegion,
) -> Result<RotationDecomposition> {
    let pres = tree.presentation();
    let Vertex::Elem(y) = tree.vertex(region.y0).clone() else { unreachable!() };
    let not_member = || Error::domain(format!("{} is not in the subgroup generated by the windmill", g.display(pres)));
    let in_region = |v: &Vertex| tree.index_of(v).is_some_and(|i| region.hull.contains_vertex(i));
    let horizon = || Error::resource("decomposition beyond the ball of radius", tree.radius() as usize);
    // the full region is invariant under the base; only its in-ball part is known
    let translate_in_region = |v: &Vertex| {
        state.n_gens.first().is_some_and(|g0| {
            let cap = g.word_length(pres) as i64 + 1;
            (1..=cap).any(|j| [j, -j].iter().any(|&e| in_region(&v.translate(&g0.pow(e, pres), pres))))
        })
    };
    if !image_in_base(g, state, family) {
        return Err(not_member());
    }
    let mut curr = g.clone();
    let mut syllables: Vec<RotationSyllable> = Vec::new();
    let budget = 4 * g.word_length(pres) as usize + 8;
    loop {
        if syllables.len() > budget {
            return Err(Error::Internal(format!("peeling {} did not terminate", g.display(pres))));
        }
        let path = element_path(&y, &curr.mul(&y, pres), pres);
        let Some(k) = path.iter().position(|v| !in_region(v)) else {
            break;
        };
        let p = tree.index_of(&path[k - 1]).expect("region vertices are in the ball");
        let Some(&(entry, base_power)) = region.rotation_points.get(&p) else {
            if tree.index_of(&path[k]).is_none() || translate_in_region(&path[k]) {
                return Err(horizon());
            }
            return Err(not_member());
        };
        let Vertex::Elem(xq) = &path[k] else { unreachable!() };
        let pair = family.pair_at(p).expect("every apex carries a pair");
        let h = tree
            .neighbors(p)
            .filter(|&n| region.hull.contains_vertex(n))
            .find_map(|n| {
                let Vertex::Elem(xn) = tree.vertex(n) else { return None };
                let h = xq.mul(&xn.inverse(pres), pres);
                in_rotation_group(pres, family.filling(), pair.factor, &pair.conjugator, &h).then_some(h)
            })
            // the representative of q's class in the star of p may lie beyond the ball
            .ok_or_else(horizon)?;
        curr = h.inverse(pres).mul(&curr, pres);
        syllables.push(RotationSyllable {
            apex: p,
            element: h,
            entry,
            base_power,
        });
    }
    let tail_power = match state.n_gens.first() {
        None if curr.is_identity() => 0,
        None => return Err(not_member()),
        Some(g0) => {
            let cap = curr.word_length(pres) as i64 + 1;
            (-cap..=cap).find(|&j| g0.pow(j, pres) == curr).ok_or_else(not_member)?
        }
    };
    let m = syllables.len();
    Ok(RotationDecomposition {
        syllables,
        tail: curr,
        tail_power,
        m,
    })
}

/// The point chain `y₀ = y, yᵢ = h₁⋯hᵢ₋₁·vᵢ, y_{m+1} = g·y'` and its four
/// properties, asserted with zero slack; `region` plays the part of the hull
/// the translates must return to.
#[derive(Clone, Debug, Serialize)]
pub struct ChainReport {
    pub points: Vec<String>,
    pub report: Report,
}

#[allow(clippy::too_many_arguments)]
pub fn chain_report(
    g: &Element,
    dec: &RotationDecomposition,
    region: &MetricSubtree,
    tree: &TruncatedTree,
    family: &RotationFamily,
    y: usize,
    y2: usize,
    cfg: &WindmillConfig,
) -> ChainReport {
    let pres = tree.presentation();
    let delta = cfg.delta.0;
    let m = dec.m;
    let mut prefixes = vec![Element::identity()];
    for s in &dec.syllables {
        let next = prefixes.last().unwrap().mul(&s.element, pres);
        prefixes.push(next);
    }
    let mut pts: Vec<Vertex> = vec![tree.vertex(y).clone()];
    for (i, s) in dec.syllables.iter().enumerate() {
        pts.push(tree.vertex(s.apex).translate(&prefixes[i], pres));
    }
    pts.push(tree.vertex(y2).translate(g, pres));
    let mut report = Report::new("point chain");

    let mut inside = Tally::new("chain_translates_in_region");
    let in_w = |v: &Vertex| tree.index_of(v).is_some_and(|i| region.contains_vertex(i));
    for i in 1..=m + 1 {
        let gi = prefixes[i - 1].inverse(pres);
        for v in [&pts[i - 1], &pts[i]] {
            let back = v.translate(&gi, pres);
            inside.observe_bool(in_w(&back), || format!("{} is outside the region", back.label(pres)));
        }
    }
    report.push(inside.finish());

    let sigma = family.sigma();
    let mut gaps = Tally::new("chain_gaps");
    for i in 1..m {
        let d = tree.full_distance(&pts[i + 1], &pts[i]);
        gaps.observe_bool(d >= sigma, || format!("points {i} and {} are {} apart", i + 1, format_rational(&d)));
    }
    report.push(gaps.finish());

    let bound = int(110) * delta;
    let mut products = Tally::new("chain_gromov_products").with_allowance(bound);
    for i in 1..=m {
        for j in i..=m {
            for k in j..=m {
                products.observe(gromov(tree, &pts[i], &pts[k], &pts[j]), int(0), bound, || format!("({i}, {j}, {k})"));
            }
        }
    }
    report.push(products.finish());

    let allowance = int(218) * delta;
    let mut geodesic = Tally::new("chain_quasigeodesic").with_allowance(allowance);
    let (first, last) = (&pts[0], &pts[m + 1]);
    for x in tree.vertices() {
        let target = gromov(tree, first, last, x);
        let best = (0..=m)
            .map(|i| gromov(tree, &pts[i + 1], &pts[i], x))
            .min()
            .expect("the chain has a segment");
        geodesic.observe(best, target, target + allowance, || x.label(pres));
    }
    report.push(geodesic.finish());
    ChainReport {
        points: pts.iter().map(|v| v.label(pres)).collect(),
        report,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "case")]
pub enum TrichotomyCase {
    InBase,
    Rotation { apex: usize },
    Displacement,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrichotomyOutcome {
    pub case: TrichotomyCase,
    /// Which of the three statements hold independently of each other.
    pub holds: [bool; 3],
    pub check: Check,
}

/// The first of: `g ∈ N`; `g` a non-trivial rotation at a ledger apex; every
/// interior point of the fundamental region displaced by at least σ − 440δ.
pub fn trichotomy(
    g: &Element,
    state: &WindmillState,
    tree: &TruncatedTree,
    family: &RotationFamily,
    cfg: &WindmillConfig,
) -> Result<TrichotomyOutcome> {
    let pres = tree.presentation();
    let region = FundamentalRegion::new(state, tree)?;
    let dec = decompose_in(g, state, tree, family, &region)?;
    let floor: Rational = family.sigma() - int(440) * cfg.delta.0;
    let mut worst: Option<(Rational, usize)> = None;
    for &y in region.hull.core().iter().filter(|&&y| tree.is_interior(y)) {
        let v = tree.vertex(y);
        let d = tree.full_distance(v, &v.translate(g, pres));
        if worst.is_none_or(|(w, _)| d < w) {
            worst = Some((d, y));
        }
    }
    let displaced = worst.is_some_and(|(d, _)| d >= floor);
    let holds = [dec.m == 0, dec.m == 1 && dec.tail.is_identity(), displaced];
    let case = if holds[0] {
        TrichotomyCase::InBase
    } else if holds[1] {
        TrichotomyCase::Rotation {
            apex: dec.syllables[0].apex,
        }
    } else {
        TrichotomyCase::Displacement
    };
    let ok = holds.iter().any(|&h| h);
    let witness = worst.map(|(d, y)| format!("minimal displacement {} at {}", format_rational(&d), tree.label(y)));
    Ok(TrichotomyOutcome {
        case,
        holds,
        check: Check::simple("trichotomy", ok, 1, witness),
    })
}
