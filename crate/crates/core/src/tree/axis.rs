use serde::Serialize;

use super::{Image, TruncatedTree, Vertex};
use crate::error::{Error, Result};
use crate::group::Element;
use crate::metric::{neighborhood, quasiconvexity_defect, PointSubset};
use crate::rational::{format_rational, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IsometryType {
    Elliptic,
    Loxodromic,
}

/// ℓ(g) from the normal form: the cyclic reduction acts as a translation by
/// one Bass–Serre edge per syllable, unless it lies in a single factor.
fn formula_length(tree: &TruncatedTree, g: &Element) -> Rational {
    let (_, core) = g.cyclic_reduction(tree.presentation());
    let syl = core.syllable_count() as i64;
    if syl <= 1 {
        return Rational::from_integer(0);
    }
    tree.edge_scale() * Rational::from_integer((syl * tree.edges_per_syllable()) as i128)
}

/// ℓ(g) = min d(gx, x) over ball vertices x with gx in the ball, cross-checked
/// against the normal-form value.
pub fn translation_length(tree: &TruncatedTree, g: &Element) -> Result<Rational> {
    let expected = formula_length(tree, g);
    let mut best: Option<Rational> = None;
    for i in 0..tree.len() {
        if let Image::InBall(j) = tree.act(g, i) {
            let d = tree.dist(i, j);
            if best.is_none_or(|b| d < b) {
                best = Some(d);
            }
        }
    }
    let pres = tree.presentation();
    match best {
        Some(b) if b == expected => Ok(b),
        _ => Err(Error::precondition(format!(
            "ball of radius {} is too small to realise the translation length of {}; try radius ≥ {}",
            tree.radius(),
            g.display(pres),
            tree.radius() + g.word_length(pres)
        ))),
    }
}

pub fn classify(tree: &TruncatedTree, g: &Element) -> Result<IsometryType> {
    let l = translation_length(tree, g)?;
    let (_, core) = g.cyclic_reduction(tree.presentation());
    let lox = l > Rational::from_integer(0);
    if lox != (core.syllable_count() >= 2) {
        return Err(Error::Internal(format!(
            "isometry type of {} disagrees with its syllable length",
            g.display(tree.presentation())
        )));
    }
    Ok(if lox { IsometryType::Loxodromic } else { IsometryType::Elliptic })
}

/// A vertex minimising the displacement of `g` in the full tree.
fn min_set_vertex(tree: &TruncatedTree, g: &Element) -> Vertex {
    let pres = tree.presentation();
    let (c, core) = g.cyclic_reduction(pres);
    let origin = match core.syllables() {
        [] => Vertex::coset(0, &Element::identity()),
        [s] => Vertex::coset(s.factor, &Element::identity()),
        [s, ..] => match tree.kind() {
            super::TreeKind::Subdivided => Vertex::Elem(Element::identity()),
            super::TreeKind::Plain => Vertex::coset(s.factor, &Element::identity()),
        },
    };
    origin.translate(&c, pres)
}

/// d(gⁿx, x)/n for the largest n ≤ `n_max` with gⁿx in the ball, measured
/// from a vertex of the minimal displacement set of g.
pub fn stable_translation_length(tree: &TruncatedTree, g: &Element, n_max: u64) -> Result<Rational> {
    let pres = tree.presentation();
    let x = tree.index_of(&min_set_vertex(tree, g)).ok_or_else(|| {
        Error::precondition(format!("the axis of {} misses the ball", g.display(pres)))
    })?;
    let mut gn = Element::identity();
    let mut best = None;
    for n in 1..=n_max {
        gn = gn.mul(g, pres);
        match tree.act(&gn, x) {
            Image::InBall(y) => best = Some(tree.dist(x, y) / Rational::from_integer(n as i128)),
            Image::OutOfBall(_) => break,
        }
    }
    best.ok_or_else(|| {
        Error::precondition(format!(
            "no power of {} keeps the axis vertex in the ball of radius {}",
            g.display(pres),
            tree.radius()
        ))
    })
}

/// The axis of a loxodromic element clipped to the ball, and its cylinder.
#[derive(Clone, Debug)]
pub struct Axis {
    /// Ball vertices of the axis, ordered from the repelling end g⁻ towards
    /// the attracting end g⁺.
    pub path: Vec<usize>,
    /// Translation length in edges.
    pub period: u64,
    pub translation_length: Rational,
    /// The 20δ-neighbourhood of the axis.
    pub cylinder: PointSubset,
    pub cylinder_defect: Rational,
}

impl Axis {
    pub fn build(tree: &TruncatedTree, g: &Element, delta: Rational) -> Result<Axis> {
        let pres = tree.presentation();
        let l = formula_length(tree, g);
        if l == Rational::from_integer(0) {
            return Err(Error::domain(format!("{} is elliptic and has no axis", g.display(pres))));
        }
        // the axis is the minimal displacement set; distances in the full tree
        // let the test run at the ball boundary too
        let on: Vec<usize> = (0..tree.len())
            .filter(|&i| {
                let v = tree.vertex(i);
                tree.full_distance(v, &v.translate(g, pres)) == l
            })
            .collect();
        if on.is_empty() {
            return Err(Error::precondition(format!("the axis of {} misses the ball", g.display(pres))));
        }
        let set = PointSubset::new(tree.space(), on.iter().copied())?;
        let ends: Vec<usize> = on
            .iter()
            .copied()
            .filter(|&i| tree.neighbors(i).filter(|&j| set.contains(j)).count() <= 1)
            .collect();
        // orient so that g moves points from the start towards the end
        let mut start = ends[0];
        if let Some(&other) = ends.get(1) {
            let gs = tree.vertex(start).translate(g, pres);
            let towards_other = tree.full_distance(&gs, tree.vertex(other)) < tree.dist(start, other);
            if !towards_other {
                start = other;
            }
        }
        let mut path = on.clone();
        path.sort_by_key(|&i| (tree.space().units(start, i), i));
        if path.windows(2).any(|w| !tree.space().are_adjacent(w[0], w[1])) {
            return Err(Error::Internal("axis vertices do not form a path".into()));
        }
        let cylinder = neighborhood(tree.space(), &set, Rational::from_integer(20) * delta)?;
        let cylinder_defect = quasiconvexity_defect(tree.space(), &cylinder)?;
        if cylinder_defect > Rational::from_integer(2) * delta {
            return Err(Error::Internal(format!(
                "cylinder of {} has quasi-convexity defect {}",
                g.display(pres),
                format_rational(&cylinder_defect)
            )));
        }
        let period = (l / tree.edge_scale()).to_integer() as u64;
        Ok(Axis {
            path,
            period,
            translation_length: l,
            cylinder,
            cylinder_defect,
        })
    }

    pub fn vertex_set(&self, tree: &TruncatedTree) -> PointSubset {
        PointSubset::new(tree.space(), self.path.iter().copied()).expect("axis vertices are in the ball")
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::el;
    use super::super::TreeKind;
    use super::*;
    use crate::group::{enumerate_ball, Presentation};
    use crate::rational::{frac, int};

    fn plain() -> (Presentation, TruncatedTree) {
        let p = Presentation::free(2).unwrap();
        let t = TruncatedTree::build(&p, 5, int(1), TreeKind::Plain).unwrap();
        (p, t)
    }

    #[test]
    fn translation_length_examples() {
        let (p, t) = plain();
        assert_eq!(translation_length(&t, &el("a", &p)).unwrap(), int(0));
        assert_eq!(translation_length(&t, &el("a b", &p)).unwrap(), int(2));
        assert_eq!(translation_length(&t, &el("a b A", &p)).unwrap(), int(0));
        assert_eq!(classify(&t, &el("a", &p)).unwrap(), IsometryType::Elliptic);
        assert_eq!(classify(&t, &el("a b", &p)).unwrap(), IsometryType::Loxodromic);
        assert_eq!(classify(&t, &el("b a^3 B", &p)).unwrap(), IsometryType::Elliptic);
        let s = TruncatedTree::build(&p, 5, int(1), TreeKind::Subdivided).unwrap();
        assert_eq!(translation_length(&s, &el("a b", &p)).unwrap(), int(4));
    }

    #[test]
    fn small_balls_are_rejected() {
        let p = Presentation::free(2).unwrap();
        let t = TruncatedTree::build(&p, 2, int(1), TreeKind::Plain).unwrap();
        let e = translation_length(&t, &el("a b a b a b", &p)).unwrap_err();
        assert_eq!(e.exit_code(), 3);
    }

    #[test]
    fn stable_lengths() {
        let (p, t) = plain();
        assert_eq!(stable_translation_length(&t, &el("a b", &p), 4).unwrap(), int(2));
        assert_eq!(stable_translation_length(&t, &el("b A B", &p), 4).unwrap(), int(0));
        assert_eq!(stable_translation_length(&t, &el("a^2 b", &p), 4).unwrap(), int(2));
        for g in enumerate_ball(&p, 3).unwrap() {
            if let Ok(l) = translation_length(&t, &g) {
                assert_eq!(stable_translation_length(&t, &g, 6).unwrap(), l, "{}", g.display(&p));
            }
        }
    }

    #[test]
    fn axis_examples() {
        let (p, t) = plain();
        let g = el("a b", &p);
        let ax = Axis::build(&t, &g, frac(1, 100_000_000_000)).unwrap();
        assert_eq!(ax.period, 2);
        assert_eq!(ax.cylinder, ax.vertex_set(&t));
        let labels: Vec<&str> = ax.path.iter().map(|&i| t.label(i)).collect();
        assert!(labels.windows(2).any(|w| w == ["1<a>", "1<b>"] || w == ["1<b>", "1<a>"]));
        let inv = Axis::build(&t, &g.inverse(&p), frac(1, 100_000_000_000)).unwrap();
        assert_eq!(inv.vertex_set(&t), ax.vertex_set(&t));
        let mut rev = inv.path.clone();
        rev.reverse();
        assert_eq!(rev, ax.path);
        // g moves interior axis vertices forward along the path
        for (k, &v) in ax.path.iter().enumerate() {
            if let Some(w) = t.act(&g, v).in_ball() {
                let pos = ax.path.iter().position(|&x| x == w).unwrap();
                assert_eq!(pos, k + 2);
            }
        }
        assert_eq!(Axis::build(&t, &el("a", &p), int(0)).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn large_delta_thickens_the_cylinder() {
        let (p, t) = plain();
        let ax = Axis::build(&t, &el("a b", &p), frac(1, 20)).unwrap();
        assert!(ax.cylinder.len() > ax.path.len());
        assert!(ax.cylinder_defect <= frac(1, 10));
    }
}
