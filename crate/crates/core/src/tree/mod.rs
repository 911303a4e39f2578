//! Truncated Bass–Serre trees of free products and the group action on them.

mod axis;
mod export;
mod lemmas;

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{enumerate_ball, Element, Presentation};
use crate::metric::FiniteMetricSpace;
use crate::rational::{is_nonnegative, Rational};

pub use axis::{classify, stable_translation_length, translation_length, Axis, IsometryType};
pub use export::{TreeDump, VertexDump};
pub use lemmas::verify_translation_lemmas;

/// Largest ball built.
pub const DEFAULT_VERTEX_CAP: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeKind {
    /// Coset vertices joined directly; only for two factors.
    Plain,
    /// Coset vertices joined through one element vertex per group element,
    /// so that distinct apices are at least two edges apart.
    Subdivided,
}

/// A vertex of the full tree: the coset `rep·Pᵢ`, with `rep` carrying no
/// trailing syllable in factor i, or (subdivided trees only) a group element.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Vertex {
    Coset { factor: usize, rep: Element },
    Elem(Element),
}

impl Vertex {
    pub fn coset(factor: usize, g: &Element) -> Vertex {
        Vertex::Coset {
            factor,
            rep: g.strip_trailing(factor),
        }
    }

    pub fn is_apex(&self) -> bool {
        matches!(self, Vertex::Coset { .. })
    }

    /// Word length of the representative.
    pub fn depth(&self, pres: &Presentation) -> u64 {
        match self {
            Vertex::Coset { rep, .. } | Vertex::Elem(rep) => rep.word_length(pres),
        }
    }

    /// `g · self`.
    pub fn translate(&self, g: &Element, pres: &Presentation) -> Vertex {
        match self {
            Vertex::Coset { factor, rep } => Vertex::coset(*factor, &g.mul(rep, pres)),
            Vertex::Elem(x) => Vertex::Elem(g.mul(x, pres)),
        }
    }

    pub fn label(&self, pres: &Presentation) -> String {
        match self {
            Vertex::Coset { factor, rep } => format!("{}<{}>", rep.display(pres), pres.name(*factor)),
            Vertex::Elem(x) => format!("[{}]", x.display(pres)),
        }
    }
}

/// Distance in the full subdivided tree, counted in edges.
pub fn subdivided_distance(u: &Vertex, v: &Vertex, pres: &Presentation) -> u64 {
    use Vertex::*;
    match (u, v) {
        (Elem(x), Elem(y)) => 2 * x.inverse(pres).mul(y, pres).syllable_count() as u64,
        (Elem(x), Coset { factor, rep }) | (Coset { factor, rep }, Elem(x)) => {
            2 * x.inverse(pres).mul(rep, pres).strip_trailing(*factor).syllable_count() as u64 + 1
        }
        (Coset { factor: i, rep: s }, Coset { factor: j, rep: t }) => {
            if i == j && s == t {
                return 0;
            }
            let r = s.inverse(pres).mul(t, pres).strip_leading(*i).strip_trailing(*j);
            2 * r.syllable_count() as u64 + 2
        }
    }
}

/// The vertex `g·v` if it lies in the ball.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Image {
    InBall(usize),
    OutOfBall(Vertex),
}

impl Image {
    pub fn in_ball(&self) -> Option<usize> {
        match self {
            Image::InBall(i) => Some(*i),
            Image::OutOfBall(_) => None,
        }
    }
}

/// The ball of word-radius R in the Bass–Serre tree: coset vertices `t·Pᵢ`
/// and element vertices `g` with |t|, |g| ≤ R.
#[derive(Clone)]
pub struct TruncatedTree {
    pres: Presentation,
    kind: TreeKind,
    radius: u64,
    edge_scale: Rational,
    vertices: Vec<Vertex>,
    index: HashMap<Vertex, usize>,
    space: FiniteMetricSpace,
    base: Vec<usize>,
}

impl fmt::Debug for TruncatedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TruncatedTree")
            .field("group", &self.pres.describe())
            .field("kind", &self.kind)
            .field("radius", &self.radius)
            .field("vertices", &self.vertices.len())
            .finish()
    }
}

impl TruncatedTree {
    pub fn build(pres: &Presentation, radius: u64, edge_scale: Rational, kind: TreeKind) -> Result<Self> {
        Self::build_capped(pres, radius, edge_scale, kind, DEFAULT_VERTEX_CAP)
    }

    pub fn build_capped(pres: &Presentation, radius: u64, edge_scale: Rational, kind: TreeKind, cap: usize) -> Result<Self> {
        if !is_nonnegative(&edge_scale) || edge_scale == Rational::from_integer(0) {
            return Err(Error::input("edge_scale must be positive"));
        }
        if kind == TreeKind::Plain && pres.rank() > 2 {
            return Err(Error::input("plain trees need at most two factors; use the subdivided tree"));
        }
        let n = pres.rank();
        let elements = if n == 1 { vec![Element::identity()] } else { enumerate_ball(pres, radius)? };
        let mut vertices = Vec::new();
        for g in &elements {
            if kind == TreeKind::Subdivided && n > 1 {
                vertices.push(Vertex::Elem(g.clone()));
            }
            for i in 0..n {
                if g.syllables().last().is_none_or(|s| s.factor != i) {
                    vertices.push(Vertex::Coset {
                        factor: i,
                        rep: g.clone(),
                    });
                }
            }
            if vertices.len() > cap {
                return Err(Error::resource("tree vertices", cap));
            }
        }
        let index: HashMap<Vertex, usize> = vertices.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
        let mut adj = vec![Vec::new(); vertices.len()];
        let mut link = |a: usize, b: usize| {
            adj[a].push((b, 1i64));
            adj[b].push((a, 1i64));
        };
        if n > 1 {
            for g in &elements {
                match kind {
                    TreeKind::Subdivided => {
                        let e = index[&Vertex::Elem(g.clone())];
                        for i in 0..n {
                            link(e, index[&Vertex::coset(i, g)]);
                        }
                    }
                    TreeKind::Plain => link(index[&Vertex::coset(0, g)], index[&Vertex::coset(1, g)]),
                }
            }
        }
        for row in &mut adj {
            row.sort_unstable();
        }
        let names = vertices.iter().map(|v| v.label(pres)).collect();
        let space = FiniteMetricSpace::from_adjacency(names, adj, edge_scale)?;
        let base = (0..n)
            .map(|i| index[&Vertex::coset(i, &Element::identity())])
            .collect();
        Ok(TruncatedTree {
            pres: pres.clone(),
            kind,
            radius,
            edge_scale,
            vertices,
            index,
            space,
            base,
        })
    }

    pub fn presentation(&self) -> &Presentation {
        &self.pres
    }

    pub fn kind(&self) -> TreeKind {
        self.kind
    }

    pub fn radius(&self) -> u64 {
        self.radius
    }

    pub fn edge_scale(&self) -> Rational {
        self.edge_scale
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, i: usize) -> &Vertex {
        &self.vertices[i]
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn index_of(&self, v: &Vertex) -> Option<usize> {
        self.index.get(v).copied()
    }

    pub fn space(&self) -> &FiniteMetricSpace {
        &self.space
    }

    /// The base apices `Pᵢ`.
    pub fn base_vertices(&self) -> &[usize] {
        &self.base
    }

    pub fn apices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.vertices[i].is_apex())
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.space.adjacency().expect("trees are graphs")[i].iter().map(|&(j, _)| j)
    }

    /// Vertices strictly inside the ball, whose neighbours up to the word-length
    /// horizon are all present.
    pub fn is_interior(&self, i: usize) -> bool {
        self.vertices[i].depth(&self.pres) < self.radius
    }

    pub fn act(&self, g: &Element, i: usize) -> Image {
        let v = self.vertices[i].translate(g, &self.pres);
        match self.index.get(&v) {
            Some(&j) => Image::InBall(j),
            None => Image::OutOfBall(v),
        }
    }

    /// Distance between arbitrary vertices of the full tree.
    pub fn full_distance(&self, u: &Vertex, v: &Vertex) -> Rational {
        let edges = subdivided_distance(u, v, &self.pres);
        let edges = match self.kind {
            TreeKind::Subdivided => edges,
            TreeKind::Plain => edges / 2,
        };
        self.edge_scale * Rational::from_integer(edges as i128)
    }

    pub fn dist(&self, i: usize, j: usize) -> Rational {
        self.space.dist(i, j)
    }

    /// Length of the Bass–Serre edge between two apices of different factors.
    pub fn edges_per_syllable(&self) -> i64 {
        match self.kind {
            TreeKind::Subdivided => 2,
            TreeKind::Plain => 1,
        }
    }

    pub fn label(&self, i: usize) -> &str {
        &self.space.names()[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{Factor, GroupWord};
    use crate::rational::int;

    pub(crate) fn el(s: &str, p: &Presentation) -> Element {
        Element::from_word(&GroupWord::parse(s, p).unwrap(), p)
    }

    #[test]
    fn free_group_radius_two() {
        let p = Presentation::free(2).unwrap();
        let t = TruncatedTree::build(&p, 2, int(1), TreeKind::Plain).unwrap();
        // reps of length ≤ 2 without a trailing syllable of the coset's factor
        let brute: usize = enumerate_ball(&p, 2)
            .unwrap()
            .iter()
            .map(|g| (0..2).filter(|&i| g.syllables().last().is_none_or(|s| s.factor != i)).count())
            .sum();
        assert_eq!(t.len(), brute);
        assert!(t.space().is_tree());
        assert_eq!(t.dist(t.base_vertices()[0], t.base_vertices()[1]), int(1));
        let s = TruncatedTree::build(&p, 2, int(1), TreeKind::Subdivided).unwrap();
        assert_eq!(s.len(), brute + 17);
        assert!(s.space().is_tree());
        assert_eq!(s.dist(s.base_vertices()[0], s.base_vertices()[1]), int(2));
    }

    #[test]
    fn single_factor_is_a_point() {
        let p = Presentation::free(1).unwrap();
        for kind in [TreeKind::Plain, TreeKind::Subdivided] {
            let t = TruncatedTree::build(&p, 3, int(1), kind).unwrap();
            assert_eq!(t.len(), 1);
            assert_eq!(t.space().adjacency().unwrap()[0].len(), 0);
        }
    }

    #[test]
    fn biregular_valences() {
        let p = Presentation::new(vec![Factor::Finite { m: 2 }, Factor::Finite { m: 3 }]).unwrap();
        let t = TruncatedTree::build(&p, 3, int(1), TreeKind::Plain).unwrap();
        for i in 0..t.len() {
            if t.is_interior(i) {
                let Vertex::Coset { factor, .. } = t.vertex(i) else { unreachable!() };
                assert_eq!(t.neighbors(i).count(), [2, 3][*factor], "{}", t.label(i));
            }
        }
    }

    #[test]
    fn algebraic_distances_match_bfs() {
        let p = Presentation::new(vec![Factor::Infinite, Factor::Finite { m: 3 }, Factor::Infinite]).unwrap();
        for kind in [TreeKind::Subdivided] {
            let t = TruncatedTree::build(&p, 3, int(1), kind).unwrap();
            for i in 0..t.len() {
                for j in 0..t.len() {
                    assert_eq!(t.full_distance(t.vertex(i), t.vertex(j)), t.dist(i, j));
                }
            }
        }
        let zz = Presentation::free(2).unwrap();
        let t = TruncatedTree::build(&zz, 3, int(3), TreeKind::Plain).unwrap();
        for i in 0..t.len() {
            for j in 0..t.len() {
                assert_eq!(t.full_distance(t.vertex(i), t.vertex(j)), t.dist(i, j));
            }
        }
    }

    #[test]
    fn action_examples() {
        let p = Presentation::free(2).unwrap();
        let t = TruncatedTree::build(&p, 3, int(1), TreeKind::Subdivided).unwrap();
        let [va, vb] = [t.base_vertices()[0], t.base_vertices()[1]];
        assert_eq!(t.act(&Element::identity(), vb), Image::InBall(vb));
        assert_eq!(t.act(&el("a", &p), va), Image::InBall(va));
        let ab = t.act(&el("a", &p), vb).in_ball().unwrap();
        assert_eq!(t.label(ab), "a<b>");
        assert!(matches!(t.act(&el("a^4", &p), vb), Image::OutOfBall(_)));
        // composition wherever both sides are defined
        let (g, h) = (el("a b", &p), el("B a", &p));
        for i in 0..t.len() {
            if let Some(hi) = t.act(&h, i).in_ball() {
                if let (Some(x), Some(y)) = (t.act(&g, hi).in_ball(), t.act(&g.mul(&h, &p), i).in_ball()) {
                    assert_eq!(x, y);
                }
            }
        }
    }

    #[test]
    fn vertex_cap_is_enforced() {
        let p = Presentation::free(2).unwrap();
        let e = TruncatedTree::build_capped(&p, 6, int(1), TreeKind::Subdivided, 100).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
