//! Convex metric subtrees of a truncated tree: a connected vertex set plus
//! partial edges hanging off it.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::group::Element;
use crate::metric::PointSubset;
use crate::rational::{format_rational, Rational};
use crate::tree::TruncatedTree;

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct MetricSubtree {
    core: BTreeSet<usize>,
    /// `(inside, outside)` → length of the segment of that edge starting at
    /// `inside`, strictly shorter than the edge.
    reach: BTreeMap<(usize, usize), Rational>,
}

/// Distances from every ball vertex to a subtree, with the next vertex on the
/// way to it.
#[derive(Clone, Debug)]
pub struct DistanceField {
    pub dist: Vec<Option<Rational>>,
    pub toward: Vec<Option<usize>>,
}

impl MetricSubtree {
    pub fn from_vertices(tree: &TruncatedTree, vertices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let core: BTreeSet<usize> = vertices.into_iter().collect();
        if let Some(&bad) = core.iter().find(|&&v| v >= tree.len()) {
            return Err(Error::input(format!("vertex {bad} is not in the ball")));
        }
        Ok(MetricSubtree {
            core,
            reach: BTreeMap::new(),
        })
    }

    pub fn core(&self) -> &BTreeSet<usize> {
        &self.core
    }

    pub fn reaches(&self) -> &BTreeMap<(usize, usize), Rational> {
        &self.reach
    }

    pub fn contains_vertex(&self, v: usize) -> bool {
        self.core.contains(&v)
    }

    pub fn is_empty(&self) -> bool {
        self.core.is_empty()
    }

    pub fn core_len(&self) -> usize {
        self.core.len()
    }

    pub fn to_point_subset(&self) -> PointSubset {
        PointSubset::from_sorted(self.core.iter().copied().collect())
    }

    pub fn insert_vertex(&mut self, v: usize) -> bool {
        self.core.insert(v)
    }

    /// Adds a partial edge, keeping the longer one on collision.
    pub fn insert_reach(&mut self, inside: usize, outside: usize, r: Rational) {
        let e = self.reach.entry((inside, outside)).or_insert(r);
        if *e < r {
            *e = r;
        }
    }

    /// Drops partial edges whose far end has joined the core.
    pub fn normalize(&mut self) {
        let core = &self.core;
        self.reach.retain(|&(_, w), _| !core.contains(&w));
    }

    /// `None` when connected; otherwise a description of the defect.
    pub fn connectivity_defect(&self, tree: &TruncatedTree) -> Option<String> {
        let Some(&start) = self.core.iter().next() else {
            return None;
        };
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            for y in tree.neighbors(x) {
                if self.core.contains(&y) && seen.insert(y) {
                    queue.push_back(y);
                }
            }
        }
        if let Some(&v) = self.core.iter().find(|v| !seen.contains(v)) {
            return Some(format!("{} is cut off from {}", tree.label(v), tree.label(start)));
        }
        for (&(u, w), r) in &self.reach {
            if !self.core.contains(&u) || self.core.contains(&w) || !tree.space().are_adjacent(u, w) {
                return Some(format!("stray partial edge {}-{}", tree.label(u), tree.label(w)));
            }
            if *r <= Rational::from_integer(0) || *r >= tree.edge_scale() {
                return Some(format!("partial edge of length {}", format_rational(r)));
            }
        }
        None
    }

    pub fn distance_field(&self, tree: &TruncatedTree) -> DistanceField {
        let e = tree.edge_scale();
        let mut dist = vec![None; tree.len()];
        let mut toward = vec![None; tree.len()];
        let mut queue = VecDeque::new();
        for &c in &self.core {
            dist[c] = Some(Rational::from_integer(0));
            queue.push_back(c);
        }
        while let Some(x) = queue.pop_front() {
            let dx = dist[x].expect("queued vertices have a distance");
            for y in tree.neighbors(x) {
                if dist[y].is_some() {
                    continue;
                }
                let r = self.reach.get(&(x, y)).copied().unwrap_or_default();
                dist[y] = Some(dx + e - r);
                toward[y] = Some(x);
                queue.push_back(y);
            }
        }
        DistanceField { dist, toward }
    }

    /// Neighbours of `v` through which the subtree is seen from `v`.
    pub fn exits(&self, tree: &TruncatedTree, field: &DistanceField, v: usize) -> Vec<usize> {
        if self.core.contains(&v) {
            tree.neighbors(v)
                .filter(|w| self.core.contains(w) || self.reach.contains_key(&(v, *w)))
                .collect()
        } else {
            field.toward[v].into_iter().collect()
        }
    }

    /// The closed `eps`-neighbourhood inside the ball.
    pub fn neighborhood(&self, tree: &TruncatedTree, eps: Rational) -> MetricSubtree {
        let field = self.distance_field(tree);
        let e = tree.edge_scale();
        let within = |v: usize| field.dist[v].is_some_and(|d| d <= eps);
        let core: BTreeSet<usize> = (0..tree.len()).filter(|&v| within(v)).collect();
        let mut reach = BTreeMap::new();
        for &u in &core {
            for w in tree.neighbors(u) {
                if core.contains(&w) {
                    continue;
                }
                let r = match self.reach.get(&(u, w)) {
                    Some(r0) => *r0 + eps,
                    None => eps - field.dist[u].expect("core vertices have a distance"),
                };
                if r > Rational::from_integer(0) {
                    debug_assert!(r < e);
                    reach.insert((u, w), r);
                }
            }
        }
        MetricSubtree { core, reach }
    }

    /// Adds the geodesic from `v` to the subtree.
    pub fn absorb(&mut self, field: &DistanceField, v: usize) {
        let mut x = v;
        while self.core.insert(x) {
            match field.toward[x] {
                Some(y) => x = y,
                None => break,
            }
        }
        self.normalize();
    }

    /// In-ball part of `g·self`; the flag reports whether anything was cut.
    pub fn translate(&self, tree: &TruncatedTree, g: &Element) -> (MetricSubtree, bool) {
        let mut out = MetricSubtree::default();
        let mut clipped = false;
        let mut image = BTreeMap::new();
        for &v in &self.core {
            match tree.act(g, v).in_ball() {
                Some(j) => {
                    out.core.insert(j);
                    image.insert(v, j);
                }
                None => clipped = true,
            }
        }
        for (&(u, w), &r) in &self.reach {
            match (image.get(&u), tree.act(g, w).in_ball()) {
                (Some(&gu), Some(gw)) => out.insert_reach(gu, gw, r),
                _ => clipped = true,
            }
        }
        (out, clipped)
    }

    /// Merges another subtree; the result is connected when the two meet.
    pub fn union_with(&mut self, other: &MetricSubtree) {
        self.core.extend(other.core.iter().copied());
        for (&(u, w), &r) in &other.reach {
            self.insert_reach(u, w, r);
        }
        self.normalize();
    }

    /// A point of `other` missing from `self`, if any.
    pub fn missing_from(&self, other: &MetricSubtree, tree: &TruncatedTree) -> Option<String> {
        if let Some(&v) = other.core.iter().find(|v| !self.core.contains(v)) {
            return Some(tree.label(v).to_string());
        }
        for (&(u, w), &r) in &other.reach {
            if self.core.contains(&w) {
                continue;
            }
            let mine = self.reach.get(&(u, w)).copied().unwrap_or_default();
            if mine < r {
                return Some(format!(
                    "the point at {} from {} towards {}",
                    format_rational(&r),
                    tree.label(u),
                    tree.label(w)
                ));
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Presentation;
    use crate::rational::{frac, int};
    use crate::tree::TreeKind;
    use proptest::prelude::*;

    fn tree() -> TruncatedTree {
        TruncatedTree::build(&Presentation::free(2).unwrap(), 3, int(1), TreeKind::Subdivided).unwrap()
    }

    #[test]
    fn neighbourhoods_accumulate_along_edges() {
        let t = tree();
        let mut w = MetricSubtree::from_vertices(&t, [1]).unwrap();
        for _ in 0..4 {
            w = w.neighborhood(&t, frac(1, 5));
        }
        assert_eq!(w.core_len(), 1);
        assert!(w.reaches().values().all(|r| *r == frac(4, 5)));
        w = w.neighborhood(&t, frac(1, 5));
        assert_eq!(w.core_len(), 1 + t.neighbors(1).count());
        assert!(w.reaches().is_empty());
        assert!(w.connectivity_defect(&t).is_none());
        let field = w.distance_field(&t);
        assert_eq!(field.dist[0], Some(int(0)));
        assert_eq!(field.dist[2], Some(int(1)));
    }

    #[test]
    fn absorb_and_translate() {
        let t = tree();
        let mut w = MetricSubtree::from_vertices(&t, [1]).unwrap();
        let field = w.distance_field(&t);
        w.absorb(&field, 2);
        assert_eq!(w.core().iter().copied().collect::<Vec<_>>(), vec![0, 1, 2]);
        let a3 = Element::power_of_generator(t.presentation(), 0, 3);
        let (moved, clipped) = w.translate(&t, &a3);
        assert!(!clipped);
        assert!(moved.contains_vertex(1));
        assert!(w.missing_from(&moved, &t).is_some());
        let mut u = w.clone();
        u.union_with(&moved);
        assert!(u.connectivity_defect(&t).is_none());
        assert!(u.missing_from(&w, &t).is_none());
    }

    proptest! {
        // the distance field matches brute-force distances to the core points
        #[test]
        fn distance_field_oracle(start in 0usize..40, steps in 0usize..4) {
            let t = tree();
            let mut w = MetricSubtree::from_vertices(&t, [start % t.len()]).unwrap();
            for _ in 0..steps {
                w = w.neighborhood(&t, int(1));
            }
            let field = w.distance_field(&t);
            for v in 0..t.len() {
                let brute = w.core().iter().map(|&c| t.dist(v, c)).min().unwrap();
                prop_assert_eq!(field.dist[v], Some(brute));
            }
        }
    }
}
