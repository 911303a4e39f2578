use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use crate::error::Result;
use crate::group::{enumerate_ball, kernel_membership, Filling};
use crate::metric::{hyperbolicity_delta, DeltaMode, FiniteMetricSpace};
use crate::rational::{format_rational, Rational, Q};
use crate::report::{Check, Tally};
use crate::tree::{Image, TruncatedTree, Vertex};

/// Every nontrivial element of K up to word length `max_len` fixes only apex
/// vertices among the interior of the ball.
pub fn proper_action_off_apices(tree: &TruncatedTree, filling: &Filling, max_len: u64) -> Result<Check> {
    let pres = tree.presentation();
    let mut tally = Tally::new("proper_action_off_apices");
    let interior: Vec<usize> = (0..tree.len()).filter(|&i| tree.is_interior(i)).collect();
    for k in enumerate_ball(pres, max_len)? {
        if k.is_identity() || !kernel_membership(&k, filling) {
            continue;
        }
        for &x in &interior {
            if tree.act(&k, x) == Image::InBall(x) {
                tally.observe_bool(tree.vertex(x).is_apex(), || {
                    format!("{} fixes the non-apex vertex {}", k.display(pres), tree.label(x))
                });
            }
        }
    }
    Ok(tally.finish())
}

#[derive(Clone, Debug, Serialize)]
pub struct QuotientReport {
    pub vertices: usize,
    pub edges: usize,
    pub is_tree: bool,
    pub delta_bar: Q,
    pub check: Check,
}

/// The image of the ball of word-radius `radius` in X/K, built by labelling
/// each vertex with its image under the filling map, and its hyperbolicity
/// constant compared to `900δ`.
pub fn quotient_hyperbolicity(tree: &TruncatedTree, filling: &Filling, radius: u64, delta: Rational) -> Result<QuotientReport> {
    let pres = tree.presentation();
    let qpres = filling.quotient();
    let label = |v: &Vertex| match v {
        Vertex::Coset { factor, rep } => Vertex::coset(*factor, &filling.project(rep)),
        Vertex::Elem(g) => Vertex::Elem(filling.project(g)),
    };
    let mut ids: HashMap<Vertex, usize> = HashMap::new();
    let mut names = Vec::new();
    let mut node = vec![usize::MAX; tree.len()];
    for i in 0..tree.len() {
        if tree.vertex(i).depth(pres) > radius {
            continue;
        }
        let l = label(tree.vertex(i));
        let next = ids.len();
        let id = *ids.entry(l.clone()).or_insert_with(|| {
            names.push(l.label(qpres));
            next
        });
        node[i] = id;
    }
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut loops = 0;
    for i in 0..tree.len() {
        for j in tree.neighbors(i) {
            let (a, b) = (node[i], node[j]);
            if i < j && a != usize::MAX && b != usize::MAX {
                if a == b {
                    loops += 1;
                } else {
                    edges.insert((a.min(b), a.max(b)));
                }
            }
        }
    }
    let mut adj = vec![Vec::new(); names.len()];
    for &(a, b) in &edges {
        adj[a].push((b, 1));
        adj[b].push((a, 1));
    }
    let space = FiniteMetricSpace::from_adjacency(names, adj, tree.edge_scale())?;
    let scan = hyperbolicity_delta(&space, DeltaMode::Exact)?;
    let bound = Rational::from_integer(900) * delta;
    let is_tree = space.is_tree() && loops == 0;
    let check = Check {
        name: "quotient_hyperbolicity".into(),
        status: if scan.delta.0 <= bound {
            crate::report::Status::Pass
        } else {
            crate::report::Status::Fail
        },
        worst_slack: Some(scan.delta),
        allowance: Some(Q(bound)),
        checked: scan.quadruples,
        not_applicable: 0,
        witness: Some(format!(
            "quotient ball has {} vertices, δ̄ = {}{}",
            space.len(),
            format_rational(&scan.delta.0),
            if is_tree { ", a tree" } else { "" }
        )),
    };
    Ok(QuotientReport {
        vertices: space.len(),
        edges: edges.len(),
        is_tree,
        delta_bar: scan.delta,
        check,
    })
}

#[cfg(test)]
mod tests {
    use super::super::tests::setup;
    use super::*;
    use crate::group::Presentation;
    use crate::rational::{frac, int};
    use crate::report::Status;
    use crate::tree::TreeKind;

    #[test]
    fn kernel_fixes_only_apices() {
        let (_, t, r) = setup(4, vec![3, 3]);
        let c = proper_action_off_apices(&t, r.filling(), 6).unwrap();
        assert_eq!(c.status, Status::Pass);
        assert!(c.checked > 0);
    }

    #[test]
    fn three_three_quotient_is_a_tree() {
        let (_, t, r) = setup(4, vec![3, 3]);
        let q = quotient_hyperbolicity(&t, r.filling(), 3, frac(1, 100_000_000_000)).unwrap();
        assert!(q.is_tree);
        assert_eq!(q.delta_bar.0, int(0));
        assert_eq!(q.check.status, Status::Pass);
        // brute force: the subdivided tree of ℤ/3 ∗ ℤ/3 up to word length 3
        let z3 = Presentation::new(vec![crate::group::Factor::Finite { m: 3 }; 2]).unwrap();
        let direct = TruncatedTree::build(&z3, 3, int(1), TreeKind::Subdivided).unwrap();
        assert_eq!(q.vertices, direct.len());
    }
}
