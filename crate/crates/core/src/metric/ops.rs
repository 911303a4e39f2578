use rayon::prelude::*;

use super::{DiscretePath, FiniteMetricSpace, PointSubset};
use crate::error::{Error, Result};
use crate::rational::{is_nonnegative, Rational};

/// ⟨x, y⟩_z = (d(x,z) + d(y,z) − d(x,y)) / 2.
pub fn gromov_product(space: &FiniteMetricSpace, x: usize, y: usize, z: usize) -> Result<Rational> {
    space.check_point(x)?;
    space.check_point(y)?;
    space.check_point(z)?;
    Ok(space.to_length(gp2(space, x, y, z)) / Rational::from_integer(2))
}

/// Twice the Gromov product, in units.
#[inline]
pub(crate) fn gp2(space: &FiniteMetricSpace, x: usize, y: usize, z: usize) -> i64 {
    space.units(x, z) + space.units(y, z) - space.units(x, y)
}

/// Per-point worst case `2·(d(x,Y) − min ⟨y,y′⟩_x)` together with the witness.
fn defect_at(space: &FiniteMetricSpace, ys: &[usize], x: usize) -> (i64, usize, usize) {
    let dxy = ys.iter().map(|&y| space.units(x, y)).min().unwrap_or(0);
    let mut best = (i64::MAX, ys[0], ys[0]);
    for (i, &y) in ys.iter().enumerate() {
        for &y2 in &ys[i..] {
            let g = gp2(space, y, y2, x);
            if g < best.0 {
                best = (g, y, y2);
            }
        }
    }
    (2 * dxy - best.0, best.1, best.2)
}

/// Minimal α ≥ 0 with d(x,Y) ≤ ⟨y,y′⟩_x + α for every x and y, y′ ∈ Y, and
/// a worst triple `(x, y, y′)` when α > 0.
pub fn quasiconvexity_witness(space: &FiniteMetricSpace, y: &PointSubset) -> Result<(Rational, Option<(usize, usize, usize)>)> {
    y.require_nonempty("quasiconvexity_defect")?;
    let ys = y.members();
    let (worst, wit) = (0..space.len())
        .into_par_iter()
        .map(|x| {
            let (d, a, b) = defect_at(space, ys, x);
            (d, std::cmp::Reverse(x), a, b)
        })
        .max()
        .map(|(d, std::cmp::Reverse(x), a, b)| (d, (x, a, b)))
        .expect("space is non-empty");
    if worst <= 0 {
        Ok((Rational::from_integer(0), None))
    } else {
        Ok((space.to_length(worst) / Rational::from_integer(2), Some(wit)))
    }
}

pub fn quasiconvexity_defect(space: &FiniteMetricSpace, y: &PointSubset) -> Result<Rational> {
    quasiconvexity_witness(space, y).map(|(a, _)| a)
}

/// An η-projection of `x` on `Y`; ties go to the smallest point index.
pub fn project(space: &FiniteMetricSpace, x: usize, y: &PointSubset, eta: Rational) -> Result<usize> {
    y.require_nonempty("project")?;
    space.check_point(x)?;
    if !is_nonnegative(&eta) {
        return Err(Error::input("eta must be non-negative"));
    }
    let d = y.units_from(space, x);
    let limit = space.to_length(d) + eta;
    // members are sorted, so the first hit is the smallest identifier
    Ok(*y
        .members()
        .iter()
        .find(|&&p| space.dist(x, p) <= limit)
        .expect("the nearest point always qualifies"))
}

/// `{x : d(x,Y) ≤ radius}`.
pub fn neighborhood(space: &FiniteMetricSpace, y: &PointSubset, radius: Rational) -> Result<PointSubset> {
    if !is_nonnegative(&radius) {
        return Err(Error::input("radius must be non-negative"));
    }
    if y.is_empty() {
        return Ok(PointSubset::default());
    }
    let r = space.floor_units(radius);
    let members: Vec<usize> = (0..space.len())
        .into_par_iter()
        .filter(|&x| y.units_from(space, x) <= r)
        .collect();
    Ok(PointSubset::from_sorted(members))
}

/// The slack-taut set `{p : ∃ y,y′ ∈ Y, d(y,p) + d(p,y′) ≤ d(y,y′) + slack}`.
pub fn hull(space: &FiniteMetricSpace, y: &PointSubset, slack: Rational) -> Result<PointSubset> {
    y.require_nonempty("hull")?;
    if !is_nonnegative(&slack) {
        return Err(Error::input("slack must be non-negative"));
    }
    let s = space.floor_units(slack);
    let ys = y.members();
    let members: Vec<usize> = (0..space.len())
        .into_par_iter()
        .filter(|&p| {
            ys.iter().enumerate().any(|(i, &a)| {
                ys[i..]
                    .iter()
                    .any(|&b| space.units(a, p) + space.units(p, b) <= space.units(a, b) + s)
            })
        })
        .collect();
    Ok(PointSubset::from_sorted(members))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuasiGeodesicCheck {
    pub holds: bool,
    /// Indices `(i, j)` into the path of the first violating pair.
    pub violation: Option<(usize, usize)>,
}

/// Tests the L-local (k, l) quasi-isometric inequality on every parameter
/// pair at most `L` apart.
pub fn check_local_quasigeodesic(
    space: &FiniteMetricSpace,
    path: &DiscretePath,
    big_l: Rational,
    k: Rational,
    l: Rational,
) -> Result<QuasiGeodesicCheck> {
    if k < Rational::from_integer(1) || !is_nonnegative(&l) || !is_nonnegative(&big_l) {
        return Err(Error::input("need k ≥ 1, l ≥ 0 and L ≥ 0"));
    }
    let pts = path.points();
    let ts = path.lengths();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let dt = ts[j] - ts[i];
            if dt > big_l {
                break;
            }
            let d = space.dist(pts[i], pts[j]);
            if d / k - l > dt || dt > k * d + l {
                return Ok(QuasiGeodesicCheck {
                    holds: false,
                    violation: Some((i, j)),
                });
            }
        }
    }
    Ok(QuasiGeodesicCheck {
        holds: true,
        violation: None,
    })
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;
    use crate::rational::{frac, int};
    use proptest::prelude::*;

    fn sub(space: &FiniteMetricSpace, v: &[usize]) -> PointSubset {
        PointSubset::new(space, v.iter().copied()).unwrap()
    }

    #[test]
    fn gromov_product_examples() {
        let p = path_graph(5);
        assert_eq!(gromov_product(&p, 0, 4, 2).unwrap(), int(0));
        assert_eq!(gromov_product(&p, 1, 1, 3).unwrap(), p.dist(1, 3));
        let c = cycle(6);
        assert_eq!(gromov_product(&c, 0, 3, 1).unwrap(), int(0));
        assert_eq!(gromov_product(&c, 0, 2, 3).unwrap(), int(1));
        assert!(gromov_product(&c, 0, 9, 1).is_err());
    }

    #[test]
    fn quasiconvexity_examples() {
        let t = tripod(3);
        assert_eq!(quasiconvexity_defect(&t, &PointSubset::whole(&t)).unwrap(), int(0));
        // a geodesic through the center: leg 1 end (3) .. center .. leg 2 end (6)
        let geo = sub(&t, &[3, 2, 1, 0, 4, 5, 6]);
        assert_eq!(quasiconvexity_defect(&t, &geo).unwrap(), int(0));
        // antipodal pair on a 10-cycle: x = v2 has d(x,Y) = 2 and ⟨v0,v5⟩_x = 0
        let c = cycle(10);
        assert_eq!(quasiconvexity_defect(&c, &sub(&c, &[0, 5])).unwrap(), int(2));
        assert!(quasiconvexity_defect(&c, &PointSubset::default()).is_err());
    }

    #[test]
    fn projection_examples() {
        let t = tripod(2);
        let geo = sub(&t, &[2, 1, 0, 3, 4]);
        assert_eq!(project(&t, 1, &geo, int(0)).unwrap(), 1);
        // leg three is 5, 6: nearest point of the geodesic is the center 0
        assert_eq!(project(&t, 6, &geo, int(0)).unwrap(), 0);
        // x = v7 is equidistant from v2 and v4
        let c = cycle(8);
        assert_eq!(project(&c, 7, &sub(&c, &[2, 3, 4]), int(0)).unwrap(), 2);
        // eta = 1 lets the farther v3 win on index
        assert_eq!(project(&c, 7, &sub(&c, &[3, 4]), int(1)).unwrap(), 3);
    }

    #[test]
    fn neighborhood_examples() {
        let c = cycle(10);
        let y = sub(&c, &[0, 5]);
        assert_eq!(neighborhood(&c, &y, int(0)).unwrap(), y);
        // BFS balls of radius 3 around 0 and 5 cover everything
        assert_eq!(neighborhood(&c, &y, int(3)).unwrap(), PointSubset::whole(&c));
        assert_eq!(neighborhood(&c, &y, int(1)).unwrap(), sub(&c, &[9, 0, 1, 4, 5, 6]));
        let t = tripod(3);
        assert_eq!(neighborhood(&t, &sub(&t, &[0]), int(2)).unwrap(), sub(&t, &[0, 1, 2, 4, 5, 7, 8]));
        assert_eq!(neighborhood(&t, &sub(&t, &[0]), frac(5, 2)).unwrap().len(), 7);
    }

    #[test]
    fn hull_examples() {
        let t = tripod(2);
        assert_eq!(hull(&t, &sub(&t, &[2, 4]), int(0)).unwrap(), sub(&t, &[0, 1, 2, 3, 4]));
        assert_eq!(hull(&t, &sub(&t, &[6]), int(0)).unwrap(), sub(&t, &[6]));
        assert_eq!(hull(&t, &sub(&t, &[2, 4, 6]), int(0)).unwrap(), PointSubset::whole(&t));
    }

    #[test]
    fn local_quasigeodesic_examples() {
        let p = path_graph(6);
        let geo = DiscretePath::by_arc_length(&p, vec![0, 1, 2, 3, 4, 5]).unwrap();
        let r = check_local_quasigeodesic(&p, &geo, int(100), int(1), int(0)).unwrap();
        assert!(r.holds);
        let back = DiscretePath::by_arc_length(&p, vec![0, 1, 2, 1]).unwrap();
        let r = check_local_quasigeodesic(&p, &back, int(3), int(1), int(0)).unwrap();
        assert_eq!(r.violation, Some((0, 3)));
        let single = DiscretePath::by_arc_length(&p, vec![2]).unwrap();
        assert!(check_local_quasigeodesic(&p, &single, int(3), int(1), int(0)).unwrap().holds);
        assert!(check_local_quasigeodesic(&p, &geo, int(3), frac(1, 2), int(0)).is_err());
    }

    proptest! {
        #[test]
        fn gromov_product_symmetric_nonnegative(parents in proptest::collection::vec(0usize..1000, 1..30), extra in 0usize..5) {
            let n = parents.len() + 1;
            let base = random_tree(n, &parents);
            // add a few chords so the space is not always a tree
            let mut edges: Vec<(usize, usize, Rational)> = (1..n).map(|i| (parents[i - 1] % i, i, int(1))).collect();
            for k in 0..extra.min(n.saturating_sub(2)) {
                edges.push((k, n - 1 - k, int(2)));
            }
            edges.retain(|e| e.0 != e.1);
            let s = FiniteMetricSpace::from_graph(base.names().to_vec(), &edges).unwrap();
            for x in 0..n.min(6) {
                for y in 0..n.min(6) {
                    let z = (x * 7 + y * 3) % n;
                    let a = gromov_product(&s, x, y, z).unwrap();
                    prop_assert_eq!(a, gromov_product(&s, y, x, z).unwrap());
                    prop_assert!(a >= int(0));
                }
            }
        }

        #[test]
        fn tree_hulls_are_convex(parents in proptest::collection::vec(0usize..1000, 2..25), picks in proptest::collection::vec(0usize..1000, 1..5), eta in 0i128..3) {
            let n = parents.len() + 1;
            let t = random_tree(n, &parents);
            let y = PointSubset::new(&t, picks.iter().map(|p| p % n)).unwrap();
            let h = hull(&t, &y, int(0)).unwrap();
            prop_assert!(y.is_subset_of(&h));
            prop_assert_eq!(quasiconvexity_defect(&t, &h).unwrap(), int(0));
            for x in 0..n {
                let p = project(&t, x, &h, int(eta)).unwrap();
                prop_assert!(h.contains(p));
                prop_assert!(t.dist(x, p) <= t.to_length(h.units_from(&t, x)) + int(eta));
            }
        }
    }
}
