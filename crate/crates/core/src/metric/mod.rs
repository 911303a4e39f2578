//! Finite metric spaces with exact rational distances, and the hyperbolic
//! geometry that can be checked on them by direct scans.

mod hyperbolicity;
mod ops;
mod suite;

use std::collections::{BTreeSet, VecDeque};

use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::rational::{Rational, Q};

pub use hyperbolicity::{hyperbolicity_delta, DeltaMode, HyperbolicityReport, EXACT_POINT_CAP};
pub use ops::{
    check_local_quasigeodesic, gromov_product, hull, neighborhood, project, quasiconvexity_defect,
    quasiconvexity_witness, QuasiGeodesicCheck,
};
pub use suite::{verify_metric_lemma_suite, SuiteConfig};

/// A finite metric space. Distances are stored as integer multiples of a
/// common rational `unit`, which keeps the inner loops in `i64`.
#[derive(Clone, Debug)]
pub struct FiniteMetricSpace {
    names: Vec<String>,
    units: Vec<i64>,
    unit: Rational,
    adjacency: Option<Vec<Vec<(usize, i64)>>>,
}

fn common_unit(values: &[Rational]) -> Result<(Rational, Vec<i64>)> {
    let mut lcm: i128 = 1;
    for v in values {
        lcm = lcm.lcm(v.denom());
        if lcm > i64::MAX as i128 {
            return Err(Error::input("distance denominators too large"));
        }
    }
    let unit = Rational::new(1, lcm);
    let units = values
        .iter()
        .map(|v| {
            let n = v * Rational::from_integer(lcm);
            i64::try_from(n.to_integer()).map_err(|_| Error::input("distance too large"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((unit, units))
}

impl FiniteMetricSpace {
    /// Edge-weighted graph; distances are shortest-path lengths.
    pub fn from_graph(names: Vec<String>, edges: &[(usize, usize, Rational)]) -> Result<Self> {
        let n = names.len();
        if n == 0 {
            return Err(Error::input("metric space needs at least one point"));
        }
        let weights: Vec<Rational> = edges.iter().map(|e| e.2).collect();
        let (unit, w) = common_unit(&weights)?;
        let mut adj = vec![Vec::new(); n];
        for (&(i, j, ref len), &units) in edges.iter().zip(&w) {
            if i >= n || j >= n {
                return Err(Error::input(format!("edge ({i}, {j}) names a point outside 0..{n}")));
            }
            if i == j {
                return Err(Error::input(format!("self-loop at point {i}")));
            }
            if !len.is_positive() {
                return Err(Error::input(format!("edge ({i}, {j}) has non-positive length")));
            }
            adj[i].push((j, units));
            adj[j].push((i, units));
        }
        Self::from_adjacency(names, adj, unit)
    }

    /// Graph given by adjacency lists with integer weights in multiples of `unit`.
    pub fn from_adjacency(names: Vec<String>, adjacency: Vec<Vec<(usize, i64)>>, unit: Rational) -> Result<Self> {
        let n = names.len();
        if n == 0 {
            return Err(Error::input("metric space needs at least one point"));
        }
        if adjacency.len() != n {
            return Err(Error::input("adjacency size does not match point count"));
        }
        if !unit.is_positive() {
            return Err(Error::input("length unit must be positive"));
        }
        let uniform = adjacency.iter().flatten().all(|&(_, w)| w == 1);
        let mut units = vec![-1i64; n * n];
        for s in 0..n {
            let row = &mut units[s * n..(s + 1) * n];
            if uniform {
                bfs_row(&adjacency, s, row);
            } else {
                dijkstra_row(&adjacency, s, row);
            }
            if row.iter().any(|&d| d < 0) {
                return Err(Error::input("graph is disconnected"));
            }
        }
        Ok(FiniteMetricSpace {
            names,
            units,
            unit,
            adjacency: Some(adjacency),
        })
    }

    /// Explicit distance matrix; validated for symmetry and the triangle inequality.
    pub fn from_matrix(names: Vec<String>, matrix: &[Vec<Rational>]) -> Result<Self> {
        let n = matrix.len();
        if n == 0 {
            return Err(Error::input("metric space needs at least one point"));
        }
        if names.len() != n {
            return Err(Error::input("point names do not match matrix size"));
        }
        if matrix.iter().any(|row| row.len() != n) {
            return Err(Error::input("distance matrix is not square"));
        }
        let flat: Vec<Rational> = matrix.iter().flatten().copied().collect();
        let (unit, units) = common_unit(&flat)?;
        for i in 0..n {
            if units[i * n + i] != 0 {
                return Err(Error::input(format!("dist({i},{i}) is not zero")));
            }
            for j in 0..n {
                let d = units[i * n + j];
                if d < 0 {
                    return Err(Error::input(format!("dist({i},{j}) is negative")));
                }
                if d != units[j * n + i] {
                    return Err(Error::input(format!("dist({i},{j}) is not symmetric")));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if units[i * n + k] > units[i * n + j] + units[j * n + k] {
                        return Err(Error::input(format!("triangle inequality fails at ({i}, {j}, {k})")));
                    }
                }
            }
        }
        Ok(FiniteMetricSpace {
            names,
            units,
            unit,
            adjacency: None,
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn unit(&self) -> Rational {
        self.unit
    }

    pub fn adjacency(&self) -> Option<&[Vec<(usize, i64)>]> {
        self.adjacency.as_deref()
    }

    /// Distance as an integer multiple of [`Self::unit`].
    #[inline]
    pub fn units(&self, x: usize, y: usize) -> i64 {
        self.units[x * self.names.len() + y]
    }

    pub fn dist(&self, x: usize, y: usize) -> Rational {
        self.to_length(self.units(x, y))
    }

    pub fn to_length(&self, units: i64) -> Rational {
        self.unit * Rational::from_integer(units as i128)
    }

    /// Rational length expressed in half-units, rounded down. Used to turn
    /// thresholds into integer comparisons against doubled Gromov products.
    pub fn floor_half_units(&self, r: Rational) -> i64 {
        let q = r * Rational::from_integer(2) / self.unit;
        q.floor().to_integer() as i64
    }

    pub fn floor_units(&self, r: Rational) -> i64 {
        (r / self.unit).floor().to_integer() as i64
    }

    pub fn check_point(&self, x: usize) -> Result<()> {
        if x < self.len() {
            Ok(())
        } else {
            Err(Error::input(format!("unknown point {x} (space has {} points)", self.len())))
        }
    }

    /// Connected graph with exactly n-1 edges.
    pub fn is_tree(&self) -> bool {
        match &self.adjacency {
            Some(adj) => adj.iter().map(Vec::len).sum::<usize>() == 2 * (self.len() - 1),
            None => false,
        }
    }

    pub fn max_edge(&self) -> Rational {
        let units = match &self.adjacency {
            Some(adj) => adj.iter().flatten().map(|&(_, w)| w).max().unwrap_or(0),
            None => (0..self.len())
                .flat_map(|i| (0..self.len()).map(move |j| (i, j)))
                .map(|(i, j)| self.units(i, j))
                .max()
                .unwrap_or(0),
        };
        self.to_length(units)
    }

    pub fn are_adjacent(&self, x: usize, y: usize) -> bool {
        self.adjacency
            .as_ref()
            .is_some_and(|adj| adj[x].iter().any(|&(z, _)| z == y))
    }

    /// Parses the JSON space format: `{"points": [...], "edges": [[i, j, "p/q"], ...]}`
    /// or `{"matrix": [[...], ...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Doc {
            points: Option<Vec<String>>,
            edges: Option<Vec<(usize, usize, Q)>>,
            matrix: Option<Vec<Vec<Q>>>,
        }
        let doc: Doc = serde_json::from_str(text)
            .map_err(|e| Error::input(format!("line {} column {}: {e}", e.line(), e.column())))?;
        match (doc.edges, doc.matrix) {
            (Some(edges), None) => {
                let names = doc
                    .points
                    .ok_or_else(|| Error::input("edge format requires \"points\""))?;
                let edges: Vec<_> = edges.into_iter().map(|(i, j, w)| (i, j, w.0)).collect();
                Self::from_graph(names, &edges)
            }
            (None, Some(matrix)) => {
                let n = matrix.len();
                let names = doc.points.unwrap_or_else(|| (0..n).map(|i| i.to_string()).collect());
                let m: Vec<Vec<Rational>> = matrix.into_iter().map(|r| r.into_iter().map(|q| q.0).collect()).collect();
                Self::from_matrix(names, &m)
            }
            _ => Err(Error::input("expected exactly one of \"edges\" or \"matrix\"")),
        }
    }
}

fn bfs_row(adj: &[Vec<(usize, i64)>], s: usize, row: &mut [i64]) {
    let mut queue = VecDeque::new();
    row[s] = 0;
    queue.push_back(s);
    while let Some(x) = queue.pop_front() {
        for &(y, _) in &adj[x] {
            if row[y] < 0 {
                row[y] = row[x] + 1;
                queue.push_back(y);
            }
        }
    }
}

fn dijkstra_row(adj: &[Vec<(usize, i64)>], s: usize, row: &mut [i64]) {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    let mut heap = BinaryHeap::new();
    row[s] = 0;
    heap.push(Reverse((0i64, s)));
    while let Some(Reverse((d, x))) = heap.pop() {
        if d > row[x] {
            continue;
        }
        for &(y, w) in &adj[x] {
            let nd = d + w;
            if row[y] < 0 || nd < row[y] {
                row[y] = nd;
                heap.push(Reverse((nd, y)));
            }
        }
    }
}

/// A set of points of some [`FiniteMetricSpace`], kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct PointSubset {
    members: Vec<usize>,
}

impl PointSubset {
    pub fn new(space: &FiniteMetricSpace, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let set: BTreeSet<usize> = members.into_iter().collect();
        if let Some(&m) = set.iter().next_back() {
            space.check_point(m)?;
        }
        Ok(PointSubset {
            members: set.into_iter().collect(),
        })
    }

    pub fn whole(space: &FiniteMetricSpace) -> Self {
        PointSubset {
            members: (0..space.len()).collect(),
        }
    }

    pub(crate) fn from_sorted(members: Vec<usize>) -> Self {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        PointSubset { members }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.members.binary_search(&x).is_ok()
    }

    pub fn is_subset_of(&self, other: &PointSubset) -> bool {
        self.members.iter().all(|&x| other.contains(x))
    }

    pub fn union(&self, other: &PointSubset) -> PointSubset {
        let set: BTreeSet<usize> = self.members.iter().chain(&other.members).copied().collect();
        PointSubset {
            members: set.into_iter().collect(),
        }
    }

    pub(crate) fn require_nonempty(&self, what: &str) -> Result<()> {
        if self.members.is_empty() {
            Err(Error::input(format!("{what}: subset is empty")))
        } else {
            Ok(())
        }
    }

    /// Distance from `x` to the subset, in units of the space.
    pub fn units_from(&self, space: &FiniteMetricSpace, x: usize) -> i64 {
        self.members.iter().map(|&y| space.units(x, y)).min().unwrap_or(i64::MAX)
    }
}

/// A finite chain of points with strictly increasing arc-length parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscretePath {
    points: Vec<usize>,
    lengths: Vec<Rational>,
}

impl DiscretePath {
    pub fn new(space: &FiniteMetricSpace, points: Vec<usize>, lengths: Vec<Rational>) -> Result<Self> {
        if points.len() != lengths.len() {
            return Err(Error::input("path points and parameters differ in length"));
        }
        for &p in &points {
            space.check_point(p)?;
        }
        if lengths.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::input("path parameters must be strictly increasing"));
        }
        if space.adjacency.is_some() && points.windows(2).any(|w| !space.are_adjacent(w[0], w[1])) {
            return Err(Error::input("consecutive path points must be adjacent"));
        }
        Ok(DiscretePath { points, lengths })
    }

    /// Parametrizes by arc length: each step costs the distance between its endpoints.
    pub fn by_arc_length(space: &FiniteMetricSpace, points: Vec<usize>) -> Result<Self> {
        let mut lengths = Vec::with_capacity(points.len());
        let mut t = Rational::zero();
        for (i, &p) in points.iter().enumerate() {
            space.check_point(p)?;
            if i > 0 {
                t += space.dist(points[i - 1], p);
            }
            lengths.push(t);
        }
        Self::new(space, points, lengths)
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn lengths(&self) -> &[Rational] {
        &self.lengths
    }
}
