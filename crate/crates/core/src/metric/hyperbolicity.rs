use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::ops::gp2;
use super::FiniteMetricSpace;
use crate::error::{Error, Result};
use crate::rational::{Rational, Q};

/// Largest space scanned exhaustively.
pub const EXACT_POINT_CAP: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeltaMode {
    Exact,
    Sampled { count: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HyperbolicityReport {
    /// Least δ satisfying the Gromov-product inequality on the scanned quadruples.
    pub delta: Q,
    /// Least δ satisfying the four-point inequality on the same quadruples.
    pub delta_four_point: Q,
    pub quadruples: u64,
    pub exact: bool,
    pub witness: Option<[String; 4]>,
}

/// Twice δ in units, from the three pairings of `q`.
fn four_point(space: &FiniteMetricSpace, [a, b, c, d]: [usize; 4]) -> i64 {
    let mut s = [
        space.units(a, b) + space.units(c, d),
        space.units(a, c) + space.units(b, d),
        space.units(a, d) + space.units(b, c),
    ];
    s.sort_unstable();
    s[2] - s[1]
}

/// Twice δ in units, as the worst violation of
/// ⟨x,z⟩_t ≥ min(⟨x,y⟩_t, ⟨y,z⟩_t) − δ over relabellings of `q`.
fn gromov_form(space: &FiniteMetricSpace, q: [usize; 4]) -> i64 {
    let mut worst = i64::MIN;
    for ti in 0..4 {
        let rest: Vec<usize> = (0..4).filter(|&i| i != ti).map(|i| q[i]).collect();
        let t = q[ti];
        for yi in 0..3 {
            let y = rest[yi];
            let x = rest[(yi + 1) % 3];
            let z = rest[(yi + 2) % 3];
            let v = gp2(space, x, y, t).min(gp2(space, y, z, t)) - gp2(space, x, z, t);
            worst = worst.max(v);
        }
    }
    worst
}

fn score(space: &FiniteMetricSpace, q: [usize; 4]) -> Result<(i64, [usize; 4])> {
    let a = four_point(space, q);
    let b = gromov_form(space, q);
    if a != b {
        return Err(Error::Internal(format!("δ forms disagree on quadruple {q:?}: {a} vs {b}")));
    }
    Ok((a, q))
}

/// The hyperbolicity constant of `space`, exactly or as a sampled lower bound.
pub fn hyperbolicity_delta(space: &FiniteMetricSpace, mode: DeltaMode) -> Result<HyperbolicityReport> {
    let n = space.len();
    let (best, count, exact) = match mode {
        DeltaMode::Exact => {
            if n > EXACT_POINT_CAP {
                return Err(Error::resource("points for an exact hyperbolicity scan", EXACT_POINT_CAP));
            }
            let best = (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut best: Option<(i64, [usize; 4])> = None;
                    for j in i + 1..n {
                        for k in j + 1..n {
                            for l in k + 1..n {
                                let s = score(space, [i, j, k, l])?;
                                if best.is_none_or(|b| s.0 > b.0) {
                                    best = Some(s);
                                }
                            }
                        }
                    }
                    Ok(best)
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .flatten()
                .fold(None, |acc: Option<(i64, [usize; 4])>, s| match acc {
                    Some(a) if a.0 >= s.0 => Some(a),
                    _ => Some(s),
                });
            let count = if n < 4 { 0 } else { (n * (n - 1) * (n - 2) * (n - 3) / 24) as u64 };
            (best, count, true)
        }
        DeltaMode::Sampled { count, seed } => {
            if n == 0 {
                return Err(Error::input("cannot sample an empty space"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut best: Option<(i64, [usize; 4])> = None;
            for _ in 0..count {
                let q = [rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n)];
                let s = score(space, q)?;
                if best.is_none_or(|b| s.0 > b.0) {
                    best = Some(s);
                }
            }
            (best, count, false)
        }
    };
    let twice = best.map_or(0, |b| b.0.max(0));
    let delta = space.to_length(twice) / Rational::from_integer(2);
    let witness = best
        .filter(|b| b.0 > 0)
        .map(|b| b.1.map(|i| space.names()[i].clone()));
    Ok(HyperbolicityReport {
        delta: Q(delta),
        delta_four_point: Q(delta),
        quadruples: count,
        exact,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;
    use crate::rational::{frac, int};
    use proptest::prelude::*;

    /// Brute force over all ordered quadruples with repetition.
    fn oracle(space: &FiniteMetricSpace) -> Rational {
        let n = space.len();
        let mut worst = int(0);
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    for t in 0..n {
                        let g = |a, b, c| super::super::gromov_product(space, a, b, c).unwrap();
                        let v = g(x, y, t).min(g(y, z, t)) - g(x, z, t);
                        worst = worst.max(v);
                    }
                }
            }
        }
        worst
    }

    #[test]
    fn trees_and_tiny_spaces_are_zero() {
        for s in [path_graph(1), path_graph(3), path_graph(9), tripod(3)] {
            let r = hyperbolicity_delta(&s, DeltaMode::Exact).unwrap();
            assert_eq!(r.delta.0, int(0));
            assert!(r.witness.is_none());
        }
    }

    #[test]
    fn cycles_match_the_brute_force_oracle() {
        for n in [4, 5, 6, 8, 10] {
            let c = cycle(n);
            let r = hyperbolicity_delta(&c, DeltaMode::Exact).unwrap();
            assert_eq!(r.delta.0, oracle(&c), "cycle {n}");
            assert_eq!(r.delta, r.delta_four_point);
        }
        // regression values from the exhaustive scan
        assert_eq!(hyperbolicity_delta(&cycle(8), DeltaMode::Exact).unwrap().delta.0, int(2));
        assert_eq!(hyperbolicity_delta(&cycle(6), DeltaMode::Exact).unwrap().delta.0, int(1));
        assert_eq!(hyperbolicity_delta(&cycle(10), DeltaMode::Exact).unwrap().delta.0, int(2));
    }

    #[test]
    fn sampling_is_a_deterministic_lower_bound() {
        let c = cycle(12);
        let exact = hyperbolicity_delta(&c, DeltaMode::Exact).unwrap();
        let a = hyperbolicity_delta(&c, DeltaMode::Sampled { count: 500, seed: 3 }).unwrap();
        let b = hyperbolicity_delta(&c, DeltaMode::Sampled { count: 500, seed: 3 }).unwrap();
        assert_eq!(a, b);
        assert!(!a.exact);
        assert!(a.delta.0 <= exact.delta.0);
    }

    #[test]
    fn exact_mode_has_a_cap() {
        let p = path_graph(EXACT_POINT_CAP + 1);
        let e = hyperbolicity_delta(&p, DeltaMode::Exact).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn random_graphs_match_oracle(parents in proptest::collection::vec(0usize..1000, 3..9), chords in proptest::collection::vec((0usize..100, 0usize..100, 1i128..4), 0..4)) {
            let n = parents.len() + 1;
            let mut edges: Vec<(usize, usize, Rational)> = (1..n).map(|i| (parents[i - 1] % i, i, int(1))).collect();
            for (a, b, w) in chords {
                if a % n != b % n {
                    edges.push((a % n, b % n, frac(w, 2)));
                }
            }
            let s = FiniteMetricSpace::from_graph((0..n).map(|i| i.to_string()).collect(), &edges).unwrap();
            let r = hyperbolicity_delta(&s, DeltaMode::Exact).unwrap();
            prop_assert_eq!(r.delta.0, oracle(&s));
        }
    }
}
