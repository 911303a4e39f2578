use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use serde_json::{json, Value};

use super::state::{FreeFactorLedger, LedgerEntry, WindmillConfig, WindmillState};
use super::subtree::MetricSubtree;
use super::verify::verify_windmill;
use crate::error::{Error, Result};
use crate::rational::{frac, Rational};
use crate::report::Report;
use crate::rotation::{rotation_elements, RotationFamily};
use crate::tree::TruncatedTree;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthCase {
    /// No apex close to W: `W' = N(W, σ/10)`.
    Neighborhood,
    /// Some apices absorbed: `W' = N(K_A·S, σ/10)`.
    Absorption,
}

/// What one growth step saw and built.
#[derive(Clone, Debug)]
pub struct StageRecord {
    /// Stage number of the state produced.
    pub stage: usize,
    pub case: GrowthCase,
    /// Apices absorbed, in index order.
    pub a: Vec<usize>,
    pub prev_w: MetricSubtree,
    pub prev_v: BTreeSet<usize>,
    /// Hull of `W ∪ A`.
    pub s: MetricSubtree,
    /// In-ball part of `K_A·S`.
    pub closure: MetricSubtree,
    /// Whether a closure round added nothing before the round cap.
    pub saturated: bool,
    pub new_factors: Vec<LedgerEntry>,
}

pub(crate) fn sigma_fraction(family: &RotationFamily, n: i128, d: i128) -> Rational {
    family.sigma() * frac(n, d)
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }

    fn union(&mut self, x: usize, y: usize) {
        let (a, b) = (self.find(x), self.find(y));
        // the smaller index is the representative
        if a < b {
            self.0[b] = a;
        } else if b < a {
            self.0[a] = b;
        }
    }
}

/// One step of the windmill construction.
pub fn grow(
    state: &WindmillState,
    tree: &TruncatedTree,
    family: &RotationFamily,
    cfg: &WindmillConfig,
) -> Result<(WindmillState, StageRecord)> {
    let pres = tree.presentation();
    if state.w.core_len() == tree.len() && tree.apices().all(|v| state.v.contains(&v)) {
        return Err(Error::precondition(format!(
            "the windmill fills the ball; radius {} is needed to grow further",
            tree.radius() + 1
        )));
    }
    let field = state.w.distance_field(tree);
    let threshold = sigma_fraction(family, 3, 10);
    let a: Vec<usize> = tree
        .apices()
        .filter(|v| !state.v.contains(v))
        .filter(|&v| field.dist[v].is_some_and(|d| d <= threshold))
        .collect();
    let step = sigma_fraction(family, 1, 10);
    let next_stage = state.stage + 1;
    if a.is_empty() {
        let w = state.w.neighborhood(tree, step);
        let record = StageRecord {
            stage: next_stage,
            case: GrowthCase::Neighborhood,
            a,
            prev_w: state.w.clone(),
            prev_v: state.v.clone(),
            s: state.w.clone(),
            closure: state.w.clone(),
            saturated: true,
            new_factors: Vec::new(),
        };
        let next = WindmillState {
            w,
            stage: next_stage,
            ..state.clone()
        };
        return Ok((next, record));
    }

    let mut s = state.w.clone();
    for &v in &a {
        s.absorb(&field, v);
    }
    let (closure, saturated) = close_under_rotations(&s, &a, tree, family, cfg);
    let w = closure.neighborhood(tree, step);
    let v: BTreeSet<usize> = tree.apices().filter(|&x| w.contains_vertex(x)).collect();
    if let Some(&lost) = state.v.iter().chain(&a).find(|x| !v.contains(x)) {
        return Err(Error::Internal(format!("apex {} left the windmill", tree.label(lost))));
    }

    // orbits of A under L, joined through in-ball images of the generators
    let position: BTreeMap<usize, usize> = a.iter().enumerate().map(|(k, &x)| (x, k)).collect();
    let mut uf = UnionFind((0..a.len()).collect());
    for (_, g) in state.l_generators(tree, family) {
        for gi in [g.clone(), g.inverse(pres)] {
            for (k, &x) in a.iter().enumerate() {
                if let Some(j) = tree.act(&gi, x).in_ball() {
                    if let Some(&kj) = position.get(&j) {
                        uf.union(k, kj);
                    }
                }
            }
        }
    }
    let mut reps: Vec<usize> = (0..a.len()).filter(|&k| uf.find(k) == k).map(|k| a[k]).collect();
    reps.sort_unstable();
    let mut ledger = state.ledger.clone();
    let mut new_factors = Vec::new();
    for apex in reps {
        let p = family.pair_at(apex).expect("every apex carries a pair");
        if ledger.entries.iter().any(|e| e.factor == p.factor && e.conjugator == p.conjugator) {
            return Err(Error::Internal(format!("the apex {} was recorded twice", tree.label(apex))));
        }
        let entry = LedgerEntry {
            factor: p.factor,
            conjugator: p.conjugator.clone(),
            apex,
            stage: next_stage,
        };
        ledger.entries.push(entry.clone());
        new_factors.push(entry);
    }
    let record = StageRecord {
        stage: next_stage,
        case: GrowthCase::Absorption,
        a,
        prev_w: state.w.clone(),
        prev_v: state.v.clone(),
        s,
        closure,
        saturated,
        new_factors,
    };
    let next = WindmillState {
        w,
        n_gens: state.n_gens.clone(),
        v,
        ledger,
        stage: next_stage,
        seed_set: state.seed_set.clone(),
    };
    Ok((next, record))
}

/// In-ball closure of `s` under the rotation groups at the apices `a`,
/// applying bounded powers of their generators for a bounded number of rounds.
fn close_under_rotations(
    s: &MetricSubtree,
    a: &[usize],
    tree: &TruncatedTree,
    family: &RotationFamily,
    cfg: &WindmillConfig,
) -> (MetricSubtree, bool) {
    let pres = tree.presentation();
    let gens: Vec<(usize, crate::group::Element)> = a
        .iter()
        .flat_map(|&c| {
            let p = family.pair_at(c).expect("every apex carries a pair");
            rotation_elements(pres, family.filling(), p.factor, &p.conjugator, cfg.closure_exponent)
                .into_iter()
                .map(move |h| (c, h))
        })
        .collect();
    let mut closure = s.clone();
    let mut frontier: Vec<usize> = s.core().iter().copied().collect();
    let mut frontier_reach: Vec<((usize, usize), Rational)> = s.reaches().iter().map(|(k, r)| (*k, *r)).collect();
    let mut saturated = false;
    for _ in 0..cfg.closure_syllables {
        let mut fresh = Vec::new();
        let mut fresh_reach = Vec::new();
        for (c, h) in &gens {
            for &x in &frontier {
                if x == *c {
                    continue;
                }
                if let Some(j) = tree.act(h, x).in_ball() {
                    if closure.insert_vertex(j) {
                        fresh.push(j);
                    }
                }
            }
            for &((u, w), r) in &frontier_reach {
                let (Some(hu), Some(hw)) = (tree.act(h, u).in_ball(), tree.act(h, w).in_ball()) else {
                    continue;
                };
                let known = closure.reaches().get(&(hu, hw)).copied().unwrap_or_default();
                if !closure.contains_vertex(hw) && known < r {
                    closure.insert_reach(hu, hw, r);
                    fresh_reach.push(((hu, hw), r));
                }
            }
        }
        if fresh.is_empty() && fresh_reach.is_empty() {
            saturated = true;
            break;
        }
        frontier = fresh;
        frontier_reach = fresh_reach;
    }
    closure.normalize();
    (closure, saturated)
}

/// Why a windmill run stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Every ball vertex lies in W and every apex is absorbed.
    BallExhausted,
    /// A growth step changed nothing: the rest of the ball is out of reach.
    NoGrowth,
    StageCap,
}

#[derive(Clone, Debug)]
pub struct WindmillRun {
    pub states: Vec<WindmillState>,
    pub records: Vec<StageRecord>,
    /// One report per state; entry 0 covers the initial state.
    pub reports: Vec<Report>,
    pub stop: StopReason,
}

impl WindmillRun {
    pub fn last(&self) -> &WindmillState {
        self.states.last().expect("a run holds its initial state")
    }

    pub fn ledger(&self) -> &FreeFactorLedger {
        &self.last().ledger
    }

    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(Report::all_pass)
    }

    /// Per stage: `{A, |W|, |V|, new_factors, axiom_report}`.
    pub fn trace_json(&self, tree: &TruncatedTree) -> Value {
        let pres = tree.presentation();
        let mut stages = Vec::new();
        for (k, state) in self.states.iter().enumerate() {
            let record = k.checked_sub(1).map(|r| &self.records[r]);
            let a: Vec<String> = record.map_or(Vec::new(), |r| r.a.iter().map(|&v| tree.label(v).to_string()).collect());
            let new_factors: Vec<String> = record.map_or(Vec::new(), |r| {
                r.new_factors
                    .iter()
                    .map(|e| format!("{}<{}>", e.conjugator.display(pres), pres.name(e.factor)))
                    .collect()
            });
            stages.push(json!({
                "stage": state.stage,
                "case": record.map(|r| r.case),
                "A": a,
                "W": state.w.core_len(),
                "W_partial_edges": state.w.reaches().len(),
                "V": state.v.len(),
                "new_factors": new_factors,
                "closure_saturated": record.map(|r| r.saturated),
                "axiom_report": self.reports[k],
            }));
        }
        json!({ "stop": self.stop, "stages": stages })
    }
}

/// Grows from `init` until the ball is exhausted, growth stalls or the stage
/// cap is reached, verifying every state.
pub fn run_windmill(
    tree: &TruncatedTree,
    family: &RotationFamily,
    init: WindmillState,
    cfg: &WindmillConfig,
) -> Result<WindmillRun> {
    let mut reports = vec![verify_windmill(&init, None, tree, family, cfg)?];
    let mut states = vec![init];
    let mut records = Vec::new();
    let stop = loop {
        let current = states.last().expect("nonempty");
        if current.w.core_len() == tree.len() && tree.apices().all(|v| current.v.contains(&v)) {
            break StopReason::BallExhausted;
        }
        if current.stage >= cfg.stage_cap {
            break StopReason::StageCap;
        }
        let (next, record) = grow(current, tree, family, cfg)?;
        if next.w == current.w && next.v == current.v {
            break StopReason::NoGrowth;
        }
        reports.push(verify_windmill(&next, Some(&record), tree, family, cfg)?);
        states.push(next);
        records.push(record);
    };
    Ok(WindmillRun {
        states,
        records,
        reports,
        stop,
    })
}
