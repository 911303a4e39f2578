use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::hyperbolicity::EXACT_POINT_CAP;
use super::ops::gp2;
use super::{hull, hyperbolicity_delta, neighborhood, quasiconvexity_defect, DeltaMode, FiniteMetricSpace, PointSubset};
use crate::error::{Error, Result};
use crate::rational::{format_rational, is_nonnegative, Rational, Q};
use crate::report::{Check, Report, Status};

/// Sampling and tuning knobs for [`verify_metric_lemma_suite`].
#[derive(Clone, Debug)]
pub struct SuiteConfig {
    /// Tuples drawn for each check whose full tuple space exceeds `exhaustive_budget`.
    pub samples: u64,
    pub seed: u64,
    pub exhaustive_budget: u64,
    /// Inner-loop operations allowed for one quasi-convexity scan before the
    /// outer points are sampled.
    pub work_budget: u64,
    /// Number of random subsets tested, on top of `extra_subsets`.
    pub subsets: usize,
    pub extra_subsets: Vec<PointSubset>,
    pub etas: Vec<Rational>,
    /// Geodesic chains, random chains and caller-supplied chains.
    pub chains: usize,
    pub random_chains: usize,
    pub extra_chains: Vec<Vec<usize>>,
    /// Gromov-product bound at the chain points; defaults to δ.
    pub chain_l: Option<Rational>,
    /// Minimal step of a chain is `stability_ls · δ` unless overridden.
    pub stability_ls: u64,
    pub stability_length: Option<Rational>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            samples: 20_000,
            seed: 0,
            exhaustive_budget: 1_000_000,
            work_budget: 40_000_000,
            subsets: 8,
            extra_subsets: Vec::new(),
            etas: vec![Rational::from_integer(0), Rational::from_integer(1)],
            chains: 8,
            random_chains: 4,
            extra_chains: Vec::new(),
            chain_l: None,
            stability_ls: 501,
            stability_length: None,
        }
    }
}

impl SuiteConfig {
    pub fn exhaustive() -> Self {
        SuiteConfig {
            exhaustive_budget: u64::MAX,
            work_budget: u64::MAX,
            ..Self::default()
        }
    }
}

/// A bound `sharp + allowance`, with both sides also floored to half-units
/// so the inner loops compare integers.
struct Bound {
    sharp: Rational,
    full: Rational,
    sharp_h: i64,
    full_h: i64,
}

impl Bound {
    fn new(space: &FiniteMetricSpace, sharp: Rational, allowance: Rational) -> Self {
        Self::between(space, sharp, sharp + allowance)
    }

    fn between(space: &FiniteMetricSpace, sharp: Rational, full: Rational) -> Self {
        Bound {
            sharp_h: space.floor_half_units(sharp),
            full_h: space.floor_half_units(full),
            sharp,
            full,
        }
    }
}

/// Per-statement accumulator over half-unit observations.
struct Acc {
    name: &'static str,
    allowance: Rational,
    checked: u64,
    skipped: u64,
    worst: Option<Rational>,
    worst_witness: Option<String>,
    failure: Option<String>,
}

impl Acc {
    fn new(name: &'static str, allowance: Rational) -> Self {
        Acc {
            name,
            allowance,
            checked: 0,
            skipped: 0,
            worst: None,
            worst_witness: None,
            failure: None,
        }
    }

    /// Records `lhs ≤ bound`, with `lhs_h` the left side in half-units.
    fn observe(&mut self, space: &FiniteMetricSpace, lhs_h: i64, b: &Bound, witness: impl FnOnce() -> String) {
        self.observe_exact(space, lhs_h, b.sharp_h, b.full_h, || (b.sharp, b.full), witness);
    }

    /// Like `observe`, for bounds whose floors are known in half-units and
    /// whose exact values are only built when the left side exceeds a floor.
    fn observe_exact(
        &mut self,
        space: &FiniteMetricSpace,
        lhs_h: i64,
        sharp_h: i64,
        full_h: i64,
        exact: impl FnOnce() -> (Rational, Rational),
        witness: impl FnOnce() -> String,
    ) {
        self.checked += 1;
        if lhs_h <= sharp_h && lhs_h <= full_h {
            return;
        }
        let (sharp, full) = exact();
        let lhs = space.to_length(lhs_h) / Rational::from_integer(2);
        let excess = lhs - sharp;
        let grows = excess > Rational::from_integer(0) && self.worst.is_none_or(|w| excess > w);
        if lhs > full {
            if self.failure.is_none() {
                self.failure = Some(format!(
                    "{}: {} exceeds bound {}",
                    witness(),
                    format_rational(&lhs),
                    format_rational(&full)
                ));
            }
        } else if grows && self.failure.is_none() {
            self.worst_witness = Some(witness());
        }
        if grows {
            self.worst = Some(excess);
        }
    }

    fn finish(self) -> Check {
        let status = if self.failure.is_some() {
            Status::Fail
        } else if self.checked == 0 {
            Status::NotApplicable
        } else {
            Status::Pass
        };
        Check {
            name: self.name.to_string(),
            status,
            worst_slack: Some(Q(self.worst.unwrap_or_else(|| Rational::from_integer(0)))),
            allowance: Some(Q(self.allowance)),
            checked: self.checked,
            not_applicable: self.skipped,
            witness: self.failure.or(self.worst_witness),
        }
    }
}

/// Every ordered `k`-tuple if there are at most `budget` of them, otherwise
/// `samples` uniform draws.
fn tuples<const K: usize>(n: usize, budget: u64, samples: u64, rng: &mut ChaCha8Rng) -> Vec<[usize; K]> {
    let total = (n as u128).checked_pow(K as u32).unwrap_or(u128::MAX);
    if total <= budget as u128 {
        let mut out = Vec::with_capacity(total as usize);
        let mut cur = [0usize; K];
        if n == 0 {
            return out;
        }
        loop {
            out.push(cur);
            let mut i = K;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                cur[i] += 1;
                if cur[i] < n {
                    break;
                }
                cur[i] = 0;
            }
        }
    }
    (0..samples)
        .map(|_| std::array::from_fn(|_| rng.gen_range(0..n)))
        .collect()
}

/// Points of a shortest path from `a` to `b`, walking to the lowest-index
/// neighbour that stays on a geodesic. Spaces without a graph fall back to the
/// taut points sorted by distance from `a`.
fn geodesic(space: &FiniteMetricSpace, a: usize, b: usize) -> Vec<usize> {
    match space.adjacency() {
        Some(adj) => {
            let mut out = vec![a];
            let mut cur = a;
            while cur != b {
                let next = adj[cur]
                    .iter()
                    .filter(|&&(w, len)| len + space.units(w, b) == space.units(cur, b))
                    .map(|&(w, _)| w)
                    .min()
                    .expect("a graph metric always has a geodesic step");
                out.push(next);
                cur = next;
            }
            out
        }
        None => {
            let mut pts: Vec<usize> = (0..space.len())
                .filter(|&p| space.units(a, p) + space.units(p, b) == space.units(a, b))
                .collect();
            pts.sort_by_key(|&p| (space.units(a, p), p));
            pts
        }
    }
}

/// Worst `2·(d(x,N) − ⟨y,y′⟩_x)` over the given outer points.
fn defect_over(space: &FiniteMetricSpace, set: &PointSubset, xs: &[usize]) -> (i64, Option<(usize, usize, usize)>) {
    let ys = set.members();
    let mut worst = (i64::MIN, None);
    for &x in xs {
        let dxy = set.units_from(space, x);
        for (i, &y) in ys.iter().enumerate() {
            for &y2 in &ys[i..] {
                let v = 2 * dxy - gp2(space, y, y2, x);
                if v > worst.0 {
                    worst = (v, Some((x, y, y2)));
                }
            }
        }
    }
    worst
}

struct Ctx<'a> {
    space: &'a FiniteMetricSpace,
    delta: Rational,
    cfg: &'a SuiteConfig,
    /// Allowance for the gap between taut point sets and continuous hulls.
    hull_extra: Rational,
}

impl Ctx<'_> {
    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.cfg.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }

    fn name(&self, p: usize) -> &str {
        &self.space.names()[p]
    }

    /// All points, or a sample small enough that `per_point` work on each fits the budget.
    fn outer_points(&self, per_point: u64, salt: u64) -> Vec<usize> {
        let n = self.space.len();
        let per_point = per_point.max(1);
        if (n as u64).saturating_mul(per_point) <= self.cfg.work_budget {
            return (0..n).collect();
        }
        let count = (self.cfg.work_budget / per_point).max(1) as usize;
        let mut rng = self.rng(salt);
        (0..count).map(|_| rng.gen_range(0..n)).collect()
    }
}

/// Runs every metric statement on `space` for the hyperbolicity constant `delta`.
pub fn verify_metric_lemma_suite(space: &FiniteMetricSpace, delta: Rational, cfg: &SuiteConfig) -> Result<Report> {
    if space.is_empty() {
        return Err(Error::input("metric suite needs a non-empty space"));
    }
    if !is_nonnegative(&delta) {
        return Err(Error::input("delta must be non-negative"));
    }
    let scan_mode = if space.len() <= EXACT_POINT_CAP {
        DeltaMode::Exact
    } else {
        DeltaMode::Sampled {
            count: cfg.samples,
            seed: cfg.seed,
        }
    };
    let scan = hyperbolicity_delta(space, scan_mode)?;
    let measured = if space.is_tree() { Rational::from_integer(0) } else { scan.delta.0 };
    if delta < measured {
        return Err(Error::precondition(format!(
            "delta {} is below the hyperbolicity constant {} of the space",
            format_rational(&delta),
            format_rational(&measured)
        )));
    }
    let hull_extra = if space.is_tree() {
        Rational::from_integer(0)
    } else {
        Rational::from_integer(2) * (Rational::from_integer(2) * delta + Rational::from_integer(2) * space.max_edge())
    };
    let ctx = Ctx {
        space,
        delta,
        cfg,
        hull_extra,
    };
    let mut report = Report::new("metric");
    report.push(Check {
        name: "four_point_agreement".into(),
        status: if scan.delta == scan.delta_four_point { Status::Pass } else { Status::Fail },
        worst_slack: None,
        allowance: None,
        checked: scan.quadruples,
        not_applicable: 0,
        witness: Some(format!(
            "{} δ = {} over {} quadruples",
            if scan.exact { "exact" } else { "sampled" },
            format_rational(&scan.delta.0),
            scan.quadruples
        )),
    });
    report.push(thin_triangle(&ctx));
    let subsets = test_subsets(&ctx)?;
    let (pg, pd) = projections(&ctx, &subsets)?;
    report.push(pg);
    report.push(pd);
    report.push(neighborhoods(&ctx, &subsets)?);
    let (hq, hg) = hulls(&ctx, &subsets)?;
    report.push(hq);
    report.push(hg);
    let (sa, sb) = stability(&ctx)?;
    report.push(sa);
    report.push(sb);
    Ok(report)
}

fn thin_triangle(ctx: &Ctx) -> Check {
    let space = ctx.space;
    let mut acc = Acc::new("thin_triangle", ctx.delta);
    let allowance = Bound::new(space, Rational::from_integer(0), ctx.delta);
    let mut rng = ctx.rng(1);
    for [x, y, z, s] in tuples::<4>(space.len(), ctx.cfg.exhaustive_budget, ctx.cfg.samples, &mut rng) {
        let lhs = gp2(space, x, y, s);
        let rhs = (2 * space.units(x, s) - gp2(space, y, z, x)).max(gp2(space, x, z, s));
        acc.observe(space, lhs - rhs, &allowance, || {
            format!("x={} y={} z={} s={}", ctx.name(x), ctx.name(y), ctx.name(z), ctx.name(s))
        });
    }
    acc.finish()
}

struct TestSubset {
    set: PointSubset,
    alpha: Rational,
}

fn test_subsets(ctx: &Ctx) -> Result<Vec<TestSubset>> {
    let space = ctx.space;
    let n = space.len();
    let mut rng = ctx.rng(2);
    let mut sets = Vec::new();
    for i in 0..ctx.cfg.subsets {
        let size = 1 + i % 3;
        sets.push(PointSubset::new(space, (0..size).map(|_| rng.gen_range(0..n)))?);
    }
    for _ in 0..ctx.cfg.subsets / 2 {
        let pair = PointSubset::new(space, [rng.gen_range(0..n), rng.gen_range(0..n)])?;
        sets.push(hull(space, &pair, ctx.delta)?);
    }
    sets.extend(ctx.cfg.extra_subsets.iter().cloned());
    let cap = ctx.cfg.work_budget.saturating_mul(25);
    let mut out = Vec::new();
    for set in sets {
        if set.is_empty() || (n as u64).saturating_mul((set.len() as u64).pow(2)) > cap {
            continue;
        }
        let alpha = quasiconvexity_defect(space, &set)?;
        out.push(TestSubset { set, alpha });
    }
    Ok(out)
}

/// `η`-projection with the smallest index, `eta_h` being η in half-units rounded down.
fn project_h(space: &FiniteMetricSpace, x: usize, set: &PointSubset, eta_h: i64) -> usize {
    let limit = 2 * set.units_from(space, x) + eta_h;
    *set.members()
        .iter()
        .find(|&&p| 2 * space.units(x, p) <= limit)
        .expect("the nearest point qualifies")
}

fn projections(ctx: &Ctx, subsets: &[TestSubset]) -> Result<(Check, Check)> {
    let space = ctx.space;
    let two = Rational::from_integer(2);
    let mut gro = Acc::new("projection_gromov_product", Rational::from_integer(0));
    let mut dist = Acc::new("projection_distance", two * ctx.delta);
    let etas: Vec<(Rational, i64)> = ctx.cfg.etas.iter().map(|&e| (e, space.floor_half_units(e))).collect();
    for (k, ts) in subsets.iter().enumerate() {
        let ys = ts.set.members();
        for &(eta, eta_h) in &etas {
            let b = Bound::new(space, ts.alpha + eta, Rational::from_integer(0));
            for x in ctx.outer_points((ys.len() as u64).pow(2), 10 + k as u64) {
                let limit = 2 * ts.set.units_from(space, x) + eta_h;
                for &p in ys.iter().filter(|&&p| 2 * space.units(x, p) <= limit) {
                    for &y in ys {
                        gro.observe(space, gp2(space, x, y, p), &b, || {
                            format!("Y#{k} x={} y={} p={} η={}", ctx.name(x), ctx.name(y), ctx.name(p), format_rational(&eta))
                        });
                    }
                }
            }
        }
        let mut rng = ctx.rng(100 + k as u64);
        let pairs = tuples::<2>(space.len(), ctx.cfg.exhaustive_budget, ctx.cfg.samples, &mut rng);
        for &(eta, eta_h) in &etas {
            for &(eta2, eta2_h) in &etas {
                let eps0 = two * ts.alpha + eta + eta2;
                let eps = eps0 + ctx.delta;
                let (e0_h, e0x2_h) = (space.floor_half_units(eps0), space.floor_half_units(two * eps0));
                let (e_h, ex2_h) = (space.floor_half_units(eps), space.floor_half_units(two * eps));
                for &[x, x2] in &pairs {
                    let p = project_h(space, x, &ts.set, eta_h);
                    let p2 = project_h(space, x2, &ts.set, eta2_h);
                    let gap_h = 2 * (space.units(x, x2) - space.units(x, p) - space.units(x2, p2));
                    dist.observe_exact(
                        space,
                        2 * space.units(p, p2),
                        (gap_h + e0x2_h).max(e0_h),
                        (gap_h + ex2_h).max(e_h),
                        || {
                            let gap = space.to_length(gap_h) / two;
                            ((gap + two * eps0).max(eps0), (gap + two * eps).max(eps))
                        },
                        || format!("Y#{k} x={} x′={} p={} p′={}", ctx.name(x), ctx.name(x2), ctx.name(p), ctx.name(p2)),
                    );
                }
            }
        }
    }
    Ok((gro.finish(), dist.finish()))
}

fn neighborhoods(ctx: &Ctx, subsets: &[TestSubset]) -> Result<Check> {
    let space = ctx.space;
    let two_delta = Rational::from_integer(2) * ctx.delta;
    let mut acc = Acc::new("neighborhood_quasiconvex", two_delta);
    let b = Bound::new(space, Rational::from_integer(0), two_delta);
    for (k, ts) in subsets.iter().enumerate() {
        for (j, radius) in [ts.alpha, ts.alpha + space.max_edge()].into_iter().enumerate() {
            let nb = neighborhood(space, &ts.set, radius)?;
            let xs = ctx.outer_points((nb.len() as u64).pow(2), 200 + 2 * k as u64 + j as u64);
            let (worst, wit) = defect_over(space, &nb, &xs);
            acc.checked += xs.len() as u64 - 1;
            acc.observe(space, worst, &b, || witness3(ctx, k, "A", &radius, wit));
        }
    }
    Ok(acc.finish())
}

fn witness3(ctx: &Ctx, k: usize, label: &str, r: &Rational, wit: Option<(usize, usize, usize)>) -> String {
    match wit {
        Some((x, y, y2)) => format!(
            "Y#{k} {label}={} x={} y={} y′={}",
            format_rational(r),
            ctx.name(x),
            ctx.name(y),
            ctx.name(y2)
        ),
        None => format!("Y#{k}"),
    }
}

fn hulls(ctx: &Ctx, subsets: &[TestSubset]) -> Result<(Check, Check)> {
    let space = ctx.space;
    let three = Rational::from_integer(3);
    let six_delta = Rational::from_integer(6) * ctx.delta;
    let mut qc = Acc::new("hull_quasiconvex", six_delta + ctx.hull_extra);
    let mut gro = Acc::new("hull_gromov_product", three * ctx.delta + ctx.hull_extra);
    let qb = Bound::new(space, Rational::from_integer(0), six_delta + ctx.hull_extra);
    let mut hs = Vec::with_capacity(subsets.len());
    for (k, ts) in subsets.iter().enumerate() {
        let h = hull(space, &ts.set, ctx.delta)?;
        let xs = ctx.outer_points((h.len() as u64).pow(2), 300 + k as u64);
        let (worst, wit) = defect_over(space, &h, &xs);
        qc.checked += xs.len() as u64 - 1;
        qc.observe(space, worst, &qb, || witness3(ctx, k, "slack", &ctx.delta, wit));
        hs.push(h);
    }
    let allowance = three * ctx.delta + ctx.hull_extra;
    let allowance_h = space.floor_half_units(allowance);
    for k in 0..subsets.len() {
        let l = (k + 1) % subsets.len();
        let (y, z) = (subsets[k].set.members(), subsets[l].set.members());
        let (hy, hz) = (hs[k].members(), hs[l].members());
        for x in ctx.outer_points((hy.len() * hz.len()) as u64, 400 + k as u64) {
            let alpha_h = y
                .iter()
                .flat_map(|&a| z.iter().map(move |&b| (a, b)))
                .map(|(a, b)| gp2(space, a, b, x))
                .max()
                .unwrap_or(0);
            let (mut worst, mut at) = (i64::MIN, (x, x));
            for &a in hy {
                for &b in hz {
                    let v = gp2(space, a, b, x);
                    if v > worst {
                        worst = v;
                        at = (a, b);
                    }
                }
            }
            gro.observe_exact(
                space,
                worst - alpha_h,
                0,
                allowance_h,
                || (Rational::from_integer(0), allowance),
                || format!("Y#{k} Z#{l} x={} y={} z={}", ctx.name(x), ctx.name(at.0), ctx.name(at.1)),
            );
        }
    }
    Ok((qc.finish(), gro.finish()))
}

fn stability(ctx: &Ctx) -> Result<(Check, Check)> {
    let space = ctx.space;
    let n = space.len();
    let l = ctx.cfg.chain_l.unwrap_or(ctx.delta);
    let big_l = ctx
        .cfg
        .stability_length
        .unwrap_or(Rational::from_integer(ctx.cfg.stability_ls as i128) * ctx.delta);
    if !is_nonnegative(&l) || !is_nonnegative(&big_l) {
        return Err(Error::input("chain constants must be non-negative"));
    }
    let two = Rational::from_integer(2);
    let five = Rational::from_integer(5) * ctx.delta;
    let eight = Rational::from_integer(8) * ctx.delta;
    let mut along = Acc::new("chain_gromov_product", five);
    let mut near = Acc::new("chain_projection", eight);
    let mut rng = ctx.rng(3);
    let mut chains: Vec<Vec<usize>> = Vec::new();
    for c in 0..ctx.cfg.chains {
        let path = geodesic(space, rng.gen_range(0..n), rng.gen_range(0..n));
        let stride = 1 + c % 3;
        let mut chain: Vec<usize> = path.iter().copied().step_by(stride).collect();
        if chain.last() != path.last() {
            chain.push(*path.last().expect("paths are non-empty"));
        }
        chains.push(chain);
    }
    for c in 0..ctx.cfg.random_chains {
        chains.push((0..3 + c % 4).map(|_| rng.gen_range(0..n)).collect());
    }
    for chain in &ctx.cfg.extra_chains {
        for &p in chain {
            space.check_point(p)?;
        }
        chains.push(chain.clone());
    }
    let hyp_h = space.floor_half_units(l);
    let step_b = Bound::new(space, l, five);
    let proj_b = Bound::new(space, two * l, eight);
    for (c, chain) in chains.iter().enumerate() {
        if chain.len() < 2 {
            along.skipped += 1;
            near.skipped += 1;
            continue;
        }
        let m = chain.len() - 1;
        let bent = (1..m).any(|i| gp2(space, chain[i - 1], chain[i + 1], chain[i]) > hyp_h);
        let short = (1..m.saturating_sub(1)).any(|i| space.dist(chain[i], chain[i + 1]) < big_l);
        if bent || short {
            along.skipped += 1;
            near.skipped += 1;
            continue;
        }
        let (x0, xm) = (chain[0], chain[m]);
        for &xi in chain {
            along.observe(space, gp2(space, x0, xm, xi), &step_b, || {
                format!("chain#{c} x_i={}", ctx.name(xi))
            });
        }
        for p in ctx.outer_points(m as u64, 500 + c as u64) {
            let best = (0..m).map(|i| gp2(space, chain[i + 1], chain[i], p)).min().expect("m ≥ 1");
            near.observe(space, best - gp2(space, x0, xm, p), &proj_b, || {
                format!("chain#{c} p={}", ctx.name(p))
            });
        }
    }
    Ok((along.finish(), near.finish()))
}
