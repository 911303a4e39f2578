use super::*;
use crate::group::{Element, Filling, GroupWord, Presentation};
use crate::rational::int;
use crate::report::Status;
use crate::rotation::RotationFamily;
use crate::tree::{Axis, TreeKind, TruncatedTree};
use proptest::prelude::*;

fn setup(radius: u64) -> (Presentation, TruncatedTree, RotationFamily) {
    let p = Presentation::free(2).unwrap();
    let t = TruncatedTree::build(&p, radius, int(1), TreeKind::Subdivided).unwrap();
    let f = Filling::new(&p, vec![3, 3]).unwrap();
    let fam = RotationFamily::build(&t, &f, int(2)).unwrap();
    (p, t, fam)
}

fn el(s: &str, p: &Presentation) -> Element {
    Element::from_word(&GroupWord::parse(s, p).unwrap(), p)
}

fn start(t: &TruncatedTree, fam: &RotationFamily, v: usize) -> WindmillState {
    let y = MetricSubtree::from_vertices(t, [v]).unwrap();
    init_windmill(t, fam, y, Vec::new(), &WindmillConfig::default()).unwrap()
}

fn grow_n(mut s: WindmillState, n: usize, t: &TruncatedTree, fam: &RotationFamily) -> (WindmillState, Vec<StageRecord>) {
    let mut recs = Vec::new();
    for _ in 0..n {
        let (next, rec) = grow(&s, t, fam, &WindmillConfig::default()).unwrap();
        s = next;
        recs.push(rec);
    }
    (s, recs)
}

fn labels(t: &TruncatedTree, xs: &[usize]) -> Vec<String> {
    xs.iter().map(|&x| t.label(x).to_string()).collect()
}

#[test]
fn initial_states() {
    let (p, t, fam) = setup(3);
    let cfg = WindmillConfig::default();
    let g = el("a b", &p);
    let axis = Axis::build(&t, &g, cfg.delta.0).unwrap();
    let y = MetricSubtree::from_vertices(&t, axis.cylinder.members().iter().copied()).unwrap();
    let s = init_windmill(&t, &fam, y, vec![g], &cfg).unwrap();
    assert_eq!(s.stage, 0);
    assert!(s.v.is_empty());

    let whole = MetricSubtree::from_vertices(&t, 0..t.len()).unwrap();
    let err = init_windmill(&t, &fam, whole, Vec::new(), &cfg).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    assert!(err.to_string().contains("1<a>"), "{err}");

    let pa = MetricSubtree::from_vertices(&t, [1]).unwrap();
    let err = init_windmill(&t, &fam, pa, vec![el("a^3", &p)], &cfg).unwrap_err();
    assert!(err.to_string().contains("fixes the apex 1<a>"), "{err}");
}

#[test]
fn growth_from_a_base_apex() {
    let (p, t, fam) = setup(3);
    let s0 = start(&t, &fam, 1);
    let (s1, recs) = grow_n(s0, 1, &t, &fam);
    assert_eq!(recs[0].case, GrowthCase::Absorption);
    assert_eq!(labels(&t, &recs[0].a), vec!["1<a>"]);
    assert_eq!(s1.ledger.to_json(&p, fam.filling())["factors"][0]["generator"], "a^3");
    // W is now far from every other apex: pure neighbourhood growth
    let (s2, recs) = grow_n(s1.clone(), 1, &t, &fam);
    assert_eq!(recs[0].case, GrowthCase::Neighborhood);
    assert_eq!(s2.ledger, s1.ledger);
    let (s8, recs) = grow_n(s1, 7, &t, &fam);
    let last = recs.last().unwrap();
    assert_eq!(last.case, GrowthCase::Absorption);
    let reps: Vec<String> = last.new_factors.iter().map(|e| e.conjugator.display(&p).to_string()).collect();
    assert_eq!(reps, vec!["1", "a", "a^-1"]);
    assert!(last.a.len() > 3);
    assert_eq!(s8.ledger.entries.len(), 4);
}

#[test]
fn stages_verify_and_forced_failure() {
    let (_, t, fam) = setup(3);
    let cfg = WindmillConfig::default();
    let (s, recs) = grow_n(start(&t, &fam, 1), 8, &t, &fam);
    let report = verify_windmill(&s, recs.last(), &t, &fam, &cfg).unwrap();
    assert!(report.all_pass(), "{:?}", report.failures().collect::<Vec<_>>());
    assert_eq!(report.get("apices_near_hull").unwrap().status, Status::Pass);
    for (k, rec) in recs.iter().enumerate().filter(|(_, r)| r.case == GrowthCase::Absorption) {
        assert!(rec.saturated, "stage {k}");
    }
    let mut broken = s.clone();
    let dropped = *broken.v.iter().next().unwrap();
    broken.v.remove(&dropped);
    let report = verify_windmill(&broken, None, &t, &fam, &cfg).unwrap();
    let w4 = report.get("windmill_free_stabilizers").unwrap();
    assert_eq!(w4.status, Status::Fail);
    assert!(w4.witness.as_deref().unwrap().contains(t.label(dropped)), "{:?}", w4.witness);
}

#[test]
fn decompositions() {
    let (p, t, fam) = setup(3);
    // from the element vertex [1]: two neighbourhood steps, then A = {P_a, P_b}
    let (s3, recs) = grow_n(start(&t, &fam, 0), 3, &t, &fam);
    assert_eq!(recs[0].case, GrowthCase::Neighborhood);
    assert_eq!(recs[1].case, GrowthCase::Neighborhood);
    assert_eq!(labels(&t, &recs[2].a), vec!["1<a>", "1<b>"]);
    let d = decompose(&el("a^3 b^3", &p), &s3, &t, &fam).unwrap();
    assert_eq!(d.m, 2);
    assert!(d.tail.is_identity());
    assert_eq!(labels(&t, &d.syllables.iter().map(|s| s.apex).collect::<Vec<_>>()), vec!["1<a>", "1<b>"]);
    assert_eq!(decompose(&Element::identity(), &s3, &t, &fam).unwrap().m, 0);
    assert_eq!(decompose(&el("a", &p), &s3, &t, &fam).unwrap_err().exit_code(), 3);

    let cfg = WindmillConfig::default();
    let run = run_windmill(&t, &fam, start(&t, &fam, 1), &cfg).unwrap();
    let last = run.last();
    let d = decompose(&el("a^3 b a^3 b^-1 a^3", &p), last, &t, &fam).unwrap();
    assert_eq!(d.m, 3);
    assert_eq!(t.label(d.syllables[1].apex), "b<a>");
    assert_eq!(d.evaluate(&p), el("a^3 b a^3 b^-1 a^3", &p));

    let case = |w: &str| trichotomy(&el(w, &p), last, &t, &fam, &cfg).unwrap();
    assert_eq!(case("1").case, TrichotomyCase::InBase);
    assert!(matches!(case("a^3").case, TrichotomyCase::Rotation { .. }));
    let c = case("a^3 b^3");
    assert_eq!(c.case, TrichotomyCase::Displacement);
    assert_eq!(c.holds, [false, false, true]);
    assert!(c.check.passed());
}

#[test]
fn reduced_preimages() {
    let (p, t, fam) = setup(3);
    let cfg = WindmillConfig::default();
    assert_eq!(find_reduced_preimage(&el("a b", &p), &t, &fam, 6, &cfg).unwrap().word, "a b");
    assert_eq!(find_reduced_preimage(&el("a^4 b", &p), &t, &fam, 6, &cfg).unwrap().word, "a b");
    let err = find_reduced_preimage(&el("a", &p), &t, &fam, 6, &cfg).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    assert!(err.to_string().contains("order 3"));
    assert!(find_reduced_preimage(&el("a^3", &p), &t, &fam, 6, &cfg).unwrap_err().to_string().contains("order 1"));
    let f = Filling::new(&p, vec![1, 1]).unwrap();
    let full = RotationFamily::build(&t, &f, int(2)).unwrap();
    assert_eq!(find_reduced_preimage(&el("a b", &p), &t, &full, 6, &cfg).unwrap_err().exit_code(), 3);
}

#[test]
fn full_runs_certify_and_replay() {
    let (p, t, fam) = setup(3);
    let cfg = WindmillConfig::default();
    let bounds = CertificationBounds {
        samples: 200,
        ..Default::default()
    };
    let k = kernel_structure(&t, &fam, &cfg, &bounds).unwrap();
    assert!(k.all_pass());
    assert_eq!(k.run.stop, StopReason::BallExhausted);
    let again = kernel_structure(&t, &fam, &cfg, &bounds).unwrap();
    assert_eq!(k.run.trace_json(&t).to_string(), again.run.trace_json(&t).to_string());

    let pre = preimage_structure(&el("a b", &p), &t, &fam, 6, &cfg, &bounds).unwrap();
    assert!(pre.all_pass());
    let ledger = pre.run.last().ledger_json(&t, &fam);
    assert_eq!(ledger["base"], "<a b>");
    let gens: Vec<&str> = ledger["factors"].as_array().unwrap().iter().map(|f| f["generator"].as_str().unwrap()).collect();
    assert!(gens.contains(&"a^3") && gens.contains(&"b^3"));
    assert!(pre.certificate.passed());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    // peeling recovers the rotation count of any short ledger word
    #[test]
    fn peeling_inverts_evaluation(raw in proptest::collection::vec((0usize..12, -2i64..3), 0..4)) {
        let (p, t, fam) = setup(3);
        let run = run_windmill(&t, &fam, start(&t, &fam, 1), &WindmillConfig::default()).unwrap();
        let last = run.last();
        let product = last.ledger.formal_product(&p, fam.filling()).unwrap();
        let w = product.normalize(&raw).unwrap();
        let g = product.evaluate(&w, &p);
        match decompose(&g, last, &t, &fam) {
            Ok(d) => {
                prop_assert_eq!(d.evaluate(&p), g);
                prop_assert_eq!(d.m, product.rotation_syllables(&w));
                let back = product.normalize(&d.formal_word(last, &p, &fam)).unwrap();
                prop_assert_eq!(back, w);
            }
            Err(e) => prop_assert_eq!(e.exit_code(), 2),
        }
    }
}
