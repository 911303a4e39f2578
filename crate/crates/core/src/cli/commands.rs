//! The four subcommands. Each returns the JSON documents it produced and
//! the process exit code.

use serde_json::{json, Value};

use super::config::{ExperimentConfig, Model};
use super::matrix::{aggregate, error_check, Matrix};
use crate::error::{Error, Result};
use crate::group::{image_order, Element, GroupWord};
use crate::metric::{hyperbolicity_delta, verify_metric_lemma_suite, DeltaMode, FiniteMetricSpace, EXACT_POINT_CAP};
use crate::oracle::certify_injectivity;
use crate::report::{Check, Report};
use crate::rotation::{proper_action_off_apices, quotient_hyperbolicity, verify_axioms, verify_rotation_lemmas};
use crate::tree::{verify_translation_lemmas, Vertex};
use crate::windmill::{kernel_structure, preimage_structure, FreeFactorLedger, LedgerEntry, StructureRun};

/// Exit code when a hypothesis check on the configured model fails.
pub const EXIT_HYPOTHESIS: i32 = 3;
/// Exit code when a conclusion check fails although every hypothesis held.
pub const EXIT_CONCLUSION: i32 = 1;

pub struct CommandOutput {
    pub report: Value,
    pub trace: Option<Value>,
    pub dot: Option<String>,
    pub exit: i32,
}

fn status(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

pub fn cmd_delta(path: &std::path::Path, samples: u64, seed: u64) -> Result<CommandOutput> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::input(format!("cannot read {}: {e}", path.display())))?;
    let space = FiniteMetricSpace::from_json(&text)?;
    let mode = if space.len() <= EXACT_POINT_CAP {
        DeltaMode::Exact
    } else {
        DeltaMode::Sampled { count: samples, seed }
    };
    let h = hyperbolicity_delta(&space, mode)?;
    Ok(CommandOutput {
        report: json!({
            "command": "delta",
            "points": space.len(),
            "is_tree": space.is_tree(),
            "hyperbolicity": h,
        }),
        trace: None,
        dot: None,
        exit: 0,
    })
}

fn model_json(cfg: &ExperimentConfig, m: &Model) -> Value {
    json!({
        "group": m.pres.describe(),
        "fillings": m.filling.indices(),
        "radius": m.tree.radius(),
        "vertices": m.tree.len(),
        "apices": m.family.pairs().len(),
        "delta": cfg.delta,
        "sigma": cfg.sigma,
    })
}

fn structure_json(s: &StructureRun, m: &Model) -> Value {
    let decompositions = aggregate("decompositions", &s.decomposition_reports);
    json!({
        "stop": s.run.stop,
        "stages": s.run.last().stage,
        "windmill_checks": aggregate("windmill stages", &s.run.reports),
        "decomposition_checks": decompositions,
        "ledger": s.run.last().ledger_json(&m.tree, &m.family),
        "certificate": s.certificate,
        "status": status(s.all_pass()),
    })
}

fn dot(m: &Model, s: &StructureRun) -> String {
    m.tree.to_dot(Some(&s.run.states[0].w.to_point_subset()))
}

/// Rejects fillings with trivial quotient and runs the rotation-family axioms.
fn hypotheses(cfg: &ExperimentConfig, m: &Model) -> Result<Report> {
    if m.filling.kills_everything() {
        return Err(Error::precondition("every filling index is 1, so each rotation group is a whole factor and the filled group is trivial"));
    }
    let mut r = verify_axioms(&m.family, &m.tree, &cfg.axioms())?;
    r.title = "rotation family".into();
    Ok(r)
}

fn hypothesis_failure(command: &str, cfg: &ExperimentConfig, m: &Model, axioms: Report) -> CommandOutput {
    CommandOutput {
        report: json!({
            "command": command,
            "model": model_json(cfg, m),
            "axioms": axioms,
            "status": "fail",
            "failed": axioms.failures().map(|c| c.name.clone()).collect::<Vec<_>>(),
        }),
        trace: None,
        dot: None,
        exit: EXIT_HYPOTHESIS,
    }
}

pub fn cmd_fill(cfg: &ExperimentConfig) -> Result<CommandOutput> {
    let m = cfg.model()?;
    let axioms = hypotheses(cfg, &m)?;
    if !axioms.all_pass() {
        return Ok(hypothesis_failure("fill", cfg, &m, axioms));
    }
    let s = kernel_structure(&m.tree, &m.family, &cfg.windmill(), &cfg.bounds())?;
    let q = quotient_hyperbolicity(&m.tree, &m.filling, cfg.quotient_radius, cfg.delta.0)?;
    let ok = s.all_pass() && q.check.passed();
    Ok(CommandOutput {
        report: json!({
            "command": "fill",
            "model": model_json(cfg, &m),
            "axioms": axioms,
            "kernel": structure_json(&s, &m),
            "quotient": q,
            "status": status(ok),
        }),
        trace: Some(s.run.trace_json(&m.tree)),
        dot: Some(dot(&m, &s)),
        exit: if ok { 0 } else { EXIT_CONCLUSION },
    })
}

pub fn parse_element(text: &str, m: &Model) -> Result<Element> {
    Ok(Element::from_word(&GroupWord::parse(text, &m.pres)?, &m.pres))
}

pub fn cmd_preimage(cfg: &ExperimentConfig, element: &str) -> Result<CommandOutput> {
    let m = cfg.model()?;
    let g_bar = parse_element(element, &m)?;
    let axioms = hypotheses(cfg, &m)?;
    if !axioms.all_pass() {
        return Ok(hypothesis_failure("preimage", cfg, &m, axioms));
    }
    let s = preimage_structure(&g_bar, &m.tree, &m.family, cfg.caps.search_len, &cfg.windmill(), &cfg.bounds())?;
    let pre = s.preimage.as_ref().ok_or_else(|| Error::Internal("preimage run without a preimage".into()))?;
    let ok = s.all_pass() && pre.certificate.passed();
    Ok(CommandOutput {
        report: json!({
            "command": "preimage",
            "model": model_json(cfg, &m),
            "element": g_bar.display(&m.pres).to_string(),
            "image_order": image_order(&g_bar, &m.filling).to_string(),
            "preimage": {
                "word": pre.word,
                "translation_length": pre.translation_length,
                "candidates": pre.candidates,
                "reduced_axis": pre.certificate,
            },
            "axioms": axioms,
            "structure": structure_json(&s, &m),
            "status": status(ok),
        }),
        trace: Some(s.run.trace_json(&m.tree)),
        dot: Some(dot(&m, &s)),
        exit: if ok { 0 } else { EXIT_CONCLUSION },
    })
}

fn record(matrix: &mut Matrix, suite: &str, name: &str, r: Result<Report>) {
    match r {
        Ok(r) => matrix.add(suite, r),
        Err(e) => matrix.add_check(suite, error_check(name, &e)),
    }
}

fn fixture_ledger(cfg: &ExperimentConfig, m: &Model) -> Result<Option<FreeFactorLedger>> {
    let Some(fixture) = &cfg.ledger_fixture else { return Ok(None) };
    let mut entries = Vec::new();
    for f in fixture {
        if f.factor >= m.pres.rank() {
            return Err(Error::input(format!("ledger fixture names factor {} of {}", f.factor, m.pres.rank())));
        }
        let t = parse_element(&f.conjugator, m)?;
        let apex = m.tree.index_of(&Vertex::coset(f.factor, &t)).unwrap_or(usize::MAX);
        entries.push(LedgerEntry {
            factor: f.factor,
            conjugator: t,
            apex,
            stage: 0,
        });
    }
    Ok(Some(FreeFactorLedger { base: None, entries }))
}

fn structure_rows(matrix: &mut Matrix, suite: &str, s: &StructureRun) {
    matrix.add(suite, aggregate(suite, &s.run.reports));
    matrix.add(suite, aggregate(suite, &s.decomposition_reports));
}

fn certificate_check(name: &str, c: &crate::oracle::Certificate) -> Check {
    Check::simple(name, c.passed(), c.words_checked + c.sampled_words, c.counterexample.clone())
}

pub fn cmd_verify(cfg: &ExperimentConfig) -> Result<CommandOutput> {
    let m = cfg.model()?;
    let delta = cfg.delta.0;
    let wcfg = cfg.windmill();
    let bounds = cfg.bounds();
    let mut matrix = Matrix::default();

    record(&mut matrix, "metric_lemmas", "metric_suite", verify_metric_lemma_suite(m.tree.space(), delta, &cfg.suite()));
    record(
        &mut matrix,
        "translation_lemmas",
        "translation_suite",
        verify_translation_lemmas(&m.tree, delta, cfg.caps.lemma_word_len, cfg.samples.translation, cfg.seed),
    );
    record(&mut matrix, "rotation_axioms", "rotation_axioms", hypotheses(cfg, &m));
    record(&mut matrix, "rotation_lemmas", "rotation_lemmas", verify_rotation_lemmas(&m.family, &m.tree, delta, &cfg.axioms()));
    match proper_action_off_apices(&m.tree, &m.filling, cfg.caps.proper_len) {
        Ok(c) => matrix.add_check("kernel_action", c),
        Err(e) => matrix.add_check("kernel_action", error_check("proper_action_off_apices", &e)),
    }
    match quotient_hyperbolicity(&m.tree, &m.filling, cfg.quotient_radius, delta) {
        Ok(q) => matrix.add_check("kernel_action", q.check),
        Err(e) => matrix.add_check("kernel_action", error_check("quotient_hyperbolicity", &e)),
    }

    let mut trace = None;
    let mut highlight = None;
    match kernel_structure(&m.tree, &m.family, &wcfg, &bounds) {
        Err(e) => matrix.add_check("kernel_windmill", error_check("kernel_windmill_run", &e)),
        Ok(s) => {
            structure_rows(&mut matrix, "kernel_windmill", &s);
            let cert = match fixture_ledger(cfg, &m)? {
                None => certificate_check("ledger_injectivity", &s.certificate),
                Some(ledger) => {
                    let c = ledger.formal_product(&m.pres, &m.filling).and_then(|p| {
                        certify_injectivity(&p, &m.pres, bounds.max_syllables, bounds.max_exponent, bounds.exhaustive_slots, bounds.samples, cfg.seed)
                    });
                    match c {
                        Ok(c) => certificate_check("ledger_injectivity", &c),
                        Err(e) => error_check("ledger_injectivity", &e),
                    }
                }
            };
            matrix.add_check("kernel_windmill", cert);
            let first = s.run.trace_json(&m.tree).to_string();
            let replay = kernel_structure(&m.tree, &m.family, &wcfg, &bounds).map(|r| r.run.trace_json(&m.tree).to_string());
            let same = replay.as_ref().is_ok_and(|r| *r == first);
            matrix.add_check(
                "kernel_windmill",
                Check::simple("replay_determinism", same, 1, (!same).then(|| "a second run produced a different trace".to_string())),
            );
            highlight = Some(s.run.states[0].w.to_point_subset());
            trace = Some(s.run.trace_json(&m.tree));
        }
    }

    match parse_element(&cfg.element, &m).and_then(|g| preimage_structure(&g, &m.tree, &m.family, cfg.caps.search_len, &wcfg, &bounds)) {
        Err(e) => matrix.add_check("preimage_windmill", error_check("preimage_windmill_run", &e)),
        Ok(s) => {
            if let Some(p) = &s.preimage {
                matrix.add_check("preimage_windmill", p.certificate.clone());
            }
            structure_rows(&mut matrix, "preimage_windmill", &s);
            matrix.add_check("preimage_windmill", certificate_check("ledger_injectivity", &s.certificate));
        }
    }

    let ok = matrix.all_pass();
    Ok(CommandOutput {
        report: json!({
            "command": "verify",
            "model": model_json(cfg, &m),
            "element": cfg.element,
            "failed": matrix.failures(),
            "matrix": matrix.rows,
            "status": status(ok),
        }),
        trace,
        dot: Some(m.tree.to_dot(highlight.as_ref())),
        exit: 0,
    })
}
