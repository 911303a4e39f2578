//! The experiment configuration file and the objects built from it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{Factor, Filling, Presentation};
use crate::metric::SuiteConfig;
use crate::rational::{format_rational, int, Rational, Q};
use crate::rotation::{AxiomConfig, RotationFamily};
use crate::tree::{TreeKind, TruncatedTree};
use crate::windmill::{CertificationBounds, WindmillConfig};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct PresentationConfig {
    /// `"Z"` or `"Z/m"` per factor.
    pub factors: Vec<String>,
    /// Subgroup index kᵢ per factor.
    pub fillings: Vec<u64>,
}

impl Default for PresentationConfig {
    fn default() -> Self {
        PresentationConfig {
            factors: vec!["Z".into(), "Z".into()],
            fillings: vec![3, 3],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Caps {
    pub ball_size: usize,
    pub closure_syllables: usize,
    pub closure_exponent: i64,
    pub stage_cap: usize,
    pub base_power_cap: i64,
    pub certificate_syllables: usize,
    pub certificate_exponent: i64,
    pub exhaustive_slots: usize,
    /// Word length of the kernel elements tried when reducing a preimage.
    pub search_len: u64,
    /// Word length of the kernel elements checked for fixed non-apex vertices.
    pub proper_len: u64,
    /// Word length of the elements in the translation and invariance checks.
    pub lemma_word_len: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            ball_size: 8_000,
            closure_syllables: 4,
            closure_exponent: 2,
            stage_cap: 200,
            base_power_cap: 6,
            certificate_syllables: 4,
            certificate_exponent: 3,
            exhaustive_slots: 4,
            search_len: 6,
            proper_len: 8,
            lemma_word_len: 3,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Samples {
    pub metric: u64,
    pub axioms: usize,
    pub windmill: usize,
    pub certificate: u64,
    pub translation: usize,
}

impl Default for Samples {
    fn default() -> Self {
        Samples {
            metric: 20_000,
            axioms: 64,
            windmill: 64,
            certificate: 20_000,
            translation: 64,
        }
    }
}

/// A ledger entry supplied by hand, replacing the computed kernel ledger
/// when certifying in `verify`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FixtureFactor {
    pub factor: usize,
    pub conjugator: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub presentation: PresentationConfig,
    pub radius: u64,
    pub edge_scale: Q,
    pub delta: Q,
    pub sigma: Q,
    pub seed: u64,
    pub caps: Caps,
    pub samples: Samples,
    /// Word radius of the quotient ball whose hyperbolicity is measured.
    pub quotient_radius: u64,
    /// Minimal chain step in units of δ for the stability checks; must exceed 500.
    pub stability_ls: u64,
    /// Element whose reduced preimage `verify` runs.
    pub element: String,
    pub ledger_fixture: Option<Vec<FixtureFactor>>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            presentation: PresentationConfig::default(),
            radius: 6,
            edge_scale: Q(int(1)),
            delta: Q(Rational::new(1, 100_000_000_000)),
            sigma: Q(int(2)),
            seed: 0,
            caps: Caps::default(),
            samples: Samples::default(),
            quotient_radius: 3,
            stability_ls: 501,
            element: "a b".into(),
            ledger_fixture: None,
        }
    }
}

fn parse_factor(s: &str) -> Result<Factor> {
    let s = s.trim();
    if s == "Z" {
        return Ok(Factor::Infinite);
    }
    let m = s
        .strip_prefix("Z/")
        .and_then(|m| m.trim().parse::<u64>().ok())
        .ok_or_else(|| Error::input(format!("factor {s:?} is neither \"Z\" nor \"Z/m\"")))?;
    Ok(Factor::Finite { m })
}

/// Everything an experiment needs, built once from the configuration.
pub struct Model {
    pub pres: Presentation,
    pub filling: Filling,
    pub tree: TruncatedTree,
    pub family: RotationFamily,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| Error::input(format!("config line {} column {}: {e}", e.line(), e.column())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let zero = int(0);
        if self.delta.0 <= zero {
            return Err(Error::input(format!("delta must be positive, got {}", format_rational(&self.delta.0))));
        }
        if self.sigma.0 <= zero {
            return Err(Error::input("sigma must be positive"));
        }
        if self.edge_scale.0 <= zero {
            return Err(Error::input("edge_scale must be positive"));
        }
        if self.stability_ls <= 500 {
            return Err(Error::input(format!("stability_ls must exceed 500, got {}", self.stability_ls)));
        }
        let c = &self.caps;
        let positive = [
            ("radius", self.radius as i128),
            ("quotient_radius", self.quotient_radius as i128),
            ("caps.ball_size", c.ball_size as i128),
            ("caps.closure_syllables", c.closure_syllables as i128),
            ("caps.closure_exponent", c.closure_exponent as i128),
            ("caps.stage_cap", c.stage_cap as i128),
            ("caps.base_power_cap", c.base_power_cap as i128),
            ("caps.certificate_syllables", c.certificate_syllables as i128),
            ("caps.certificate_exponent", c.certificate_exponent as i128),
            ("caps.exhaustive_slots", c.exhaustive_slots as i128),
            ("caps.search_len", c.search_len as i128),
            ("caps.proper_len", c.proper_len as i128),
            ("caps.lemma_word_len", c.lemma_word_len as i128),
            ("samples.axioms", self.samples.axioms as i128),
            ("samples.windmill", self.samples.windmill as i128),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v <= 0) {
            return Err(Error::input(format!("{name} must be positive")));
        }
        Ok(())
    }

    pub fn presentation(&self) -> Result<Presentation> {
        let factors = self.presentation.factors.iter().map(|s| parse_factor(s)).collect::<Result<_>>()?;
        Presentation::new(factors)
    }

    /// Builds the presentation, the filling, the subdivided ball and its rotation family.
    pub fn model(&self) -> Result<Model> {
        let pres = self.presentation()?;
        let filling = Filling::new(&pres, self.presentation.fillings.clone())?;
        let tree = TruncatedTree::build_capped(&pres, self.radius, self.edge_scale.0, TreeKind::Subdivided, self.caps.ball_size)?;
        let family = RotationFamily::build(&tree, &filling, self.sigma.0)?;
        Ok(Model {
            pres,
            filling,
            tree,
            family,
        })
    }

    pub fn windmill(&self) -> WindmillConfig {
        WindmillConfig {
            closure_syllables: self.caps.closure_syllables,
            closure_exponent: self.caps.closure_exponent,
            stage_cap: self.caps.stage_cap,
            samples: self.samples.windmill,
            seed: self.seed,
            base_power_cap: self.caps.base_power_cap,
            delta: self.delta,
        }
    }

    pub fn bounds(&self) -> CertificationBounds {
        CertificationBounds {
            max_syllables: self.caps.certificate_syllables,
            max_exponent: self.caps.certificate_exponent,
            exhaustive_slots: self.caps.exhaustive_slots,
            samples: self.samples.certificate,
        }
    }

    pub fn axioms(&self) -> AxiomConfig {
        AxiomConfig {
            invariance_word_len: self.caps.lemma_word_len,
            samples: self.samples.axioms,
            seed: self.seed,
            ..AxiomConfig::default()
        }
    }

    pub fn suite(&self) -> SuiteConfig {
        SuiteConfig {
            samples: self.samples.metric,
            seed: self.seed,
            stability_ls: self.stability_ls,
            ..SuiteConfig::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_and_validate() {
        let cfg = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_fields() {
        let code = |s: &str| ExperimentConfig::from_json(s).unwrap_err().exit_code();
        assert_eq!(code(r#"{"delta": 0}"#), 2);
        assert_eq!(code(r#"{"delta": "-1/3"}"#), 2);
        assert_eq!(code(r#"{"stability_ls": 500}"#), 2);
        assert_eq!(code(r#"{"radius": 0}"#), 2);
        assert_eq!(code(r#"{"colour": 1}"#), 2);
        assert_eq!(code("{\n\"radius\": }"), 2);
        let cfg = ExperimentConfig::from_json(r#"{"presentation": {"factors": ["Z", "Q"], "fillings": [3, 3]}}"#).unwrap();
        assert_eq!(cfg.presentation().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn builds_the_default_model() {
        let mut cfg = ExperimentConfig::default();
        cfg.radius = 3;
        let m = cfg.model().unwrap();
        assert_eq!(m.tree.radius(), 3);
        assert_eq!(m.family.sigma(), int(2));
        cfg.presentation.factors = vec!["Z/2".into(), "Z/3".into()];
        cfg.presentation.fillings = vec![2, 3];
        assert_eq!(cfg.model().err().unwrap().exit_code(), 3);
    }
}
