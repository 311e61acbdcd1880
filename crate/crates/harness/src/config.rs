//! Scenario configuration, read from JSON.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use wintrial_core::classic::CoxDesign;
use wintrial_core::datagen::{BinaryGenConfig, ContinuousGenConfig, SubpopMix, SurvivalGenConfig};
use wintrial_core::rules::SurvivalRule;

use crate::error::{config_err, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    Parallel,
    Cr,
    Sed,
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Design::Parallel => "Parallel",
            Design::Cr => "CR",
            Design::Sed => "SED",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeFamily {
    Binary,
    Survival,
    Continuous,
}

/// Analyses in the order they run within a replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    MatchedWr,
    StratUnmatchedWr,
    UnstratUnmatchedWr,
    Cox,
    Obrien,
    Contingency,
}

impl Analysis {
    pub const ALL: [Analysis; 6] = [
        Analysis::MatchedWr,
        Analysis::StratUnmatchedWr,
        Analysis::UnstratUnmatchedWr,
        Analysis::Cox,
        Analysis::Obrien,
        Analysis::Contingency,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Analysis::MatchedWr => "Stratified matched WR",
            Analysis::StratUnmatchedWr => "Stratified unmatched WR",
            Analysis::UnstratUnmatchedWr => "Unstratified unmatched WR",
            Analysis::Cox => "Cox regression",
            Analysis::Obrien => "O'Brien rank-sum test",
            Analysis::Contingency => "Contingency table",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Analysis::MatchedWr => "matched_wr",
            Analysis::StratUnmatchedWr => "strat_unmatched_wr",
            Analysis::UnstratUnmatchedWr => "unstrat_unmatched_wr",
            Analysis::Cox => "cox",
            Analysis::Obrien => "obrien",
            Analysis::Contingency => "contingency",
        }
    }

    fn supports(self, family: OutcomeFamily) -> bool {
        match self {
            Analysis::MatchedWr | Analysis::StratUnmatchedWr | Analysis::UnstratUnmatchedWr => true,
            Analysis::Cox => family == OutcomeFamily::Survival,
            Analysis::Obrien => family != OutcomeFamily::Binary,
            Analysis::Contingency => family == OutcomeFamily::Continuous,
        }
    }
}

impl fmt::Display for Analysis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuousScenario {
    pub effects: ContinuousGenConfig,
    pub mix: SubpopMix,
}

/// Generator parameters; the cohort size always comes from `n_total`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorConfig {
    Binary(BinaryGenConfig),
    Survival(SurvivalGenConfig),
    Continuous(ContinuousScenario),
}

impl GeneratorConfig {
    pub fn family(&self) -> OutcomeFamily {
        match self {
            GeneratorConfig::Binary(_) => OutcomeFamily::Binary,
            GeneratorConfig::Survival(_) => OutcomeFamily::Survival,
            GeneratorConfig::Continuous(_) => OutcomeFamily::Continuous,
        }
    }
}

fn default_c_t() -> f64 {
    0.8
}

/// Improvement and screening cutoffs on `y / y_base`. A missing or null
/// screening cutoff disables that screen: everyone passes the placebo
/// lead-in, or nobody is re-randomized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cutoffs {
    #[serde(default = "default_c_t")]
    pub c_t: f64,
    #[serde(default)]
    pub c_s0: Option<f64>,
    #[serde(default)]
    pub c_s1: Option<f64>,
}

impl Default for Cutoffs {
    fn default() -> Self {
        Cutoffs {
            c_t: default_c_t(),
            c_s0: None,
            c_s1: None,
        }
    }
}

/// What `n_total` counts in an SED trial.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleBasis {
    /// Patients randomized in stage 1; enrolment continues until that many
    /// pass the lead-in.
    #[default]
    Randomized,
    /// Patients enrolled into the lead-in.
    Enrolled,
}

fn default_alpha() -> f64 {
    0.05
}

fn default_reps() -> usize {
    2000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub design: Design,
    pub outcome_family: OutcomeFamily,
    pub generator: GeneratorConfig,
    pub analyses: BTreeSet<Analysis>,
    pub n_total: usize,
    #[serde(default)]
    pub cutoffs: Cutoffs,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_reps")]
    pub reps: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub survival_rule: SurvivalRule,
    #[serde(default)]
    pub sed_sample_basis: SampleBasis,
    #[serde(default)]
    pub cox_design: CoxDesign,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.generator.family() != self.outcome_family {
            return Err(config_err("generator does not match outcome_family"));
        }
        if self.n_total < 4 {
            return Err(config_err("n_total must be at least 4"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(config_err("alpha must lie in (0, 1]"));
        }
        if self.reps == 0 {
            return Err(config_err("reps must be at least 1"));
        }
        if self.analyses.is_empty() {
            return Err(config_err("no analyses requested"));
        }
        for a in &self.analyses {
            if !a.supports(self.outcome_family) {
                return Err(config_err(format!(
                    "{} is not available for the {:?} family",
                    a.key(),
                    self.outcome_family
                )));
            }
        }
        if matches!(self.design, Design::Cr | Design::Sed) && self.outcome_family != OutcomeFamily::Continuous {
            return Err(config_err("CR and SED designs need the continuous family"));
        }
        let c = &self.cutoffs;
        if !(c.c_t > 0.0 && c.c_t.is_finite()) {
            return Err(config_err("c_t must be positive and finite"));
        }
        for v in [c.c_s0, c.c_s1].into_iter().flatten() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config_err("screening cutoffs must be positive and finite, or null"));
            }
        }
        match &self.generator {
            GeneratorConfig::Binary(g) => g.validate()?,
            GeneratorConfig::Survival(g) => {
                let mut g = g.clone();
                g.n = self.n_total;
                g.validate()?
            }
            GeneratorConfig::Continuous(s) => {
                s.effects.validate_effects()?;
                s.mix.validate()?
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn survival_json() -> serde_json::Value {
        serde_json::json!({
            "design": "parallel",
            "outcome_family": "survival",
            "generator": {"survival": {
                "beta_t": 0.0, "beta_in": 0.0, "beta_dhratio": 0.0,
                "beta_cov1": -0.5, "beta_cov2": 0.5
            }},
            "analyses": ["cox", "matched_wr"],
            "n_total": 60,
            "master_seed": 7
        })
    }

    #[test]
    fn parses_with_defaults() {
        let cfg = ScenarioConfig::from_json(&survival_json().to_string()).unwrap();
        assert_eq!(cfg.reps, 2000);
        assert_eq!(cfg.alpha, 0.05);
        assert_eq!(cfg.analyses.iter().next(), Some(&Analysis::MatchedWr));
    }

    #[test]
    fn rejects_unknown_keys() {
        let mut v = survival_json();
        v["colour"] = serde_json::json!("blue");
        assert!(ScenarioConfig::from_json(&v.to_string()).is_err());
        let mut v = survival_json();
        v["generator"]["survival"]["beta_x"] = serde_json::json!(1.0);
        assert!(ScenarioConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn rejects_incompatible_analysis() {
        let mut v = survival_json();
        v["analyses"] = serde_json::json!(["contingency"]);
        let err = ScenarioConfig::from_json(&v.to_string()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let mut v = survival_json();
        v["design"] = serde_json::json!("sed");
        assert!(ScenarioConfig::from_json(&v.to_string()).is_err());
        let mut v = survival_json();
        v["outcome_family"] = serde_json::json!("binary");
        assert!(ScenarioConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn null_cutoff_means_disabled() {
        let c: Cutoffs = serde_json::from_str(r#"{"c_t": 0.8, "c_s0": null, "c_s1": 0.9}"#).unwrap();
        assert_eq!(c.c_s0, None);
        assert_eq!(c.c_s1, Some(0.9));
    }
}
