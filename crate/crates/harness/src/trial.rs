//! One simulated trial: generate the cohort for the configured design, then
//! run every requested analysis on it.

use rand::Rng;
use serde::Serialize;
use wintrial_core::classic::{contingency_from_continuous, cox_fit, obrien_continuous, obrien_survival};
use wintrial_core::datagen::{
    draw_continuous_outcome, draw_enrollee, gen_binary_cohort, gen_survival_cohort, randomize_enrollees,
    ContinuousGenConfig, Enrollee, Subpop,
};
use wintrial_core::pairing::form_matched_pairs;
use wintrial_core::rules::{improvement_score, BinaryPriorityRule, HigherScoreWins, WinningRule};
use wintrial_core::types::{stratify, Arm, N_STRATA};
use wintrial_core::wr::{fs_unmatched_test, matched_wr_test};
use wintrial_core::{BinaryOutcome, ContinuousOutcome, Error as CoreError, PatientRecord, SurvivalOutcome};

use crate::config::{Analysis, Cutoffs, Design, GeneratorConfig, SampleBasis, ScenarioConfig};
use crate::error::{config_err, Result};

/// Enrolment stops with an error after this many lead-in patients per
/// required randomized patient.
pub const MAX_ENROLMENT_FACTOR: usize = 1000;

/// Summary of one analysis on one trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum AnalysisOutcome {
    Done {
        p_value: f64,
        /// Win ratio, hazard ratio or odds ratio; none for O'Brien.
        estimate: Option<f64>,
        ci: Option<(f64, f64)>,
    },
    Degenerate(String),
}

impl AnalysisOutcome {
    pub fn p_value(&self) -> Option<f64> {
        match self {
            AnalysisOutcome::Done { p_value, .. } => Some(*p_value),
            AnalysisOutcome::Degenerate(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub outcomes: Vec<(Analysis, AnalysisOutcome)>,
    /// Patients entering the trial (lead-in included).
    pub enrolled: usize,
    /// Patients in the final analysis set, both stages counted.
    pub analyzed: usize,
    /// Stage-2 patients (SED only).
    pub stage2: usize,
}

pub enum Cohort {
    Binary(Vec<PatientRecord<BinaryOutcome>>),
    Survival(Vec<PatientRecord<SurvivalOutcome>>),
    Continuous(Vec<(PatientRecord<ContinuousOutcome>, Subpop)>),
}

impl Cohort {
    pub fn len(&self) -> usize {
        match self {
            Cohort::Binary(c) => c.len(),
            Cohort::Survival(c) => c.len(),
            Cohort::Continuous(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A generated trial before analysis.
pub struct GeneratedTrial {
    pub cohort: Cohort,
    pub enrolled: usize,
    pub stage2: usize,
}

fn continuous_effects(cfg: &ScenarioConfig) -> Result<(ContinuousGenConfig, wintrial_core::datagen::SubpopMix)> {
    match &cfg.generator {
        GeneratorConfig::Continuous(s) => {
            let mut effects = s.effects.clone();
            effects.n = cfg.n_total;
            Ok((effects, s.mix))
        }
        _ => Err(config_err("design needs a continuous generator")),
    }
}

/// Cohort for a parallel design of any family.
pub fn generate_parallel<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<GeneratedTrial> {
    let cohort = match &cfg.generator {
        GeneratorConfig::Binary(g) => {
            let mut g = g.clone();
            g.n1 = cfg.n_total / 2;
            g.n0 = cfg.n_total - g.n1;
            Cohort::Binary(gen_binary_cohort(&g, rng)?)
        }
        GeneratorConfig::Survival(g) => {
            let mut g = g.clone();
            g.n = cfg.n_total;
            Cohort::Survival(gen_survival_cohort(&g, rng)?)
        }
        GeneratorConfig::Continuous(_) => return generate_cr(cfg, rng),
    };
    Ok(GeneratedTrial {
        enrolled: cohort.len(),
        cohort,
        stage2: 0,
    })
}

/// Single-stage 1:1 randomization of `n_total` patients.
pub fn generate_cr<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<GeneratedTrial> {
    let (effects, mix) = continuous_effects(cfg)?;
    let cohort = wintrial_core::datagen::gen_continuous_cohort(&effects, &mix, rng)?;
    Ok(GeneratedTrial {
        enrolled: cohort.len(),
        cohort: Cohort::Continuous(cohort),
        stage2: 0,
    })
}

fn all_ratios_above(o: &ContinuousOutcome, cutoff: f64) -> bool {
    o.ratios().iter().all(|&r| r > cutoff)
}

/// Placebo lead-in, stage-1 randomization of placebo nonresponders, and
/// stage-2 re-randomization of stage-1 drug responders with fresh outcomes.
/// Stage-2 records get new ids and strata offset by the number of
/// covariate strata, so stratified analyses stratify on stage x covariates.
pub fn generate_sed<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<GeneratedTrial> {
    let (effects, mix) = continuous_effects(cfg)?;
    let Cutoffs { c_s0, c_s1, .. } = cfg.cutoffs;
    let n = cfg.n_total;
    let passes_lead_in = |e: &Enrollee, rng: &mut R| match c_s0 {
        None => true,
        Some(c) => all_ratios_above(&draw_continuous_outcome(&effects, e, Arm::Control, rng), c),
    };

    let mut stage1_pool = Vec::with_capacity(n);
    let mut enrolled = 0usize;
    match cfg.sed_sample_basis {
        SampleBasis::Randomized => {
            while stage1_pool.len() < n {
                if enrolled >= MAX_ENROLMENT_FACTOR * n {
                    return Err(config_err(format!(
                        "lead-in screen passed only {} of {enrolled} enrolled patients",
                        stage1_pool.len()
                    )));
                }
                let e = draw_enrollee(&effects, &mix, enrolled as u32, rng);
                enrolled += 1;
                if passes_lead_in(&e, rng) {
                    stage1_pool.push(e);
                }
            }
        }
        SampleBasis::Enrolled => {
            for id in 0..n {
                let e = draw_enrollee(&effects, &mix, id as u32, rng);
                enrolled += 1;
                if passes_lead_in(&e, rng) {
                    stage1_pool.push(e);
                }
            }
        }
    }

    let stage1 = randomize_enrollees(&effects, &stage1_pool, rng);
    let responders: Vec<Enrollee> = match c_s1 {
        None => Vec::new(),
        Some(c) => stage1
            .iter()
            .filter(|(p, _)| p.arm.is_treatment() && !all_ratios_above(&p.outcome, c))
            .map(|(p, subpop)| Enrollee {
                id: enrolled as u32 + p.id,
                covariates: p.covariates,
                baseline: p.outcome.baseline,
                subpop: *subpop,
            })
            .collect(),
    };
    let stage2: Vec<_> = randomize_enrollees(&effects, &responders, rng)
        .into_iter()
        .map(|(p, s)| {
            let k = N_STRATA + stratify(p.covariates);
            (p.with_stratum(k), s)
        })
        .collect();
    let stage2_len = stage2.len();
    let mut cohort = stage1;
    cohort.extend(stage2);
    Ok(GeneratedTrial {
        cohort: Cohort::Continuous(cohort),
        enrolled,
        stage2: stage2_len,
    })
}

pub fn generate<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<GeneratedTrial> {
    match cfg.design {
        Design::Parallel => generate_parallel(cfg, rng),
        Design::Cr => generate_cr(cfg, rng),
        Design::Sed => generate_sed(cfg, rng),
    }
}

fn settle<T>(r: std::result::Result<T, CoreError>, f: impl FnOnce(T) -> AnalysisOutcome) -> Result<AnalysisOutcome> {
    match r {
        Ok(v) => Ok(f(v)),
        Err(e) if e.is_degenerate() || e == CoreError::NoPairsFormable => Ok(AnalysisOutcome::Degenerate(e.to_string())),
        Err(e) => Err(e.into()),
    }
}

fn wr_outcome(r: wintrial_core::wr::WrResult) -> AnalysisOutcome {
    AnalysisOutcome::Done {
        p_value: r.p_value,
        estimate: Some(r.r_w),
        ci: Some((r.ci_low, r.ci_high)),
    }
}

fn win_ratio_analysis<Rl: WinningRule, R: Rng + ?Sized>(
    analysis: Analysis,
    cohort: &[PatientRecord<Rl::Outcome>],
    rule: &Rl,
    rng: &mut R,
) -> Result<AnalysisOutcome> {
    match analysis {
        Analysis::MatchedWr => {
            let pairing = form_matched_pairs(cohort, true, rng);
            settle(pairing.and_then(|p| matched_wr_test(&p, cohort, rule)), wr_outcome)
        }
        Analysis::StratUnmatchedWr => settle(fs_unmatched_test(cohort, true, rule), |(r, _)| wr_outcome(r)),
        Analysis::UnstratUnmatchedWr => settle(fs_unmatched_test(cohort, false, rule), |(r, _)| wr_outcome(r)),
        _ => unreachable!("not a win-ratio analysis"),
    }
}

fn is_win_ratio(a: Analysis) -> bool {
    matches!(a, Analysis::MatchedWr | Analysis::StratUnmatchedWr | Analysis::UnstratUnmatchedWr)
}

/// Run the configured analyses, in `Analysis` order, on one cohort.
pub fn analyze<R: Rng + ?Sized>(cfg: &ScenarioConfig, cohort: &Cohort, rng: &mut R) -> Result<Vec<(Analysis, AnalysisOutcome)>> {
    let mut out = Vec::with_capacity(cfg.analyses.len());
    match cohort {
        Cohort::Binary(c) => {
            for &a in &cfg.analyses {
                out.push((a, win_ratio_analysis(a, c, &BinaryPriorityRule, rng)?));
            }
        }
        Cohort::Survival(c) => {
            for &a in &cfg.analyses {
                let r = match a {
                    Analysis::Cox => settle(cox_fit(c, cfg.cox_design), |r| {
                        if r.monotone_likelihood {
                            AnalysisOutcome::Degenerate("monotone likelihood".into())
                        } else {
                            AnalysisOutcome::Done {
                                p_value: r.p_value,
                                estimate: Some(r.hr),
                                ci: Some((r.ci_low, r.ci_high)),
                            }
                        }
                    })?,
                    Analysis::Obrien => settle(obrien_survival(c), obrien_outcome)?,
                    a if is_win_ratio(a) => win_ratio_analysis(a, c, &cfg.survival_rule, rng)?,
                    other => return Err(config_err(format!("{} needs another outcome family", other.key()))),
                };
                out.push((a, r));
            }
        }
        Cohort::Continuous(c) => {
            let records: Vec<PatientRecord<ContinuousOutcome>> = c.iter().map(|(p, _)| p.clone()).collect();
            // improvement counts, computed once per patient for the pairwise loops
            let scored = records
                .iter()
                .map(|p| {
                    let score = improvement_score(&p.outcome, cfg.cutoffs.c_t)?;
                    Ok(PatientRecord {
                        id: p.id,
                        arm: p.arm,
                        covariates: p.covariates,
                        stratum: p.stratum,
                        outcome: score,
                    })
                })
                .collect::<std::result::Result<Vec<_>, CoreError>>()?;
            for &a in &cfg.analyses {
                let r = match a {
                    Analysis::Obrien => settle(obrien_continuous(&records), obrien_outcome)?,
                    Analysis::Contingency => settle(contingency_from_continuous(&records, cfg.cutoffs.c_t), |r| {
                        AnalysisOutcome::Done {
                            p_value: r.p_value,
                            estimate: Some(r.or_hat),
                            ci: Some((r.ci_low, r.ci_high)),
                        }
                    })?,
                    a if is_win_ratio(a) => win_ratio_analysis(a, &scored, &HigherScoreWins, rng)?,
                    other => return Err(config_err(format!("{} needs another outcome family", other.key()))),
                };
                out.push((a, r));
            }
        }
    }
    Ok(out)
}

fn obrien_outcome(r: wintrial_core::classic::ObrienResult) -> AnalysisOutcome {
    AnalysisOutcome::Done {
        p_value: r.p_value,
        estimate: None,
        ci: None,
    }
}

/// Generate and analyze one trial.
pub fn run_trial<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<TrialRecord> {
    let trial = generate(cfg, rng)?;
    let outcomes = analyze(cfg, &trial.cohort, rng)?;
    Ok(TrialRecord {
        outcomes,
        enrolled: trial.enrolled,
        analyzed: trial.cohort.len(),
        stage2: trial.stage2,
    })
}

pub fn run_parallel_trial<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<TrialRecord> {
    if cfg.design != Design::Parallel {
        return Err(config_err("not a parallel design"));
    }
    run_trial(cfg, rng)
}

pub fn run_cr_trial<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<TrialRecord> {
    if cfg.design != Design::Cr {
        return Err(config_err("not a CR design"));
    }
    run_trial(cfg, rng)
}

pub fn run_sed_trial<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<TrialRecord> {
    if cfg.design != Design::Sed {
        return Err(config_err("not an SED design"));
    }
    run_trial(cfg, rng)
}
