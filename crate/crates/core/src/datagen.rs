//! Seeded synthetic cohorts for the binary, survival and continuous families.
//!
//! Survival times use the inverse cumulative hazard transform with a unit
//! exponential baseline, `H0(t) = t`, so `E = -log(u) * exp(-x'b)`. The
//! continuous family draws a baseline from the two covariates and three
//! times to component improvement, gated by a four-class responder mixture.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{
    Arm, BinaryOutcome, ContinuousOutcome, Covariates, PatientRecord, SurvivalOutcome,
};

fn default_allocation() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurvivalGenConfig {
    /// Log hazard ratio of treatment on hospitalization.
    pub beta_t: f64,
    /// Additional log hazard ratio of treatment on death.
    pub beta_in: f64,
    pub beta_dhratio: f64,
    pub beta_cov1: f64,
    pub beta_cov2: f64,
    /// Cohort size. Scenario runners overwrite it with their own `n_total`.
    #[serde(default)]
    pub n: usize,
    /// Fraction assigned to treatment.
    #[serde(default = "default_allocation")]
    pub allocation: f64,
}

impl SurvivalGenConfig {
    pub fn null(n: usize) -> Self {
        SurvivalGenConfig {
            beta_t: 0.0,
            beta_in: 0.0,
            beta_dhratio: 0.0,
            beta_cov1: -0.5,
            beta_cov2: 0.5,
            n,
            allocation: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::config("survival cohort needs n >= 2"));
        }
        if !(self.allocation > 0.0 && self.allocation < 1.0) {
            return Err(Error::config("allocation must lie in (0, 1)"));
        }
        let coefs = [self.beta_t, self.beta_in, self.beta_dhratio, self.beta_cov1, self.beta_cov2];
        if coefs.iter().any(|b| !b.is_finite()) {
            return Err(Error::config("survival coefficients must be finite"));
        }
        Ok(())
    }
}

/// Draw from the open interval (0, 1).
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 && u < 1.0 {
            return u;
        }
    }
}

/// `H0^{-1}(-log(u) * exp(-lp))` with `H0(t) = t`.
pub fn inverse_hazard_time(u: f64, linear_predictor: f64) -> f64 {
    -u.ln() * (-linear_predictor).exp()
}

fn positive_time<R: Rng + ?Sized>(rng: &mut R, linear_predictor: f64) -> f64 {
    loop {
        let t = inverse_hazard_time(open_unit(rng), linear_predictor);
        if t > 0.0 && t.is_finite() {
            return t;
        }
    }
}

/// `n_treat` treatment labels and the rest control, in random order.
pub fn balanced_arms<R: Rng + ?Sized>(n: usize, n_treat: usize, rng: &mut R) -> Vec<Arm> {
    let mut arms: Vec<Arm> = (0..n)
        .map(|i| if i < n_treat { Arm::Treatment } else { Arm::Control })
        .collect();
    arms.shuffle(rng);
    arms
}

fn treated_count(n: usize, allocation: f64) -> usize {
    ((n as f64 * allocation).round() as usize).clamp(1, n - 1)
}

fn draw_covariates<R: Rng + ?Sized>(rng: &mut R) -> Covariates {
    Covariates::new(rng.random_bool(0.5), rng.random_bool(0.5))
}

pub fn gen_survival_cohort<R: Rng + ?Sized>(
    cfg: &SurvivalGenConfig,
    rng: &mut R,
) -> Result<Vec<PatientRecord<SurvivalOutcome>>> {
    cfg.validate()?;
    let arms = balanced_arms(cfg.n, treated_count(cfg.n, cfg.allocation), rng);
    let cohort = arms
        .into_iter()
        .enumerate()
        .map(|(i, arm)| {
            let cov = draw_covariates(rng);
            // Uniform(0, 1) standardized to mean 0, variance 1.
            let x_dhratio = (rng.random::<f64>() - 0.5) * 12f64.sqrt();
            let x_t = if arm.is_treatment() { 1.0 } else { 0.0 };
            let cov_lp = cfg.beta_cov1 * f64::from(u8::from(cov.x_cov1))
                + cfg.beta_cov2 * f64::from(u8::from(cov.x_cov2));
            let lp_hosp = cfg.beta_t * x_t + cov_lp;
            let lp_death = (cfg.beta_t + cfg.beta_in) * x_t + cfg.beta_dhratio * x_dhratio + cov_lp;
            let hosp_time = positive_time(rng, lp_hosp);
            let death_time = positive_time(rng, lp_death);
            PatientRecord::new(
                i as u32,
                arm,
                cov,
                SurvivalOutcome {
                    death_time,
                    hosp_time,
                },
            )
        })
        .collect();
    Ok(cohort)
}

/// Administrative censoring of the time to first event at `cutoff`:
/// returns `(observed_time, event_observed)`. Not used by the simulation
/// presets, which assume complete follow-up.
pub fn censor_first_event(o: &SurvivalOutcome, cutoff: f64) -> (f64, bool) {
    let t = o.first_event_time();
    if t <= cutoff {
        (t, true)
    } else {
        (cutoff, false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinaryGenConfig {
    pub p_t: f64,
    pub q_t: f64,
    pub p_c: f64,
    pub q_c: f64,
    #[serde(default)]
    pub n1: usize,
    #[serde(default)]
    pub n0: usize,
}

impl BinaryGenConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_t", self.p_t), ("q_t", self.q_t), ("p_c", self.p_c), ("q_c", self.q_c)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(format!("{name} must lie in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Treatment patients first (ids `0..n1`), then control. Death and
/// hospitalization are independent within a patient; covariates are
/// Bernoulli(0.5) and have no effect.
pub fn gen_binary_cohort<R: Rng + ?Sized>(
    cfg: &BinaryGenConfig,
    rng: &mut R,
) -> Result<Vec<PatientRecord<BinaryOutcome>>> {
    cfg.validate()?;
    let mut cohort = Vec::with_capacity(cfg.n1 + cfg.n0);
    for i in 0..cfg.n1 + cfg.n0 {
        let (arm, p, q) = if i < cfg.n1 {
            (Arm::Treatment, cfg.p_t, cfg.q_t)
        } else {
            (Arm::Control, cfg.p_c, cfg.q_c)
        };
        let cov = draw_covariates(rng);
        let outcome = BinaryOutcome {
            death: rng.random_bool(p),
            hosp: rng.random_bool(q),
        };
        cohort.push(PatientRecord::new(i as u32, arm, cov, outcome));
    }
    Ok(cohort)
}

/// Noise added to each continuous response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Noise {
    Normal { sd: f64 },
    /// Student t scaled by `scale`; `df > 2` keeps the variance finite.
    StudentT { df: f64, scale: f64 },
}

impl Default for Noise {
    fn default() -> Self {
        Noise::Normal { sd: 1.0 }
    }
}

impl Noise {
    fn validate(&self) -> Result<()> {
        match *self {
            Noise::Normal { sd } if sd >= 0.0 && sd.is_finite() => Ok(()),
            Noise::StudentT { df, scale } if df > 2.0 && scale >= 0.0 && scale.is_finite() => Ok(()),
            _ => Err(Error::config("noise must have finite variance")),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Noise::Normal { sd } => {
                let z: f64 = Normal::new(0.0, 1.0).expect("unit normal").sample(rng);
                sd * z
            }
            Noise::StudentT { df, scale } => {
                scale * StudentT::new(df).expect("validated df").sample(rng)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuousGenConfig {
    /// Placebo effect per component; negative shortens time to improvement.
    pub beta_p: [f64; 3],
    pub beta_t1: f64,
    pub beta_in2: f64,
    pub beta_in3: f64,
    pub beta_cov1: f64,
    pub beta_cov2: f64,
    #[serde(default)]
    pub noise: Noise,
    #[serde(default)]
    pub n: usize,
}

impl ContinuousGenConfig {
    /// Drug effect per component: `(b_t1, b_t1 + b_in2, b_t1 + b_in3)`.
    pub fn drug_effects(&self) -> [f64; 3] {
        [
            self.beta_t1,
            self.beta_t1 + self.beta_in2,
            self.beta_t1 + self.beta_in3,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::config("continuous cohort needs n >= 2"));
        }
        self.validate_effects()
    }

    /// Everything except the cohort size.
    pub fn validate_effects(&self) -> Result<()> {
        self.noise.validate()?;
        if self.beta_cov1.max(0.0) + self.beta_cov2.max(0.0) <= 0.0 {
            return Err(Error::config(
                "no covariate pattern gives a positive baseline (need beta_cov1 > 0 or beta_cov2 > 0)",
            ));
        }
        Ok(())
    }
}

/// Responder mixture over the four latent classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubpopMix {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub p4: f64,
}

impl SubpopMix {
    pub fn new(p1: f64, p2: f64, p3: f64, p4: f64) -> Result<Self> {
        let m = SubpopMix { p1, p2, p3, p4 };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let p = [self.p1, self.p2, self.p3, self.p4];
        if p.iter().any(|x| x.is_nan() || *x < 0.0) {
            return Err(Error::config("mixture probabilities must be nonnegative"));
        }
        if (p.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::config("mixture probabilities must sum to 1"));
        }
        Ok(())
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Subpop {
        let u: f64 = rng.random();
        if u < self.p1 {
            Subpop::BothResponder
        } else if u < self.p1 + self.p2 {
            Subpop::PlaceboOnly
        } else if u < self.p1 + self.p2 + self.p3 {
            Subpop::DrugOnly
        } else {
            Subpop::Neither
        }
    }
}

/// Latent responder class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subpop {
    /// Responds to placebo and to drug (`p1`).
    BothResponder,
    /// Responds to placebo only (`p2`).
    PlaceboOnly,
    /// Responds to drug only (`p3`), the population an enrichment design targets.
    DrugOnly,
    /// Responds to neither (`p4`).
    Neither,
}

impl Subpop {
    pub fn placebo_responder(self) -> bool {
        matches!(self, Subpop::BothResponder | Subpop::PlaceboOnly)
    }

    pub fn drug_responder(self) -> bool {
        matches!(self, Subpop::BothResponder | Subpop::DrugOnly)
    }

    pub fn label(self) -> &'static str {
        match self {
            Subpop::BothResponder => "p1",
            Subpop::PlaceboOnly => "p2",
            Subpop::DrugOnly => "p3",
            Subpop::Neither => "p4",
        }
    }
}

/// Effect term applied to each component for a patient of class `subpop` on `arm`.
///
/// Placebo responders receive the placebo effect on either arm. A drug
/// responder who does not respond to placebo receives the drug's effect over
/// placebo, `b_t - b_p`, when on drug. With `b_t == b_p` both arms have the
/// same distribution for every class, whatever the mixture.
pub fn arm_effect(cfg: &ContinuousGenConfig, subpop: Subpop, arm: Arm) -> [f64; 3] {
    let drug = cfg.drug_effects();
    let mut effect = [0.0; 3];
    for j in 0..3 {
        if subpop.placebo_responder() {
            effect[j] += cfg.beta_p[j];
        }
        if arm.is_treatment() && subpop.drug_responder() && !subpop.placebo_responder() {
            effect[j] += drug[j] - cfg.beta_p[j];
        }
    }
    effect
}

/// A patient before arm assignment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Enrollee {
    pub id: u32,
    pub covariates: Covariates,
    pub baseline: f64,
    pub subpop: Subpop,
}

pub fn draw_enrollee<R: Rng + ?Sized>(
    cfg: &ContinuousGenConfig,
    mix: &SubpopMix,
    id: u32,
    rng: &mut R,
) -> Enrollee {
    let (covariates, baseline) = loop {
        let cov = draw_covariates(rng);
        let base = cfg.beta_cov1 * f64::from(u8::from(cov.x_cov1))
            + cfg.beta_cov2 * f64::from(u8::from(cov.x_cov2));
        if base > 0.0 {
            break (cov, base);
        }
    };
    Enrollee {
        id,
        covariates,
        baseline,
        subpop: mix.draw(rng),
    }
}

pub fn draw_enrollees<R: Rng + ?Sized>(
    cfg: &ContinuousGenConfig,
    mix: &SubpopMix,
    n: usize,
    first_id: u32,
    rng: &mut R,
) -> Vec<Enrollee> {
    (0..n)
        .map(|i| draw_enrollee(cfg, mix, first_id + i as u32, rng))
        .collect()
}

/// `y_j = effect_j + y_base + eps_j` with independent noise per component.
pub fn compose_response(baseline: f64, effect: [f64; 3], noise: [f64; 3]) -> ContinuousOutcome {
    ContinuousOutcome {
        baseline,
        y: [0, 1, 2].map(|j| effect[j] + baseline + noise[j]),
    }
}

/// Fresh outcome draw for `who` on `arm`.
pub fn draw_continuous_outcome<R: Rng + ?Sized>(
    cfg: &ContinuousGenConfig,
    who: &Enrollee,
    arm: Arm,
    rng: &mut R,
) -> ContinuousOutcome {
    let noise = [(); 3].map(|_| cfg.noise.sample(rng));
    compose_response(who.baseline, arm_effect(cfg, who.subpop, arm), noise)
}

/// Enrol `cfg.n` patients, randomize 1:1, draw outcomes.
pub fn gen_continuous_cohort<R: Rng + ?Sized>(
    cfg: &ContinuousGenConfig,
    mix: &SubpopMix,
    rng: &mut R,
) -> Result<Vec<(PatientRecord<ContinuousOutcome>, Subpop)>> {
    cfg.validate()?;
    mix.validate()?;
    let enrollees = draw_enrollees(cfg, mix, cfg.n, 0, rng);
    Ok(randomize_enrollees(cfg, &enrollees, rng))
}

/// 1:1 randomization of `enrollees` (surplus to control) with fresh outcomes.
pub fn randomize_enrollees<R: Rng + ?Sized>(
    cfg: &ContinuousGenConfig,
    enrollees: &[Enrollee],
    rng: &mut R,
) -> Vec<(PatientRecord<ContinuousOutcome>, Subpop)> {
    let arms = balanced_arms(enrollees.len(), enrollees.len() / 2, rng);
    enrollees
        .iter()
        .zip(arms)
        .map(|(e, arm)| {
            let y = draw_continuous_outcome(cfg, e, arm, rng);
            (PatientRecord::new(e.id, arm, e.covariates, y), e.subpop)
        })
        .collect()
}

/// Column layout of an outcome in cohort CSV exports.
pub trait CsvOutcome {
    fn header() -> &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

impl CsvOutcome for BinaryOutcome {
    fn header() -> &'static [&'static str] {
        &["y_death", "x_hosp"]
    }
    fn fields(&self) -> Vec<String> {
        vec![u8::from(self.death).to_string(), u8::from(self.hosp).to_string()]
    }
}

impl CsvOutcome for SurvivalOutcome {
    fn header() -> &'static [&'static str] {
        &["e_death", "e_hosp"]
    }
    fn fields(&self) -> Vec<String> {
        vec![self.death_time.to_string(), self.hosp_time.to_string()]
    }
}

impl CsvOutcome for ContinuousOutcome {
    fn header() -> &'static [&'static str] {
        &["y_base", "y_1", "y_2", "y_3"]
    }
    fn fields(&self) -> Vec<String> {
        let mut f = vec![self.baseline.to_string()];
        f.extend(self.y.iter().map(|v| v.to_string()));
        f
    }
}

impl CsvOutcome for (ContinuousOutcome, Subpop) {
    fn header() -> &'static [&'static str] {
        &["y_base", "y_1", "y_2", "y_3", "subpop"]
    }
    fn fields(&self) -> Vec<String> {
        let mut f = self.0.fields();
        f.push(self.1.label().to_string());
        f
    }
}

/// One row per patient: `id, arm, x_cov1, x_cov2, stratum`, then the outcome columns.
pub fn write_cohort_csv<O: CsvOutcome, W: Write>(
    cohort: &[PatientRecord<O>],
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["id", "arm", "x_cov1", "x_cov2", "stratum"];
    header.extend_from_slice(O::header());
    w.write_record(&header)?;
    for p in cohort {
        let mut row = vec![
            p.id.to_string(),
            p.arm.as_str().to_string(),
            u8::from(p.covariates.x_cov1).to_string(),
            u8::from(p.covariates.x_cov2).to_string(),
            p.stratum.to_string(),
        ];
        row.extend(p.outcome.fields());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}
