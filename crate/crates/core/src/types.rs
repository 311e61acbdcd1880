//! Domain types shared by every estimator and design runner.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Treatment,
    Control,
}

impl Arm {
    pub fn is_treatment(self) -> bool {
        matches!(self, Arm::Treatment)
    }

    pub fn swapped(self) -> Arm {
        match self {
            Arm::Treatment => Arm::Control,
            Arm::Control => Arm::Treatment,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Arm::Treatment => "treatment",
            Arm::Control => "control",
        }
    }
}

/// The two binary baseline covariates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Covariates {
    pub x_cov1: bool,
    pub x_cov2: bool,
}

impl Covariates {
    pub fn new(x_cov1: bool, x_cov2: bool) -> Self {
        Covariates { x_cov1, x_cov2 }
    }
}

/// Number of covariate strata.
pub const N_STRATA: u32 = 4;

/// Stratum of a covariate pattern: `2 * x_cov1 + x_cov2`.
pub fn stratify(c: Covariates) -> u32 {
    2 * u32::from(c.x_cov1) + u32::from(c.x_cov2)
}

/// Death (`y`) and hospitalization (`x`) indicators; 1 means the event happened.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct BinaryOutcome {
    pub death: bool,
    pub hosp: bool,
}

/// Latent times to death and to hospitalization. Both must be positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalOutcome {
    pub death_time: f64,
    pub hosp_time: f64,
}

impl SurvivalOutcome {
    pub fn first_event_time(&self) -> f64 {
        self.death_time.min(self.hosp_time)
    }

    pub fn death_is_first(&self) -> bool {
        self.death_time < self.hosp_time
    }
}

/// Baseline plus the three times to component improvement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuousOutcome {
    pub baseline: f64,
    pub y: [f64; 3],
}

impl ContinuousOutcome {
    /// `y_j / y_base` for each component.
    pub fn ratios(&self) -> [f64; 3] {
        self.y.map(|v| v / self.baseline)
    }
}

/// Outcome of any of the three families, for code that handles them uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomePayload {
    Binary(BinaryOutcome),
    Survival(SurvivalOutcome),
    Continuous(ContinuousOutcome),
}

impl From<BinaryOutcome> for OutcomePayload {
    fn from(o: BinaryOutcome) -> Self {
        OutcomePayload::Binary(o)
    }
}

impl From<SurvivalOutcome> for OutcomePayload {
    fn from(o: SurvivalOutcome) -> Self {
        OutcomePayload::Survival(o)
    }
}

impl From<ContinuousOutcome> for OutcomePayload {
    fn from(o: ContinuousOutcome) -> Self {
        OutcomePayload::Continuous(o)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientRecord<O> {
    pub id: u32,
    pub arm: Arm,
    pub covariates: Covariates,
    /// Analysis stratum. Single-stage cohorts use `stratify(covariates)`;
    /// multi-stage designs may offset it per stage.
    pub stratum: u32,
    pub outcome: O,
}

impl<O> PatientRecord<O> {
    pub fn new(id: u32, arm: Arm, covariates: Covariates, outcome: O) -> Self {
        PatientRecord {
            id,
            arm,
            covariates,
            stratum: stratify(covariates),
            outcome,
        }
    }

    pub fn with_stratum(mut self, stratum: u32) -> Self {
        self.stratum = stratum;
        self
    }

    pub fn map_outcome<P>(self, f: impl FnOnce(O) -> P) -> PatientRecord<P> {
        PatientRecord {
            id: self.id,
            arm: self.arm,
            covariates: self.covariates,
            stratum: self.stratum,
            outcome: f(self.outcome),
        }
    }
}

/// Result of one pairwise comparison, from the treatment patient's side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WinStatus {
    Win,
    Loss,
    Tie,
}

impl WinStatus {
    /// The same comparison seen from the other patient.
    pub fn mirror(self) -> WinStatus {
        match self {
            WinStatus::Win => WinStatus::Loss,
            WinStatus::Loss => WinStatus::Win,
            WinStatus::Tie => WinStatus::Tie,
        }
    }

    /// +1, -1 or 0.
    pub fn score(self) -> i64 {
        match self {
            WinStatus::Win => 1,
            WinStatus::Loss => -1,
            WinStatus::Tie => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MatchedPair {
    pub treatment_id: u32,
    pub control_id: u32,
    pub stratum: u32,
}
