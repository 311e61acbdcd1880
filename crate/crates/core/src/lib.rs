//! Win-ratio analyses of prioritized composite endpoints, their classical
//! comparators, synthetic trial generators and closed-form sample sizes.

pub mod classic;
pub mod datagen;
pub mod error;
pub mod pairing;
pub mod power;
pub mod rules;
pub mod stats;
pub mod types;
pub mod wr;

pub use error::{Degenerate, Error, Result};
pub use types::{
    Arm, BinaryOutcome, ContinuousOutcome, Covariates, MatchedPair, PatientRecord, SurvivalOutcome, WinStatus,
};
