use thiserror::Error;

/// Ways an estimator can fail to produce a usable statistic even though the
/// input was well formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degenerate {
    /// Every compared pair was a tie.
    NoInformativePairs,
    /// The FS permutation variance is zero.
    NoDiscordantPairs,
    /// O'Brien rank sums are identical for every subject.
    ConstantScores,
    /// Too few distinct event times to fit a Cox model.
    TooFewEvents,
    /// The Cox information matrix cannot be inverted at the fitted point.
    SingularInformation,
}

impl std::fmt::Display for Degenerate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Degenerate::NoInformativePairs => "degenerate: no informative pairs",
            Degenerate::NoDiscordantPairs => "degenerate: no discordant pairs",
            Degenerate::ConstantScores => "degenerate: constant rank sums",
            Degenerate::TooFewEvents => "degenerate: fewer than two distinct event times",
            Degenerate::SingularInformation => "degenerate: singular information matrix",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("no pairs formable")]
    NoPairsFormable,
    #[error("{0}")]
    Degenerate(Degenerate),
    #[error("no effect: sample size infinite")]
    NoEffect,
    #[error("infinite ratio: expected losses are zero")]
    InfiniteRatio,
    #[error("csv: {0}")]
    Csv(String),
}

impl Error {
    pub fn is_degenerate(&self) -> bool {
        matches!(self, Error::Degenerate(_))
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

impl From<Degenerate> for Error {
    fn from(d: Degenerate) -> Self {
        Error::Degenerate(d)
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
