//! Trial designs, Monte Carlo engine and table presets for win-ratio
//! simulation studies.

pub mod cli;
pub mod config;
pub mod error;
pub mod mc;
pub mod presets;
pub mod trial;

pub use config::{Analysis, Cutoffs, Design, GeneratorConfig, OutcomeFamily, SampleBasis, ScenarioConfig};
pub use error::{HarnessError, Result};
pub use mc::{monte_carlo, monte_carlo_with_threads, McReport, McSummary};
pub use presets::{reproduce_table, table_spec, TableId, TableReport};
