use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use wintrial::cli::{power_record, write_cohort, write_replicates_csv, Matching, PowerArgs};
use wintrial::mc::{run_replicates, summarize, with_threads};
use wintrial::presets::{reproduce_table, TableId, DEFAULT_SEED};
use wintrial::{HarnessError, Result, ScenarioConfig};
use wintrial_core::power::MatchedVariance;

#[derive(Parser)]
#[command(name = "wintrial", version, about = "Win-ratio trial simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Binary,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variance {
    DeltaMethod,
    AsPrinted,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and print the Monte Carlo summary as JSON.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Also write per-replicate results here.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Closed-form sample size for a binary death/hospitalization composite.
    #[command(group(ArgGroup::new("matching").required(true).args(["matched", "unmatched"])))]
    Power {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long)]
        matched: bool,
        #[arg(long)]
        unmatched: bool,
        /// Treatment death probability.
        #[arg(long)]
        pt: f64,
        /// Treatment hospitalization probability.
        #[arg(long)]
        qt: f64,
        #[arg(long)]
        pc: f64,
        #[arg(long)]
        qc: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 0.8)]
        power: f64,
        /// Limit variance used by the matched formula.
        #[arg(long, value_enum, default_value = "delta-method")]
        variance: Variance,
        /// Controls per treated patient (unmatched).
        #[arg(long, default_value_t = 1.0)]
        allocation: f64,
    },
    /// Rerun a published simulation table and compare.
    ReproduceTable {
        /// t3 .. t14
        table: String,
        #[arg(long, default_value_t = 2000)]
        reps: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Also write the table as CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Write one synthetic cohort as CSV.
    Gen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read_config(path: &PathBuf) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
    ScenarioConfig::from_json(&text)
}

fn threaded<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        Some(t) => with_threads(t, f),
        None => f(),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, csv, threads } => {
            let cfg = read_config(&config)?;
            let records = threaded(threads, || run_replicates(&cfg))?;
            if let Some(path) = csv {
                write_replicates_csv(&records, BufWriter::new(File::create(path)?))?;
            }
            let report = summarize(&cfg, &records)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Power {
            family: Family::Binary,
            matched,
            unmatched: _,
            pt,
            qt,
            pc,
            qc,
            alpha,
            power,
            variance,
            allocation,
        } => {
            let record = power_record(&PowerArgs {
                matching: if matched { Matching::Matched } else { Matching::Unmatched },
                p_t: pt,
                q_t: qt,
                p_c: pc,
                q_c: qc,
                alpha,
                power,
                variance: match variance {
                    Variance::DeltaMethod => MatchedVariance::DeltaMethod,
                    Variance::AsPrinted => MatchedVariance::AsPrinted,
                },
                allocation,
            })?;
            println!("{}", serde_json::to_string_pretty(&record)?);
        }
        Command::ReproduceTable {
            table,
            reps,
            seed,
            csv,
            threads,
        } => {
            let id: TableId = table.parse()?;
            let report = threaded(threads, || reproduce_table(id, reps, seed))?;
            print!("{}", report.to_text());
            if let Some(path) = csv {
                report.write_csv(BufWriter::new(File::create(path)?))?;
            }
        }
        Command::Gen { config, out } => {
            let cfg = read_config(&config)?;
            let mut w = BufWriter::new(File::create(&out)?);
            let n = write_cohort(&cfg, &mut w)?;
            w.flush()?;
            eprintln!("wrote {n} patients to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(io::stderr(), "error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
