//! Replicated trials with per-replicate random streams.
//!
//! Replicate `i` draws from a ChaCha8 generator seeded with the master seed
//! on stream `i`, so results do not depend on scheduling. Replicates run on
//! the rayon pool and are aggregated in index order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use wintrial_core::stats::{json_f64, KahanSum};

use crate::config::{Analysis, ScenarioConfig};
use crate::error::{HarnessError, Result};
use crate::trial::{run_trial, AnalysisOutcome, TrialRecord};

pub fn replicate_rng(master_seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(rep);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McSummary {
    pub analysis: Analysis,
    pub reps: usize,
    pub reps_used: usize,
    pub degenerate_count: usize,
    /// Fraction of non-degenerate replicates with `p <= alpha`.
    pub rejection_rate: f64,
    /// Mean over replicates with a finite estimate.
    #[serde(with = "opt_f64")]
    pub mean_estimate: Option<f64>,
    #[serde(with = "opt_f64")]
    pub mean_ci_low: Option<f64>,
    #[serde(with = "opt_f64")]
    pub mean_ci_high: Option<f64>,
    /// Replicates whose estimate was infinite or undefined.
    pub nonfinite_estimates: usize,
}

mod opt_f64 {
    use serde::Serializer;

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => super::json_f64::serialize(v, s),
            None => s.serialize_none(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub design: crate::config::Design,
    pub n_total: usize,
    pub reps: usize,
    pub master_seed: u64,
    #[serde(with = "json_f64")]
    pub alpha: f64,
    pub summaries: Vec<McSummary>,
    /// Average patients enrolled per trial (lead-in included).
    #[serde(with = "json_f64")]
    pub mean_enrolled: f64,
    #[serde(with = "json_f64")]
    pub mean_analyzed: f64,
    #[serde(with = "json_f64")]
    pub mean_stage2: f64,
}

impl McReport {
    pub fn summary(&self, analysis: Analysis) -> Option<&McSummary> {
        self.summaries.iter().find(|s| s.analysis == analysis)
    }

    pub fn rejection_rate(&self, analysis: Analysis) -> Option<f64> {
        self.summary(analysis).map(|s| s.rejection_rate)
    }
}

/// All replicate records in index order.
pub fn run_replicates(cfg: &ScenarioConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    (0..cfg.reps as u64)
        .into_par_iter()
        .map(|rep| run_trial(cfg, &mut replicate_rng(cfg.master_seed, rep)))
        .collect()
}

pub fn summarize(cfg: &ScenarioConfig, records: &[TrialRecord]) -> Result<McReport> {
    let mut summaries = Vec::with_capacity(cfg.analyses.len());
    for &analysis in &cfg.analyses {
        let mut used = 0usize;
        let mut rejected = 0usize;
        let mut est = KahanSum::default();
        let mut est_n = 0usize;
        let mut lo = KahanSum::default();
        let mut hi = KahanSum::default();
        let mut ci_n = 0usize;
        for rec in records {
            let Some((_, outcome)) = rec.outcomes.iter().find(|(a, _)| *a == analysis) else {
                continue;
            };
            let AnalysisOutcome::Done { p_value, estimate, ci } = outcome else {
                continue;
            };
            used += 1;
            if *p_value <= cfg.alpha {
                rejected += 1;
            }
            if let Some(e) = estimate.filter(|e| e.is_finite()) {
                est.add(e);
                est_n += 1;
                if let Some((l, h)) = ci.filter(|(l, h)| l.is_finite() && h.is_finite()) {
                    lo.add(l);
                    hi.add(h);
                    ci_n += 1;
                }
            }
        }
        if used == 0 {
            return Err(HarnessError::AllDegenerate(analysis.key().to_string()));
        }
        let has_estimate = analysis != Analysis::Obrien;
        let mean = |s: KahanSum, n: usize| (has_estimate && n > 0).then(|| s.value() / n as f64);
        summaries.push(McSummary {
            analysis,
            reps: records.len(),
            reps_used: used,
            degenerate_count: records.len() - used,
            rejection_rate: rejected as f64 / used as f64,
            mean_estimate: mean(est, est_n),
            mean_ci_low: mean(lo, ci_n),
            mean_ci_high: mean(hi, ci_n),
            nonfinite_estimates: if has_estimate { used - est_n } else { 0 },
        });
    }
    let avg = |f: fn(&TrialRecord) -> usize| {
        records.iter().map(|r| f(r) as f64).collect::<KahanSum>().value() / records.len() as f64
    };
    Ok(McReport {
        design: cfg.design,
        n_total: cfg.n_total,
        reps: records.len(),
        master_seed: cfg.master_seed,
        alpha: cfg.alpha,
        summaries,
        mean_enrolled: avg(|r| r.enrolled),
        mean_analyzed: avg(|r| r.analyzed),
        mean_stage2: avg(|r| r.stage2),
    })
}

/// Run `cfg.reps` replicates on the global rayon pool and summarize.
pub fn monte_carlo(cfg: &ScenarioConfig) -> Result<McReport> {
    let records = run_replicates(cfg)?;
    summarize(cfg, &records)
}

/// Run `f` on a dedicated pool of `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    pool.install(f)
}

/// As [`monte_carlo`], on a dedicated pool of `threads` workers.
pub fn monte_carlo_with_threads(cfg: &ScenarioConfig, threads: usize) -> Result<McReport> {
    with_threads(threads, || monte_carlo(cfg))
}
