//! Work behind the command-line subcommands.

use std::io::Write;

use serde::Serialize;
use wintrial_core::datagen::write_cohort_csv;
use wintrial_core::power::{
    matched_sample_size, matched_win_probs, unmatched_l, unmatched_sample_size, unmatched_w, MatchedVariance,
    ThetaBinary,
};

use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::mc::replicate_rng;
use crate::trial::{generate, AnalysisOutcome, Cohort, TrialRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Matching {
    Matched,
    Unmatched,
}

/// Closed-form sample size for a binary death/hospitalization composite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerRecord {
    /// Informative pairs (matched) or treatment-arm size (unmatched).
    pub n: u64,
    /// Pairs to enrol (matched) or total patients (unmatched).
    #[serde(rename = "N")]
    pub big_n: u64,
    pub p_w: f64,
    pub p_l: f64,
    pub p_tie: f64,
    /// Win ratio under the alternative.
    pub g: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerArgs {
    pub matching: Matching,
    pub p_t: f64,
    pub q_t: f64,
    pub p_c: f64,
    pub q_c: f64,
    pub alpha: f64,
    pub power: f64,
    pub variance: MatchedVariance,
    /// Controls per treated patient, unmatched only.
    pub allocation: f64,
}

pub fn power_record(a: &PowerArgs) -> Result<PowerRecord> {
    match a.matching {
        Matching::Matched => {
            let probs = matched_win_probs(a.p_t, a.q_t, a.p_c, a.q_c)?;
            let informative = probs.p_w + probs.p_l;
            let p_a = probs.p_w / informative;
            let ss = matched_sample_size(p_a, probs.p_tie, a.alpha, a.power, a.variance)?;
            Ok(PowerRecord {
                n: ss.informative_pairs,
                big_n: ss.pairs,
                p_w: probs.p_w,
                p_l: probs.p_l,
                p_tie: probs.p_tie,
                g: probs.p_w / probs.p_l,
                c0: ss.c0,
                c1: ss.c1,
            })
        }
        Matching::Unmatched => {
            let theta = ThetaBinary::new(a.p_t, a.q_t, a.p_c, a.q_c)?;
            let ss = unmatched_sample_size(&theta, a.alpha, a.power, a.allocation)?;
            let (w, l) = (unmatched_w(&theta.theta), unmatched_l(&theta.theta));
            Ok(PowerRecord {
                n: ss.n_t,
                big_n: ss.n_t + ss.n_c,
                p_w: w,
                p_l: l,
                p_tie: 1.0 - w - l,
                g: ss.g1,
                c0: ss.c0,
                c1: ss.c1,
            })
        }
    }
}

/// Write one synthetic cohort, drawn from replicate 0's stream.
pub fn write_cohort<W: Write>(cfg: &ScenarioConfig, out: W) -> Result<usize> {
    cfg.validate()?;
    let trial = generate(cfg, &mut replicate_rng(cfg.master_seed, 0))?;
    let n = trial.cohort.len();
    match &trial.cohort {
        Cohort::Binary(c) => write_cohort_csv(c, out)?,
        Cohort::Survival(c) => write_cohort_csv(c, out)?,
        Cohort::Continuous(c) => {
            let rows: Vec<_> = c.iter().map(|(p, s)| p.clone().map_outcome(|o| (o, *s))).collect();
            write_cohort_csv(&rows, out)?
        }
    }
    Ok(n)
}

/// Per-replicate results, one row per replicate and analysis.
pub fn write_replicates_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let to_io = |e: csv::Error| crate::HarnessError::Io(std::io::Error::other(e));
    w.write_record([
        "rep", "analysis", "status", "p_value", "estimate", "ci_low", "ci_high", "enrolled", "analyzed", "stage2",
    ])
    .map_err(to_io)?;
    let num = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
    for (rep, rec) in records.iter().enumerate() {
        for (analysis, outcome) in &rec.outcomes {
            let (status, p, est, ci) = match outcome {
                AnalysisOutcome::Done { p_value, estimate, ci } => ("ok".to_string(), Some(*p_value), *estimate, *ci),
                AnalysisOutcome::Degenerate(why) => (format!("degenerate: {why}"), None, None, None),
            };
            w.write_record([
                rep.to_string(),
                analysis.key().to_string(),
                status,
                num(p),
                num(est),
                num(ci.map(|c| c.0)),
                num(ci.map(|c| c.1)),
                rec.enrolled.to_string(),
                rec.analyzed.to_string(),
                rec.stage2.to_string(),
            ])
            .map_err(to_io)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matched_record_is_consistent() {
        let r = power_record(&PowerArgs {
            matching: Matching::Matched,
            p_t: 0.1,
            q_t: 0.2,
            p_c: 0.2,
            q_c: 0.35,
            alpha: 0.05,
            power: 0.8,
            variance: MatchedVariance::DeltaMethod,
            allocation: 1.0,
        })
        .unwrap();
        assert!((r.p_w + r.p_l + r.p_tie - 1.0).abs() < 1e-15);
        assert!(r.g > 1.0);
        assert!(r.big_n >= r.n);
        assert_eq!(r.c0, 2.0);
    }

    #[test]
    fn unmatched_total_counts_both_arms() {
        let r = power_record(&PowerArgs {
            matching: Matching::Unmatched,
            p_t: 0.1,
            q_t: 0.2,
            p_c: 0.2,
            q_c: 0.35,
            alpha: 0.05,
            power: 0.8,
            variance: MatchedVariance::DeltaMethod,
            allocation: 2.0,
        })
        .unwrap();
        assert!(r.big_n >= 3 * r.n - 1);
        let json = serde_json::to_value(r).unwrap();
        for k in ["n", "N", "p_w", "p_l", "p_tie", "g", "C0", "C1"] {
            assert!(json.get(k).is_some(), "{k}");
        }
    }
}
