//! Odds-ratio test on "any component improved" by arm.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rules::improvement_indicators;
use crate::stats::{json_f64, two_sided_p, Z_975};
use crate::types::{ContinuousOutcome, PatientRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrResult {
    /// `(n11, n10, n01, n00)`: treatment successes and failures, then control.
    pub table: (u64, u64, u64, u64),
    /// 0.5 was added to every cell because one was empty.
    pub corrected: bool,
    #[serde(with = "json_f64")]
    pub or_hat: f64,
    #[serde(with = "json_f64")]
    pub se_log: f64,
    #[serde(with = "json_f64")]
    pub z: f64,
    #[serde(with = "json_f64")]
    pub p_value: f64,
    #[serde(with = "json_f64")]
    pub ci_low: f64,
    #[serde(with = "json_f64")]
    pub ci_high: f64,
}

/// Wald test of `log OR` with `se = sqrt(sum 1/n)`; a zero cell triggers the
/// Haldane–Anscombe correction on all four cells.
pub fn contingency_or_test(treatment: &[bool], control: &[bool]) -> Result<OrResult> {
    if treatment.is_empty() || control.is_empty() {
        return Err(Error::invalid("both arms need at least one subject"));
    }
    let count = |xs: &[bool]| xs.iter().filter(|&&x| x).count() as u64;
    let n11 = count(treatment);
    let n10 = treatment.len() as u64 - n11;
    let n01 = count(control);
    let n00 = control.len() as u64 - n01;
    let corrected = [n11, n10, n01, n00].contains(&0);
    let adj = if corrected { 0.5 } else { 0.0 };
    let [a, b, c, d] = [n11, n10, n01, n00].map(|v| v as f64 + adj);
    let or_hat = a * d / (b * c);
    let se_log = (1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d).sqrt();
    let log_or = or_hat.ln();
    let z = log_or / se_log;
    Ok(OrResult {
        table: (n11, n10, n01, n00),
        corrected,
        or_hat,
        se_log,
        z,
        p_value: two_sided_p(z),
        ci_low: (log_or - Z_975 * se_log).exp(),
        ci_high: (log_or + Z_975 * se_log).exp(),
    })
}

/// Success means at least one component ratio is below `cutoff`.
pub fn contingency_from_continuous(
    cohort: &[PatientRecord<ContinuousOutcome>],
    cutoff: f64,
) -> Result<OrResult> {
    let mut t = Vec::new();
    let mut c = Vec::new();
    for p in cohort {
        let any = improvement_indicators(&p.outcome, cutoff)?[3];
        if p.arm.is_treatment() { t.push(any) } else { c.push(any) }
    }
    contingency_or_test(&t, &c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(yes: usize, no: usize) -> Vec<bool> {
        let mut v = vec![true; yes];
        v.extend(vec![false; no]);
        v
    }

    #[test]
    fn table_arithmetic() {
        let r = contingency_or_test(&flags(20, 5), &flags(5, 20)).unwrap();
        assert_eq!(r.table, (20, 5, 5, 20));
        assert!(!r.corrected);
        assert!((r.or_hat - 16.0).abs() < 1e-12);
        assert!((r.se_log - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((r.z - 16f64.ln() / 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn zero_cell_correction() {
        let r = contingency_or_test(&flags(10, 0), &flags(5, 5)).unwrap();
        assert!(r.corrected);
        assert!((r.or_hat - 10.5 * 5.5 / (0.5 * 5.5)).abs() < 1e-12);
        assert!(r.z.is_finite());
    }

    #[test]
    fn equal_rates_and_swap() {
        let r = contingency_or_test(&flags(30, 70), &flags(30, 70)).unwrap();
        assert!(r.z.abs() < 1e-12);
        let a = contingency_or_test(&flags(12, 8), &flags(7, 13)).unwrap();
        let b = contingency_or_test(&flags(7, 13), &flags(12, 8)).unwrap();
        assert!((a.or_hat * b.or_hat - 1.0).abs() < 1e-12);
        assert!((a.z + b.z).abs() < 1e-12);
    }

    #[test]
    fn empty_arm() {
        assert!(contingency_or_test(&[], &[true]).is_err());
    }
}
