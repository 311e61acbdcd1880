//! Matched and unmatched (Finkelstein–Schoenfeld) win-ratio tests.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Degenerate, Error, Result};
use crate::pairing::{group_by_stratum, Pairing};
use crate::rules::WinningRule;
use crate::stats::{json_f64, two_sided_p, KahanSum, Z_975};
use crate::types::{PatientRecord, WinStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WrMethod {
    MatchedStratified,
    MatchedUnstratified,
    UnmatchedStratified,
    UnmatchedUnstratified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WrResult {
    pub method: WrMethod,
    pub n_w: u64,
    pub n_l: u64,
    pub n_tie: u64,
    #[serde(with = "json_f64")]
    pub p_w: f64,
    #[serde(with = "json_f64")]
    pub r_w: f64,
    #[serde(with = "json_f64")]
    pub z: f64,
    #[serde(with = "json_f64")]
    pub p_value: f64,
    #[serde(with = "json_f64")]
    pub ci_low: f64,
    #[serde(with = "json_f64")]
    pub ci_high: f64,
    /// Strata contributing nothing because one arm was absent there.
    pub dropped_strata: usize,
}

impl WrResult {
    /// The estimate and the test statistic point in opposite directions.
    pub fn ci_sign_inconsistent(&self) -> bool {
        let l = self.r_w.ln();
        (l > 0.0 && self.z < 0.0) || (l < 0.0 && self.z > 0.0)
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Tally {
    w: u64,
    l: u64,
    tie: u64,
}

impl Tally {
    fn add(&mut self, s: WinStatus) {
        match s {
            WinStatus::Win => self.w += 1,
            WinStatus::Loss => self.l += 1,
            WinStatus::Tie => self.tie += 1,
        }
    }
}

fn odds(p: f64) -> f64 {
    if p >= 1.0 {
        f64::INFINITY
    } else {
        p / (1.0 - p)
    }
}

fn validate_all<R: WinningRule>(cohort: &[PatientRecord<R::Outcome>], rule: &R) -> Result<()> {
    cohort.iter().try_for_each(|p| rule.validate(&p.outcome))
}

/// Sign test on matched pairs: `p_w = N_w / (N_w + N_L)` with a normal
/// approximation, and the CI for the odds `p_w / (1 - p_w)` obtained by
/// transforming the Wald limits of `p_w` (clamped to [0, 1]).
pub fn matched_wr_test<R: WinningRule>(
    pairing: &Pairing,
    cohort: &[PatientRecord<R::Outcome>],
    rule: &R,
) -> Result<WrResult> {
    if pairing.pairs.is_empty() {
        return Err(Error::NoPairsFormable);
    }
    let by_id: HashMap<u32, &PatientRecord<R::Outcome>> = cohort.iter().map(|p| (p.id, p)).collect();
    let lookup = |id: u32| {
        by_id
            .get(&id)
            .copied()
            .ok_or_else(|| Error::invalid(format!("pair refers to unknown patient {id}")))
    };
    let mut tally = Tally::default();
    for pair in &pairing.pairs {
        let (t, c) = (lookup(pair.treatment_id)?, lookup(pair.control_id)?);
        if !t.arm.is_treatment() || c.arm.is_treatment() {
            return Err(Error::invalid("pair arms do not match their roles"));
        }
        rule.validate(&t.outcome)?;
        rule.validate(&c.outcome)?;
        tally.add(rule.compare(&t.outcome, &c.outcome));
    }
    let method = if pairing.stratified {
        WrMethod::MatchedStratified
    } else {
        WrMethod::MatchedUnstratified
    };
    matched_from_counts(method, tally.w, tally.l, tally.tie, pairing.strata_without_pairs)
}

pub fn matched_from_counts(
    method: WrMethod,
    n_w: u64,
    n_l: u64,
    n_tie: u64,
    dropped_strata: usize,
) -> Result<WrResult> {
    let n = n_w + n_l;
    if n == 0 {
        return Err(Degenerate::NoInformativePairs.into());
    }
    let p_w = n_w as f64 / n as f64;
    let se = (p_w * (1.0 - p_w) / n as f64).sqrt();
    let z = if se > 0.0 {
        (p_w - 0.5) / se
    } else if p_w > 0.5 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    };
    let p_low = (p_w - Z_975 * se).max(0.0);
    let p_high = (p_w + Z_975 * se).min(1.0);
    Ok(WrResult {
        method,
        n_w,
        n_l,
        n_tie,
        p_w,
        r_w: odds(p_w),
        z,
        p_value: two_sided_p(z),
        ci_low: odds(p_low),
        ci_high: odds(p_high),
        dropped_strata,
    })
}

/// Per-stratum pieces of the FS statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsStratum {
    pub key: u32,
    /// Patient ids, aligned with `scores`.
    pub ids: Vec<u32>,
    /// `U_i`: wins minus losses of patient `i` against everyone in the stratum.
    pub scores: Vec<i64>,
    pub n: usize,
    /// Treatment patients in the stratum.
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsIntermediate {
    pub strata: Vec<FsStratum>,
    pub t: f64,
    pub v: f64,
}

/// Finkelstein–Schoenfeld test. Every pair within a stratum is scored,
/// whatever the arms; `T` sums the treatment scores and `V` is the
/// permutation variance `sum_k m_k (n_k - m_k) / (n_k (n_k - 1)) * sum_i U_i^2`.
/// The reported ratio counts treatment-versus-control pairs only. Since
/// within-arm comparisons cancel, `T = N_w - N_L`.
pub fn fs_unmatched_test<R: WinningRule>(
    cohort: &[PatientRecord<R::Outcome>],
    stratified: bool,
    rule: &R,
) -> Result<(WrResult, FsIntermediate)> {
    validate_all(cohort, rule)?;
    let mut tally = Tally::default();
    let mut strata = Vec::new();
    let mut dropped = 0;
    let mut t_sum: i64 = 0;
    let mut v_sum = KahanSum::default();
    for (key, members) in group_by_stratum(cohort, stratified) {
        let n = members.len();
        let m = members.iter().filter(|&&i| cohort[i].arm.is_treatment()).count();
        if m == 0 || m == n {
            dropped += 1;
            continue;
        }
        let mut scores = vec![0i64; n];
        for a in 0..n {
            let pa = &cohort[members[a]];
            for b in a + 1..n {
                let pb = &cohort[members[b]];
                let s = rule.compare(&pa.outcome, &pb.outcome);
                scores[a] += s.score();
                scores[b] -= s.score();
                if pa.arm != pb.arm {
                    tally.add(if pa.arm.is_treatment() { s } else { s.mirror() });
                }
            }
        }
        t_sum += members
            .iter()
            .zip(&scores)
            .filter(|(&i, _)| cohort[i].arm.is_treatment())
            .map(|(_, &u)| u)
            .sum::<i64>();
        let sq: f64 = scores.iter().map(|&u| (u * u) as f64).sum();
        v_sum.add((m * (n - m)) as f64 / (n * (n - 1)) as f64 * sq);
        strata.push(FsStratum {
            key,
            ids: members.iter().map(|&i| cohort[i].id).collect(),
            scores,
            n,
            m,
        });
    }
    let t = t_sum as f64;
    let v = v_sum.value();
    let inter = FsIntermediate { strata, t, v };
    if v.is_nan() || v <= 0.0 {
        return Err(Degenerate::NoDiscordantPairs.into());
    }
    if tally.w + tally.l == 0 {
        return Err(Degenerate::NoInformativePairs.into());
    }
    let z = t / v.sqrt();
    let method = if stratified {
        WrMethod::UnmatchedStratified
    } else {
        WrMethod::UnmatchedUnstratified
    };
    let (n_w, n_l) = (tally.w as f64, tally.l as f64);
    let r_w = if tally.l == 0 { f64::INFINITY } else { n_w / n_l };
    let (ci_low, ci_high) = if tally.w == 0 || tally.l == 0 {
        (f64::NAN, f64::NAN)
    } else {
        let log_r = r_w.ln();
        // Test-based standard error ln(R)/z; at R = 1 (so T = 0) use its
        // limit sqrt(V)/N_L.
        let s = if tally.w == tally.l {
            v.sqrt() / n_l
        } else {
            (log_r / z).abs()
        };
        ((log_r - Z_975 * s).exp(), (log_r + Z_975 * s).exp())
    };
    let result = WrResult {
        method,
        n_w: tally.w,
        n_l: tally.l,
        n_tie: tally.tie,
        p_w: n_w / (n_w + n_l),
        r_w,
        z,
        p_value: two_sided_p(z),
        ci_low,
        ci_high,
        dropped_strata: dropped,
    };
    Ok((result, inter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairing::form_matched_pairs;
    use crate::rules::{BinaryPriorityRule, SurvivalRule};
    use crate::types::{Arm, BinaryOutcome, Covariates, MatchedPair, SurvivalOutcome};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matched_arithmetic() {
        let r = matched_from_counts(WrMethod::MatchedStratified, 12, 4, 3, 0).unwrap();
        assert_eq!(r.p_w, 0.75);
        assert!((r.r_w - 3.0).abs() < 1e-12);
        let expected_z = 0.25 / (0.1875f64 / 16.0).sqrt();
        assert!((r.z - expected_z).abs() < 1e-12);
        assert!((r.z - 2.3094).abs() < 1e-4);
        assert!(r.ci_low < r.r_w && r.r_w < r.ci_high);

        let even = matched_from_counts(WrMethod::MatchedStratified, 7, 7, 0, 0).unwrap();
        assert_eq!(even.z, 0.0);
        assert_eq!(even.r_w, 1.0);
        assert_eq!(even.p_value, 1.0);
    }

    #[test]
    fn matched_boundaries() {
        assert_eq!(
            matched_from_counts(WrMethod::MatchedStratified, 0, 0, 9, 0),
            Err(Error::Degenerate(Degenerate::NoInformativePairs))
        );
        let all_win = matched_from_counts(WrMethod::MatchedStratified, 5, 0, 0, 0).unwrap();
        assert_eq!(all_win.z, f64::INFINITY);
        assert_eq!(all_win.p_value, 0.0);
        assert_eq!(all_win.ci_high, f64::INFINITY);
        let all_loss = matched_from_counts(WrMethod::MatchedStratified, 0, 5, 0, 0).unwrap();
        assert_eq!(all_loss.z, f64::NEG_INFINITY);
        assert_eq!(all_loss.ci_low, 0.0);
        // the lower Wald limit of p_w falls below zero and is clamped
        let small = matched_from_counts(WrMethod::MatchedStratified, 1, 3, 0, 0).unwrap();
        assert_eq!(small.ci_low, 0.0);
    }

    fn surv(id: u32, arm: Arm, d: f64, h: f64) -> PatientRecord<SurvivalOutcome> {
        PatientRecord::new(id, arm, Covariates::default(), SurvivalOutcome { death_time: d, hosp_time: h })
    }

    #[test]
    fn matched_from_pairs() {
        let cohort = vec![
            surv(0, Arm::Treatment, 5.0, 9.0),
            surv(1, Arm::Control, 2.0, 9.0),
            surv(2, Arm::Treatment, 1.0, 9.0),
            surv(3, Arm::Control, 2.0, 9.0),
            surv(4, Arm::Treatment, 3.0, 9.0),
            surv(5, Arm::Control, 2.0, 9.0),
        ];
        let pairs = [(0, 1), (2, 3), (4, 5)]
            .map(|(t, c)| MatchedPair { treatment_id: t, control_id: c, stratum: 0 })
            .to_vec();
        let pairing = Pairing {
            pairs,
            stratified: true,
            unpaired_treatment: 0,
            unpaired_control: 0,
            strata_without_pairs: 0,
        };
        let r = matched_wr_test(&pairing, &cohort, &SurvivalRule::default()).unwrap();
        assert_eq!((r.n_w, r.n_l, r.n_tie), (2, 1, 0));

        let mut bad = pairing.clone();
        bad.pairs[0].treatment_id = 1;
        assert!(matched_wr_test(&bad, &cohort, &SurvivalRule::default()).is_err());
    }

    #[test]
    fn matched_all_ties_is_degenerate() {
        let o = BinaryOutcome { death: false, hosp: false };
        let cohort: Vec<_> = (0..6)
            .map(|i| PatientRecord::new(i, if i % 2 == 0 { Arm::Treatment } else { Arm::Control }, Covariates::default(), o))
            .collect();
        let pairing = form_matched_pairs(&cohort, false, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(matched_wr_test(&pairing, &cohort, &BinaryPriorityRule).unwrap_err().is_degenerate());
    }

    #[test]
    fn fs_identical_patients_degenerate() {
        let cohort: Vec<_> = (0..6)
            .map(|i| surv(i, if i < 3 { Arm::Treatment } else { Arm::Control }, 1.0, 2.0))
            .collect();
        assert_eq!(
            fs_unmatched_test(&cohort, false, &SurvivalRule::default()).unwrap_err(),
            Error::Degenerate(Degenerate::NoDiscordantPairs)
        );
    }

    #[test]
    fn fs_complete_separation() {
        let cohort: Vec<_> = (0..6)
            .map(|i| {
                let arm = if i < 3 { Arm::Treatment } else { Arm::Control };
                let d = if arm.is_treatment() { 10.0 + f64::from(i) } else { 1.0 + f64::from(i) };
                surv(i, arm, d, 100.0)
            })
            .collect();
        let (r, inter) = fs_unmatched_test(&cohort, false, &SurvivalRule::default()).unwrap();
        assert_eq!(r.n_l, 0);
        assert_eq!(r.r_w, f64::INFINITY);
        assert!(r.z > 0.0 && r.z.is_finite());
        let treated_sum: i64 = inter.strata[0]
            .ids
            .iter()
            .zip(&inter.strata[0].scores)
            .filter(|(&id, _)| id < 3)
            .map(|(_, &u)| u)
            .sum();
        assert_eq!(inter.t, treated_sum as f64);
        assert_eq!(inter.t, 9.0);
    }

    #[test]
    fn fs_drops_single_arm_strata() {
        let mut cohort: Vec<_> = (0..4)
            .map(|i| surv(i, if i < 2 { Arm::Treatment } else { Arm::Control }, 1.0 + f64::from(i), 9.0))
            .collect();
        cohort.push(surv(4, Arm::Treatment, 3.0, 9.0).with_stratum(3));
        let (r, inter) = fs_unmatched_test(&cohort, true, &SurvivalRule::default()).unwrap();
        assert_eq!(r.dropped_strata, 1);
        assert_eq!(inter.strata.len(), 1);
        assert_eq!(r.method, WrMethod::UnmatchedStratified);
    }

    #[test]
    fn json_field_names() {
        let r = matched_from_counts(WrMethod::MatchedStratified, 5, 0, 1, 2).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        let mut expected = vec![
            "method", "n_w", "n_l", "n_tie", "p_w", "r_w", "z", "p_value", "ci_low", "ci_high", "dropped_strata",
        ];
        expected.sort();
        let mut keys = keys;
        keys.sort();
        assert_eq!(keys, expected);
        assert_eq!(v["r_w"], "Infinity");
        let back: WrResult = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }
}
