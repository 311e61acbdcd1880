//! Finkelstein–Schoenfeld statistics against a direct pairwise oracle.

use std::collections::BTreeMap;

use proptest::prelude::*;
use wintrial_core::rules::{BinaryPriorityRule, SurvivalRule, WinningRule};
use wintrial_core::types::{Arm, Covariates, WinStatus};
use wintrial_core::wr::fs_unmatched_test;
use wintrial_core::{BinaryOutcome, Error, PatientRecord, SurvivalOutcome};

struct Oracle {
    t: i64,
    v: f64,
    n_w: u64,
    n_l: u64,
}

/// Scores each ordered pair on its own, with no mirroring or shared state.
fn oracle<R: WinningRule>(cohort: &[PatientRecord<R::Outcome>], stratified: bool, rule: &R) -> Oracle {
    let mut strata: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, p) in cohort.iter().enumerate() {
        strata.entry(if stratified { p.stratum } else { 0 }).or_default().push(i);
    }
    let score = |s: WinStatus| match s {
        WinStatus::Win => 1i64,
        WinStatus::Loss => -1,
        WinStatus::Tie => 0,
    };
    let (mut t, mut v, mut n_w, mut n_l) = (0i64, 0.0, 0u64, 0u64);
    for members in strata.values() {
        let n = members.len();
        let m = members.iter().filter(|&&i| cohort[i].arm == Arm::Treatment).count();
        if m == 0 || m == n {
            continue;
        }
        let mut sum_sq = 0.0;
        for &i in members {
            let u: i64 = members
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| score(rule.compare(&cohort[i].outcome, &cohort[j].outcome)))
                .sum();
            sum_sq += (u * u) as f64;
            if cohort[i].arm == Arm::Treatment {
                t += u;
                for &j in members {
                    if cohort[j].arm == Arm::Control {
                        match rule.compare(&cohort[i].outcome, &cohort[j].outcome) {
                            WinStatus::Win => n_w += 1,
                            WinStatus::Loss => n_l += 1,
                            WinStatus::Tie => {}
                        }
                    }
                }
            }
        }
        v += (m * (n - m)) as f64 / (n * (n - 1)) as f64 * sum_sq;
    }
    Oracle { t, v, n_w, n_l }
}

fn check<R: WinningRule>(cohort: &[PatientRecord<R::Outcome>], stratified: bool, rule: &R) {
    let o = oracle(cohort, stratified, rule);
    assert_eq!(o.t, o.n_w as i64 - o.n_l as i64);
    match fs_unmatched_test(cohort, stratified, rule) {
        Ok((r, inter)) => {
            assert_eq!(inter.t, o.t as f64);
            assert!((inter.v - o.v).abs() <= 1e-12 * o.v.max(1.0), "{} vs {}", inter.v, o.v);
            assert_eq!((r.n_w, r.n_l), (o.n_w, o.n_l));
            assert_eq!(r.z, o.t as f64 / o.v.sqrt());
        }
        Err(Error::Degenerate(_)) => assert!(o.v == 0.0 || o.n_w + o.n_l == 0),
        Err(e) => panic!("{e}"),
    }
}

const BINARY: [BinaryOutcome; 4] = [
    BinaryOutcome { death: false, hosp: false },
    BinaryOutcome { death: false, hosp: true },
    BinaryOutcome { death: true, hosp: false },
    BinaryOutcome { death: true, hosp: true },
];

/// Every multiset of size `size` over `kinds` types, as nondecreasing index lists.
fn multisets(kinds: usize, size: usize) -> Vec<Vec<usize>> {
    fn rec(kinds: usize, size: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for k in start..kinds {
            cur.push(k);
            rec(kinds, size, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(kinds, size, 0, &mut Vec::new(), &mut out);
    out
}

/// T and V depend on a single-stratum cohort only through its multiset of
/// (arm, outcome), so this covers every binary cohort of up to 8 patients.
#[test]
fn every_binary_cohort_up_to_eight() {
    let mut checked = 0;
    for size in 1..=8 {
        for ms in multisets(8, size) {
            let cohort: Vec<_> = ms
                .iter()
                .enumerate()
                .map(|(id, &k)| {
                    let arm = if k < 4 { Arm::Treatment } else { Arm::Control };
                    PatientRecord::new(id as u32, arm, Covariates::new(false, false), BINARY[k % 4])
                })
                .collect();
            check(&cohort, true, &BinaryPriorityRule);
            check(&cohort, false, &BinaryPriorityRule);
            checked += 1;
        }
    }
    assert_eq!(checked, 12_869);
}

fn survival_cohort(max_n: usize) -> impl Strategy<Value = Vec<PatientRecord<SurvivalOutcome>>> {
    prop::collection::vec((any::<bool>(), any::<bool>(), any::<bool>(), 1u8..5, 1u8..5), 1..=max_n).prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(id, (treat, c1, c2, d, h))| {
                let arm = if treat { Arm::Treatment } else { Arm::Control };
                let outcome = SurvivalOutcome {
                    death_time: d as f64,
                    hosp_time: h as f64 + 0.5,
                };
                PatientRecord::new(id as u32, arm, Covariates::new(c1, c2), outcome)
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn stratified_survival_cohorts_match(cohort in survival_cohort(8)) {
        check(&cohort, true, &SurvivalRule::default());
        check(&cohort, false, &SurvivalRule::default());
    }
}
