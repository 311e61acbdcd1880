//! Invariance of the win-ratio and rank tests under monotone time
//! transforms and arm relabelling.

use proptest::prelude::*;
use wintrial_core::classic::obrien_survival;
use wintrial_core::pairing::form_matched_pairs;
use wintrial_core::rules::SurvivalRule;
use wintrial_core::types::{Arm, Covariates};
use wintrial_core::wr::{fs_unmatched_test, matched_wr_test, WrResult};
use wintrial_core::{PatientRecord, SurvivalOutcome};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cohort() -> impl Strategy<Value = Vec<PatientRecord<SurvivalOutcome>>> {
    prop::collection::vec(
        (any::<bool>(), any::<bool>(), any::<bool>(), 1u16..40, 1u16..40),
        4..40,
    )
    .prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(id, (treat, c1, c2, d, h))| {
                let arm = if treat { Arm::Treatment } else { Arm::Control };
                let outcome = SurvivalOutcome {
                    death_time: d as f64 / 8.0,
                    hosp_time: h as f64 / 8.0,
                };
                PatientRecord::new(id as u32, arm, Covariates::new(c1, c2), outcome)
            })
            .collect()
    })
}

fn transform(c: &[PatientRecord<SurvivalOutcome>], f: impl Fn(f64) -> f64) -> Vec<PatientRecord<SurvivalOutcome>> {
    c.iter()
        .map(|p| {
            p.clone().map_outcome(|o| SurvivalOutcome {
                death_time: f(o.death_time),
                hosp_time: f(o.hosp_time),
            })
        })
        .collect()
}

/// Bitwise view, so undefined intervals compare equal.
fn bits(r: &WrResult) -> (u64, u64, u64, [u64; 6]) {
    (
        r.n_w,
        r.n_l,
        r.n_tie,
        [r.p_w, r.r_w, r.z, r.p_value, r.ci_low, r.ci_high].map(f64::to_bits),
    )
}

fn swap_arms(c: &[PatientRecord<SurvivalOutcome>]) -> Vec<PatientRecord<SurvivalOutcome>> {
    c.iter()
        .map(|p| PatientRecord {
            arm: p.arm.swapped(),
            ..p.clone()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn monotone_time_transform_changes_nothing(c in cohort(), stratified in any::<bool>()) {
        let rule = SurvivalRule::default();
        let g = transform(&c, |t| t.powi(3).exp() + 2.0 * t);
        let a = fs_unmatched_test(&c, stratified, &rule).map(|r| bits(&r.0)).ok();
        let b = fs_unmatched_test(&g, stratified, &rule).map(|r| bits(&r.0)).ok();
        prop_assert_eq!(a, b);
        let a = obrien_survival(&c).ok().map(|r| r.f_stat);
        let b = obrien_survival(&g).ok().map(|r| r.f_stat);
        prop_assert_eq!(a, b);
        let pairs = form_matched_pairs(&c, true, &mut ChaCha8Rng::seed_from_u64(5));
        if let Ok(pairs) = pairs {
            let a = matched_wr_test(&pairs, &c, &rule).ok().map(|r| bits(&r));
            let b = matched_wr_test(&pairs, &g, &rule).ok().map(|r| bits(&r));
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn swapping_arms_inverts_the_ratio(c in cohort(), stratified in any::<bool>()) {
        let rule = SurvivalRule::default();
        let s = swap_arms(&c);
        match (fs_unmatched_test(&c, stratified, &rule), fs_unmatched_test(&s, stratified, &rule)) {
            (Ok((a, ia)), Ok((b, ib))) => {
                prop_assert_eq!((a.n_w, a.n_l, a.n_tie), (b.n_l, b.n_w, b.n_tie));
                prop_assert_eq!(ia.t, -ib.t);
                prop_assert!((ia.v - ib.v).abs() <= 1e-12 * ia.v);
                prop_assert!((a.z + b.z).abs() <= 1e-12 * a.z.abs().max(1.0));
                prop_assert!((a.p_value - b.p_value).abs() <= 1e-12);
                if a.n_w > 0 && a.n_l > 0 {
                    prop_assert!((a.r_w * b.r_w - 1.0).abs() <= 1e-12);
                    prop_assert!((a.ci_low * b.ci_high - 1.0).abs() <= 1e-9);
                }
            }
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a.is_ok(), b.is_ok()),
        }
    }
}
