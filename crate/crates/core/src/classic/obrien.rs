//! O'Brien's rank-sum-type test for multiple endpoints.

use serde::{Deserialize, Serialize};

use crate::error::{Degenerate, Error, Result};
use crate::stats::{f_upper_tail, json_f64, midranks};
use crate::types::{ContinuousOutcome, PatientRecord, SurvivalOutcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObrienResult {
    #[serde(with = "json_f64")]
    pub f_stat: f64,
    pub df_between: usize,
    pub df_within: usize,
    #[serde(with = "json_f64")]
    pub p_value: f64,
    /// Per-subject sum of endpoint ranks, in input order.
    pub rank_sums: Vec<f64>,
    /// Mean rank sum per group, indexed by group label.
    pub group_means: Vec<f64>,
}

/// `values[i]` holds subject `i`'s endpoints (larger is better) and
/// `groups[i]` its group label in `0..G`. Each endpoint is ranked over the
/// pooled sample with midranks for ties; the per-subject rank sums are then
/// compared across groups by one-way ANOVA.
pub fn obrien_test(values: &[Vec<f64>], groups: &[usize]) -> Result<ObrienResult> {
    let n = values.len();
    if groups.len() != n {
        return Err(Error::invalid("values and groups differ in length"));
    }
    let k = values.first().map_or(0, Vec::len);
    if k == 0 || values.iter().any(|v| v.len() != k) {
        return Err(Error::invalid("every subject needs the same, nonzero number of endpoints"));
    }
    if values.iter().flatten().any(|v| v.is_nan()) {
        return Err(Error::invalid("NaN endpoint value"));
    }
    let n_groups = groups.iter().max().map_or(0, |g| g + 1);
    let mut sizes = vec![0usize; n_groups];
    for &g in groups {
        sizes[g] += 1;
    }
    if n_groups < 2 || sizes.iter().any(|&s| s < 2) {
        return Err(Error::invalid("need at least two groups of two or more subjects"));
    }

    let mut rank_sums = vec![0.0; n];
    for e in 0..k {
        let column: Vec<f64> = values.iter().map(|v| v[e]).collect();
        for (s, r) in rank_sums.iter_mut().zip(midranks(&column)) {
            *s += r;
        }
    }

    let mut group_sums = vec![0.0; n_groups];
    for (&s, &g) in rank_sums.iter().zip(groups) {
        group_sums[g] += s;
    }
    let group_means: Vec<f64> = group_sums.iter().zip(&sizes).map(|(s, &m)| s / m as f64).collect();
    let grand = rank_sums.iter().sum::<f64>() / n as f64;
    let ss_between: f64 = group_means
        .iter()
        .zip(&sizes)
        .map(|(m, &c)| c as f64 * (m - grand).powi(2))
        .sum();
    let ss_within: f64 = rank_sums
        .iter()
        .zip(groups)
        .map(|(s, &g)| (s - group_means[g]).powi(2))
        .sum();
    let df_between = n_groups - 1;
    let df_within = n - n_groups;
    // Rank sums are multiples of 1/2, so exact zero tests are meaningful.
    let (f_stat, p_value) = if ss_within == 0.0 {
        if ss_between == 0.0 {
            return Err(Degenerate::ConstantScores.into());
        }
        (f64::INFINITY, 0.0)
    } else {
        let f = (ss_between / df_between as f64) / (ss_within / df_within as f64);
        (f, f_upper_tail(f, df_between as f64, df_within as f64))
    };
    Ok(ObrienResult {
        f_stat,
        df_between,
        df_within,
        p_value,
        rank_sums,
        group_means,
    })
}

fn arm_groups<O>(cohort: &[PatientRecord<O>]) -> Vec<usize> {
    cohort.iter().map(|p| usize::from(p.arm.is_treatment())).collect()
}

/// Endpoints `(death time, hospitalization time)`; later is better.
/// Group 0 is control, group 1 treatment.
pub fn obrien_survival(cohort: &[PatientRecord<SurvivalOutcome>]) -> Result<ObrienResult> {
    let values: Vec<Vec<f64>> = cohort
        .iter()
        .map(|p| vec![p.outcome.death_time, p.outcome.hosp_time])
        .collect();
    obrien_test(&values, &arm_groups(cohort))
}

/// Endpoints `-y_j / y_base`, so that faster improvement ranks higher.
pub fn obrien_continuous(cohort: &[PatientRecord<ContinuousOutcome>]) -> Result<ObrienResult> {
    if cohort.iter().any(|p| p.outcome.baseline.is_nan() || p.outcome.baseline <= 0.0) {
        return Err(Error::invalid("baseline must be positive"));
    }
    let values: Vec<Vec<f64>> = cohort
        .iter()
        .map(|p| p.outcome.ratios().iter().map(|r| -r).collect())
        .collect();
    obrien_test(&values, &arm_groups(cohort))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_anova() {
        let values = vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]];
        let r = obrien_test(&values, &[0, 0, 1, 1]).unwrap();
        assert_eq!(r.rank_sums, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(r.group_means, vec![1.5, 3.5]);
        assert!((r.f_stat - 8.0).abs() < 1e-12);
        assert_eq!((r.df_between, r.df_within), (1, 2));
        // F(1, 2) upper tail at 8 is 1 - sqrt(8/10)
        assert!((r.p_value - (1.0 - (0.8f64).sqrt())).abs() < 1e-10);
    }

    #[test]
    fn equal_group_means_give_zero() {
        let values = vec![vec![1.0], vec![4.0], vec![2.0], vec![3.0]];
        let r = obrien_test(&values, &[0, 0, 1, 1]).unwrap();
        assert_eq!(r.f_stat, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_scores_are_degenerate() {
        let values = vec![vec![1.0, 2.0]; 4];
        assert_eq!(
            obrien_test(&values, &[0, 0, 1, 1]).unwrap_err(),
            Error::Degenerate(Degenerate::ConstantScores)
        );
    }

    #[test]
    fn perfect_separation() {
        let values = vec![vec![1.0], vec![1.0], vec![3.0], vec![3.0]];
        let r = obrien_test(&values, &[0, 0, 1, 1]).unwrap();
        assert_eq!(r.f_stat, f64::INFINITY);
        assert_eq!(r.p_value, 0.0);
    }

    #[test]
    fn input_checks() {
        assert!(obrien_test(&[vec![1.0], vec![2.0], vec![3.0]], &[0, 0, 1]).is_err());
        assert!(obrien_test(&[vec![1.0], vec![2.0]], &[0, 0]).is_err());
        assert!(obrien_test(&[vec![1.0], vec![2.0, 3.0]], &[0, 1]).is_err());
    }

    proptest! {
        #[test]
        fn monotone_transform_invariance(
            vals in prop::collection::vec(prop::array::uniform2(-5.0f64..5.0), 6..20),
        ) {
            let n = vals.len();
            let groups: Vec<usize> = (0..n).map(|i| i % 2).collect();
            let a: Vec<Vec<f64>> = vals.iter().map(|v| v.to_vec()).collect();
            let b: Vec<Vec<f64>> = vals.iter().map(|v| vec![v[0].exp(), v[1].powi(3)]).collect();
            match (obrien_test(&a, &groups), obrien_test(&b, &groups)) {
                (Ok(x), Ok(y)) => {
                    prop_assert_eq!(x.rank_sums, y.rank_sums);
                    prop_assert_eq!(x.f_stat, y.f_stat);
                }
                (Err(x), Err(y)) => prop_assert_eq!(x, y),
                _ => prop_assert!(false, "one side degenerate"),
            }
        }
    }
}
