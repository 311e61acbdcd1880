//! Prioritized winning rules for the three outcome families.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{BinaryOutcome, ContinuousOutcome, SurvivalOutcome, WinStatus};

/// Compares a treatment patient's outcome against a control patient's.
///
/// `compare(a, b)` must equal `compare(b, a).mirror()`. Implementations may
/// assume both outcomes passed [`WinningRule::validate`].
pub trait WinningRule: Sync {
    type Outcome;

    fn validate(&self, _outcome: &Self::Outcome) -> Result<()> {
        Ok(())
    }

    fn compare(&self, treatment: &Self::Outcome, control: &Self::Outcome) -> WinStatus;
}

/// Larger is better.
fn by_larger(a: f64, b: f64) -> WinStatus {
    match a.partial_cmp(&b) {
        Some(Ordering::Greater) => WinStatus::Win,
        Some(Ordering::Less) => WinStatus::Loss,
        _ => WinStatus::Tie,
    }
}

/// Death first: the patient alive wins; if both or neither died, the patient
/// not hospitalized wins; otherwise tie.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BinaryPriorityRule;

pub fn win_binary(t: &BinaryOutcome, c: &BinaryOutcome) -> WinStatus {
    if t.death != c.death {
        return if c.death { WinStatus::Win } else { WinStatus::Loss };
    }
    if t.hosp != c.hosp {
        return if c.hosp { WinStatus::Win } else { WinStatus::Loss };
    }
    WinStatus::Tie
}

impl WinningRule for BinaryPriorityRule {
    type Outcome = BinaryOutcome;

    fn compare(&self, t: &BinaryOutcome, c: &BinaryOutcome) -> WinStatus {
        win_binary(t, c)
    }
}

/// Which survival component is compared first.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Priority {
    #[default]
    DeathFirst,
    /// Misordered priorities, used to study a rule that contradicts the
    /// data-generating effect.
    HospitalizationFirst,
}

/// How the priority component gates the comparison.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurvivalComparison {
    /// The priority component decides only when it is the first event of
    /// at least one of the two patients; otherwise the pair is decided on the
    /// other component. A later hospitalization is not observed once a
    /// patient has died, so this is the comparison a follow-up actually sees.
    #[default]
    FirstEventGated,
    /// Always compare the priority component first, then the other.
    Lexicographic,
}

/// Longer event-free time wins.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurvivalRule {
    #[serde(default)]
    pub priority: Priority,
    #[serde(default)]
    pub comparison: SurvivalComparison,
}

impl SurvivalRule {
    pub fn new(priority: Priority, comparison: SurvivalComparison) -> Self {
        SurvivalRule {
            priority,
            comparison,
        }
    }

    /// (priority component, other component)
    fn split(&self, o: &SurvivalOutcome) -> (f64, f64) {
        match self.priority {
            Priority::DeathFirst => (o.death_time, o.hosp_time),
            Priority::HospitalizationFirst => (o.hosp_time, o.death_time),
        }
    }
}

pub fn win_survival(t: &SurvivalOutcome, c: &SurvivalOutcome) -> Result<WinStatus> {
    let rule = SurvivalRule::default();
    rule.validate(t)?;
    rule.validate(c)?;
    Ok(rule.compare(t, c))
}

impl WinningRule for SurvivalRule {
    type Outcome = SurvivalOutcome;

    fn validate(&self, o: &SurvivalOutcome) -> Result<()> {
        if o.death_time > 0.0 && o.hosp_time > 0.0 {
            Ok(())
        } else {
            Err(Error::invalid("event times must be positive"))
        }
    }

    fn compare(&self, t: &SurvivalOutcome, c: &SurvivalOutcome) -> WinStatus {
        let (t_first, t_second) = self.split(t);
        let (c_first, c_second) = self.split(c);
        let decide_on_first = match self.comparison {
            SurvivalComparison::Lexicographic => true,
            SurvivalComparison::FirstEventGated => t_first < t_second || c_first < c_second,
        };
        if decide_on_first {
            let s = by_larger(t_first, c_first);
            if s != WinStatus::Tie {
                return s;
            }
        }
        by_larger(t_second, c_second)
    }
}

/// `I_j = 1` iff `y_j / y_base < cutoff`; the fourth entry is "any".
pub fn improvement_indicators(o: &ContinuousOutcome, cutoff: f64) -> Result<[bool; 4]> {
    if o.baseline.is_nan() || o.baseline <= 0.0 {
        return Err(Error::invalid("baseline must be positive"));
    }
    let r = o.ratios();
    let i = [r[0] < cutoff, r[1] < cutoff, r[2] < cutoff];
    Ok([i[0], i[1], i[2], i.iter().any(|&x| x)])
}

fn improvement_count(o: &ContinuousOutcome, cutoff: f64) -> usize {
    o.ratios().iter().filter(|&&r| r < cutoff).count()
}

/// Number of improved components, `sum_j I_j`.
pub fn improvement_score(o: &ContinuousOutcome, cutoff: f64) -> Result<u32> {
    let i = improvement_indicators(o, cutoff)?;
    Ok(i[..3].iter().map(|&x| u32::from(x)).sum())
}

/// Compares precomputed integer scores; higher wins.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HigherScoreWins;

impl WinningRule for HigherScoreWins {
    type Outcome = u32;

    fn compare(&self, t: &u32, c: &u32) -> WinStatus {
        match t.cmp(c) {
            Ordering::Greater => WinStatus::Win,
            Ordering::Less => WinStatus::Loss,
            Ordering::Equal => WinStatus::Tie,
        }
    }
}

/// More components improved (time ratio below the cutoff) wins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImprovementCountRule {
    pub cutoff: f64,
}

pub fn win_continuous(t: &ContinuousOutcome, c: &ContinuousOutcome, cutoff: f64) -> Result<WinStatus> {
    let rule = ImprovementCountRule { cutoff };
    rule.validate(t)?;
    rule.validate(c)?;
    Ok(rule.compare(t, c))
}

impl WinningRule for ImprovementCountRule {
    type Outcome = ContinuousOutcome;

    fn validate(&self, o: &ContinuousOutcome) -> Result<()> {
        improvement_indicators(o, self.cutoff).map(|_| ())
    }

    fn compare(&self, t: &ContinuousOutcome, c: &ContinuousOutcome) -> WinStatus {
        match improvement_count(t, self.cutoff).cmp(&improvement_count(c, self.cutoff)) {
            Ordering::Greater => WinStatus::Win,
            Ordering::Less => WinStatus::Loss,
            Ordering::Equal => WinStatus::Tie,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn surv(d: f64, h: f64) -> SurvivalOutcome {
        SurvivalOutcome {
            death_time: d,
            hosp_time: h,
        }
    }

    fn cont(base: f64, y: [f64; 3]) -> ContinuousOutcome {
        ContinuousOutcome { baseline: base, y }
    }

    #[test]
    fn binary_table() {
        let o = |death, hosp| BinaryOutcome { death, hosp };
        assert_eq!(win_binary(&o(false, false), &o(true, false)), WinStatus::Win);
        assert_eq!(win_binary(&o(false, false), &o(false, false)), WinStatus::Tie);
        assert_eq!(win_binary(&o(true, false), &o(true, true)), WinStatus::Win);
        assert_eq!(win_binary(&o(false, true), &o(true, false)), WinStatus::Win);
        assert_eq!(win_binary(&o(false, true), &o(false, false)), WinStatus::Loss);
        let all = [o(false, false), o(false, true), o(true, false), o(true, true)];
        let mut wins = 0;
        for a in &all {
            for b in &all {
                assert_eq!(win_binary(a, b), win_binary(b, a).mirror());
                wins += usize::from(win_binary(a, b) == WinStatus::Win);
            }
        }
        assert_eq!(wins, 6);
    }

    #[test]
    fn survival_examples() {
        assert_eq!(win_survival(&surv(5.0, 9.0), &surv(2.0, 9.0)).unwrap(), WinStatus::Win);
        assert_eq!(win_survival(&surv(2.0, 3.0), &surv(2.0, 3.0)).unwrap(), WinStatus::Tie);
        assert!(win_survival(&surv(0.0, 3.0), &surv(2.0, 3.0)).is_err());
        // hospitalized first on both sides: death times are not compared
        assert_eq!(win_survival(&surv(5.0, 1.0), &surv(9.0, 2.0)).unwrap(), WinStatus::Loss);
        // lexicographic always looks at deaths first
        let lex = SurvivalRule::new(Priority::DeathFirst, SurvivalComparison::Lexicographic);
        assert_eq!(lex.compare(&surv(5.0, 1.0), &surv(9.0, 2.0)), WinStatus::Loss);
        assert_eq!(lex.compare(&surv(9.0, 1.0), &surv(5.0, 2.0)), WinStatus::Win);
        // equal death times fall through to hospitalization
        assert_eq!(win_survival(&surv(1.0, 4.0), &surv(1.0, 3.0)).unwrap(), WinStatus::Win);
    }

    #[test]
    fn hospitalization_priority() {
        let rule = SurvivalRule::new(Priority::HospitalizationFirst, SurvivalComparison::FirstEventGated);
        // control hospitalized first, which is its first event
        assert_eq!(rule.compare(&surv(1.0, 5.0), &surv(9.0, 2.0)), WinStatus::Win);
        // both die first: deaths decide
        assert_eq!(rule.compare(&surv(1.0, 5.0), &surv(2.0, 9.0)), WinStatus::Loss);
    }

    #[test]
    fn indicator_examples() {
        assert_eq!(
            improvement_indicators(&cont(10.0, [7.0, 9.0, 9.0]), 0.8).unwrap(),
            [true, false, false, true]
        );
        assert_eq!(
            improvement_indicators(&cont(10.0, [8.0, 9.0, 9.0]), 0.8).unwrap(),
            [false, false, false, false]
        );
        assert!(improvement_indicators(&cont(0.0, [1.0; 3]), 0.8).is_err());
        assert!(improvement_indicators(&cont(-1.0, [1.0; 3]), 0.8).is_err());
    }

    #[test]
    fn continuous_examples() {
        let two = cont(10.0, [1.0, 2.0, 9.0]);
        let one = cont(10.0, [1.0, 9.0, 9.0]);
        assert_eq!(win_continuous(&two, &one, 0.8).unwrap(), WinStatus::Win);
        assert_eq!(win_continuous(&one, &one, 0.8).unwrap(), WinStatus::Tie);
        assert!(win_continuous(&one, &cont(0.0, [0.0; 3]), 0.8).is_err());
        assert_eq!(improvement_score(&two, 0.8).unwrap(), 2);
        assert_eq!(HigherScoreWins.compare(&2, &1), WinStatus::Win);
    }

    fn any_surv() -> impl Strategy<Value = SurvivalOutcome> {
        (1u32..20, 1u32..20).prop_map(|(d, h)| surv(f64::from(d), f64::from(h)))
    }

    proptest! {
        #[test]
        fn survival_antisymmetry(a in any_surv(), b in any_surv(), lex in any::<bool>(), hf in any::<bool>()) {
            let rule = SurvivalRule::new(
                if hf { Priority::HospitalizationFirst } else { Priority::DeathFirst },
                if lex { SurvivalComparison::Lexicographic } else { SurvivalComparison::FirstEventGated },
            );
            prop_assert_eq!(rule.compare(&a, &b), rule.compare(&b, &a).mirror());
        }

        #[test]
        fn survival_rank_invariance(a in any_surv(), b in any_surv()) {
            let f = |o: &SurvivalOutcome| surv(o.death_time.powi(3) + 2.0 * o.death_time, o.hosp_time.powi(3) + 2.0 * o.hosp_time);
            let rule = SurvivalRule::default();
            prop_assert_eq!(rule.compare(&a, &b), rule.compare(&f(&a), &f(&b)));
        }

        #[test]
        fn continuous_antisymmetry(
            ya in prop::array::uniform3(0.0f64..12.0),
            yb in prop::array::uniform3(0.0f64..12.0),
            base in prop::sample::select(vec![5.0, 10.0]),
        ) {
            let (a, b) = (cont(base, ya), cont(10.0, yb));
            prop_assert_eq!(win_continuous(&a, &b, 0.8).unwrap(), win_continuous(&b, &a, 0.8).unwrap().mirror());
        }
    }
}
