//! Closed-form win probabilities, asymptotic variances and sample sizes for
//! the binary death/hospitalization composite.
//!
//! Sign conventions: `z_alpha = Phi^{-1}(1 - alpha/2)` (two-sided) and
//! `z_beta = Phi^{-1}(1 - power)`, which is negative for power above 0.5.

use nalgebra::{Matrix6, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Degenerate, Error, Result};
use crate::stats::{json_f64, normal_quantile};
use crate::types::BinaryOutcome;

fn check_prob(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} = {p} is not a probability")))
    }
}

fn check_level(alpha: f64, power: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha must lie in (0, 1)"));
    }
    if !(power > 0.0 && power < 1.0) {
        return Err(Error::invalid("power must lie in (0, 1)"));
    }
    Ok(())
}

/// `z_alpha` for a two-sided level.
pub fn z_alpha(alpha: f64) -> f64 {
    normal_quantile(1.0 - alpha / 2.0)
}

/// `z_beta = Phi^{-1}(1 - power)`.
pub fn z_beta(power: f64) -> f64 {
    normal_quantile(1.0 - power)
}

/// Expected arm-wise means of `(Y, X, XY)` for treatment then control,
/// where `Y` is death and `X` hospitalization, independent within a patient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaBinary {
    pub theta: [f64; 6],
}

impl ThetaBinary {
    pub fn new(p_t: f64, q_t: f64, p_c: f64, q_c: f64) -> Result<Self> {
        check_prob("p_t", p_t)?;
        check_prob("q_t", q_t)?;
        check_prob("p_c", p_c)?;
        check_prob("q_c", q_c)?;
        Ok(ThetaBinary {
            theta: [p_t, q_t, p_t * q_t, p_c, q_c, p_c * q_c],
        })
    }

    /// Both arms at death and hospitalization rates of one half.
    pub fn null() -> Self {
        ThetaBinary {
            theta: [0.5, 0.5, 0.25, 0.5, 0.5, 0.25],
        }
    }

    /// Arms exchanged.
    pub fn mirrored(&self) -> Self {
        ThetaBinary {
            theta: mirror(&self.theta),
        }
    }
}

fn mirror(t: &[f64; 6]) -> [f64; 6] {
    [t[3], t[4], t[5], t[0], t[1], t[2]]
}

/// Sample analogue of the theta vector: arm-wise means of `(Y, X, XY)`.
pub fn theta_estimate(treatment: &[BinaryOutcome], control: &[BinaryOutcome]) -> Result<[f64; 6]> {
    if treatment.is_empty() || control.is_empty() {
        return Err(Error::invalid("both arms need at least one subject"));
    }
    let means = |xs: &[BinaryOutcome]| {
        let n = xs.len() as f64;
        let f = |pred: fn(&BinaryOutcome) -> bool| xs.iter().filter(|o| pred(o)).count() as f64 / n;
        [f(|o| o.death), f(|o| o.hosp), f(|o| o.death && o.hosp)]
    };
    let (a, b) = (means(treatment), means(control));
    Ok([a[0], a[1], a[2], b[0], b[1], b[2]])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WinProbs {
    pub p_w: f64,
    pub p_l: f64,
    pub p_tie: f64,
}

/// Win, loss and tie probabilities of one treatment-control pair.
pub fn matched_win_probs(p_t: f64, q_t: f64, p_c: f64, q_c: f64) -> Result<WinProbs> {
    ThetaBinary::new(p_t, q_t, p_c, q_c)?;
    let p_w = p_t * (1.0 - q_t) * p_c * q_c
        + (1.0 - p_t) * q_t * p_c
        + (1.0 - p_t) * (1.0 - q_t) * (1.0 - (1.0 - p_c) * (1.0 - q_c));
    let p_l = p_t * (1.0 - q_t) * (1.0 - p_c)
        + p_t * q_t * (1.0 - p_c * q_c)
        + (1.0 - p_t) * q_t * (1.0 - p_c) * (1.0 - q_c);
    Ok(WinProbs {
        p_w,
        p_l,
        p_tie: 1.0 - p_w - p_l,
    })
}

/// Variance choices for the matched sample size.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchedVariance {
    /// Delta method on the odds `p / (1 - p)`: limit variance `p / (1 - p)^3`.
    #[default]
    DeltaMethod,
    /// Limit variance `p^2 / (1 - p)^2` with unit null variance.
    AsPrinted,
}

/// The two candidate limit variances of `sqrt(n) (p_hat / (1 - p_hat) - R)`:
/// `(p^2 / (1 - p)^2, p / (1 - p)^3)`.
pub fn matched_limit_variance(p: f64) -> (f64, f64) {
    let q = 1.0 - p;
    (p * p / (q * q), p / (q * q * q))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedSampleSize {
    /// Informative (non-tied) pairs, rounded up.
    pub informative_pairs: u64,
    /// Unrounded informative pairs.
    pub exact: f64,
    /// Pairs to enrol, `ceil(n / (1 - p_tie))`.
    pub pairs: u64,
    pub c0: f64,
    pub c1: f64,
}

/// Pairs needed for the matched win-ratio test to reach `power` when the
/// win proportion among informative pairs is `p_a`.
pub fn matched_sample_size(
    p_a: f64,
    p_tie: f64,
    alpha: f64,
    power: f64,
    variance: MatchedVariance,
) -> Result<MatchedSampleSize> {
    check_level(alpha, power)?;
    if !(p_a > 0.0 && p_a < 1.0) {
        return Err(Error::invalid("alternative win proportion must lie in (0, 1)"));
    }
    if !(0.0..1.0).contains(&p_tie) {
        return Err(Error::invalid("tie probability must lie in [0, 1)"));
    }
    if p_a == 0.5 {
        return Err(Error::NoEffect);
    }
    let odds = p_a / (1.0 - p_a);
    let (c0, c1) = match variance {
        MatchedVariance::DeltaMethod => (matched_limit_variance(0.5).1.sqrt(), matched_limit_variance(p_a).1.sqrt()),
        MatchedVariance::AsPrinted => (matched_limit_variance(0.5).0.sqrt(), matched_limit_variance(p_a).0.sqrt()),
    };
    let exact = ((c0 * z_alpha(alpha) - c1 * z_beta(power)) / (odds - 1.0)).powi(2);
    if !exact.is_finite() {
        return Err(Error::NoEffect);
    }
    let informative_pairs = exact.ceil() as u64;
    let pairs = (informative_pairs as f64 / (1.0 - p_tie)).ceil() as u64;
    Ok(MatchedSampleSize {
        informative_pairs,
        exact,
        pairs,
        c0,
        c1,
    })
}

/// The statistic the matched sample size is built on:
/// `sqrt(n) (odds_hat - 1) / C0` over `n` informative pairs, with `C0` from
/// `variance`. Infinite when no pair is lost.
pub fn matched_odds_z(n_w: u64, n_l: u64, variance: MatchedVariance) -> Result<f64> {
    let n = n_w + n_l;
    if n == 0 {
        return Err(Degenerate::NoInformativePairs.into());
    }
    if n_l == 0 {
        return Ok(f64::INFINITY);
    }
    let (printed, delta) = matched_limit_variance(0.5);
    let c0 = match variance {
        MatchedVariance::DeltaMethod => delta.sqrt(),
        MatchedVariance::AsPrinted => printed.sqrt(),
    };
    Ok((n as f64).sqrt() * (n_w as f64 / n_l as f64 - 1.0) / c0)
}

/// Expected probability that a random treatment patient beats a random
/// control patient under the death-then-hospitalization rule.
pub fn unmatched_w(t: &[f64; 6]) -> f64 {
    (1.0 - t[0]) * t[3] + (t[0] - t[2]) * t[5] + (1.0 - t[0] - t[1] + t[2]) * (t[4] - t[5])
}

/// Expected loss probability: the win probability with arms exchanged.
pub fn unmatched_l(t: &[f64; 6]) -> f64 {
    unmatched_w(&mirror(t))
}

fn w_gradient(t: &[f64; 6]) -> [f64; 6] {
    let both_alive_free = 1.0 - t[0] - t[1] + t[2];
    let c_alive_hosp = t[4] - t[5];
    [
        -t[3] + t[5] - c_alive_hosp,
        -c_alive_hosp,
        -t[5] + c_alive_hosp,
        1.0 - t[0],
        both_alive_free,
        (t[0] - t[2]) - both_alive_free,
    ]
}

fn l_gradient(t: &[f64; 6]) -> [f64; 6] {
    mirror(&w_gradient(&mirror(t)))
}

/// Expected win ratio `w / l`.
pub fn g_value(t: &[f64; 6]) -> Result<f64> {
    let l = unmatched_l(t);
    if l <= 0.0 {
        return Err(Error::InfiniteRatio);
    }
    Ok(unmatched_w(t) / l)
}

pub fn unmatched_g(theta: &ThetaBinary) -> Result<f64> {
    g_value(&theta.theta)
}

/// Analytic gradient of `w / l`.
pub fn g_gradient(t: &[f64; 6]) -> Result<[f64; 6]> {
    let (w, l) = (unmatched_w(t), unmatched_l(t));
    if l <= 0.0 {
        return Err(Error::InfiniteRatio);
    }
    let (dw, dl) = (w_gradient(t), l_gradient(t));
    Ok([0, 1, 2, 3, 4, 5].map(|k| (dw[k] * l - w * dl[k]) / (l * l)))
}

/// Covariance of `(Y, X, XY)` means, scaled so the result is the covariance
/// of `sqrt(n_t)` times the six sample means; `ratio_*` are `n_t / n_arm`.
pub fn theta_covariance(t: &[f64; 6], ratio_t: f64, ratio_c: f64) -> Matrix6<f64> {
    let mut cov = Matrix6::zeros();
    for (offset, scale) in [(0, ratio_t), (3, ratio_c)] {
        let (y, x, xy) = (t[offset], t[offset + 1], t[offset + 2]);
        let block = [
            [y * (1.0 - y), xy - y * x, xy * (1.0 - y)],
            [xy - y * x, x * (1.0 - x), xy * (1.0 - x)],
            [xy * (1.0 - y), xy * (1.0 - x), xy * (1.0 - xy)],
        ];
        for i in 0..3 {
            for j in 0..3 {
                cov[(offset + i, offset + j)] = scale * block[i][j];
            }
        }
    }
    cov
}

/// Asymptotic variance `C^2` of `sqrt(n_t) (g(theta_hat) - g(theta))` for
/// arm sizes `n1` (treatment) and `n0` (control).
pub fn unmatched_variance(theta: &ThetaBinary, n1: f64, n0: f64) -> Result<f64> {
    if !(n1 > 0.0 && n0 > 0.0) {
        return Err(Error::invalid("arm sizes must be positive"));
    }
    variance_at(&theta.theta, n1 / n0)
}

/// `C^2` with `n_t / n_c = ratio`.
fn variance_at(t: &[f64; 6], ratio: f64) -> Result<f64> {
    let grad = Vector6::from(g_gradient(t)?);
    let cov = theta_covariance(t, 1.0, ratio);
    Ok((grad.transpose() * cov * grad)[(0, 0)].max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnmatchedSampleSize {
    /// Treatment arm size.
    pub n_t: u64,
    pub n_c: u64,
    #[serde(with = "json_f64")]
    pub exact: f64,
    pub g0: f64,
    pub g1: f64,
    pub c0: f64,
    pub c1: f64,
}

/// Treatment-arm size for the unmatched win-ratio Wald test. `allocation` is
/// controls per treated patient (1 for 1:1); the null reference is
/// [`ThetaBinary::null`].
pub fn unmatched_sample_size(
    theta1: &ThetaBinary,
    alpha: f64,
    power: f64,
    allocation: f64,
) -> Result<UnmatchedSampleSize> {
    check_level(alpha, power)?;
    if !(allocation > 0.0 && allocation.is_finite()) {
        return Err(Error::invalid("allocation must be positive"));
    }
    let null = ThetaBinary::null();
    let g0 = unmatched_g(&null)?;
    let g1 = unmatched_g(theta1)?;
    if g1 == g0 {
        return Err(Error::NoEffect);
    }
    let ratio = 1.0 / allocation;
    let c0 = variance_at(&null.theta, ratio)?.sqrt();
    let c1 = variance_at(&theta1.theta, ratio)?.sqrt();
    let exact = ((c0 * z_alpha(alpha) - c1 * z_beta(power)) / (g1 - 1.0)).powi(2);
    let n_t = exact.ceil() as u64;
    let n_c = (n_t as f64 * allocation).ceil() as u64;
    Ok(UnmatchedSampleSize {
        n_t,
        n_c,
        exact,
        g0,
        g1,
        c0,
        c1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GWaldResult {
    pub g_hat: f64,
    pub z: f64,
    pub p_value: f64,
}

/// Wald test of `g = 1` on arm-wise sample means, standardized by `c0`
/// evaluated at the null reference and the observed allocation.
pub fn unmatched_g_wald_test(treatment: &[BinaryOutcome], control: &[BinaryOutcome]) -> Result<GWaldResult> {
    let est = theta_estimate(treatment, control)?;
    let g_hat = g_value(&est)?;
    let ratio = treatment.len() as f64 / control.len() as f64;
    let c0 = variance_at(&ThetaBinary::null().theta, ratio)?.sqrt();
    let z = (treatment.len() as f64).sqrt() * (g_hat - 1.0) / c0;
    Ok(GWaldResult {
        g_hat,
        z,
        p_value: crate::stats::two_sided_p(z),
    })
}
