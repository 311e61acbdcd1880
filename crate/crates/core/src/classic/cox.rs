//! Proportional-hazards regression on time to first event, fitted by damped
//! Newton iteration on the Breslow partial likelihood.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Degenerate, Error, Result};
use crate::stats::{json_f64, two_sided_p, Z_975};
use crate::types::{PatientRecord, SurvivalOutcome};

const MAX_ITER: usize = 50;
const SCORE_TOL: f64 = 1e-8;
/// Coefficients are capped here; reaching it signals a monotone likelihood.
pub const BETA_CAP: f64 = 15.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxResult {
    /// Treatment coefficient (log hazard ratio).
    #[serde(with = "json_f64")]
    pub beta_t_hat: f64,
    #[serde(with = "json_f64")]
    pub se: f64,
    #[serde(with = "json_f64")]
    pub z: f64,
    #[serde(with = "json_f64")]
    pub p_value: f64,
    #[serde(with = "json_f64")]
    pub hr: f64,
    #[serde(with = "json_f64")]
    pub ci_low: f64,
    #[serde(with = "json_f64")]
    pub ci_high: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Some coefficient reached the cap, i.e. the likelihood kept increasing.
    pub monotone_likelihood: bool,
    /// All coefficients, treatment first.
    pub coefficients: Vec<f64>,
}

/// Which columns enter the model besides treatment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoxDesign {
    TreatmentOnly,
    #[default]
    TreatmentAndCovariates,
}

/// Times, event indicators and design rows, ordered for risk-set sweeps.
#[derive(Debug, Clone)]
pub struct CoxModel {
    /// Row indices sorted by decreasing time.
    order: Vec<usize>,
    times: Vec<f64>,
    events: Vec<bool>,
    x: DMatrix<f64>,
}

/// Partial log likelihood, score and observed information at one point.
#[derive(Debug, Clone)]
pub struct CoxEval {
    pub loglik: f64,
    pub score: DVector<f64>,
    pub information: DMatrix<f64>,
}

impl CoxModel {
    /// `x` has one row per subject.
    pub fn new(times: Vec<f64>, events: Vec<bool>, x: DMatrix<f64>) -> Result<Self> {
        let n = times.len();
        if events.len() != n || x.nrows() != n {
            return Err(Error::invalid("times, events and design rows differ in length"));
        }
        if x.ncols() == 0 {
            return Err(Error::invalid("design has no columns"));
        }
        if times.iter().any(|t| !t.is_finite()) || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite time or covariate"));
        }
        let mut event_times: Vec<f64> = times.iter().zip(&events).filter(|(_, &e)| e).map(|(&t, _)| t).collect();
        event_times.sort_by(f64::total_cmp);
        event_times.dedup();
        if event_times.len() < 2 {
            return Err(Degenerate::TooFewEvents.into());
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| times[b].total_cmp(&times[a]));
        Ok(CoxModel { order, times, events, x })
    }

    pub fn n_params(&self) -> usize {
        self.x.ncols()
    }

    pub fn loglik(&self, beta: &DVector<f64>) -> f64 {
        self.sweep(beta, false).loglik
    }

    pub fn evaluate(&self, beta: &DVector<f64>) -> CoxEval {
        self.sweep(beta, true)
    }

    /// One pass over subjects in decreasing time; tied times join the risk
    /// set together before their events are counted (Breslow).
    fn sweep(&self, beta: &DVector<f64>, derivatives: bool) -> CoxEval {
        let p = self.n_params();
        let eta = &self.x * beta;
        let mut s0 = 0.0;
        let mut s1 = DVector::zeros(p);
        let mut s2 = DMatrix::zeros(p, p);
        let mut loglik = 0.0;
        let mut score = DVector::zeros(p);
        let mut info = DMatrix::zeros(p, p);
        let n = self.order.len();
        let mut start = 0;
        while start < n {
            let t = self.times[self.order[start]];
            let mut end = start;
            while end < n && self.times[self.order[end]] == t {
                let i = self.order[end];
                let w = eta[i].exp();
                s0 += w;
                if derivatives {
                    let xi = self.x.row(i).transpose();
                    s1.axpy(w, &xi, 1.0);
                    s2.ger(w, &xi, &xi, 1.0);
                }
                end += 1;
            }
            let mut d = 0.0;
            for &i in &self.order[start..end] {
                if self.events[i] {
                    d += 1.0;
                    loglik += eta[i];
                    if derivatives {
                        score += self.x.row(i).transpose();
                    }
                }
            }
            if d > 0.0 {
                loglik -= d * s0.ln();
                if derivatives {
                    let mean = &s1 / s0;
                    score.axpy(-d, &mean, 1.0);
                    info += (&s2 / s0 - &mean * mean.transpose()) * d;
                }
            }
            start = end;
        }
        CoxEval {
            loglik,
            score,
            information: info,
        }
    }
}

fn solve(info: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(ch) = info.clone().cholesky() {
        return Some(ch.solve(rhs));
    }
    info.clone().lu().solve(rhs)
}

/// Fit on explicit times, event indicators and design columns. The first
/// column is reported as the treatment effect.
pub fn cox_fit_observed(times: Vec<f64>, events: Vec<bool>, x: DMatrix<f64>) -> Result<CoxResult> {
    let model = CoxModel::new(times, events, x)?;
    let p = model.n_params();
    let mut beta = DVector::zeros(p);
    let mut eval = model.evaluate(&beta);
    let mut iterations = 0;
    let mut converged = eval.score.amax() < SCORE_TOL;
    while !converged && iterations < MAX_ITER {
        iterations += 1;
        let step = match solve(&eval.information, &eval.score) {
            Some(s) if s.iter().all(|v| v.is_finite()) => s,
            _ => eval.score.clone(),
        };
        let mut scale = 1.0;
        let mut next;
        loop {
            next = (&beta + &step * scale).map(|b| b.clamp(-BETA_CAP, BETA_CAP));
            let ll = model.loglik(&next);
            if ll >= eval.loglik - 1e-12 * eval.loglik.abs().max(1.0) || scale < 1e-10 {
                break;
            }
            scale *= 0.5;
        }
        let moved = (&next - &beta).amax();
        beta = next;
        eval = model.evaluate(&beta);
        converged = eval.score.amax() < SCORE_TOL;
        if moved == 0.0 {
            break;
        }
    }
    let monotone_likelihood = beta.iter().any(|b| b.abs() >= BETA_CAP);
    let cov = eval
        .information
        .clone()
        .try_inverse()
        .ok_or(Degenerate::SingularInformation)?;
    let var = cov[(0, 0)];
    if !var.is_finite() || var <= 0.0 {
        return Err(Degenerate::SingularInformation.into());
    }
    let b = beta[0];
    let se = var.sqrt();
    let z = b / se;
    Ok(CoxResult {
        beta_t_hat: b,
        se,
        z,
        p_value: two_sided_p(z),
        hr: b.exp(),
        ci_low: (b - Z_975 * se).exp(),
        ci_high: (b + Z_975 * se).exp(),
        iterations,
        converged,
        monotone_likelihood,
        coefficients: beta.iter().copied().collect(),
    })
}

/// Cox model for time to first event, `min(death, hospitalization)`, with
/// complete follow-up.
pub fn cox_fit(cohort: &[PatientRecord<SurvivalOutcome>], design: CoxDesign) -> Result<CoxResult> {
    let cols = match design {
        CoxDesign::TreatmentOnly => 1,
        CoxDesign::TreatmentAndCovariates => 3,
    };
    let x = DMatrix::from_fn(cohort.len(), cols, |i, j| {
        let p = &cohort[i];
        let v = match j {
            0 => p.arm.is_treatment(),
            1 => p.covariates.x_cov1,
            _ => p.covariates.x_cov2,
        };
        f64::from(u8::from(v))
    });
    let times = cohort.iter().map(|p| p.outcome.first_event_time()).collect();
    cox_fit_observed(times, vec![true; cohort.len()], x)
}
