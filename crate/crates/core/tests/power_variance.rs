//! Asymptotic variances behind the sample-size formulas, checked against
//! simulated sampling variances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wintrial_core::power::{g_value, matched_limit_variance, theta_estimate, unmatched_variance, ThetaBinary};
use wintrial_core::stats::KahanSum;
use wintrial_core::BinaryOutcome;

fn draw(n: usize, p: f64, q: f64, rng: &mut ChaCha8Rng) -> Vec<BinaryOutcome> {
    (0..n)
        .map(|_| BinaryOutcome {
            death: rng.random_bool(p),
            hosp: rng.random_bool(q),
        })
        .collect()
}

fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().copied().collect::<KahanSum>().value() / n;
    xs.iter().map(|x| (x - mean).powi(2)).collect::<KahanSum>().value() / (n - 1.0)
}

fn empirical_g_variance(p_t: f64, q_t: f64, p_c: f64, q_c: f64, n_t: usize, n_c: usize, seed: u64) -> (f64, f64) {
    let theta = ThetaBinary::new(p_t, q_t, p_c, q_c).unwrap();
    let g = g_value(&theta.theta).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<f64> = (0..2000)
        .map(|_| {
            let t = draw(n_t, p_t, q_t, &mut rng);
            let c = draw(n_c, p_c, q_c, &mut rng);
            let est = theta_estimate(&t, &c).unwrap();
            (n_t as f64).sqrt() * (g_value(&est).unwrap() - g)
        })
        .collect();
    let predicted = unmatched_variance(&theta, n_t as f64, n_c as f64).unwrap();
    (variance(&draws), predicted)
}

#[test]
fn g_variance_at_the_null_reference() {
    let (emp, pred) = empirical_g_variance(0.5, 0.5, 0.5, 0.5, 5000, 5000, 11);
    assert!((emp / pred - 1.0).abs() < 0.10, "empirical {emp} vs {pred}");
}

#[test]
fn g_variance_under_an_alternative_with_unequal_arms() {
    let (emp, pred) = empirical_g_variance(0.2, 0.3, 0.35, 0.45, 4000, 8000, 12);
    assert!((emp / pred - 1.0).abs() < 0.10, "empirical {emp} vs {pred}");
}

/// Sampling variance of `sqrt(n) (odds(p_hat) - odds(p))` for a binomial
/// proportion follows the delta method, not the squared-odds form.
#[test]
fn matched_odds_variance_follows_the_delta_method() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let n = 4000;
    for p in [0.5, 0.6, 0.75] {
        let odds = p / (1.0 - p);
        let draws: Vec<f64> = (0..2000)
            .map(|_| {
                let wins = (0..n).filter(|_| rng.random_bool(p)).count() as f64;
                let ph = wins / n as f64;
                (n as f64).sqrt() * (ph / (1.0 - ph) - odds)
            })
            .collect();
        let emp = variance(&draws);
        let (printed, delta) = matched_limit_variance(p);
        assert!((emp / delta - 1.0).abs() < 0.10, "p = {p}: {emp} vs {delta}");
        assert!((emp / printed - 1.0).abs() > 0.5, "p = {p}: {emp} vs {printed}");
    }
}
