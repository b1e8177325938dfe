//! Exact binomial tail probabilities.
//!
//! The calibration p-value for a candidate hyperparameter is the lower tail
//! `Pr(Bin(K, eps) <= K * risk_hat)`. Terms are evaluated in log space and
//! accumulated in ascending index order with compensated summation, which
//! keeps absolute error well below 1e-12 for the calibration sample sizes
//! used here.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BinomialError {
    #[error("sample size must be at least 1")]
    ZeroSamples,
    #[error("success probability must lie strictly inside (0, 1), got {0}")]
    BadProbability(f64),
    #[error("risk estimate {0} is outside [0, 1]")]
    BadRisk(f64),
}

/// Lower-tail p-value `Pr(Bin(samples, eps) <= samples * risk_hat)`.
///
/// `risk_hat` must originate as a count divided by `samples`; the implied
/// count is recovered by rounding to the nearest integer.
pub fn binomial_pvalue(risk_hat: f64, samples: usize, eps: f64) -> Result<f64, BinomialError> {
    if samples == 0 {
        return Err(BinomialError::ZeroSamples);
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(BinomialError::BadProbability(eps));
    }
    if !(0.0..=1.0).contains(&risk_hat) {
        return Err(BinomialError::BadRisk(risk_hat));
    }
    let scaled = risk_hat * samples as f64;
    let count = scaled.round();
    debug_assert!(
        (scaled - count).abs() <= 1e-9 * samples as f64,
        "risk_hat * samples = {scaled} is not close to an integer count"
    );
    let count = count as usize;
    Ok(lower_tail(count, samples, eps))
}

/// `Pr(Bin(n, p) <= k)` by exact term summation.
pub fn lower_tail(k: usize, n: usize, p: f64) -> f64 {
    if k >= n {
        return 1.0;
    }
    let ln_fact = ln_factorials(n);
    let ln_p = p.ln();
    let ln_q = (-p).ln_1p();
    let mut sum = 0.0f64;
    let mut comp = 0.0f64; // Kahan compensation
    for i in 0..=k {
        let ln_term =
            ln_fact[n] - ln_fact[i] - ln_fact[n - i] + (i as f64) * ln_p + ((n - i) as f64) * ln_q;
        let term = ln_term.exp();
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum.min(1.0)
}

/// `ln(i!)` for `i = 0..=n`, accumulated with compensated summation.
fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for i in 1..=n {
        let y = (i as f64).ln() - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        out.push(sum);
    }
    out
}
