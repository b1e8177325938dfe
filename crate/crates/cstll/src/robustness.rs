//! Quantitative robustness semantics and scalar formula measures.
//!
//! Robustness assigns each (formula, trace, start step) a real value whose
//! sign decides satisfaction and whose magnitude measures margin:
//!
//! - atom `a . x > b`      ->  `a . x_t - b`
//! - AND                   ->  min over children
//! - OR                    ->  max over children
//! - `F[t1,t2] phi` at `t` ->  max over `t' in [t+t1, min(t+t2, T-1)]`
//! - `G[t1,t2] phi` at `t` ->  min over the same clamped window
//!
//! Windows are clamped to the trace end; a window that starts past the end
//! is an error rather than a default value, since a silent default would
//! corrupt the min/max semantics.
//!
//! On top of robustness, this module provides the classification rule, the
//! sigmoid-normalized quality and pairwise-distance measures, and
//! classification accuracy over a labeled dataset.

use thiserror::Error;

use crate::formula::Formula;
use crate::trace::{Label, LabeledDataset, Trace};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("start step {t} out of range for trace of length {len}")]
    TimeOutOfRange { t: usize, len: usize },
    #[error("temporal window starting at step {window_start} is empty for trace of length {len}")]
    EmptyWindow { window_start: usize, len: usize },
    #[error("atom has {weights} weights but trace has {channels} channels")]
    ChannelMismatch { weights: usize, channels: usize },
}

/// Robustness value; finite by construction over finite traces and atoms.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Robustness(f64);

impl Robustness {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Largest f64 strictly below 1; sigmoid outputs saturate here so the
/// normalized measures stay inside the open unit interval.
const SIGMOID_MAX: f64 = 1.0 - f64::EPSILON / 2.0;

/// Logistic function saturated into the open interval (0, 1).
pub fn sigmoid(x: f64) -> f64 {
    let s = 1.0 / (1.0 + (-x).exp());
    s.clamp(f64::MIN_POSITIVE, SIGMOID_MAX)
}

/// Robustness of `formula` on `trace` evaluated from step `t`.
pub fn eval_robustness(formula: &Formula, trace: &Trace, t: usize) -> Result<Robustness, EvalError> {
    let len = trace.len();
    if t >= len {
        return Err(EvalError::TimeOutOfRange { t, len });
    }
    eval_at(formula, trace, t).map(Robustness)
}

fn eval_at(formula: &Formula, trace: &Trace, t: usize) -> Result<f64, EvalError> {
    match formula {
        Formula::Atom(atom) => {
            if atom.weights.len() != trace.num_channels() {
                return Err(EvalError::ChannelMismatch {
                    weights: atom.weights.len(),
                    channels: trace.num_channels(),
                });
            }
            Ok(trace.dot_state(&atom.weights, t) - atom.threshold)
        }
        Formula::And(children) => {
            let mut best = f64::INFINITY;
            for child in children {
                best = best.min(eval_at(child, trace, t)?);
            }
            Ok(best)
        }
        Formula::Or(children) => {
            let mut best = f64::NEG_INFINITY;
            for child in children {
                best = best.max(eval_at(child, trace, t)?);
            }
            Ok(best)
        }
        Formula::Eventually { start, end, child } => {
            let window = clamped_window(trace.len(), t, *start, end.resolve(trace.len()))?;
            let mut best = f64::NEG_INFINITY;
            for step in window {
                best = best.max(eval_at(child, trace, step)?);
            }
            Ok(best)
        }
        Formula::Always { start, end, child } => {
            let window = clamped_window(trace.len(), t, *start, end.resolve(trace.len()))?;
            let mut best = f64::INFINITY;
            for step in window {
                best = best.min(eval_at(child, trace, step)?);
            }
            Ok(best)
        }
    }
}

/// Steps `[t+t1, min(t+t2, T-1)]`; empty after clamping is an error.
fn clamped_window(
    len: usize,
    t: usize,
    t1: usize,
    t2: usize,
) -> Result<std::ops::RangeInclusive<usize>, EvalError> {
    let lo = t + t1;
    let hi = (t + t2).min(len - 1);
    if lo > hi {
        return Err(EvalError::EmptyWindow {
            window_start: lo,
            len,
        });
    }
    Ok(lo..=hi)
}

/// Classification rule: positive iff robustness at step 0 is strictly
/// positive. Zero robustness maps to the negative class, since satisfaction
/// requires a strictly positive margin.
pub fn classify(formula: &Formula, trace: &Trace) -> Result<Label, EvalError> {
    let rho = eval_robustness(formula, trace, 0)?;
    Ok(if rho.value() > 0.0 {
        Label::Positive
    } else {
        Label::Negative
    })
}

/// Robustness at step 0 of one formula across every trace in a dataset.
pub fn robustness_vector(formula: &Formula, dataset: &LabeledDataset) -> Result<Vec<f64>, EvalError> {
    dataset
        .iter()
        .map(|(trace, _)| eval_robustness(formula, trace, 0).map(Robustness::value))
        .collect()
}

/// Semantic distance between two formulas over a dataset:
/// `sigmoid(mean_i | |rho_1(i)| - |rho_2(i)| |)`, in [0.5, 1).
///
/// The nested absolute values compare robustness magnitudes, so a formula
/// and its semantic negation sit at the minimum distance 0.5.
pub fn distance(f1: &Formula, f2: &Formula, dataset: &LabeledDataset) -> Result<f64, EvalError> {
    let r1 = robustness_vector(f1, dataset)?;
    let r2 = robustness_vector(f2, dataset)?;
    Ok(distance_from_robustness(&r1, &r2))
}

/// Distance kernel over precomputed robustness vectors.
pub fn distance_from_robustness(r1: &[f64], r2: &[f64]) -> f64 {
    debug_assert_eq!(r1.len(), r2.len());
    let mean = r1
        .iter()
        .zip(r2)
        .map(|(a, b)| (a.abs() - b.abs()).abs())
        .sum::<f64>()
        / r1.len() as f64;
    sigmoid(mean)
}

/// Formula quality: `sigmoid(mean robustness at step 0)`, in (0, 1).
pub fn quality(formula: &Formula, dataset: &LabeledDataset) -> Result<f64, EvalError> {
    let r = robustness_vector(formula, dataset)?;
    Ok(quality_from_robustness(&r))
}

/// Quality kernel over a precomputed robustness vector.
pub fn quality_from_robustness(r: &[f64]) -> f64 {
    sigmoid(r.iter().sum::<f64>() / r.len() as f64)
}

/// Fraction of dataset traces whose classification matches their label.
pub fn accuracy(formula: &Formula, dataset: &LabeledDataset) -> Result<f64, EvalError> {
    let mut correct = 0usize;
    for (trace, label) in dataset.iter() {
        if classify(formula, trace)? == *label {
            correct += 1;
        }
    }
    Ok(correct as f64 / dataset.len() as f64)
}
