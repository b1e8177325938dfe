//! Shared test oracles, independent of the library's implementation paths.
//!
//! - a naive reference robustness evaluator that recurses structurally and
//!   enumerates every window position;
//! - a Boolean satisfaction evaluator implementing the qualitative
//!   semantics directly;
//! - generators for random evaluable formulas and traces;
//! - an exact binomial CDF in arbitrary-precision rational arithmetic.

#![allow(dead_code)]

use cstll::formula::{Atom, Formula, IntervalEnd};
use cstll::trace::Trace;
use rand::Rng;

/// Reference robustness: direct transcription of the semantics with
/// explicit window enumeration. Panics on out-of-range evaluation, which
/// the generators below never produce.
pub fn reference_robustness(formula: &Formula, trace: &Trace, t: usize) -> f64 {
    let last = trace.len() - 1;
    match formula {
        Formula::Atom(atom) => {
            let mut dot = 0.0;
            for (ch, w) in atom.weights.iter().enumerate() {
                dot += w * trace.value(ch, t);
            }
            dot - atom.threshold
        }
        Formula::And(children) => children
            .iter()
            .map(|c| reference_robustness(c, trace, t))
            .fold(f64::INFINITY, f64::min),
        Formula::Or(children) => children
            .iter()
            .map(|c| reference_robustness(c, trace, t))
            .fold(f64::NEG_INFINITY, f64::max),
        Formula::Eventually { start, end, child } => {
            let lo = t + start;
            let hi = (t + end.resolve(trace.len())).min(last);
            assert!(lo <= hi, "generator must produce evaluable formulas");
            (lo..=hi)
                .map(|step| reference_robustness(child, trace, step))
                .fold(f64::NEG_INFINITY, f64::max)
        }
        Formula::Always { start, end, child } => {
            let lo = t + start;
            let hi = (t + end.resolve(trace.len())).min(last);
            assert!(lo <= hi, "generator must produce evaluable formulas");
            (lo..=hi)
                .map(|step| reference_robustness(child, trace, step))
                .fold(f64::INFINITY, f64::min)
        }
    }
}

/// Qualitative satisfaction: atoms strict, conjunction all, disjunction
/// any, Eventually exists, Always for-all over the clamped window.
pub fn boolean_satisfaction(formula: &Formula, trace: &Trace, t: usize) -> bool {
    let last = trace.len() - 1;
    match formula {
        Formula::Atom(atom) => {
            let mut dot = 0.0;
            for (ch, w) in atom.weights.iter().enumerate() {
                dot += w * trace.value(ch, t);
            }
            dot > atom.threshold
        }
        Formula::And(children) => children.iter().all(|c| boolean_satisfaction(c, trace, t)),
        Formula::Or(children) => children.iter().any(|c| boolean_satisfaction(c, trace, t)),
        Formula::Eventually { start, end, child } => {
            let lo = t + start;
            let hi = (t + end.resolve(trace.len())).min(last);
            (lo..=hi).any(|step| boolean_satisfaction(child, trace, step))
        }
        Formula::Always { start, end, child } => {
            let lo = t + start;
            let hi = (t + end.resolve(trace.len())).min(last);
            (lo..=hi).all(|step| boolean_satisfaction(child, trace, step))
        }
    }
}

/// Random formula over `d` channels that is evaluable at step 0 of any
/// trace with `t_len` steps: every temporal window is non-empty at every
/// step the node can be evaluated from.
pub fn random_formula(
    rng: &mut impl Rng,
    depth: usize,
    max_arity: usize,
    d: usize,
    t_len: usize,
) -> Formula {
    random_formula_at(rng, depth, max_arity, d, t_len, 0)
}

fn random_formula_at(
    rng: &mut impl Rng,
    depth: usize,
    max_arity: usize,
    d: usize,
    t_len: usize,
    max_start: usize,
) -> Formula {
    let last = t_len - 1;
    let kind = if depth == 0 { 0 } else { rng.random_range(0..5) };
    match kind {
        1 | 2 => {
            let arity = rng.random_range(2..=max_arity.max(2));
            let children: Vec<Formula> = (0..arity)
                .map(|_| random_formula_at(rng, depth - 1, max_arity, d, t_len, max_start))
                .collect();
            if kind == 1 {
                Formula::and(children).expect("arity >= 2")
            } else {
                Formula::or(children).expect("arity >= 2")
            }
        }
        3 | 4 => {
            // start must keep the window non-empty from any evaluation step
            // up to max_start, after clamping.
            let start = rng.random_range(0..=(last - max_start));
            let end = if rng.random_range(0..5) == 0 {
                IntervalEnd::Unbounded
            } else {
                IntervalEnd::Step(rng.random_range(start..=last))
            };
            let child_max_start = (max_start + end.resolve(t_len)).min(last);
            let child = random_formula_at(rng, depth - 1, max_arity, d, t_len, child_max_start);
            if kind == 3 {
                Formula::eventually(start, end, child).expect("valid interval")
            } else {
                Formula::always(start, end, child).expect("valid interval")
            }
        }
        _ => Formula::Atom(random_atom(rng, d)),
    }
}

pub fn random_atom(rng: &mut impl Rng, d: usize) -> Atom {
    let mut weights: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
    if weights.iter().all(|&w| w == 0.0) {
        weights[0] = 1.0;
    }
    let threshold = rng.random_range(-3.0..3.0);
    Atom::new(weights, threshold).expect("nonzero weights")
}

/// Random trace with values in [-scale, scale].
pub fn random_trace(rng: &mut impl Rng, d: usize, t_len: usize, scale: f64) -> Trace {
    let channels: Vec<Vec<f64>> = (0..d)
        .map(|_| (0..t_len).map(|_| rng.random_range(-scale..scale)).collect())
        .collect();
    let names: Vec<String> = (0..d).map(|ch| format!("ch{ch}")).collect();
    Trace::new(channels, names).expect("finite values")
}

/// Exact lower-tail binomial CDF values `Pr(Bin(n, p) <= k)` for all
/// `k = 0..=n`, in rational arithmetic treating `p` as the exact rational
/// value of the f64. Terms advance by the multiplicative recurrence
/// `term_{i+1} = term_i * (n-i)/(i+1) * p/q`, all exact.
pub fn rational_binomial_cdf_all(n: usize, p: f64) -> Vec<f64> {
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, ToPrimitive};

    let p = BigRational::from_float(p).expect("finite probability");
    let q = BigRational::one() - &p;
    let ratio = &p / &q;
    // term at i = 0 is q^n
    let mut term = BigRational::one();
    for _ in 0..n {
        term *= &q;
    }
    let mut sum = term.clone();
    let mut out = Vec::with_capacity(n + 1);
    out.push(sum.to_f64().expect("fits in f64"));
    for i in 0..n {
        term = term * BigRational::from(BigInt::from(n - i)) * &ratio
            / BigRational::from(BigInt::from(i + 1));
        sum += &term;
        out.push(sum.to_f64().expect("fits in f64"));
    }
    out
}
