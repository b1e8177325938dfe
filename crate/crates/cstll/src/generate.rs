//! Sequential formula-set generation.
//!
//! Candidate formulas are trained one after another from derived seeds; each
//! candidate enters the set only if its structural complexity is below the
//! `max_complexity` threshold and its semantic distance to every formula
//! already accepted exceeds the `min_diversity` threshold. Generation stops
//! early once the mean quality of the accepted set exceeds `stop_quality`,
//! and always stops after `l_max` iterations.
//!
//! The complexity check runs before the diversity check: it is cheap, and
//! the accept/reject outcome is identical either way. The stopping rule is
//! evaluated at the end of every iteration, on the unchanged set when the
//! candidate was rejected.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{complexity, format_formula, Formula};
use crate::learn::{train_formula, LearnError, TemplateConfig};
use crate::robustness::{
    accuracy, distance, distance_from_robustness, quality, quality_from_robustness,
    robustness_vector, EvalError,
};
use crate::seed::derive_seed;
use crate::trace::LabeledDataset;

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("invalid thresholds: {0}")]
    InvalidHyper(String),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("failed to write formula set: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to encode formula set: {0}")]
    Encode(#[from] serde_json::Error),
}

/// The threshold triple steering acceptance and stopping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    /// Complexity threshold: accept only formulas with `H < max_complexity`.
    /// May be infinite (no complexity check).
    pub max_complexity: f64,
    /// Diversity threshold: accept only candidates farther than this from
    /// every accepted formula. Zero disables the check.
    pub min_diversity: f64,
    /// Stop once the mean set quality exceeds this. May be infinite (never
    /// stop early).
    pub stop_quality: f64,
}

impl Hyper {
    pub fn new(max_complexity: f64, min_diversity: f64, stop_quality: f64) -> Result<Self, GenerateError> {
        let h = Hyper {
            max_complexity,
            min_diversity,
            stop_quality,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<(), GenerateError> {
        if !(self.max_complexity > 0.0) {
            return Err(GenerateError::InvalidHyper(format!(
                "max_complexity must be positive (possibly infinite), got {}",
                self.max_complexity
            )));
        }
        if !(self.min_diversity >= 0.0) || !self.min_diversity.is_finite() {
            return Err(GenerateError::InvalidHyper(format!(
                "min_diversity must be finite and non-negative, got {}",
                self.min_diversity
            )));
        }
        // stop_quality == 0 is meaningful: it stops at the first acceptance.
        if !(self.stop_quality >= 0.0) {
            return Err(GenerateError::InvalidHyper(format!(
                "stop_quality must be non-negative (possibly infinite), got {}",
                self.stop_quality
            )));
        }
        Ok(())
    }

    /// The unconstrained fallback: accept everything, never stop early.
    pub fn fallback() -> Self {
        Hyper {
            max_complexity: f64::INFINITY,
            min_diversity: 0.0,
            stop_quality: f64::INFINITY,
        }
    }

    pub fn is_fallback(&self) -> bool {
        self.max_complexity == f64::INFINITY
            && self.min_diversity == 0.0
            && self.stop_quality == f64::INFINITY
    }
}

/// Why a candidate was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectionReason {
    Complexity,
    Diversity,
}

impl RejectionReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectionReason::Complexity => "complexity",
            RejectionReason::Diversity => "diversity",
        }
    }
}

/// An accepted formula with the measures recorded at acceptance time.
#[derive(Debug, Clone)]
pub struct AcceptedFormula {
    pub formula: Formula,
    pub complexity: f64,
    /// Quality on the generation dataset.
    pub quality: f64,
    /// Seed of the training run that produced this formula.
    pub seed: u64,
    /// 1-based generation iteration.
    pub iteration: usize,
}

/// One line of the generation log.
#[derive(Debug, Clone)]
pub struct GenerationRecord {
    pub iteration: usize,
    pub candidate: Formula,
    pub accepted: bool,
    pub reason: Option<RejectionReason>,
    pub complexity: f64,
    /// Minimum distance to the formulas accepted before this iteration;
    /// absent while the set is empty.
    pub min_distance: Option<f64>,
    /// Mean set quality after this iteration's acceptance step.
    pub set_quality_after: f64,
}

/// Ordered accepted formulas plus the full per-iteration log.
#[derive(Debug, Clone, Default)]
pub struct FormulaSet {
    pub accepted: Vec<AcceptedFormula>,
    pub log: Vec<GenerationRecord>,
}

impl FormulaSet {
    pub fn len(&self) -> usize {
        self.accepted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accepted.is_empty()
    }

    pub fn formulas(&self) -> impl Iterator<Item = &Formula> {
        self.accepted.iter().map(|a| &a.formula)
    }

    /// Recompute every set invariant from scratch: complexity below the
    /// threshold, all pairwise distances above the threshold, and the size
    /// cap. Returns a description of the first violation.
    pub fn verify_invariants(
        &self,
        dataset: &LabeledDataset,
        hyper: &Hyper,
        capacity: usize,
        l_max: usize,
    ) -> Result<(), String> {
        if self.accepted.len() > l_max {
            return Err(format!(
                "set holds {} formulas, cap is {l_max}",
                self.accepted.len()
            ));
        }
        for (i, a) in self.accepted.iter().enumerate() {
            let h = complexity(&a.formula, capacity).map_err(|e| e.to_string())?;
            if hyper.max_complexity.is_finite() && !(h < hyper.max_complexity) {
                return Err(format!(
                    "formula {i} has complexity {h}, threshold {}",
                    hyper.max_complexity
                ));
            }
            for (j, b) in self.accepted.iter().enumerate().skip(i + 1) {
                let d = distance(&a.formula, &b.formula, dataset).map_err(|e| e.to_string())?;
                if !(d > hyper.min_diversity) {
                    return Err(format!(
                        "formulas {i} and {j} have distance {d}, threshold {}",
                        hyper.min_diversity
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Acceptance rule over precomputed measures: complexity first, then
/// diversity against every accepted formula.
fn acceptance_decision(
    h: f64,
    min_distance: Option<f64>,
    hyper: &Hyper,
) -> (bool, Option<RejectionReason>) {
    if !(h < hyper.max_complexity) {
        return (false, Some(RejectionReason::Complexity));
    }
    if let Some(min_d) = min_distance {
        if !(min_d > hyper.min_diversity) {
            return (false, Some(RejectionReason::Diversity));
        }
    }
    (true, None)
}

/// Decide whether `candidate` may join `current`, and why not otherwise.
pub fn accept_candidate(
    candidate: &Formula,
    current: &FormulaSet,
    dataset: &LabeledDataset,
    hyper: &Hyper,
    capacity: usize,
) -> Result<(bool, Option<RejectionReason>), GenerateError> {
    let h = complexity(candidate, capacity)
        .map_err(|e| GenerateError::InvalidHyper(e.to_string()))?;
    let min_d = min_distance_to_set(candidate, current, dataset)?;
    Ok(acceptance_decision(h, min_d, hyper))
}

fn min_distance_to_set(
    candidate: &Formula,
    current: &FormulaSet,
    dataset: &LabeledDataset,
) -> Result<Option<f64>, EvalError> {
    let mut min_d: Option<f64> = None;
    for a in &current.accepted {
        let d = distance(candidate, &a.formula, dataset)?;
        min_d = Some(match min_d {
            Some(m) => m.min(d),
            None => d,
        });
    }
    Ok(min_d)
}

/// Mean quality of the accepted formulas; 0 for an empty set, so no
/// positive stopping threshold can fire before the first acceptance.
pub fn set_quality(set: &FormulaSet, dataset: &LabeledDataset) -> Result<f64, EvalError> {
    if set.accepted.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for a in &set.accepted {
        total += quality(&a.formula, dataset)?;
    }
    Ok(total / set.accepted.len() as f64)
}

/// Stopping rule: quality above the threshold, or the iteration budget
/// exhausted.
pub fn should_stop(
    set: &FormulaSet,
    dataset: &LabeledDataset,
    stop_quality: f64,
    iteration: usize,
    l_max: usize,
) -> Result<bool, EvalError> {
    Ok(set_quality(set, dataset)? > stop_quality || iteration >= l_max)
}

/// A trained candidate with the measures generation needs, cached so the
/// same candidate stream can be replayed under many thresholds.
#[derive(Debug, Clone)]
pub struct TrainedCandidate {
    pub formula: Formula,
    /// Complexity at the template capacity.
    pub complexity: f64,
    /// Quality on the generation dataset.
    pub quality: f64,
    /// Robustness at step 0 across the generation dataset, for distances.
    pub robustness: Vec<f64>,
    pub seed: u64,
}

/// Supplies the candidate at each 1-based iteration.
pub trait CandidateSource {
    fn candidate(&mut self, iteration: usize) -> Result<Arc<TrainedCandidate>, GenerateError>;
}

/// Trains candidates on demand from seeds derived off a run seed.
pub struct TrainingSource<'a> {
    dataset: &'a LabeledDataset,
    config: &'a TemplateConfig,
    run_seed: u64,
}

impl<'a> TrainingSource<'a> {
    pub fn new(dataset: &'a LabeledDataset, config: &'a TemplateConfig, run_seed: u64) -> Self {
        TrainingSource {
            dataset,
            config,
            run_seed,
        }
    }
}

impl CandidateSource for TrainingSource<'_> {
    fn candidate(&mut self, iteration: usize) -> Result<Arc<TrainedCandidate>, GenerateError> {
        let seed = derive_seed(self.run_seed, iteration as u64);
        let formula = train_formula(self.dataset, self.config, seed)?;
        let h = complexity(&formula, self.config.num_temporal)
            .map_err(|e| GenerateError::InvalidHyper(e.to_string()))?;
        let robustness = robustness_vector(&formula, self.dataset)?;
        let q = quality_from_robustness(&robustness);
        Ok(Arc::new(TrainedCandidate {
            formula,
            complexity: h,
            quality: q,
            robustness,
            seed,
        }))
    }
}

/// Memoizes a [`CandidateSource`] so several generation runs over the same
/// dataset and seed stream share their training work.
pub struct CachingSource<S: CandidateSource> {
    inner: S,
    cache: Vec<Option<Arc<TrainedCandidate>>>,
}

impl<S: CandidateSource> CachingSource<S> {
    pub fn new(inner: S, l_max: usize) -> Self {
        CachingSource {
            inner,
            cache: vec![None; l_max],
        }
    }
}

impl<S: CandidateSource> CandidateSource for CachingSource<S> {
    fn candidate(&mut self, iteration: usize) -> Result<Arc<TrainedCandidate>, GenerateError> {
        let slot = iteration - 1;
        if let Some(c) = &self.cache[slot] {
            return Ok(Arc::clone(c));
        }
        let c = self.inner.candidate(iteration)?;
        self.cache[slot] = Some(Arc::clone(&c));
        Ok(c)
    }
}

/// Run the full sequential generation loop with freshly trained candidates.
/// Deterministic given `(dataset, hyper, config, l_max, run_seed)`.
pub fn generate_set(
    dataset: &LabeledDataset,
    hyper: &Hyper,
    config: &TemplateConfig,
    l_max: usize,
    run_seed: u64,
) -> Result<FormulaSet, GenerateError> {
    let mut source = TrainingSource::new(dataset, config, run_seed);
    generate_with_source(&mut source, hyper, l_max)
}

/// Generation loop over an arbitrary candidate source. All acceptance and
/// stopping decisions use the measures cached in the candidates, which the
/// sources compute with the same kernels as the public operations.
pub fn generate_with_source<S: CandidateSource>(
    source: &mut S,
    hyper: &Hyper,
    l_max: usize,
) -> Result<FormulaSet, GenerateError> {
    hyper.validate()?;
    let mut set = FormulaSet::default();
    let mut accepted_candidates: Vec<Arc<TrainedCandidate>> = Vec::new();
    let mut quality_sum = 0.0;

    for iteration in 1..=l_max {
        let candidate = source.candidate(iteration)?;
        let min_d = accepted_candidates
            .iter()
            .map(|a| distance_from_robustness(&candidate.robustness, &a.robustness))
            .fold(None, |acc: Option<f64>, d| {
                Some(acc.map_or(d, |m| m.min(d)))
            });
        let (accepted, reason) = acceptance_decision(candidate.complexity, min_d, hyper);
        if accepted {
            quality_sum += candidate.quality;
            set.accepted.push(AcceptedFormula {
                formula: candidate.formula.clone(),
                complexity: candidate.complexity,
                quality: candidate.quality,
                seed: candidate.seed,
                iteration,
            });
            accepted_candidates.push(Arc::clone(&candidate));
        }
        let set_quality_after = if set.accepted.is_empty() {
            0.0
        } else {
            quality_sum / set.accepted.len() as f64
        };
        set.log.push(GenerationRecord {
            iteration,
            candidate: candidate.formula.clone(),
            accepted,
            reason,
            complexity: candidate.complexity,
            min_distance: min_d,
            set_quality_after,
        });
        if set_quality_after > hyper.stop_quality {
            break;
        }
    }
    Ok(set)
}

/// One entry of the formula-set file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FormulaSetRecord {
    /// Canonical formula text.
    pub formula: String,
    pub complexity: f64,
    pub quality: f64,
    /// Accuracy on the evaluation dataset supplied at write time, when any.
    pub accuracy: Option<f64>,
    pub seed: u64,
    pub iteration: usize,
}

/// Render the accepted formulas as formula-set file records.
pub fn formula_set_records(
    set: &FormulaSet,
    channel_names: &[String],
    accuracy_on: Option<&LabeledDataset>,
) -> Result<Vec<FormulaSetRecord>, GenerateError> {
    let mut records = Vec::with_capacity(set.accepted.len());
    for a in &set.accepted {
        let acc = match accuracy_on {
            Some(ds) => Some(accuracy(&a.formula, ds)?),
            None => None,
        };
        records.push(FormulaSetRecord {
            formula: format_formula(&a.formula, channel_names),
            complexity: a.complexity,
            quality: a.quality,
            accuracy: acc,
            seed: a.seed,
            iteration: a.iteration,
        });
    }
    Ok(records)
}

/// Write the formula-set file (JSON array of records).
pub fn write_formula_set(
    path: &Path,
    set: &FormulaSet,
    channel_names: &[String],
    accuracy_on: Option<&LabeledDataset>,
) -> Result<(), GenerateError> {
    let records = formula_set_records(set, channel_names, accuracy_on)?;
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), &records)?;
    Ok(())
}

/// Write the generation log as CSV with columns
/// `iteration,accepted,reason,H,min_D,F`.
pub fn write_generation_log(path: &Path, set: &FormulaSet) -> Result<(), GenerateError> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "iteration,accepted,reason,H,min_D,F")?;
    for rec in &set.log {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            rec.iteration,
            rec.accepted,
            rec.reason.map(RejectionReason::as_str).unwrap_or("none"),
            rec.complexity,
            rec.min_distance.map(|d| d.to_string()).unwrap_or_default(),
            rec.set_quality_after,
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Atom;
    use crate::trace::{Label, Trace};

    fn tiny_dataset() -> LabeledDataset {
        let names = vec!["x".to_string()];
        let mk = |vals: &[f64], l| (Trace::new(vec![vals.to_vec()], names.clone()).unwrap(), l);
        LabeledDataset::new(vec![
            mk(&[1.0, 2.0, 0.5], Label::Positive),
            mk(&[-1.0, -2.0, -0.5], Label::Negative),
        ])
        .unwrap()
    }

    fn atom(thresh: f64) -> Formula {
        Formula::Atom(Atom::new(vec![1.0], thresh).unwrap())
    }

    #[test]
    fn complexity_threshold_rejects_first() {
        let ds = tiny_dataset();
        let hyper = Hyper::new(0.33, 0.5, f64::INFINITY).unwrap();
        // 3 temporal nodes over capacity 6 -> H = 0.5 >= 0.33.
        let f = Formula::and(vec![
            Formula::always(0, crate::formula::IntervalEnd::Step(1), atom(0.0)).unwrap(),
            Formula::always(0, crate::formula::IntervalEnd::Step(2), atom(1.0)).unwrap(),
            Formula::eventually(0, crate::formula::IntervalEnd::Step(2), atom(2.0)).unwrap(),
        ])
        .unwrap();
        let set = FormulaSet::default();
        let (ok, reason) = accept_candidate(&f, &set, &ds, &hyper, 6).unwrap();
        assert!(!ok);
        assert_eq!(reason, Some(RejectionReason::Complexity));
    }

    #[test]
    fn duplicate_candidate_fails_diversity_at_half() {
        let ds = tiny_dataset();
        let hyper = Hyper::new(f64::INFINITY, 0.50, f64::INFINITY).unwrap();
        let f = atom(0.0);
        let mut set = FormulaSet::default();
        set.accepted.push(AcceptedFormula {
            formula: f.clone(),
            complexity: 0.0,
            quality: 0.5,
            seed: 0,
            iteration: 1,
        });
        // D(f, f) = 0.5 exactly, and 0.5 > 0.5 is false.
        let (ok, reason) = accept_candidate(&f, &set, &ds, &hyper, 6).unwrap();
        assert!(!ok);
        assert_eq!(reason, Some(RejectionReason::Diversity));
    }

    #[test]
    fn unconstrained_thresholds_accept_everything() {
        let ds = tiny_dataset();
        let hyper = Hyper::fallback();
        let f = atom(0.25);
        let mut set = FormulaSet::default();
        let (ok, reason) = accept_candidate(&f, &set, &ds, &hyper, 6).unwrap();
        assert!(ok);
        assert_eq!(reason, None);
        set.accepted.push(AcceptedFormula {
            formula: f.clone(),
            complexity: 0.0,
            quality: 0.5,
            seed: 0,
            iteration: 1,
        });
        let (ok, _) = accept_candidate(&f, &set, &ds, &hyper, 6).unwrap();
        assert!(ok, "min_diversity 0 admits duplicates (D = 0.5 > 0)");
    }

    #[test]
    fn empty_set_quality_is_zero_and_stopping_respects_budget() {
        let ds = tiny_dataset();
        let set = FormulaSet::default();
        assert_eq!(set_quality(&set, &ds).unwrap(), 0.0);
        assert!(!should_stop(&set, &ds, 0.5, 3, 10).unwrap());
        assert!(should_stop(&set, &ds, 0.5, 10, 10).unwrap());
        assert!(should_stop(&set, &ds, f64::INFINITY, 10, 10).unwrap());
    }

    #[test]
    fn set_quality_is_mean_of_member_quality() {
        let ds = tiny_dataset();
        let mut set = FormulaSet::default();
        for (i, thresh) in [0.0, 1.0].iter().enumerate() {
            let f = atom(*thresh);
            let q = quality(&f, &ds).unwrap();
            set.accepted.push(AcceptedFormula {
                formula: f,
                complexity: 0.0,
                quality: q,
                seed: i as u64,
                iteration: i + 1,
            });
        }
        let expected = (quality(&atom(0.0), &ds).unwrap() + quality(&atom(1.0), &ds).unwrap()) / 2.0;
        assert!((set_quality(&set, &ds).unwrap() - expected).abs() < 1e-15);
    }

    /// Hands out prebuilt candidates for loop-level tests.
    struct ScriptedSource {
        candidates: Vec<Arc<TrainedCandidate>>,
    }

    impl CandidateSource for ScriptedSource {
        fn candidate(&mut self, iteration: usize) -> Result<Arc<TrainedCandidate>, GenerateError> {
            Ok(Arc::clone(&self.candidates[iteration - 1]))
        }
    }

    fn scripted(ds: &LabeledDataset, formulas: Vec<Formula>) -> ScriptedSource {
        let candidates = formulas
            .into_iter()
            .enumerate()
            .map(|(i, f)| {
                let robustness = robustness_vector(&f, ds).unwrap();
                Arc::new(TrainedCandidate {
                    complexity: complexity(&f, 6).unwrap(),
                    quality: quality_from_robustness(&robustness),
                    robustness,
                    formula: f,
                    seed: i as u64,
                })
            })
            .collect();
        ScriptedSource { candidates }
    }

    #[test]
    fn zero_stop_quality_stops_at_first_acceptance() {
        let ds = tiny_dataset();
        let mut source = scripted(&ds, vec![atom(0.0), atom(1.0), atom(2.0)]);
        let hyper = Hyper::new(f64::INFINITY, 0.0, 0.0).unwrap();
        let set = generate_with_source(&mut source, &hyper, 3).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.log.len(), 1);
    }

    #[test]
    fn log_reports_reasons_and_quality() {
        let ds = tiny_dataset();
        // Second candidate duplicates the first; with min_diversity 0.5 it
        // is rejected for diversity.
        let mut source = scripted(&ds, vec![atom(0.0), atom(0.0), atom(5.0)]);
        let hyper = Hyper::new(f64::INFINITY, 0.5, f64::INFINITY).unwrap();
        let set = generate_with_source(&mut source, &hyper, 3).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.log.len(), 3);
        assert!(set.log[0].accepted);
        assert!(!set.log[1].accepted);
        assert_eq!(set.log[1].reason, Some(RejectionReason::Diversity));
        assert!(set.log[2].accepted);
        assert_eq!(set.log[1].set_quality_after, set.log[0].set_quality_after);
        set.verify_invariants(&ds, &hyper, 6, 3).unwrap();
    }
}
