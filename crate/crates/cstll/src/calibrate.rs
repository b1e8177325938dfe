//! Threshold calibration with family-wise error control.
//!
//! Calibration estimates, for every candidate threshold triple in a grid,
//! the probability that a generated formula set contains no sufficiently
//! accurate formula (the set-level miss risk), and returns a triple whose
//! true risk is below a tolerance `epsilon` with confidence `1 - delta`.
//!
//! Each candidate's null hypothesis ("true risk >= epsilon") gets an exact
//! binomial lower-tail p-value from its empirical risk over i.i.d.
//! calibration pairs. Two selection procedures are provided:
//!
//! - **Pareto testing**: one half of the pairs screens the grid — the
//!   (risk, set size) Pareto frontier is ordered by increasing screening
//!   p-value — and the other half drives fixed-sequence testing down that
//!   order at full level `delta`, stopping at the first non-rejection.
//! - **Bonferroni**: every candidate is tested on all pairs at level
//!   `delta / |grid|`.
//!
//! When no candidate is validated, the fallback triple
//! `(inf, 0, inf)` is selected, which admits every generated formula.
//! Otherwise the validated candidate with the smallest average set size
//! wins, with ties broken by lower empirical risk and then lexicographic
//! order.

use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::binomial::{binomial_pvalue, BinomialError};
use crate::formula::Formula;
use crate::generate::{
    generate_with_source, CachingSource, CandidateSource, GenerateError, Hyper, TrainedCandidate,
    TrainingSource,
};
use crate::learn::TemplateConfig;
use crate::robustness::{accuracy, EvalError};
use crate::seed::derive_seed;
use crate::trace::LabeledDataset;

#[derive(Debug, Error)]
pub enum CalibrateError {
    #[error("grid must contain at least one candidate")]
    EmptyGrid,
    #[error("grid contains duplicate candidate {0:?}")]
    DuplicateCandidate(Hyper),
    #[error("calibration needs at least {need} pairs for this method, got {got}")]
    TooFewPairs { need: usize, got: usize },
    #[error("invalid calibration options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Binomial(#[from] BinomialError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A (train, validation) dataset pair drawn from one task.
#[derive(Debug, Clone)]
pub struct CalibrationPair {
    pub train: LabeledDataset,
    pub valid: LabeledDataset,
    pub task_id: String,
}

/// Candidate threshold grid.
#[derive(Debug, Clone)]
pub struct Grid {
    pub candidates: Vec<Hyper>,
}

impl Grid {
    /// Cartesian product of per-threshold axes, complexity-major.
    pub fn from_axes(
        complexity: &[f64],
        diversity: &[f64],
        stopping: &[f64],
    ) -> Result<Self, CalibrateError> {
        let mut candidates = Vec::with_capacity(complexity.len() * diversity.len() * stopping.len());
        for &c in complexity {
            for &d in diversity {
                for &s in stopping {
                    candidates.push(Hyper {
                        max_complexity: c,
                        min_diversity: d,
                        stop_quality: s,
                    });
                }
            }
        }
        let grid = Grid { candidates };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<(), CalibrateError> {
        if self.candidates.is_empty() {
            return Err(CalibrateError::EmptyGrid);
        }
        for (i, a) in self.candidates.iter().enumerate() {
            for b in &self.candidates[i + 1..] {
                if a == b {
                    return Err(CalibrateError::DuplicateCandidate(*a));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

impl Default for Grid {
    /// The standard 3 x 5 x 5 grid used by the benchmark experiments.
    fn default() -> Self {
        Grid::from_axes(
            &[0.33, 0.5, 0.67],
            &[0.50, 0.52, 0.54, 0.56, 0.58],
            &[0.3, 0.4, 0.5, 0.6, 0.7],
        )
        .expect("static grid is valid")
    }
}

/// Selection procedure for the reliable subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MhtMethod {
    Pareto,
    Bonferroni,
}

/// Settings shared by every calibration entry point.
#[derive(Debug, Clone)]
pub struct CalibrationOptions {
    /// Risk tolerance for the null hypotheses.
    pub epsilon: f64,
    /// Family-wise error level.
    pub delta: f64,
    /// Accuracy a formula must exceed to count as a hit.
    pub accuracy_threshold: f64,
    pub method: MhtMethod,
    /// Fraction of pairs used for screening under Pareto testing.
    pub split_fraction: f64,
    /// Iteration cap for set generation.
    pub l_max: usize,
    /// Seed governing candidate streams; shared across all grid candidates
    /// so they are compared on identical streams.
    pub run_seed: u64,
}

impl CalibrationOptions {
    pub fn validate(&self) -> Result<(), CalibrateError> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(CalibrateError::InvalidOptions(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(CalibrateError::InvalidOptions(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if !(0.0..=1.0).contains(&self.accuracy_threshold) {
            return Err(CalibrateError::InvalidOptions(format!(
                "accuracy threshold must lie in [0, 1], got {}",
                self.accuracy_threshold
            )));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(CalibrateError::InvalidOptions(format!(
                "split fraction must lie in (0, 1), got {}",
                self.split_fraction
            )));
        }
        if self.l_max == 0 {
            return Err(CalibrateError::InvalidOptions(
                "l_max must be at least 1".to_string(),
            ));
        }
        Ok(())
    }
}

/// Accuracy indicator: 1 iff the formula's accuracy on the validation data
/// strictly exceeds the threshold (returned as `bool`).
pub fn accuracy_indicator(
    formula: &Formula,
    valid: &LabeledDataset,
    threshold: f64,
) -> Result<bool, EvalError> {
    Ok(accuracy(formula, valid)? > threshold)
}

/// Outcome of generating one set on one calibration pair.
#[derive(Debug, Clone, Copy)]
pub struct PairOutcome {
    /// True when the set contained no formula above the accuracy threshold.
    pub miss: bool,
    pub set_size: usize,
}

/// Supplies per-(candidate, pair) generation outcomes. The trait boundary
/// lets the selection procedures run against synthetic outcome models in
/// validation experiments.
pub trait SetOutcomes {
    fn num_pairs(&self) -> usize;

    /// Outcomes for the given candidates over a contiguous range of pairs;
    /// indexed `[pair - range.start][candidate]`.
    fn outcomes(
        &mut self,
        range: std::ops::Range<usize>,
        candidates: &[Hyper],
    ) -> Result<Vec<Vec<PairOutcome>>, CalibrateError>;
}

/// Risk and mean set size of one candidate over a pair range.
#[derive(Debug, Clone, Copy)]
pub struct RiskEstimate {
    pub risk: f64,
    pub avg_set_size: f64,
    pub failures: usize,
    pub num_pairs: usize,
}

fn summarize(column: &[PairOutcome]) -> RiskEstimate {
    let n = column.len();
    let failures = column.iter().filter(|o| o.miss).count();
    let total_size: usize = column.iter().map(|o| o.set_size).sum();
    RiskEstimate {
        risk: failures as f64 / n as f64,
        avg_set_size: total_size as f64 / n as f64,
        failures,
        num_pairs: n,
    }
}

/// Generation-backed outcome provider with one lazily trained candidate
/// stream per pair, shared across every grid candidate.
pub struct GenerationOutcomes<'a> {
    pairs: &'a [CalibrationPair],
    config: &'a TemplateConfig,
    accuracy_threshold: f64,
    l_max: usize,
    run_seed: u64,
    caches: Vec<PairCache>,
}

struct PairCache {
    candidates: Vec<Option<std::sync::Arc<TrainedCandidate>>>,
    accurate: Vec<Option<bool>>,
}

impl<'a> GenerationOutcomes<'a> {
    pub fn new(
        pairs: &'a [CalibrationPair],
        config: &'a TemplateConfig,
        accuracy_threshold: f64,
        l_max: usize,
        run_seed: u64,
    ) -> Self {
        let caches = (0..pairs.len())
            .map(|_| PairCache {
                candidates: vec![None; l_max],
                accurate: vec![None; l_max],
            })
            .collect();
        GenerationOutcomes {
            pairs,
            config,
            accuracy_threshold,
            l_max,
            run_seed,
            caches,
        }
    }
}

/// Candidate source that fills a pair's cache on demand and evaluates the
/// accuracy indicator alongside each newly trained candidate.
struct CachedPairSource<'c> {
    pair: &'c CalibrationPair,
    config: &'c TemplateConfig,
    pair_seed: u64,
    accuracy_threshold: f64,
    cache: &'c mut PairCache,
}

impl CandidateSource for CachedPairSource<'_> {
    fn candidate(
        &mut self,
        iteration: usize,
    ) -> Result<std::sync::Arc<TrainedCandidate>, GenerateError> {
        let slot = iteration - 1;
        if let Some(c) = &self.cache.candidates[slot] {
            return Ok(std::sync::Arc::clone(c));
        }
        let mut source = TrainingSource::new(&self.pair.train, self.config, self.pair_seed);
        let c = source.candidate(iteration)?;
        let accurate =
            accuracy_indicator(&c.formula, &self.pair.valid, self.accuracy_threshold)?;
        self.cache.candidates[slot] = Some(std::sync::Arc::clone(&c));
        self.cache.accurate[slot] = Some(accurate);
        Ok(c)
    }
}

impl SetOutcomes for GenerationOutcomes<'_> {
    fn num_pairs(&self) -> usize {
        self.pairs.len()
    }

    fn outcomes(
        &mut self,
        range: std::ops::Range<usize>,
        candidates: &[Hyper],
    ) -> Result<Vec<Vec<PairOutcome>>, CalibrateError> {
        let pairs = self.pairs;
        let config = self.config;
        let accuracy_threshold = self.accuracy_threshold;
        let l_max = self.l_max;
        let run_seed = self.run_seed;
        let start = range.start;
        self.caches[range]
            .par_iter_mut()
            .enumerate()
            .map(|(offset, cache)| {
                let pair_index = start + offset;
                let pair = &pairs[pair_index];
                let pair_seed = derive_seed(run_seed, pair_index as u64);
                let mut row = Vec::with_capacity(candidates.len());
                for hyper in candidates {
                    let mut source = CachedPairSource {
                        pair,
                        config,
                        pair_seed,
                        accuracy_threshold,
                        cache,
                    };
                    let set = generate_with_source(&mut source, hyper, l_max)?;
                    let miss = !set.accepted.iter().any(|a| {
                        source.cache.accurate[a.iteration - 1]
                            .expect("accuracy evaluated when candidate was trained")
                    });
                    row.push(PairOutcome {
                        miss,
                        set_size: set.len(),
                    });
                }
                Ok(row)
            })
            .collect()
    }
}

/// Empirical set-level miss risk of one candidate over calibration pairs,
/// along with the average set size.
pub fn empirical_risk(
    hyper: &Hyper,
    pairs: &[CalibrationPair],
    accuracy_threshold: f64,
    config: &TemplateConfig,
    l_max: usize,
    run_seed: u64,
) -> Result<RiskEstimate, CalibrateError> {
    if pairs.is_empty() {
        return Err(CalibrateError::TooFewPairs { need: 1, got: 0 });
    }
    let mut provider =
        GenerationOutcomes::new(pairs, config, accuracy_threshold, l_max, run_seed);
    let matrix = provider.outcomes(0..pairs.len(), std::slice::from_ref(hyper))?;
    let column: Vec<PairOutcome> = matrix.into_iter().map(|row| row[0]).collect();
    Ok(summarize(&column))
}

/// Indices of the Pareto frontier of `(risk, size)` under componentwise
/// minimization, ordered by increasing screening p-value. The binomial
/// p-value is strictly increasing in the failure count, so the order is by
/// risk with lexicographic threshold tie-breaks.
pub fn pareto_frontier(points: &[(f64, f64, Hyper)]) -> Vec<usize> {
    let n = points.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        points[a]
            .0
            .partial_cmp(&points[b].0)
            .expect("risks are finite")
            .then(
                points[a]
                    .1
                    .partial_cmp(&points[b].1)
                    .expect("sizes are finite"),
            )
    });

    // Sweep ascending risk groups: a point survives iff it has the smallest
    // size within its risk group and beats every strictly-lower-risk size.
    let mut frontier = Vec::new();
    let mut best_lower = f64::INFINITY;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && points[order[j]].0 == points[order[i]].0 {
            j += 1;
        }
        let group_min = points[order[i]].1; // sorted by size within group
        if group_min < best_lower {
            for &idx in &order[i..j] {
                if points[idx].1 == group_min {
                    frontier.push(idx);
                }
            }
            best_lower = group_min;
        }
        i = j;
    }

    frontier.sort_by(|&a, &b| {
        let (ra, _, ha) = &points[a];
        let (rb, _, hb) = &points[b];
        ra.partial_cmp(rb)
            .expect("risks are finite")
            .then(lex_cmp(ha, hb))
    });
    frontier
}

fn lex_cmp(a: &Hyper, b: &Hyper) -> std::cmp::Ordering {
    a.max_complexity
        .partial_cmp(&b.max_complexity)
        .expect("thresholds are finite")
        .then(
            a.min_diversity
                .partial_cmp(&b.min_diversity)
                .expect("thresholds are finite"),
        )
        .then(
            a.stop_quality
                .partial_cmp(&b.stop_quality)
                .expect("thresholds are finite"),
        )
}

/// Per-candidate calibration record, aligned with the grid order.
#[derive(Debug, Clone)]
pub struct CandidateReport {
    pub hyper: Hyper,
    /// Empirical risk on the screening data (full set for Bonferroni).
    pub screen_risk: Option<f64>,
    pub screen_size: Option<f64>,
    pub screen_pvalue: Option<f64>,
    pub on_frontier: bool,
    /// Whether fixed-sequence testing reached this candidate.
    pub tested: bool,
    pub test_risk: Option<f64>,
    pub test_size: Option<f64>,
    pub test_pvalue: Option<f64>,
    /// Null hypothesis rejected: the candidate entered the validated set.
    pub rejected: bool,
}

/// Result of one calibration run.
#[derive(Debug, Clone)]
pub struct CalibrationResult {
    /// Selected triple; the fallback when nothing validated.
    pub selected: Hyper,
    /// Validated candidates in test order.
    pub valid: Vec<Hyper>,
    pub reports: Vec<CandidateReport>,
    pub fallback_used: bool,
}

/// Calibrate over generation-backed outcomes.
pub fn calibrate_lambda(
    grid: &Grid,
    pairs: &[CalibrationPair],
    options: &CalibrationOptions,
    config: &TemplateConfig,
) -> Result<CalibrationResult, CalibrateError> {
    let mut provider = GenerationOutcomes::new(
        pairs,
        config,
        options.accuracy_threshold,
        options.l_max,
        options.run_seed,
    );
    calibrate_with_outcomes(&mut provider, grid, options)
}

/// Calibration core over any outcome provider.
pub fn calibrate_with_outcomes<P: SetOutcomes>(
    provider: &mut P,
    grid: &Grid,
    options: &CalibrationOptions,
) -> Result<CalibrationResult, CalibrateError> {
    grid.validate()?;
    options.validate()?;
    match options.method {
        MhtMethod::Pareto => calibrate_pareto(provider, grid, options),
        MhtMethod::Bonferroni => calibrate_bonferroni(provider, grid, options),
    }
}

fn calibrate_pareto<P: SetOutcomes>(
    provider: &mut P,
    grid: &Grid,
    options: &CalibrationOptions,
) -> Result<CalibrationResult, CalibrateError> {
    let total = provider.num_pairs();
    if total < 2 {
        return Err(CalibrateError::TooFewPairs {
            need: 2,
            got: total,
        });
    }
    let n1 = ((total as f64 * options.split_fraction).round() as usize).clamp(1, total - 1);

    // Screening phase: risk, size, and p-value for every candidate.
    let screen = provider.outcomes(0..n1, &grid.candidates)?;
    let mut reports: Vec<CandidateReport> = Vec::with_capacity(grid.len());
    let mut points: Vec<(f64, f64, Hyper)> = Vec::with_capacity(grid.len());
    for (ci, hyper) in grid.candidates.iter().enumerate() {
        let column: Vec<PairOutcome> = screen.iter().map(|row| row[ci]).collect();
        let est = summarize(&column);
        let p = binomial_pvalue(est.risk, est.num_pairs, options.epsilon)?;
        points.push((est.risk, est.avg_set_size, *hyper));
        reports.push(CandidateReport {
            hyper: *hyper,
            screen_risk: Some(est.risk),
            screen_size: Some(est.avg_set_size),
            screen_pvalue: Some(p),
            on_frontier: false,
            tested: false,
            test_risk: None,
            test_size: None,
            test_pvalue: None,
            rejected: false,
        });
    }

    let frontier = pareto_frontier(&points);
    for &idx in &frontier {
        reports[idx].on_frontier = true;
    }

    // Fixed-sequence phase on the held-out pairs, in frontier order.
    let mut valid = Vec::new();
    let mut measurements: Vec<(usize, RiskEstimate)> = Vec::new();
    for &idx in &frontier {
        let hyper = grid.candidates[idx];
        let rows = provider.outcomes(n1..total, std::slice::from_ref(&hyper))?;
        let column: Vec<PairOutcome> = rows.into_iter().map(|row| row[0]).collect();
        let est = summarize(&column);
        let p = binomial_pvalue(est.risk, est.num_pairs, options.epsilon)?;
        let report = &mut reports[idx];
        report.tested = true;
        report.test_risk = Some(est.risk);
        report.test_size = Some(est.avg_set_size);
        report.test_pvalue = Some(p);
        if p < options.delta {
            report.rejected = true;
            valid.push(hyper);
            measurements.push((idx, est));
        } else {
            break;
        }
    }

    Ok(finish(grid, reports, valid, &measurements))
}

fn calibrate_bonferroni<P: SetOutcomes>(
    provider: &mut P,
    grid: &Grid,
    options: &CalibrationOptions,
) -> Result<CalibrationResult, CalibrateError> {
    let total = provider.num_pairs();
    if total < 1 {
        return Err(CalibrateError::TooFewPairs { need: 1, got: 0 });
    }
    let level = options.delta / grid.len() as f64;
    let all = provider.outcomes(0..total, &grid.candidates)?;
    let mut reports = Vec::with_capacity(grid.len());
    let mut valid = Vec::new();
    let mut measurements: Vec<(usize, RiskEstimate)> = Vec::new();
    for (ci, hyper) in grid.candidates.iter().enumerate() {
        let column: Vec<PairOutcome> = all.iter().map(|row| row[ci]).collect();
        let est = summarize(&column);
        let p = binomial_pvalue(est.risk, est.num_pairs, options.epsilon)?;
        let rejected = p < level;
        if rejected {
            valid.push(*hyper);
            measurements.push((ci, est));
        }
        reports.push(CandidateReport {
            hyper: *hyper,
            screen_risk: Some(est.risk),
            screen_size: Some(est.avg_set_size),
            screen_pvalue: Some(p),
            on_frontier: false,
            tested: true,
            test_risk: None,
            test_size: None,
            test_pvalue: None,
            rejected,
        });
    }
    Ok(finish(grid, reports, valid, &measurements))
}

/// Final selection: smallest average set size among the validated
/// candidates, ties broken by lower risk and then lexicographic order; the
/// fallback triple when nothing validated.
fn finish(
    grid: &Grid,
    reports: Vec<CandidateReport>,
    valid: Vec<Hyper>,
    measurements: &[(usize, RiskEstimate)],
) -> CalibrationResult {
    if valid.is_empty() {
        return CalibrationResult {
            selected: Hyper::fallback(),
            valid,
            reports,
            fallback_used: true,
        };
    }
    let best = measurements
        .iter()
        .min_by(|(ia, a), (ib, b)| {
            a.avg_set_size
                .partial_cmp(&b.avg_set_size)
                .expect("sizes are finite")
                .then(a.risk.partial_cmp(&b.risk).expect("risks are finite"))
                .then(lex_cmp(&grid.candidates[*ia], &grid.candidates[*ib]))
        })
        .expect("valid set is non-empty");
    CalibrationResult {
        selected: grid.candidates[best.0],
        valid,
        reports,
        fallback_used: false,
    }
}

/// Walk an ordered candidate list with fixed-sequence testing over the given
/// pairs; returns the validated prefix.
pub fn fixed_sequence_test(
    ordered: &[Hyper],
    pairs: &[CalibrationPair],
    options: &CalibrationOptions,
    config: &TemplateConfig,
) -> Result<Vec<Hyper>, CalibrateError> {
    if pairs.is_empty() {
        return Err(CalibrateError::TooFewPairs { need: 1, got: 0 });
    }
    let mut provider = GenerationOutcomes::new(
        pairs,
        config,
        options.accuracy_threshold,
        options.l_max,
        options.run_seed,
    );
    let mut valid = Vec::new();
    for hyper in ordered {
        let rows = provider.outcomes(0..pairs.len(), std::slice::from_ref(hyper))?;
        let column: Vec<PairOutcome> = rows.into_iter().map(|row| row[0]).collect();
        let est = summarize(&column);
        let p = binomial_pvalue(est.risk, est.num_pairs, options.epsilon)?;
        if p < options.delta {
            valid.push(*hyper);
        } else {
            break;
        }
    }
    Ok(valid)
}

/// Select the reliable subset by Bonferroni-corrected testing on the full
/// pair set.
pub fn bonferroni_select(
    grid: &Grid,
    pairs: &[CalibrationPair],
    options: &CalibrationOptions,
    config: &TemplateConfig,
) -> Result<Vec<Hyper>, CalibrateError> {
    let mut opts = options.clone();
    opts.method = MhtMethod::Bonferroni;
    let result = calibrate_lambda(grid, pairs, &opts, config)?;
    Ok(result.valid)
}

fn fmt_threshold(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        v.to_string()
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Write the per-candidate calibration report CSV.
pub fn write_calibration_report(
    path: &Path,
    result: &CalibrationResult,
) -> Result<(), CalibrateError> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(
        w,
        "lambda1,lambda2,lambda3,risk_split1,size_split1,p_split1,on_frontier,tested,p_split2,rejected"
    )?;
    for r in &result.reports {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_threshold(r.hyper.max_complexity),
            fmt_threshold(r.hyper.min_diversity),
            fmt_threshold(r.hyper.stop_quality),
            fmt_opt(r.screen_risk),
            fmt_opt(r.screen_size),
            fmt_opt(r.screen_pvalue),
            r.on_frontier,
            r.tested,
            fmt_opt(r.test_pvalue),
            r.rejected,
        )?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Summary {
    lambda1: String,
    lambda2: String,
    lambda3: String,
    fallback_used: bool,
    valid_count: usize,
}

/// Write the calibration summary (selected triple and fallback flag).
pub fn write_calibration_summary(
    path: &Path,
    result: &CalibrationResult,
) -> Result<(), CalibrateError> {
    let s = Summary {
        lambda1: fmt_threshold(result.selected.max_complexity),
        lambda2: fmt_threshold(result.selected.min_diversity),
        lambda3: fmt_threshold(result.selected.stop_quality),
        fallback_used: result.fallback_used,
        valid_count: result.valid.len(),
    };
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), &s)
        .map_err(|e| CalibrateError::InvalidOptions(e.to_string()))?;
    Ok(())
}

/// Memoized single-pair candidate stream for standalone generation runs
/// that want cache reuse across several threshold triples.
pub fn caching_source<'a>(
    dataset: &'a LabeledDataset,
    config: &'a TemplateConfig,
    run_seed: u64,
    l_max: usize,
) -> CachingSource<TrainingSource<'a>> {
    CachingSource::new(TrainingSource::new(dataset, config, run_seed), l_max)
}
