//! Benchmark experiment orchestration.
//!
//! One experiment sweeps a method list over risk tolerances and seeds. For
//! each (epsilon, seed) cell it draws calibration pairs, calibrates the
//! thresholds with the method's restricted grid, draws fresh test pairs,
//! runs set generation with the selected thresholds, and records four
//! metrics: set-level miss risk, set size, formula complexity, and pairwise
//! diversity.
//!
//! All randomness derives from the cell seed, and methods sharing a cell
//! reuse the same pair streams and candidate streams, so method comparisons
//! are paired and the emitted `metrics.csv` is a pure function of the
//! configuration.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibrate::{
    caching_source, calibrate_with_outcomes, write_calibration_report, write_calibration_summary,
    CalibrateError, CalibrationOptions, CalibrationPair, CalibrationResult, GenerationOutcomes,
    Grid, MhtMethod,
};
use crate::generate::{
    generate_with_source, write_formula_set, write_generation_log, CachingSource, FormulaSet,
    GenerateError, Hyper, TrainingSource,
};
use crate::io::format_float;
use crate::learn::TemplateConfig;
use crate::robustness::distance_from_robustness;
use crate::robustness::robustness_vector;
use crate::seed::derive_seed;
use crate::tracegen::{make_dataset_pair, sample_task, SimParams, TraceGenError};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error("failed reading configuration file: {0}")]
    ConfigIo(String),
    #[error("{method} at epsilon {epsilon} seed {seed}: {source}")]
    Cell {
        method: String,
        epsilon: f64,
        seed: u64,
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn cell_err<E: std::error::Error + Send + Sync + 'static>(
    method: Method,
    epsilon: f64,
    seed: u64,
) -> impl FnOnce(E) -> ExperimentError {
    move |source| ExperimentError::Cell {
        method: method.name().to_string(),
        epsilon,
        seed,
        source: Box::new(source),
    }
}

/// Benchmark methods: plain single-formula learning, the full calibrated
/// scheme, its three ablations, and the Bonferroni selection baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Stll,
    Cstll,
    StoppingOnly,
    ComplexityStopping,
    DiversityStopping,
    Bonferroni,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Stll => "stll",
            Method::Cstll => "cstll",
            Method::StoppingOnly => "stopping_only",
            Method::ComplexityStopping => "complexity_stopping",
            Method::DiversityStopping => "diversity_stopping",
            Method::Bonferroni => "bonferroni",
        }
    }

    pub fn parse(name: &str) -> Result<Method, ExperimentError> {
        match name {
            "stll" => Ok(Method::Stll),
            "cstll" => Ok(Method::Cstll),
            "stopping_only" => Ok(Method::StoppingOnly),
            "complexity_stopping" => Ok(Method::ComplexityStopping),
            "diversity_stopping" => Ok(Method::DiversityStopping),
            "bonferroni" => Ok(Method::Bonferroni),
            other => Err(ExperimentError::Config(format!(
                "unknown method `{other}` (expected stll, cstll, stopping_only, complexity_stopping, diversity_stopping, or bonferroni)"
            ))),
        }
    }

    pub fn all() -> [Method; 6] {
        [
            Method::Stll,
            Method::Cstll,
            Method::StoppingOnly,
            Method::ComplexityStopping,
            Method::DiversityStopping,
            Method::Bonferroni,
        ]
    }

    /// Restrict the full grid to the thresholds this method optimizes; the
    /// unused thresholds are fixed at their permissive values.
    pub fn restrict_grid(self, grid: &GridAxes) -> Option<Grid> {
        let unconstrained_complexity = [f64::INFINITY];
        let unconstrained_diversity = [0.0];
        let (c, d): (&[f64], &[f64]) = match self {
            Method::Stll => return None,
            Method::Cstll | Method::Bonferroni => (&grid.complexity, &grid.diversity),
            Method::StoppingOnly => (&unconstrained_complexity, &unconstrained_diversity),
            Method::ComplexityStopping => (&grid.complexity, &unconstrained_diversity),
            Method::DiversityStopping => (&unconstrained_complexity, &grid.diversity),
        };
        Some(Grid::from_axes(c, d, &grid.stopping).expect("restricted grid is valid"))
    }

    fn mht(self) -> MhtMethod {
        match self {
            Method::Bonferroni => MhtMethod::Bonferroni,
            _ => MhtMethod::Pareto,
        }
    }
}

/// Threshold axes the full grid is built from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridAxes {
    pub complexity: Vec<f64>,
    pub diversity: Vec<f64>,
    pub stopping: Vec<f64>,
}

impl Default for GridAxes {
    fn default() -> Self {
        GridAxes {
            complexity: vec![0.33, 0.5, 0.67],
            diversity: vec![0.50, 0.52, 0.54, 0.56, 0.58],
            stopping: vec![0.3, 0.4, 0.5, 0.6, 0.7],
        }
    }
}

/// Full experiment configuration. The defaults mirror the benchmark's
/// standard sizes; [`ExperimentConfig::desk_scale`] switches to the reduced
/// preset suitable for laptop-scale runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub methods: Vec<Method>,
    pub epsilons: Vec<f64>,
    pub delta: f64,
    /// Accuracy a formula must exceed for its set to count as covered.
    pub accuracy_threshold: f64,
    pub grid: GridAxes,
    pub n_train: usize,
    pub n_valid: usize,
    pub n_cal_pairs: usize,
    pub n_test_pairs: usize,
    pub l_max: usize,
    pub split_fraction: f64,
    pub seeds: Vec<u64>,
    pub sim: SimParams,
    pub template: TemplateConfig,
    pub out_dir: PathBuf,
    /// Write per-cell artifact files (formula sets, logs, reports) in
    /// addition to metrics.csv.
    pub write_artifacts: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            methods: vec![Method::Cstll],
            epsilons: vec![0.1, 0.2, 0.3],
            delta: 0.05,
            accuracy_threshold: 0.8,
            grid: GridAxes::default(),
            n_train: 5000,
            n_valid: 1000,
            n_cal_pairs: 100,
            n_test_pairs: 50,
            l_max: 10,
            split_fraction: 0.5,
            seeds: (0..10).collect(),
            sim: SimParams::default(),
            template: TemplateConfig::default(),
            out_dir: PathBuf::from("out"),
            write_artifacts: true,
        }
    }
}

impl ExperimentConfig {
    /// Reduced preset: 500/200 datasets, 40 calibration pairs split 20/20,
    /// 20 test pairs, 10 seeds, desk-scale training batches.
    pub fn desk_scale() -> Self {
        ExperimentConfig {
            n_train: 500,
            n_valid: 200,
            n_cal_pairs: 40,
            n_test_pairs: 20,
            template: TemplateConfig::desk_scale(),
            ..ExperimentConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.methods.is_empty() {
            return Err(ExperimentError::Config("no methods selected".to_string()));
        }
        if self.epsilons.is_empty()
            || self.epsilons.iter().any(|e| !(*e > 0.0 && *e < 1.0))
        {
            return Err(ExperimentError::Config(
                "epsilons must be a non-empty list inside (0, 1)".to_string(),
            ));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(ExperimentError::Config(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if self.seeds.is_empty() {
            return Err(ExperimentError::Config("no seeds listed".to_string()));
        }
        if self.n_train == 0 || self.n_valid == 0 || self.n_test_pairs == 0 {
            return Err(ExperimentError::Config(
                "dataset sizes must be positive".to_string(),
            ));
        }
        let needs_calibration = self.methods.iter().any(|m| *m != Method::Stll);
        if needs_calibration && self.n_cal_pairs < 2 {
            return Err(ExperimentError::Config(
                "calibrated methods need at least 2 calibration pairs".to_string(),
            ));
        }
        if self.l_max == 0 {
            return Err(ExperimentError::Config("l_max must be positive".to_string()));
        }
        Ok(())
    }

    /// Load a TOML configuration file over the defaults.
    pub fn from_toml_file(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::ConfigIo(format!("{}: {e}", path.display())))?;
        let cfg: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| ExperimentError::ConfigIo(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One row of metrics.csv: seed-level averages for a (method, epsilon) cell.
#[derive(Debug, Clone)]
pub struct MetricsRow {
    pub method: Method,
    pub epsilon: f64,
    pub seed: u64,
    pub avg_risk: f64,
    pub avg_set_size: f64,
    /// Mean complexity over all formulas in all test sets; absent when the
    /// sets were all empty.
    pub avg_complexity: Option<f64>,
    /// Mean over sets (of size >= 2) of mean pairwise distance; absent when
    /// no set had two formulas.
    pub avg_diversity: Option<f64>,
    pub fallback_used: bool,
}

/// Compute the four metrics over the per-pair sets of one cell.
///
/// Risk counts pairs whose set holds no formula above the accuracy
/// threshold on that pair's validation data; diversity evaluates pairwise
/// distances on the pair's training data. Sets with fewer than two formulas
/// contribute nothing to the diversity average.
pub fn compute_metrics(
    sets: &[FormulaSet],
    pairs: &[CalibrationPair],
    accuracy_threshold: f64,
) -> Result<MetricsPart, CalibrateError> {
    assert_eq!(sets.len(), pairs.len(), "one set per test pair");
    if pairs.is_empty() {
        return Err(CalibrateError::TooFewPairs { need: 1, got: 0 });
    }
    let mut misses = 0usize;
    let mut size_total = 0usize;
    let mut complexity_sum = 0.0;
    let mut complexity_count = 0usize;
    let mut diversity_sum = 0.0;
    let mut diversity_sets = 0usize;

    for (set, pair) in sets.iter().zip(pairs) {
        let mut covered = false;
        for a in &set.accepted {
            if crate::calibrate::accuracy_indicator(&a.formula, &pair.valid, accuracy_threshold)? {
                covered = true;
                break;
            }
        }
        if !covered {
            misses += 1;
        }
        size_total += set.len();
        for a in &set.accepted {
            complexity_sum += a.complexity;
            complexity_count += 1;
        }
        if set.len() >= 2 {
            let vectors: Vec<Vec<f64>> = set
                .accepted
                .iter()
                .map(|a| robustness_vector(&a.formula, &pair.train))
                .collect::<Result<_, _>>()?;
            let mut pair_sum = 0.0;
            let mut pair_count = 0usize;
            for i in 0..vectors.len() {
                for j in i + 1..vectors.len() {
                    pair_sum += distance_from_robustness(&vectors[i], &vectors[j]);
                    pair_count += 1;
                }
            }
            diversity_sum += pair_sum / pair_count as f64;
            diversity_sets += 1;
        }
    }

    Ok(MetricsPart {
        avg_risk: misses as f64 / pairs.len() as f64,
        avg_set_size: size_total as f64 / pairs.len() as f64,
        avg_complexity: (complexity_count > 0)
            .then(|| complexity_sum / complexity_count as f64),
        avg_diversity: (diversity_sets > 0).then(|| diversity_sum / diversity_sets as f64),
    })
}

/// Metric fields shared by [`MetricsRow`].
#[derive(Debug, Clone, Copy)]
pub struct MetricsPart {
    pub avg_risk: f64,
    pub avg_set_size: f64,
    pub avg_complexity: Option<f64>,
    pub avg_diversity: Option<f64>,
}

/// Everything produced for one seed before methods and tolerances diverge:
/// the calibration pairs and test pairs shared by every (method, epsilon)
/// combination, so comparisons are paired.
struct CellData {
    cal_pairs: Vec<CalibrationPair>,
    test_pairs: Vec<CalibrationPair>,
    cal_seed: u64,
    test_seed: u64,
}

// Stream indices for per-seed derivation.
const STREAM_CAL_TASKS: u64 = 1;
const STREAM_TEST_TASKS: u64 = 2;
const STREAM_CAL_PAIRS: u64 = 3;
const STREAM_TEST_PAIRS: u64 = 4;
const STREAM_CAL_RUN: u64 = 5;
const STREAM_TEST_RUN: u64 = 6;

fn build_cell(config: &ExperimentConfig, seed: u64) -> Result<CellData, TraceGenError> {
    let cell_seed = derive_seed(seed, 1_000);
    let mut cal_task_rng =
        ChaCha8Rng::seed_from_u64(derive_seed(cell_seed, STREAM_CAL_TASKS));
    let mut test_task_rng =
        ChaCha8Rng::seed_from_u64(derive_seed(cell_seed, STREAM_TEST_TASKS));
    let cal_pair_base = derive_seed(cell_seed, STREAM_CAL_PAIRS);
    let test_pair_base = derive_seed(cell_seed, STREAM_TEST_PAIRS);

    let mut cal_pairs = Vec::with_capacity(config.n_cal_pairs);
    for k in 0..config.n_cal_pairs {
        let task = sample_task(&mut cal_task_rng);
        cal_pairs.push(make_dataset_pair(
            &task,
            config.n_train,
            config.n_valid,
            &config.sim,
            derive_seed(cal_pair_base, k as u64),
        )?);
    }
    let mut test_pairs = Vec::with_capacity(config.n_test_pairs);
    for k in 0..config.n_test_pairs {
        let task = sample_task(&mut test_task_rng);
        test_pairs.push(make_dataset_pair(
            &task,
            config.n_train,
            config.n_valid,
            &config.sim,
            derive_seed(test_pair_base, k as u64),
        )?);
    }
    Ok(CellData {
        cal_pairs,
        test_pairs,
        cal_seed: derive_seed(cell_seed, STREAM_CAL_RUN),
        test_seed: derive_seed(cell_seed, STREAM_TEST_RUN),
    })
}

/// Artifacts for one completed (method, epsilon, seed) cell.
pub struct CellResult {
    pub row: MetricsRow,
    pub calibration: Option<CalibrationResult>,
    pub test_sets: Vec<FormulaSet>,
    pub selected: Hyper,
}

/// Full experiment output.
pub struct ExperimentOutput {
    pub rows: Vec<MetricsRow>,
    pub metrics_path: PathBuf,
}

/// Run the configured benchmark matrix and write metrics plus artifacts
/// under the output directory.
///
/// Work is organized seed-major: the calibration outcome matrix and every
/// trained candidate stream are cached per seed and reused by all methods
/// and tolerances, since the empirical risks do not depend on the tolerance
/// and the candidate streams do not depend on the thresholds.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput, ExperimentError> {
    config.validate()?;
    std::fs::create_dir_all(&config.out_dir)?;
    let mut rows = Vec::new();

    for &seed in &config.seeds {
        let cell = build_cell(config, seed).map_err(|e| ExperimentError::Cell {
            method: "(cell setup)".to_string(),
            epsilon: f64::NAN,
            seed,
            source: Box::new(e),
        })?;
        let mut provider = GenerationOutcomes::new(
            &cell.cal_pairs,
            &config.template,
            config.accuracy_threshold,
            config.l_max,
            cell.cal_seed,
        );
        let mut test_sources: Vec<_> = cell
            .test_pairs
            .iter()
            .enumerate()
            .map(|(k, pair)| {
                caching_source(
                    &pair.train,
                    &config.template,
                    derive_seed(cell.test_seed, k as u64),
                    config.l_max,
                )
            })
            .collect();

        for &method in &config.methods {
            for &epsilon in &config.epsilons {
                let result = run_cell(
                    config,
                    &cell,
                    &mut provider,
                    &mut test_sources,
                    method,
                    epsilon,
                    seed,
                )?;
                if config.write_artifacts {
                    write_cell_artifacts(config, &cell, &result, method, epsilon, seed)?;
                }
                rows.push(result.row);
            }
        }
    }

    // Canonical row order regardless of the traversal above.
    let method_rank = |m: Method| {
        config
            .methods
            .iter()
            .position(|x| *x == m)
            .expect("method from config")
    };
    rows.sort_by(|a, b| {
        a.epsilon
            .partial_cmp(&b.epsilon)
            .expect("finite epsilon")
            .then(a.seed.cmp(&b.seed))
            .then(method_rank(a.method).cmp(&method_rank(b.method)))
    });

    let metrics_path = config.out_dir.join("metrics.csv");
    write_metrics(&metrics_path, &rows)?;
    Ok(ExperimentOutput { rows, metrics_path })
}

/// Calibrate (when the method calls for it) and evaluate one
/// (method, epsilon) combination on a seed's shared data and caches.
fn run_cell(
    config: &ExperimentConfig,
    cell: &CellData,
    provider: &mut GenerationOutcomes<'_>,
    test_sources: &mut [CachingSource<TrainingSource<'_>>],
    method: Method,
    epsilon: f64,
    seed: u64,
) -> Result<CellResult, ExperimentError> {
    let calibration = match method.restrict_grid(&config.grid) {
        Some(grid) => {
            let options = CalibrationOptions {
                epsilon,
                delta: config.delta,
                accuracy_threshold: config.accuracy_threshold,
                method: method.mht(),
                split_fraction: config.split_fraction,
                l_max: config.l_max,
                run_seed: cell.cal_seed,
            };
            Some(
                calibrate_with_outcomes(provider, &grid, &options)
                    .map_err(cell_err(method, epsilon, seed))?,
            )
        }
        None => None,
    };
    let (selected, l_max) = match &calibration {
        Some(result) => (result.selected, config.l_max),
        // Plain single-formula learning: one unconstrained iteration.
        None => (Hyper::fallback(), 1),
    };

    let test_sets: Vec<FormulaSet> = {
        use rayon::prelude::*;
        test_sources
            .par_iter_mut()
            .map(|source| generate_with_source(source, &selected, l_max))
            .collect::<Result<_, GenerateError>>()
            .map_err(cell_err(method, epsilon, seed))?
    };

    let metrics = compute_metrics(&test_sets, &cell.test_pairs, config.accuracy_threshold)
        .map_err(cell_err(method, epsilon, seed))?;
    let fallback_used = calibration.as_ref().map(|c| c.fallback_used).unwrap_or(false);
    Ok(CellResult {
        row: MetricsRow {
            method,
            epsilon,
            seed,
            avg_risk: metrics.avg_risk,
            avg_set_size: metrics.avg_set_size,
            avg_complexity: metrics.avg_complexity,
            avg_diversity: metrics.avg_diversity,
            fallback_used,
        },
        calibration,
        test_sets,
        selected,
    })
}

fn write_cell_artifacts(
    config: &ExperimentConfig,
    cell: &CellData,
    result: &CellResult,
    method: Method,
    epsilon: f64,
    seed: u64,
) -> Result<(), ExperimentError> {
    let dir = config
        .out_dir
        .join(format!("eps_{}", format_float(epsilon)))
        .join(format!("seed_{seed}"))
        .join(method.name());
    std::fs::create_dir_all(&dir)?;
    if let Some(calibration) = &result.calibration {
        write_calibration_report(&dir.join("calibration.csv"), calibration)
            .map_err(cell_err(method, epsilon, seed))?;
        write_calibration_summary(&dir.join("calibration_summary.json"), calibration)
            .map_err(cell_err(method, epsilon, seed))?;
    }
    for (k, (set, pair)) in result.test_sets.iter().zip(&cell.test_pairs).enumerate() {
        write_formula_set(
            &dir.join(format!("test_pair_{k:02}.json")),
            set,
            pair.train.channel_names(),
            Some(&pair.valid),
        )
        .map_err(cell_err(method, epsilon, seed))?;
        write_generation_log(&dir.join(format!("test_pair_{k:02}_log.csv")), set)
            .map_err(cell_err(method, epsilon, seed))?;
    }
    Ok(())
}

fn fmt_metric(v: Option<f64>) -> String {
    match v {
        Some(x) => format_float(x),
        None => "n/a".to_string(),
    }
}

/// Write metrics.csv with one row per (method, epsilon, seed).
pub fn write_metrics(path: &Path, rows: &[MetricsRow]) -> Result<(), ExperimentError> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(
        w,
        "method,epsilon,seed,avg_risk,avg_set_size,avg_complexity,avg_diversity,fallback_used"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.method.name(),
            format_float(r.epsilon),
            r.seed,
            format_float(r.avg_risk),
            format_float(r.avg_set_size),
            fmt_metric(r.avg_complexity),
            fmt_metric(r.avg_diversity),
            r.fallback_used,
        )?;
    }
    w.flush()?;
    Ok(())
}
