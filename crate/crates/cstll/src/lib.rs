//! Conformal signal temporal logic learning for KPI traces.
//!
//! This crate learns sets of signal temporal logic (STL) formulas that
//! separate labeled KPI time series, and calibrates the set-construction
//! thresholds so that, with user-chosen probability, the returned set
//! contains at least one formula above a target classification accuracy.
//!
//! The pieces, bottom to top:
//!
//! - [`trace`] / [`io`] — KPI traces, labels, datasets, and the CSV
//!   exchange format.
//! - [`formula`] / [`parse`] — the STL syntax tree, its text grammar, and
//!   the canonical printer.
//! - [`robustness`] — quantitative semantics plus the quality, distance,
//!   and accuracy measures.
//! - [`learn`] — differentiable template training that hardens into a
//!   discrete formula.
//! - [`generate`] — sequential formula-set construction with
//!   complexity/diversity acceptance and quality-based early stopping.
//! - [`binomial`] / [`calibrate`] — exact binomial p-values and
//!   FWER-controlled threshold selection (Pareto testing and a Bonferroni
//!   baseline).
//! - [`tracegen`] — a synthetic latency/backlog trace source with
//!   ground-truth labeling.
//! - [`experiment`] / [`report`] — the benchmark matrix, its metrics, and
//!   SVG plots.
//!
//! Start with the runnable programs under `examples/` — one per capability
//! — or the `cstll` binary for file-based workflows.

pub mod binomial;
pub mod calibrate;
pub mod experiment;
pub mod formula;
pub mod generate;
pub mod io;
pub mod learn;
pub mod parse;
pub mod report;
pub mod robustness;
pub mod seed;
pub mod trace;
pub mod tracegen;

pub use calibrate::{
    accuracy_indicator, calibrate_lambda, CalibrationOptions, CalibrationPair, CalibrationResult,
    Grid, MhtMethod,
};
pub use formula::{complexity, format_formula, Atom, Formula, IntervalEnd};
pub use generate::{accept_candidate, generate_set, set_quality, should_stop, FormulaSet, Hyper};
pub use learn::{build_template, relaxed_robustness, train_formula, LearnerParams, TemplateConfig};
pub use parse::parse_formula;
pub use robustness::{accuracy, classify, distance, eval_robustness, quality, Robustness};
pub use trace::{Label, LabeledDataset, Trace};
pub use tracegen::{ground_truth_label, make_dataset_pair, sample_task, SimParams, Task};
