//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured quantities (run with `--nocapture` to see them).
//!
//! Criteria 4 and 5 share one desk-scale benchmark matrix (five tasks,
//! 500/200 datasets, 40 calibration pairs split 20/20, 20 test pairs,
//! L_max 10, delta 0.05, accuracy threshold 0.8, tolerances
//! {0.1, 0.2, 0.3}, 10 seeds, all six methods), computed once on first use.

mod common;

use std::collections::BTreeMap;

use common::{boolean_satisfaction, random_formula, random_trace, rational_binomial_cdf_all};
use cstll::binomial::binomial_pvalue;
use cstll::calibrate::{
    calibrate_with_outcomes, pareto_frontier, CalibrateError, CalibrationOptions, Grid, MhtMethod,
    PairOutcome, SetOutcomes,
};
use cstll::experiment::{run_experiment, ExperimentConfig, Method, MetricsRow};
use cstll::formula::format_formula;
use cstll::generate::{generate_set, Hyper};
use cstll::learn::{
    relaxed_robustness, relaxed_robustness_with_grad, train_formula, LearnerParams, TemplateConfig,
};
use cstll::parse::parse_formula;
use cstll::robustness::{accuracy, classify, distance, eval_robustness};
use cstll::trace::{Label, LabeledDataset, Trace};
use cstll::tracegen::{simulate_trace, SimParams};
use once_cell::sync::Lazy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// Criterion 1: robustness oracle equivalence
// ---------------------------------------------------------------------------

#[test]
fn acceptance_1_robustness_oracle_equivalence() {
    let start = std::time::Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC1);
    let mut nonzero_sign_checks = 0usize;
    for case in 0..1000 {
        let formula = random_formula(&mut rng, 3, 4, 2, 20);
        let trace = random_trace(&mut rng, 2, 20, 4.0);
        let got = eval_robustness(&formula, &trace, 0).unwrap().value();
        let reference = common::reference_robustness(&formula, &trace, 0);
        assert!(
            (got - reference).abs() <= 1e-9,
            "case {case}: robustness {got} differs from reference {reference}"
        );
        if got != 0.0 {
            assert_eq!(
                got > 0.0,
                boolean_satisfaction(&formula, &trace, 0),
                "case {case}: sign disagrees with Boolean semantics"
            );
            nonzero_sign_checks += 1;
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 10, "took {elapsed:?}, budget 10 s");
    eprintln!(
        "PASS criterion 1: 1000 formulas matched the reference within 1e-9; \
         {nonzero_sign_checks} sign checks agreed with Boolean semantics ({elapsed:?})"
    );
}

// ---------------------------------------------------------------------------
// Criterion 2: p-value exactness and super-uniformity
// ---------------------------------------------------------------------------

#[test]
fn acceptance_2_pvalue_exactness_and_validity() {
    let start = std::time::Instant::now();

    // Exactness against arbitrary-precision rational summation, K <= 200.
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC2);
    let mut worst: f64 = 0.0;
    let mut sizes: Vec<usize> = (0..10).map(|_| rng.random_range(1..200)).collect();
    sizes.push(200);
    for n in sizes {
        let eps = rng.random_range(0.01..0.99);
        let exact = rational_binomial_cdf_all(n, eps);
        for k in 0..=n {
            let got = binomial_pvalue(k as f64 / n as f64, n, eps).unwrap();
            worst = worst.max((got - exact[k]).abs());
        }
    }
    assert!(worst <= 1e-12, "worst exactness error {worst}");

    // Super-uniformity under the null across 2000 replications.
    let replications = 2000;
    let pairs = 40;
    let eps = 0.2;
    let mut pvalues = Vec::with_capacity(replications);
    for _ in 0..replications {
        let failures = (0..pairs).filter(|_| rng.random::<f64>() < eps).count();
        pvalues.push(binomial_pvalue(failures as f64 / pairs as f64, pairs, eps).unwrap());
    }
    let mut report = String::new();
    for alpha in [0.01, 0.05, 0.1] {
        let rate =
            pvalues.iter().filter(|&&p| p <= alpha).count() as f64 / replications as f64;
        let slack = 3.0 * (alpha * (1.0 - alpha) / replications as f64).sqrt();
        assert!(
            rate <= alpha + slack,
            "alpha={alpha}: rejection rate {rate} above {alpha}+{slack}"
        );
        report.push_str(&format!(" alpha {alpha}: {rate:.4};"));
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 30, "took {elapsed:?}, budget 30 s");
    eprintln!(
        "PASS criterion 2: exactness error {worst:.2e} (<= 1e-12); null rejection rates{report} ({elapsed:?})"
    );
}

// ---------------------------------------------------------------------------
// Criterion 3: family-wise error control
// ---------------------------------------------------------------------------

struct BernoulliOutcomes {
    risks: Vec<f64>,
    sizes: Vec<f64>,
    pairs: usize,
    rng: ChaCha8Rng,
}

impl SetOutcomes for BernoulliOutcomes {
    fn num_pairs(&self) -> usize {
        self.pairs
    }

    fn outcomes(
        &mut self,
        range: std::ops::Range<usize>,
        candidates: &[Hyper],
    ) -> Result<Vec<Vec<PairOutcome>>, CalibrateError> {
        Ok(range
            .map(|_| {
                candidates
                    .iter()
                    .map(|h| {
                        let c = h.stop_quality as usize;
                        PairOutcome {
                            miss: self.rng.random::<f64>() < self.risks[c],
                            set_size: self.sizes[c] as usize,
                        }
                    })
                    .collect()
            })
            .collect())
    }
}

#[test]
fn acceptance_3_family_wise_error_control() {
    let start = std::time::Instant::now();
    let replications = 500;
    let delta = 0.05f64;
    let eps = 0.2f64;
    let n_candidates = 40;
    let pairs = 40;
    let grid = Grid {
        candidates: (0..n_candidates)
            .map(|i| Hyper {
                max_complexity: 0.5,
                min_diversity: 0.5,
                stop_quality: i as f64,
            })
            .collect(),
    };
    let mut seed_rng = ChaCha8Rng::seed_from_u64(0xACC3);
    let mut rates = String::new();
    for method in [MhtMethod::Pareto, MhtMethod::Bonferroni] {
        let mut any_valid = 0;
        for _ in 0..replications {
            let mut rng = ChaCha8Rng::seed_from_u64(seed_rng.random());
            let risks: Vec<f64> = (0..n_candidates)
                .map(|_| eps + rng.random_range(0.0..0.2))
                .collect();
            let sizes: Vec<f64> = (0..n_candidates)
                .map(|_| rng.random_range(1.0..10.0))
                .collect();
            let mut provider = BernoulliOutcomes {
                risks,
                sizes,
                pairs,
                rng,
            };
            let options = CalibrationOptions {
                epsilon: eps,
                delta,
                accuracy_threshold: 0.8,
                method,
                split_fraction: 0.5,
                l_max: 10,
                run_seed: 0,
            };
            let result = calibrate_with_outcomes(&mut provider, &grid, &options).unwrap();
            if !result.valid.is_empty() {
                any_valid += 1;
            }
        }
        let rate = any_valid as f64 / replications as f64;
        let slack = 3.0 * (delta * (1.0 - delta) / replications as f64).sqrt();
        assert!(
            rate <= delta + slack,
            "{method:?}: family-wise error {rate} above {delta}+{slack}"
        );
        rates.push_str(&format!(" {method:?}: {rate:.4};"));
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 120, "took {elapsed:?}, budget 2 min");
    eprintln!(
        "PASS criterion 3: any-valid rates under global null{rates} bound {:.4} ({elapsed:?})",
        delta + 3.0 * (delta * (1.0 - delta) / replications as f64).sqrt()
    );
}

// ---------------------------------------------------------------------------
// Criteria 4 and 5: the shared desk-scale benchmark matrix
// ---------------------------------------------------------------------------

static MATRIX: Lazy<Vec<MetricsRow>> = Lazy::new(|| {
    let dir = std::env::temp_dir().join("cstll-acceptance-matrix");
    let config = ExperimentConfig {
        methods: Method::all().to_vec(),
        epsilons: vec![0.1, 0.2, 0.3],
        seeds: (0..10).collect(),
        out_dir: dir,
        write_artifacts: false,
        ..ExperimentConfig::desk_scale()
    };
    run_experiment(&config).expect("benchmark matrix").rows
});

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn standard_error(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let var =
        values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64;
    (var / values.len() as f64).sqrt()
}

fn method_rows<'a>(rows: &'a [MetricsRow], method: Method) -> Vec<&'a MetricsRow> {
    rows.iter().filter(|r| r.method == method).collect()
}

#[test]
fn acceptance_4_risk_control_end_to_end() {
    let start = std::time::Instant::now();
    let rows = &*MATRIX;
    let mut summary = String::new();
    for &epsilon in &[0.1, 0.2, 0.3] {
        let cstll_risks: Vec<f64> = method_rows(rows, Method::Cstll)
            .into_iter()
            .filter(|r| r.epsilon == epsilon)
            .map(|r| r.avg_risk)
            .collect();
        assert_eq!(cstll_risks.len(), 10, "one row per seed");
        let m = mean(&cstll_risks);
        let se = standard_error(&cstll_risks);
        assert!(
            m <= epsilon + 0.10,
            "epsilon {epsilon}: mean calibrated risk {m:.3} above {:.3}",
            epsilon + 0.10
        );
        let stll_risks: Vec<f64> = method_rows(rows, Method::Stll)
            .into_iter()
            .filter(|r| r.epsilon == epsilon)
            .map(|r| r.avg_risk)
            .collect();
        summary.push_str(&format!(
            " eps {epsilon}: cstll {m:.3}+-{se:.3} (bound {:.2}), stll {:.3} (reported);",
            epsilon + 0.10,
            mean(&stll_risks)
        ));
    }
    eprintln!(
        "PASS criterion 4: calibrated risk under control;{summary} ({:?} incl. shared matrix)",
        start.elapsed()
    );
}

#[test]
fn acceptance_5_ablation_ordering() {
    let start = std::time::Instant::now();
    let rows = &*MATRIX;

    // Pooled seed-level means; cells without a defined value drop out.
    let pooled = |method: Method, metric: &dyn Fn(&MetricsRow) -> Option<f64>| -> Vec<f64> {
        method_rows(rows, method)
            .into_iter()
            .filter_map(metric)
            .collect()
    };
    let complexity = |r: &MetricsRow| r.avg_complexity;
    let diversity = |r: &MetricsRow| r.avg_diversity;
    let size = |r: &MetricsRow| Some(r.avg_set_size);

    let h_cs = pooled(Method::ComplexityStopping, &complexity);
    let h_so = pooled(Method::StoppingOnly, &complexity);
    assert!(
        mean(&h_cs) <= mean(&h_so) + 1e-12,
        "complexity_stopping complexity {:.4} above stopping_only {:.4}",
        mean(&h_cs),
        mean(&h_so)
    );

    let d_ds = pooled(Method::DiversityStopping, &diversity);
    let d_cs = pooled(Method::ComplexityStopping, &diversity);
    assert!(
        mean(&d_ds) + 1e-12 >= mean(&d_cs),
        "diversity_stopping diversity {:.4} below complexity_stopping {:.4}",
        mean(&d_ds),
        mean(&d_cs)
    );

    let calibrated = [
        Method::StoppingOnly,
        Method::ComplexityStopping,
        Method::DiversityStopping,
        Method::Bonferroni,
    ];
    let size_cstll = pooled(Method::Cstll, &size);
    for other in calibrated {
        let size_other = pooled(other, &size);
        assert!(
            mean(&size_cstll) <= mean(&size_other) + 1e-12,
            "cstll mean set size {:.3} above {} {:.3}",
            mean(&size_cstll),
            other.name(),
            mean(&size_other)
        );
    }

    eprintln!(
        "PASS criterion 5: complexity {:.4}+-{:.4} (complexity_stopping) <= {:.4}+-{:.4} (stopping_only); \
         diversity {:.4}+-{:.4} (diversity_stopping) >= {:.4}+-{:.4} (complexity_stopping); \
         cstll set size {:.3}+-{:.3} is smallest among calibrated variants ({:?})",
        mean(&h_cs),
        standard_error(&h_cs),
        mean(&h_so),
        standard_error(&h_so),
        mean(&d_ds),
        standard_error(&d_ds),
        mean(&d_cs),
        standard_error(&d_cs),
        mean(&size_cstll),
        standard_error(&size_cstll),
        start.elapsed()
    );
}

// ---------------------------------------------------------------------------
// Criterion 6: learner sanity
// ---------------------------------------------------------------------------

fn latency_rule_dataset(n: usize, seed: u64) -> LabeledDataset {
    let params = SimParams::default();
    let names = vec!["latency".to_string(), "backlog".to_string()];
    let rule = parse_formula("G[0,inf](latency < 100)", &names).unwrap();
    let items: Vec<(Trace, Label)> = (0..n)
        .map(|i| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(cstll::seed::derive_seed(seed, i as u64));
            let trace = simulate_trace(&params, &mut rng);
            let label = classify(&rule, &trace).unwrap();
            (trace, label)
        })
        .collect();
    LabeledDataset::new(items).unwrap()
}

fn random_learner_params(rng: &mut ChaCha8Rng, p: usize, d: usize, steps: usize) -> LearnerParams {
    let last = (steps - 1) as f64;
    let mut centers = Vec::new();
    let mut widths = Vec::new();
    for _ in 0..p {
        let a = rng.random_range(0.0..last);
        let b = rng.random_range(0.0..last);
        centers.push((a + b) / 2.0);
        widths.push((a - b).abs() / 2.0);
    }
    LearnerParams {
        predicate_weights: (0..p)
            .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect(),
        predicate_offsets: (0..p).map(|_| rng.random_range(-1.0..1.0)).collect(),
        interval_centers: centers,
        interval_half_widths: widths,
        temporal_always_probs: (0..p).map(|_| rng.random_range(0.05..0.95)).collect(),
        branch_probs: (0..p).map(|_| rng.random_range(0.05..0.95)).collect(),
        boolean_and_prob: rng.random_range(0.05..0.95),
        standardize_mid: vec![0.0; d],
        standardize_halfrange: vec![1.0; d],
        mask_sharpness: rng.random_range(1.0..4.0),
        trace_length: steps,
    }
}

#[test]
fn acceptance_6_learner_sanity() {
    let start = std::time::Instant::now();

    // Held-out accuracy across ten training seeds.
    let config = TemplateConfig::desk_scale();
    let train = latency_rule_dataset(500, 0xA11CE);
    let held = latency_rule_dataset(200, 0xB0B);
    let mut wins = 0;
    let mut accs = Vec::new();
    for seed in 0..10u64 {
        let formula = train_formula(&train, &config, seed).unwrap();
        let acc = accuracy(&formula, &held).unwrap();
        accs.push((acc * 1000.0).round() / 1000.0);
        if acc >= 0.8 {
            wins += 1;
        }
    }
    assert!(wins >= 7, "only {wins}/10 seeds reached 0.8: {accs:?}");

    // Gradient correctness on 100 random configurations.
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC6);
    let step = 1e-4;
    let mut worst_rel: f64 = 0.0;
    for _ in 0..100 {
        let p = rng.random_range(1..=4);
        let d = rng.random_range(1..=3);
        let steps = rng.random_range(5..=12);
        let params = random_learner_params(&mut rng, p, d, steps);
        let tau = rng.random_range(2.0..8.0);
        let trace = random_trace(&mut rng, d, steps, 1.5);
        let (_, grads) = relaxed_robustness_with_grad(&params, &trace, tau);
        let analytic = grads.flatten();
        let theta = params.flatten();
        let mut diff_sq = 0.0;
        let mut fd_sq = 0.0;
        for i in 0..theta.len() {
            let mut plus = params.clone();
            let mut tp = theta.clone();
            tp[i] += step;
            plus.assign_flat(&tp);
            let mut minus = params.clone();
            let mut tm = theta.clone();
            tm[i] -= step;
            minus.assign_flat(&tm);
            let fd = (relaxed_robustness(&plus, &trace, tau)
                - relaxed_robustness(&minus, &trace, tau))
                / (2.0 * step);
            diff_sq += (analytic[i] - fd) * (analytic[i] - fd);
            fd_sq += fd * fd;
        }
        let analytic_norm = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
        let rel = diff_sq.sqrt() / analytic_norm.max(fd_sq.sqrt()).max(1e-8);
        worst_rel = worst_rel.max(rel);
        assert!(rel <= 1e-4, "gradient relative error {rel}");
    }

    eprintln!(
        "PASS criterion 6: {wins}/10 seeds at held-out accuracy >= 0.8 ({accs:?}); \
         worst gradient relative error {worst_rel:.2e} ({:?})",
        start.elapsed()
    );
}

// ---------------------------------------------------------------------------
// Criterion 7: structural invariants
// ---------------------------------------------------------------------------

#[test]
fn acceptance_7_structural_invariants() {
    let start = std::time::Instant::now();

    // Post-hoc audit of generated sets under finite thresholds, and the
    // fallback producing exactly L_max formulas.
    let quick = TemplateConfig {
        epochs: 10,
        ..TemplateConfig::desk_scale()
    };
    let train = latency_rule_dataset(120, 0xACC7);
    let l_max = 5;
    for run_seed in 0..3u64 {
        for hyper in [
            Hyper::new(0.34, 0.52, 0.6).unwrap(),
            Hyper::new(0.67, 0.55, 0.5).unwrap(),
        ] {
            let set = generate_set(&train, &hyper, &quick, l_max, run_seed).unwrap();
            set.verify_invariants(&train, &hyper, quick.num_temporal, l_max)
                .unwrap_or_else(|e| panic!("audit failed ({hyper:?}, seed {run_seed}): {e}"));
        }
        let fallback = generate_set(&train, &Hyper::fallback(), &quick, l_max, run_seed).unwrap();
        assert_eq!(
            fallback.len(),
            l_max,
            "fallback thresholds must accept every candidate"
        );
    }

    // Frontier vs the O(n^2) dominance oracle on 100 random clouds.
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC7 + 1);
    for _ in 0..100 {
        let n = rng.random_range(1..=50);
        let points: Vec<(f64, f64, Hyper)> = (0..n)
            .map(|i| {
                (
                    (rng.random_range(0..8) as f64) / 7.0,
                    rng.random_range(0..10) as f64,
                    Hyper {
                        max_complexity: 0.5,
                        min_diversity: 0.5,
                        stop_quality: i as f64,
                    },
                )
            })
            .collect();
        let mut got = pareto_frontier(&points);
        got.sort_unstable();
        let dominated = |i: usize| {
            points.iter().enumerate().any(|(j, q)| {
                j != i
                    && q.0 <= points[i].0
                    && q.1 <= points[i].1
                    && (q.0 < points[i].0 || q.1 < points[i].1)
            })
        };
        let expected: Vec<usize> = (0..points.len()).filter(|&i| !dominated(i)).collect();
        assert_eq!(got, expected, "frontier differs from dominance oracle");
    }

    // Fixed-sequence prefix property on synthetic outcomes.
    let mut seed_rng = ChaCha8Rng::seed_from_u64(0xACC7 + 2);
    for _ in 0..100 {
        let n_candidates = 10;
        let mut rng = ChaCha8Rng::seed_from_u64(seed_rng.random());
        let risks: Vec<f64> = (0..n_candidates)
            .map(|_| rng.random_range(0.0..0.5))
            .collect();
        let sizes: Vec<f64> = (0..n_candidates)
            .map(|_| rng.random_range(1.0..10.0))
            .collect();
        let grid = Grid {
            candidates: (0..n_candidates)
                .map(|i| Hyper {
                    max_complexity: 0.5,
                    min_diversity: 0.5,
                    stop_quality: i as f64,
                })
                .collect(),
        };
        let mut provider = BernoulliOutcomes {
            risks,
            sizes,
            pairs: 30,
            rng,
        };
        let options = CalibrationOptions {
            epsilon: 0.3,
            delta: 0.05,
            accuracy_threshold: 0.8,
            method: MhtMethod::Pareto,
            split_fraction: 0.5,
            l_max: 10,
            run_seed: 0,
        };
        let result = calibrate_with_outcomes(&mut provider, &grid, &options).unwrap();
        let tested: Vec<_> = result.reports.iter().filter(|r| r.tested).collect();
        let non_rejected = tested.iter().filter(|r| !r.rejected).count();
        assert!(non_rejected <= 1, "tested past the first non-rejection");
        assert_eq!(result.valid.len(), tested.len() - non_rejected);
        assert_eq!(result.fallback_used, result.valid.is_empty());
        if result.fallback_used {
            assert!(result.selected.is_fallback());
        }
    }

    // Distance identity and bounds on randomized inputs.
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC7 + 3);
    for _ in 0..300 {
        let t_len = rng.random_range(2..=15);
        let d = rng.random_range(1..=2);
        let f1 = random_formula(&mut rng, 2, 3, d, t_len);
        let f2 = random_formula(&mut rng, 2, 3, d, t_len);
        let items: Vec<(Trace, Label)> = (0..rng.random_range(1..=15))
            .map(|_| (random_trace(&mut rng, d, t_len, 3.0), Label::Positive))
            .collect();
        let ds = LabeledDataset::new(items).unwrap();
        assert_eq!(distance(&f1, &f1, &ds).unwrap(), 0.5);
        let d12 = distance(&f1, &f2, &ds).unwrap();
        assert!((0.5..1.0).contains(&d12), "distance {d12} outside [0.5, 1)");
    }

    eprintln!(
        "PASS criterion 7: set audits, fallback size, frontier oracle, prefix property, \
         and distance bounds all hold ({:?})",
        start.elapsed()
    );
}

// ---------------------------------------------------------------------------
// Criterion 8: byte-identical reruns
// ---------------------------------------------------------------------------

#[test]
fn acceptance_8_experiment_determinism() {
    let start = std::time::Instant::now();
    let base = std::env::temp_dir().join("cstll-acceptance-determinism");
    let template = TemplateConfig {
        epochs: 8,
        ..TemplateConfig::desk_scale()
    };
    let make_config = |out: std::path::PathBuf| ExperimentConfig {
        methods: vec![Method::Stll, Method::Cstll, Method::Bonferroni],
        epsilons: vec![0.2, 0.3],
        n_train: 120,
        n_valid: 60,
        n_cal_pairs: 6,
        n_test_pairs: 3,
        l_max: 4,
        seeds: vec![0, 1],
        template: template.clone(),
        out_dir: out,
        write_artifacts: true,
        ..ExperimentConfig::desk_scale()
    };
    let first = run_experiment(&make_config(base.join("run1"))).unwrap();
    let second = run_experiment(&make_config(base.join("run2"))).unwrap();
    let bytes1 = std::fs::read(&first.metrics_path).unwrap();
    let bytes2 = std::fs::read(&second.metrics_path).unwrap();
    assert_eq!(bytes1, bytes2, "metrics.csv differs between identical runs");
    assert!(!bytes1.is_empty());
    eprintln!(
        "PASS criterion 8: identical configs produced byte-identical metrics.csv \
         ({} bytes, {:?})",
        bytes1.len(),
        start.elapsed()
    );
}

// ---------------------------------------------------------------------------
// Supporting check: formulas in the matrix artifacts satisfy their
// calibrated constraints (exercised through verify_invariants during
// generation tests; here we confirm the matrix exposes sane aggregates).
// ---------------------------------------------------------------------------

#[test]
fn matrix_aggregates_are_well_formed() {
    let rows = &*MATRIX;
    assert_eq!(rows.len(), 6 * 3 * 10, "6 methods x 3 tolerances x 10 seeds");
    let mut by_method: BTreeMap<&str, usize> = BTreeMap::new();
    for row in rows {
        *by_method.entry(row.method.name()).or_default() += 1;
        assert!((0.0..=1.0).contains(&row.avg_risk));
        assert!(row.avg_set_size >= 0.0 && row.avg_set_size <= 10.0);
        if let Some(h) = row.avg_complexity {
            assert!((0.0..=1.0).contains(&h), "complexity {h} outside [0,1]");
        }
        if let Some(d) = row.avg_diversity {
            assert!((0.5..1.0).contains(&d), "diversity {d} outside [0.5,1)");
        }
        if row.method == Method::Stll {
            assert_eq!(row.avg_set_size, 1.0, "single-formula baseline");
        }
    }
    for (_, count) in by_method {
        assert_eq!(count, 30);
    }
    // Canonical formulas in the log survive a parse round trip.
    let names = vec!["latency".to_string(), "backlog".to_string()];
    let train = latency_rule_dataset(80, 0xACC9);
    let quick = TemplateConfig {
        epochs: 6,
        ..TemplateConfig::desk_scale()
    };
    let set = generate_set(&train, &Hyper::fallback(), &quick, 3, 1).unwrap();
    for accepted in &set.accepted {
        let text = format_formula(&accepted.formula, &names);
        let reparsed = parse_formula(&text, &names).unwrap();
        assert_eq!(format_formula(&reparsed, &names), text);
    }
}
