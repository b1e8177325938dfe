//! Synthetic latency/backlog KPI trace generation and ground-truth labeling.
//!
//! Stands in for a packet-level network simulator: latency follows an AR(1)
//! process around a base level with additive congestion bursts, and backlog
//! follows a non-negative queue recursion whose arrivals rise while a burst
//! is active. A trace is labeled positive for a task `(T1, T2)` when latency
//! stays strictly below `T1` at every step and backlog stays strictly below
//! `T2` over the final five steps.
//!
//! All generation is a pure function of seeds: each trace derives its own
//! RNG stream, so datasets can be produced in parallel without changing
//! results.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::calibrate::CalibrationPair;
use crate::formula::{Atom, Formula, IntervalEnd};
use crate::seed::derive_seed;
use crate::trace::{DataError, Label, LabeledDataset, Trace};

pub const LATENCY_CHANNEL: &str = "latency";
pub const BACKLOG_CHANNEL: &str = "backlog";

/// Steps at the end of a trace that the backlog condition inspects.
pub const BACKLOG_WINDOW: usize = 5;

#[derive(Debug, Error)]
pub enum TraceGenError {
    #[error("trace has no channel named `{0}`")]
    MissingChannel(&'static str),
    #[error("task produced a single-class training split after {attempts} attempts")]
    DegenerateTask { attempts: usize },
    #[error(transparent)]
    Data(#[from] DataError),
}

/// One labeling regime: a latency threshold (ms) and a backlog threshold
/// (kilobytes).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Task {
    pub latency_threshold: f64,
    pub backlog_threshold: f64,
    pub id: usize,
}

/// The five benchmark threshold pairs.
pub const TASKS: [(f64, f64); 5] = [
    (100.0, 30.0),
    (110.0, 28.0),
    (120.0, 26.0),
    (130.0, 24.0),
    (140.0, 32.0),
];

impl Task {
    pub fn by_id(id: usize) -> Task {
        let (t1, t2) = TASKS[id];
        Task {
            latency_threshold: t1,
            backlog_threshold: t2,
            id,
        }
    }

    pub fn all() -> Vec<Task> {
        (0..TASKS.len()).map(Task::by_id).collect()
    }

    /// The labeling rule as an STL formula over the given channel layout:
    /// `G[0,T-1](latency < T1) & G[T-5,T-1](backlog < T2)`.
    pub fn ground_truth_formula(
        &self,
        channel_names: &[String],
        trace_len: usize,
    ) -> Result<Formula, TraceGenError> {
        let d = channel_names.len();
        let lat = channel_index(channel_names, LATENCY_CHANNEL)?;
        let bl = channel_index(channel_names, BACKLOG_CHANNEL)?;
        let last = trace_len - 1;
        let window_start = trace_len.saturating_sub(BACKLOG_WINDOW);
        let latency_atom = Formula::Atom(
            Atom::channel_lt(d, lat, self.latency_threshold).expect("one-hot atom"),
        );
        let backlog_atom = Formula::Atom(
            Atom::channel_lt(d, bl, self.backlog_threshold).expect("one-hot atom"),
        );
        let f = Formula::and(vec![
            Formula::always(0, IntervalEnd::Step(last), latency_atom).expect("interval"),
            Formula::always(window_start, IntervalEnd::Step(last), backlog_atom)
                .expect("interval"),
        ])
        .expect("two children");
        Ok(f)
    }
}

fn channel_index(names: &[String], wanted: &'static str) -> Result<usize, TraceGenError> {
    names
        .iter()
        .position(|n| n == wanted)
        .ok_or(TraceGenError::MissingChannel(wanted))
}

/// Uniform draw over the five benchmark tasks.
pub fn sample_task(rng: &mut impl Rng) -> Task {
    Task::by_id(rng.random_range(0..TASKS.len()))
}

/// Simulator dynamics. Defaults are tuned so that every benchmark task
/// labels at least 20% of traces with the minority class.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SimParams {
    /// Trace length in steps.
    pub steps: usize,
    /// Latency level the AR(1) process reverts to (ms).
    pub base_latency: f64,
    /// Standard deviation of per-step latency noise (ms).
    pub latency_noise_scale: f64,
    /// AR(1) coefficient in [0, 1).
    pub ar_coefficient: f64,
    /// Per-step probability that a congestion burst starts.
    pub burst_rate: f64,
    /// Mean additive latency of a burst (ms); per-burst magnitudes are
    /// exponential around this mean.
    pub burst_magnitude: f64,
    /// Steps a burst stays active.
    pub burst_duration: usize,
    /// Mean backlog arrivals per step (kilobytes).
    pub arrival_rate: f64,
    /// Backlog service per step (kilobytes).
    pub service_rate: f64,
    /// Base seed used when this configuration drives dataset assembly.
    pub rng_seed: u64,
}

/// Arrival-rate multiplier applied while a burst is active.
const BURST_ARRIVAL_BOOST: f64 = 2.5;

impl Default for SimParams {
    fn default() -> Self {
        // The AR(1) recursion amplifies a sustained per-step burst offset by
        // 1/(1 - ar), so the 12 ms mean burst drives latency excursions on
        // the order of 40 ms, right at the benchmark threshold band.
        SimParams {
            steps: 61,
            base_latency: 60.0,
            latency_noise_scale: 6.0,
            ar_coefficient: 0.7,
            burst_rate: 0.03,
            burst_magnitude: 12.0,
            burst_duration: 8,
            arrival_rate: 5.0,
            service_rate: 8.0,
            rng_seed: 0,
        }
    }
}

/// Simulate one latency/backlog trace; deterministic given the RNG state.
pub fn simulate_trace(params: &SimParams, rng: &mut impl Rng) -> Trace {
    let steps = params.steps;
    let mut latency = Vec::with_capacity(steps);
    let mut backlog = Vec::with_capacity(steps);

    let mut lat = params.base_latency;
    let mut queue = 0.0f64;
    let mut burst_left = 0usize;
    let mut burst_add = 0.0f64;

    for _ in 0..steps {
        if burst_left == 0 && params.burst_rate > 0.0 && rng.random::<f64>() < params.burst_rate {
            burst_left = params.burst_duration;
            burst_add = params.burst_magnitude * exponential(rng);
        }
        let bursting = burst_left > 0;

        let noise = params.latency_noise_scale * standard_normal(rng);
        lat = params.base_latency
            + params.ar_coefficient * (lat - params.base_latency)
            + noise
            + if bursting { burst_add } else { 0.0 };
        lat = lat.max(0.0);
        latency.push(lat);

        let rate = params.arrival_rate * if bursting { BURST_ARRIVAL_BOOST } else { 1.0 };
        let arrivals = poisson(rng, rate) as f64;
        queue = (queue + arrivals - params.service_rate).max(0.0);
        backlog.push(queue);

        if burst_left > 0 {
            burst_left -= 1;
        }
    }

    Trace::new(
        vec![latency, backlog],
        vec![LATENCY_CHANNEL.to_string(), BACKLOG_CHANNEL.to_string()],
    )
    .expect("simulated trace is well-formed")
}

/// Ground-truth label: positive iff latency stays strictly below the task's
/// latency threshold at every step and backlog stays strictly below the
/// backlog threshold over the final window.
pub fn ground_truth_label(trace: &Trace, task: &Task) -> Result<Label, TraceGenError> {
    let lat = channel_index(trace.channel_names(), LATENCY_CHANNEL)?;
    let bl = channel_index(trace.channel_names(), BACKLOG_CHANNEL)?;
    let len = trace.len();
    let latency_ok = trace
        .channel(lat)
        .iter()
        .all(|&v| v < task.latency_threshold);
    let window_start = len.saturating_sub(BACKLOG_WINDOW);
    let backlog_ok = trace.channel(bl)[window_start..]
        .iter()
        .all(|&v| v < task.backlog_threshold);
    Ok(if latency_ok && backlog_ok {
        Label::Positive
    } else {
        Label::Negative
    })
}

/// Simulate and label `n` traces for one task. Each trace draws its own RNG
/// stream derived from `seed`, so results are independent of parallel
/// scheduling.
pub fn simulate_dataset(
    task: &Task,
    n: usize,
    params: &SimParams,
    seed: u64,
) -> Result<LabeledDataset, TraceGenError> {
    let items: Vec<(Trace, Label)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
            let trace = simulate_trace(params, &mut rng);
            let label = ground_truth_label(&trace, task).expect("simulated channels present");
            (trace, label)
        })
        .collect();
    Ok(LabeledDataset::new(items)?)
}

/// Assemble a (train, validation) dataset pair for one task.
///
/// `n_train + n_valid` traces are simulated and split disjointly. If the
/// training split ends up single-class, the pair is regenerated from a fresh
/// derived seed, up to a bounded number of attempts.
pub fn make_dataset_pair(
    task: &Task,
    n_train: usize,
    n_valid: usize,
    params: &SimParams,
    seed: u64,
) -> Result<CalibrationPair, TraceGenError> {
    const MAX_ATTEMPTS: usize = 20;
    for attempt in 0..MAX_ATTEMPTS {
        let attempt_seed = derive_seed(seed, attempt as u64);
        let all = simulate_dataset(task, n_train + n_valid, params, attempt_seed)?;
        let mut items = all.items().to_vec();
        let valid_items = items.split_off(n_train);
        let train = LabeledDataset::new(items)?;
        if !train.has_both_labels() {
            continue;
        }
        let valid = LabeledDataset::new(valid_items)?;
        return Ok(CalibrationPair {
            train,
            valid,
            task_id: format!("task-{}", task.id),
        });
    }
    Err(TraceGenError::DegenerateTask {
        attempts: MAX_ATTEMPTS,
    })
}

/// Standard normal draw (Box-Muller); implemented locally so the generated
/// streams are pinned by this crate rather than by distribution-crate
/// internals.
fn standard_normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Exponential(mean 1) draw.
fn exponential(rng: &mut impl Rng) -> f64 {
    let u: f64 = 1.0 - rng.random::<f64>();
    -u.ln()
}

/// Poisson draw by inversion of the product of uniforms.
fn poisson(rng: &mut impl Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let limit = (-mean).exp();
    let mut product: f64 = rng.random();
    let mut count = 0u64;
    while product > limit {
        product *= rng.random::<f64>();
        count += 1;
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robustness::classify;

    #[test]
    fn task_ids_map_to_thresholds() {
        let t = Task::by_id(0);
        assert_eq!((t.latency_threshold, t.backlog_threshold), (100.0, 30.0));
        let t = Task::by_id(4);
        assert_eq!((t.latency_threshold, t.backlog_threshold), (140.0, 32.0));
    }

    #[test]
    fn sample_task_is_roughly_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = [0usize; 5];
        let draws = 5000;
        for _ in 0..draws {
            counts[sample_task(&mut rng).id] += 1;
        }
        // 3 standard errors around 0.2 at n = 5000
        let se = (0.2f64 * 0.8 / draws as f64).sqrt();
        for &c in &counts {
            let freq = c as f64 / draws as f64;
            assert!(
                (freq - 0.2).abs() <= 3.0 * se,
                "task frequency {freq} outside tolerance"
            );
        }
    }

    #[test]
    fn degenerate_dynamics_are_deterministic() {
        let params = SimParams {
            burst_rate: 0.0,
            latency_noise_scale: 0.0,
            arrival_rate: 0.0,
            ..SimParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let trace = simulate_trace(&params, &mut rng);
        for &v in trace.channel(0) {
            assert_eq!(v, params.base_latency);
        }
        for &v in trace.channel(1) {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn same_seed_same_trace() {
        let params = SimParams::default();
        let t1 = simulate_trace(&params, &mut ChaCha8Rng::seed_from_u64(42));
        let t2 = simulate_trace(&params, &mut ChaCha8Rng::seed_from_u64(42));
        assert_eq!(t1, t2);
    }

    #[test]
    fn traces_are_non_negative() {
        let params = SimParams::default();
        for seed in 0..50 {
            let trace = simulate_trace(&params, &mut ChaCha8Rng::seed_from_u64(seed));
            for ch in 0..2 {
                assert!(trace.channel(ch).iter().all(|&v| v >= 0.0 && v.is_finite()));
            }
        }
    }

    #[test]
    fn label_boundaries_are_strict() {
        let names = vec![LATENCY_CHANNEL.to_string(), BACKLOG_CHANNEL.to_string()];
        let task = Task::by_id(0);

        let good = Trace::new(vec![vec![90.0; 61], vec![10.0; 61]], names.clone()).unwrap();
        assert_eq!(ground_truth_label(&good, &task).unwrap(), Label::Positive);

        let mut spiked = vec![90.0; 61];
        spiked[30] = 150.0;
        let bad = Trace::new(vec![spiked, vec![10.0; 61]], names.clone()).unwrap();
        assert_eq!(ground_truth_label(&bad, &task).unwrap(), Label::Negative);

        // Backlog exactly at the threshold violates the strict inequality.
        let mut backlog = vec![10.0; 61];
        for v in backlog[56..].iter_mut() {
            *v = 29.999;
        }
        let edge = Trace::new(vec![vec![90.0; 61], backlog], names.clone()).unwrap();
        assert_eq!(ground_truth_label(&edge, &task).unwrap(), Label::Positive);

        let mut at = vec![10.0; 61];
        for v in at[56..].iter_mut() {
            *v = 30.0;
        }
        let at_threshold = Trace::new(vec![vec![90.0; 61], at], names).unwrap();
        assert_eq!(
            ground_truth_label(&at_threshold, &task).unwrap(),
            Label::Negative
        );
    }

    #[test]
    fn labeler_agrees_with_formula_classification() {
        let params = SimParams::default();
        for task in Task::all() {
            let ds = simulate_dataset(&task, 60, &params, 5 + task.id as u64).unwrap();
            let formula = task
                .ground_truth_formula(ds.channel_names(), ds.trace_length())
                .unwrap();
            for (trace, label) in ds.iter() {
                assert_eq!(classify(&formula, trace).unwrap(), *label);
            }
        }
    }

    #[test]
    fn loosening_thresholds_never_flips_positive_to_negative() {
        let params = SimParams::default();
        let strict = Task {
            latency_threshold: 100.0,
            backlog_threshold: 24.0,
            id: 0,
        };
        let loose = Task {
            latency_threshold: 140.0,
            backlog_threshold: 40.0,
            id: 0,
        };
        for seed in 0..200 {
            let trace = simulate_trace(&params, &mut ChaCha8Rng::seed_from_u64(seed));
            let a = ground_truth_label(&trace, &strict).unwrap();
            let b = ground_truth_label(&trace, &loose).unwrap();
            if a == Label::Positive {
                assert_eq!(b, Label::Positive);
            }
        }
    }

    #[test]
    fn pair_splits_are_disjoint_and_sized() {
        let params = SimParams::default();
        let pair = make_dataset_pair(&Task::by_id(1), 50, 20, &params, 9).unwrap();
        assert_eq!(pair.train.len(), 50);
        assert_eq!(pair.valid.len(), 20);
        assert!(pair.train.has_both_labels());
    }

    #[test]
    fn every_task_keeps_both_classes_frequent() {
        let params = SimParams::default();
        for task in Task::all() {
            let ds = simulate_dataset(&task, 3000, &params, 1234).unwrap();
            let pos = ds.positive_fraction();
            assert!(
                pos >= 0.2 && pos <= 0.8,
                "task {} positive fraction {pos} outside [0.2, 0.8]",
                task.id
            );
        }
    }
}
