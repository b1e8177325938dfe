//! Differentiable STL formula learning.
//!
//! A fixed template network — one linear predicate module per temporal
//! module, then a single output Boolean module — is relaxed into a smooth
//! function of continuous parameters and trained by minibatch SGD on a
//! shifted hinge loss over the classification margin `y * rho`. After
//! training, the parameters are hardened into a discrete [`Formula`].
//!
//! Relaxation choices:
//!
//! - Hard min/max become temperature-`tau` log-sum-exp with normalized
//!   weights: `smooth_max(v) = max + ln(sum w_i exp(tau (v_i - max))) / tau`.
//!   For saturated weights the value sits within `ln(width)/tau` of the hard
//!   operator.
//! - Each temporal window is a soft indicator over steps, the product of two
//!   logistics around `center - width` and `center + width`.
//! - Binary operator choices (Always/Eventually, And/Or) and branch
//!   selection are probabilities in [0, 1]; operator outcomes are blended
//!   convexly, which keeps training deterministic for a given seed.
//!
//! Predicates are trained in per-channel standardized coordinates so the
//! paper-standard learning rate works across KPI scales; hardening converts
//! them back to raw-unit atoms by an exact affine rewrite, so the hardened
//! formula computes the same robustness values the surrogate approached.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::formula::{Atom, Formula, FormulaError, IntervalEnd};
use crate::seed::derive_seed;
use crate::trace::{LabeledDataset, Trace};

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("training data contains a single label class")]
    SingleClass,
    #[error("invalid template configuration: {0}")]
    InvalidConfig(String),
    #[error("hardened parameters produced an invalid formula: {0}")]
    Degenerate(#[from] FormulaError),
}

/// Template layout and optimization hyperparameters.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct TemplateConfig {
    /// Predicate modules at the input layer.
    pub num_predicates: usize,
    /// Temporal modules; the default layout pairs each with one predicate.
    pub num_temporal: usize,
    /// Trace length the template is built for (overridden by training data).
    pub trace_length: usize,
    /// Channel count (overridden by training data).
    pub num_channels: usize,
    /// Log-sum-exp temperature.
    pub temperature: f64,
    /// Steepness of the soft window indicator.
    pub mask_sharpness: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Desired robustness margin (beta in the hinge loss).
    pub margin: f64,
    /// Reward weight for samples already beyond the margin (gamma).
    pub margin_weight: f64,
    /// Weight of the p(1-p) binarization penalty over all probabilities.
    pub reg_binarize: f64,
    /// Weight of the L1 penalty on branch-selection probabilities.
    pub reg_sparsity: f64,
    /// Weight of the per-branch margin supervision during SGD. The blended
    /// output alone routes gradient only to extreme branches; supervising
    /// each branch keeps every temporal module trainable.
    pub branch_supervision: f64,
    /// L1 weight on predicate coefficients, pushing atoms toward
    /// single-channel thresholds.
    pub reg_atom_sparsity: f64,
    /// Per-channel (min, max) used to scale initialization; when empty the
    /// bounds are measured from the training data.
    pub channel_bounds: Vec<(f64, f64)>,
}

impl Default for TemplateConfig {
    fn default() -> Self {
        TemplateConfig {
            num_predicates: 6,
            num_temporal: 6,
            trace_length: 61,
            num_channels: 2,
            temperature: 10.0,
            mask_sharpness: 3.0,
            learning_rate: 0.1,
            batch_size: 512,
            epochs: 5,
            margin: 0.1,
            margin_weight: 0.01,
            reg_binarize: 0.01,
            reg_sparsity: 0.01,
            branch_supervision: 0.3,
            reg_atom_sparsity: 0.005,
            channel_bounds: Vec::new(),
        }
    }
}

impl TemplateConfig {
    /// Reduced preset for desk-scale runs. Small datasets need a smaller
    /// batch and more passes to accumulate a comparable number of SGD steps;
    /// the annealed temperature schedule stretches over the same run.
    pub fn desk_scale() -> Self {
        TemplateConfig {
            batch_size: 64,
            epochs: 100,
            ..TemplateConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        if self.num_predicates == 0 || self.num_temporal == 0 {
            return Err(LearnError::InvalidConfig(
                "template needs at least one predicate and temporal module".to_string(),
            ));
        }
        if self.num_predicates != self.num_temporal {
            return Err(LearnError::InvalidConfig(format!(
                "layered template requires num_predicates == num_temporal, got {} and {}",
                self.num_predicates, self.num_temporal
            )));
        }
        if self.trace_length == 0 || self.num_channels == 0 {
            return Err(LearnError::InvalidConfig(
                "trace_length and num_channels must be positive".to_string(),
            ));
        }
        for (name, v) in [
            ("temperature", self.temperature),
            ("mask_sharpness", self.mask_sharpness),
            ("learning_rate", self.learning_rate),
            ("margin", self.margin),
            ("margin_weight", self.margin_weight),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(LearnError::InvalidConfig(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.reg_binarize < 0.0 || self.reg_sparsity < 0.0 || self.branch_supervision < 0.0 {
            return Err(LearnError::InvalidConfig(
                "regularizer and supervision weights must be non-negative".to_string(),
            ));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(LearnError::InvalidConfig(
                "batch_size and epochs must be positive".to_string(),
            ));
        }
        Ok(())
    }

    /// Copy of this configuration with shape and scaling taken from a
    /// dataset. Scaling uses an inner quantile band so burst tails do not
    /// stretch the standardized coordinates.
    fn resolved_for(&self, dataset: &LabeledDataset) -> TemplateConfig {
        let mut cfg = self.clone();
        cfg.trace_length = dataset.trace_length();
        cfg.num_channels = dataset.num_channels();
        if cfg.channel_bounds.len() != cfg.num_channels {
            cfg.channel_bounds = dataset.channel_quantile_bounds(0.05, 0.95);
        }
        cfg
    }
}

/// Continuous template parameters.
///
/// Predicate weights and offsets live in standardized coordinates
/// `z = (x - mid) / halfrange`; the standardization constants are carried
/// here and are not trained.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerParams {
    /// Per-predicate weight vectors, `P x d`.
    pub predicate_weights: Vec<Vec<f64>>,
    /// Per-predicate offsets.
    pub predicate_offsets: Vec<f64>,
    /// Window centers, one per temporal module.
    pub interval_centers: Vec<f64>,
    /// Window half-widths, one per temporal module.
    pub interval_half_widths: Vec<f64>,
    /// Probability that a temporal module is Always (vs Eventually).
    pub temporal_always_probs: Vec<f64>,
    /// Branch-selection probabilities of the output Boolean module.
    pub branch_probs: Vec<f64>,
    /// Probability that the output Boolean module is And (vs Or).
    pub boolean_and_prob: f64,
    /// Per-channel standardization midpoints (not trained).
    pub standardize_mid: Vec<f64>,
    /// Per-channel standardization half-ranges (not trained).
    pub standardize_halfrange: Vec<f64>,
    /// Soft-window steepness (not trained).
    pub mask_sharpness: f64,
    /// Trace length used for window projection and hardening.
    pub trace_length: usize,
}

impl LearnerParams {
    pub fn num_branches(&self) -> usize {
        self.predicate_weights.len()
    }

    pub fn num_channels(&self) -> usize {
        self.standardize_mid.len()
    }

    /// All trainable values in a fixed order: predicate weights (row major),
    /// offsets, centers, half-widths, temporal probabilities, branch
    /// probabilities, Boolean operator probability.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.flat_len());
        for row in &self.predicate_weights {
            out.extend_from_slice(row);
        }
        out.extend_from_slice(&self.predicate_offsets);
        out.extend_from_slice(&self.interval_centers);
        out.extend_from_slice(&self.interval_half_widths);
        out.extend_from_slice(&self.temporal_always_probs);
        out.extend_from_slice(&self.branch_probs);
        out.push(self.boolean_and_prob);
        out
    }

    pub fn flat_len(&self) -> usize {
        let p = self.num_branches();
        p * self.num_channels() + 5 * p + 1
    }

    /// Overwrite the trainable values from a flat vector (inverse of
    /// [`flatten`](Self::flatten)).
    pub fn assign_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.flat_len());
        let p = self.num_branches();
        let d = self.num_channels();
        let mut idx = 0;
        for row in self.predicate_weights.iter_mut() {
            row.copy_from_slice(&flat[idx..idx + d]);
            idx += d;
        }
        for dst in [
            &mut self.predicate_offsets,
            &mut self.interval_centers,
            &mut self.interval_half_widths,
            &mut self.temporal_always_probs,
            &mut self.branch_probs,
        ] {
            dst.copy_from_slice(&flat[idx..idx + p]);
            idx += p;
        }
        self.boolean_and_prob = flat[idx];
    }

    /// Clamp probabilities into [0, 1] and windows into the trace.
    pub fn project(&mut self) {
        let last = (self.trace_length - 1) as f64;
        for p in self
            .temporal_always_probs
            .iter_mut()
            .chain(self.branch_probs.iter_mut())
        {
            *p = p.clamp(0.0, 1.0);
        }
        self.boolean_and_prob = self.boolean_and_prob.clamp(0.0, 1.0);
        for k in 0..self.num_branches() {
            let w = self.interval_half_widths[k].clamp(0.0, last / 2.0);
            self.interval_half_widths[k] = w;
            self.interval_centers[k] = self.interval_centers[k].clamp(w, last - w);
        }
    }
}

/// Gradient of a scalar with respect to every trainable parameter.
#[derive(Debug, Clone)]
pub struct LearnerGrads {
    pub predicate_weights: Vec<Vec<f64>>,
    pub predicate_offsets: Vec<f64>,
    pub interval_centers: Vec<f64>,
    pub interval_half_widths: Vec<f64>,
    pub temporal_always_probs: Vec<f64>,
    pub branch_probs: Vec<f64>,
    pub boolean_and_prob: f64,
}

impl LearnerGrads {
    pub fn zeros(branches: usize, channels: usize) -> Self {
        LearnerGrads {
            predicate_weights: vec![vec![0.0; channels]; branches],
            predicate_offsets: vec![0.0; branches],
            interval_centers: vec![0.0; branches],
            interval_half_widths: vec![0.0; branches],
            temporal_always_probs: vec![0.0; branches],
            branch_probs: vec![0.0; branches],
            boolean_and_prob: 0.0,
        }
    }

    pub fn add_scaled(&mut self, other: &LearnerGrads, factor: f64) {
        for (dst, src) in self
            .predicate_weights
            .iter_mut()
            .zip(&other.predicate_weights)
        {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += factor * s;
            }
        }
        for (dst, src) in [
            (&mut self.predicate_offsets, &other.predicate_offsets),
            (&mut self.interval_centers, &other.interval_centers),
            (
                &mut self.interval_half_widths,
                &other.interval_half_widths,
            ),
            (
                &mut self.temporal_always_probs,
                &other.temporal_always_probs,
            ),
            (&mut self.branch_probs, &other.branch_probs),
        ] {
            for (d, s) in dst.iter_mut().zip(src.iter()) {
                *d += factor * s;
            }
        }
        self.boolean_and_prob += factor * other.boolean_and_prob;
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for row in &self.predicate_weights {
            out.extend_from_slice(row);
        }
        out.extend_from_slice(&self.predicate_offsets);
        out.extend_from_slice(&self.interval_centers);
        out.extend_from_slice(&self.interval_half_widths);
        out.extend_from_slice(&self.temporal_always_probs);
        out.extend_from_slice(&self.branch_probs);
        out.push(self.boolean_and_prob);
        out
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Strength of the quadratic pull anchoring branch-selection
/// probabilities, relative to the branch-supervision weight.
const SELECTION_PULL: f64 = 0.05;

/// Weighted log-sum-exp maximum with value and partial derivatives.
struct LseOut {
    value: f64,
    /// d value / d v_i (softmax weights, summing to 1).
    dv: Vec<f64>,
    /// d value / d m_i for the raw (unnormalized) weights.
    dm: Vec<f64>,
    /// True when the weights were degenerate and replaced by a uniform mask;
    /// weight gradients are zero in that case.
    degenerate: bool,
}

fn lse_weighted_max(values: &[f64], weights: &[f64], tau: f64) -> LseOut {
    let n = values.len();
    let total: f64 = weights.iter().sum();
    let degenerate = !(total > 1e-300);
    let uniform = 1.0;
    let weight_at = |i: usize| if degenerate { uniform } else { weights[i] };
    let mass = if degenerate { n as f64 } else { total };

    // The peak runs over the supported entries only; zero-weight entries do
    // not contribute to the value but still carry a weight gradient.
    let mut peak = f64::NEG_INFINITY;
    for i in 0..n {
        if weight_at(i) > 0.0 && values[i] > peak {
            peak = values[i];
        }
    }
    let mut s = 0.0;
    let mut exps = vec![0.0; n];
    for (i, &v) in values.iter().enumerate() {
        // Exponent capped so zero-weight entries above the supported peak
        // cannot overflow; their dm saturates instead.
        let e = (tau * (v - peak)).min(700.0).exp();
        exps[i] = e;
        let w = weight_at(i);
        if w > 0.0 {
            s += (w / mass) * e;
        }
    }
    let value = peak + s.ln() / tau;
    let mut dv = vec![0.0; n];
    let mut dm = vec![0.0; n];
    for i in 0..n {
        let w = weight_at(i);
        if w > 0.0 {
            dv[i] = (w / mass) * exps[i] / s;
        }
        if !degenerate {
            dm[i] = (exps[i] / s - 1.0) / (tau * mass);
        }
    }
    LseOut {
        value,
        dv,
        dm,
        degenerate,
    }
}

/// Weighted log-sum-exp minimum via `-max(-v)`.
fn lse_weighted_min(values: &[f64], weights: &[f64], tau: f64) -> LseOut {
    let negated: Vec<f64> = values.iter().map(|v| -v).collect();
    let mut out = lse_weighted_max(&negated, weights, tau);
    out.value = -out.value;
    for g in out.dm.iter_mut() {
        *g = -*g;
    }
    out
}

/// Smooth surrogate of the robustness at step 0.
pub fn relaxed_robustness(params: &LearnerParams, trace: &Trace, tau: f64) -> f64 {
    eval_relaxed(params, trace, tau).0
}

/// Smooth surrogate together with its gradient w.r.t. all trainable
/// parameters; exact for the surrogate (verified against central finite
/// differences).
pub fn relaxed_robustness_with_grad(
    params: &LearnerParams,
    trace: &Trace,
    tau: f64,
) -> (f64, LearnerGrads) {
    eval_relaxed(params, trace, tau)
}

fn eval_relaxed(params: &LearnerParams, trace: &Trace, tau: f64) -> (f64, LearnerGrads) {
    let masks = WindowMasks::compute(params);
    let forward = eval_forward(params, trace, tau, &masks);
    let coeffs = vec![0.0; params.num_branches()];
    let value = forward.value;
    let grads = eval_backward(params, trace, &masks, forward, 1.0, &coeffs);
    (value, grads)
}

/// Soft window indicators per temporal module, with the boundary logistics
/// kept for the backward pass. They depend only on the parameters, so one
/// instance serves a whole batch.
struct WindowMasks {
    mask: Vec<Vec<f64>>,
    sig_lo: Vec<Vec<f64>>,
    sig_hi: Vec<Vec<f64>>,
}

impl WindowMasks {
    fn compute(params: &LearnerParams) -> WindowMasks {
        let p = params.num_branches();
        let steps = params.trace_length;
        let sharp = params.mask_sharpness;
        let mut mask = Vec::with_capacity(p);
        let mut sig_lo = Vec::with_capacity(p);
        let mut sig_hi = Vec::with_capacity(p);
        for k in 0..p {
            let lo = params.interval_centers[k] - params.interval_half_widths[k];
            let hi = params.interval_centers[k] + params.interval_half_widths[k];
            let mut m = Vec::with_capacity(steps);
            let mut sl = Vec::with_capacity(steps);
            let mut sh = Vec::with_capacity(steps);
            for t in 0..steps {
                let tf = t as f64;
                let a = logistic(sharp * (tf - lo));
                let b = logistic(sharp * (hi - tf));
                sl.push(a);
                sh.push(b);
                m.push(a * b);
            }
            mask.push(m);
            sig_lo.push(sl);
            sig_hi.push(sh);
        }
        WindowMasks { mask, sig_lo, sig_hi }
    }
}

/// Saved forward state: the blended output plus per-branch outputs and the
/// kernel intermediates the backward pass reuses.
struct ForwardState {
    value: f64,
    branch_values: Vec<f64>,
    z: Vec<Vec<f64>>,
    branches: Vec<BranchState>,
    and_out: LseOut,
    or_out: LseOut,
}

struct BranchState {
    min_out: LseOut,
    max_out: LseOut,
    min_val: f64,
    max_val: f64,
}

fn eval_forward(
    params: &LearnerParams,
    trace: &Trace,
    tau: f64,
    masks: &WindowMasks,
) -> ForwardState {
    assert!(tau > 0.0, "temperature must be positive");
    let p = params.num_branches();
    let d = params.num_channels();
    let steps = trace.len();
    debug_assert_eq!(steps, params.trace_length, "trace shape matches template");

    // Standardized trace, channel major.
    let mut z = vec![vec![0.0; steps]; d];
    for ch in 0..d {
        let mid = params.standardize_mid[ch];
        let hr = params.standardize_halfrange[ch];
        for t in 0..steps {
            z[ch][t] = (trace.value(ch, t) - mid) / hr;
        }
    }

    let mut branches = Vec::with_capacity(p);
    let mut branch_values = Vec::with_capacity(p);
    for k in 0..p {
        let mut r = vec![-params.predicate_offsets[k]; steps];
        for ch in 0..d {
            let w = params.predicate_weights[k][ch];
            if w != 0.0 {
                for t in 0..steps {
                    r[t] += w * z[ch][t];
                }
            }
        }
        let min_out = lse_weighted_min(&r, &masks.mask[k], tau);
        let max_out = lse_weighted_max(&r, &masks.mask[k], tau);
        let p_always = params.temporal_always_probs[k];
        let (min_val, max_val) = (min_out.value, max_out.value);
        branch_values.push(p_always * min_val + (1.0 - p_always) * max_val);
        branches.push(BranchState {
            min_out,
            max_out,
            min_val,
            max_val,
        });
    }

    let and_out = lse_weighted_min(&branch_values, &params.branch_probs, tau);
    let or_out = lse_weighted_max(&branch_values, &params.branch_probs, tau);
    let p_and = params.boolean_and_prob;
    let value = p_and * and_out.value + (1.0 - p_and) * or_out.value;

    ForwardState {
        value,
        branch_values,
        z,
        branches,
        and_out,
        or_out,
    }
}

/// Backward pass for `d_value * blended_output + sum_k d_branch[k] * y_k`;
/// the extra per-branch coefficients carry auxiliary branch supervision
/// during training and are zero for the plain surrogate gradient.
fn eval_backward(
    params: &LearnerParams,
    trace: &Trace,
    masks: &WindowMasks,
    forward: ForwardState,
    d_value: f64,
    d_branch: &[f64],
) -> LearnerGrads {
    let p = params.num_branches();
    let d = params.num_channels();
    let steps = trace.len();
    let sharp = params.mask_sharpness;
    let p_and = params.boolean_and_prob;
    let ForwardState {
        z,
        branches,
        and_out,
        or_out,
        ..
    } = forward;

    let mut grads = LearnerGrads::zeros(p, d);
    grads.boolean_and_prob = d_value * (and_out.value - or_out.value);
    for k in 0..p {
        let dy = d_value * (p_and * and_out.dv[k] + (1.0 - p_and) * or_out.dv[k]) + d_branch[k];
        grads.branch_probs[k] =
            d_value * (p_and * and_out.dm[k] + (1.0 - p_and) * or_out.dm[k]);

        let b = &branches[k];
        let p_always = params.temporal_always_probs[k];
        grads.temporal_always_probs[k] = dy * (b.min_val - b.max_val);
        let d_min = dy * p_always;
        let d_max = dy * (1.0 - p_always);

        let mut dr_sum = 0.0;
        let mut dc = 0.0;
        let mut dw = 0.0;
        for t in 0..steps {
            let dr = d_min * b.min_out.dv[t] + d_max * b.max_out.dv[t];
            if dr != 0.0 {
                dr_sum += dr;
                for ch in 0..d {
                    grads.predicate_weights[k][ch] += dr * z[ch][t];
                }
            }
            if !b.min_out.degenerate {
                let dm = d_min * b.min_out.dm[t] + d_max * b.max_out.dm[t];
                if dm != 0.0 && masks.mask[k][t] > 0.0 {
                    let sa = masks.sig_lo[k][t];
                    let sb = masks.sig_hi[k][t];
                    let dm_dlo = -sharp * sa * (1.0 - sa) * sb;
                    let dm_dhi = sharp * sa * sb * (1.0 - sb);
                    dc += dm * (dm_dlo + dm_dhi);
                    dw += dm * (dm_dhi - dm_dlo);
                }
            }
        }
        grads.predicate_offsets[k] = -dr_sum;
        grads.interval_centers[k] = dc;
        grads.interval_half_widths[k] = dw;
    }

    grads
}

/// Deterministic template initialization scaled to the configured channel
/// bounds: each predicate focuses on one channel with a random sign,
/// intervals cover a random sub-window, and every probability starts at 0.5.
pub fn build_template(config: &TemplateConfig, seed: u64) -> LearnerParams {
    let p = config.num_predicates;
    let d = config.num_channels;
    let steps = config.trace_length;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let (mid, halfrange): (Vec<f64>, Vec<f64>) = if config.channel_bounds.len() == d {
        config
            .channel_bounds
            .iter()
            .map(|(lo, hi)| ((lo + hi) / 2.0, ((hi - lo) / 2.0).max(1e-9)))
            .unzip()
    } else {
        (vec![0.0; d], vec![1.0; d])
    };

    let mut predicate_weights = Vec::with_capacity(p);
    let mut predicate_offsets = Vec::with_capacity(p);
    let mut interval_centers = Vec::with_capacity(p);
    let mut interval_half_widths = Vec::with_capacity(p);
    for k in 0..p {
        let focus = k % d;
        let sign = if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 };
        let mut weights = vec![0.0; d];
        for (ch, w) in weights.iter_mut().enumerate() {
            if ch == focus {
                *w = sign * uniform(&mut rng, 0.5, 1.5);
            } else {
                *w = uniform(&mut rng, -0.25, 0.25);
            }
        }
        predicate_weights.push(weights);
        predicate_offsets.push(uniform(&mut rng, -0.75, 0.75));

        // Cycle three window styles: wide sub-windows see whole-trace
        // behavior, free random sub-windows explore localized patterns, and
        // trailing windows anchor on the most recent steps.
        let last = steps - 1;
        let (t1, t2) = match k % 3 {
            0 => {
                let width = rng.random_range((3 * last / 4).max(1)..=last);
                let t1 = rng.random_range(0..=(last - width));
                (t1, t1 + width)
            }
            1 => {
                let a = rng.random_range(0..steps);
                let b = rng.random_range(0..steps);
                (a.min(b), a.max(b))
            }
            _ => {
                let width = rng.random_range(1..=(last / 6).max(2));
                (last - width, last)
            }
        };
        interval_centers.push((t1 + t2) as f64 / 2.0);
        interval_half_widths.push((t2 - t1) as f64 / 2.0);
    }

    LearnerParams {
        predicate_weights,
        predicate_offsets,
        interval_centers,
        interval_half_widths,
        temporal_always_probs: vec![0.5; p],
        branch_probs: vec![0.5; p],
        boolean_and_prob: 0.5,
        standardize_mid: mid,
        standardize_halfrange: halfrange,
        mask_sharpness: config.mask_sharpness,
        trace_length: steps,
    }
}

fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Shifted hinge training loss over a batch, plus the binarization and
/// sparsity penalties: `mean(relu(beta - y * rho) - gamma * beta)
/// + rb * sum p (1 - p) + rs * sum p_b`.
pub fn training_loss(
    params: &LearnerParams,
    batch: &LabeledDataset,
    config: &TemplateConfig,
) -> f64 {
    let beta = config.margin;
    let gamma = config.margin_weight;
    let mut total = 0.0;
    for (trace, label) in batch.iter() {
        let rho = relaxed_robustness(params, trace, config.temperature);
        total += (beta - label.sign() * rho).max(0.0) - gamma * beta;
    }
    total / batch.len() as f64 + regularizer(params, config)
}

fn regularizer(params: &LearnerParams, config: &TemplateConfig) -> f64 {
    let mut binarize = 0.0;
    for &p in params
        .temporal_always_probs
        .iter()
        .chain(params.branch_probs.iter())
        .chain(std::iter::once(&params.boolean_and_prob))
    {
        binarize += p * (1.0 - p);
    }
    let sparsity: f64 = params.branch_probs.iter().sum();
    config.reg_binarize * binarize + config.reg_sparsity * sparsity
}

/// Train a formula on a labeled dataset: build the template from the seed,
/// run minibatch SGD with a seeded shuffle, and harden the result. A pure
/// function of `(dataset, config, seed)`.
pub fn train_formula(
    dataset: &LabeledDataset,
    config: &TemplateConfig,
    seed: u64,
) -> Result<Formula, LearnError> {
    let params = train_params(dataset, config, seed)?;
    harden(&params)
}

/// Training core; exposed so the surrogate parameters themselves can be
/// inspected.
pub fn train_params(
    dataset: &LabeledDataset,
    config: &TemplateConfig,
    seed: u64,
) -> Result<LearnerParams, LearnError> {
    config.validate()?;
    if !dataset.has_both_labels() {
        return Err(LearnError::SingleClass);
    }
    let cfg = config.resolved_for(dataset);
    let mut params = build_template(&cfg, seed);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x5_417));

    let n = dataset.len();
    let beta = cfg.margin;
    let mut order: Vec<usize> = (0..n).collect();

    for epoch in 0..cfg.epochs {
        // Temperature annealing: early epochs run a soft surrogate that
        // spreads gradient across whole windows and branches, later epochs
        // sharpen toward the configured temperature.
        let ramp = if cfg.epochs > 1 {
            epoch as f64 / (cfg.epochs - 1) as f64
        } else {
            1.0
        };
        let tau = cfg.temperature * (0.1 + 0.9 * ramp);
        // Branch supervision fades as training progresses: early epochs
        // bootstrap every branch, late epochs let the blended output route
        // each sample's gradient to the branch responsible for it.
        let aux_weight = cfg.branch_supervision * (1.0 - 0.9 * ramp);
        shuffle(&mut order, &mut shuffle_rng);
        for batch in order.chunks(cfg.batch_size) {
            let mut grad = LearnerGrads::zeros(params.num_branches(), params.num_channels());
            let branches = params.num_branches();
            let masks = WindowMasks::compute(&params);
            let item_scale = 1.0 / batch.len() as f64;
            let aux = aux_weight / branches as f64;
            let mut branch_hinge = vec![0.0; branches];
            for &i in batch {
                let (trace, label) = &dataset.items()[i];
                let y = label.sign();
                let forward = eval_forward(&params, trace, tau, &masks);
                // relu(beta - y rho): active iff the margin is not yet met;
                // each branch output is supervised by the same rule.
                let d_value = if beta - y * forward.value > 0.0 { -y } else { 0.0 };
                let mut d_branch = vec![0.0; branches];
                let mut any = d_value != 0.0;
                for (k, &bv) in forward.branch_values.iter().enumerate() {
                    let violation = beta - y * bv;
                    if violation > 0.0 {
                        d_branch[k] = -y * aux;
                        branch_hinge[k] += violation * item_scale;
                        any = true;
                    }
                }
                if any {
                    let g = eval_backward(&params, trace, &masks, forward, d_value, &d_branch);
                    grad.add_scaled(&g, item_scale);
                }
            }
            // Selection anchoring: branches with below-average margin loss
            // are pulled toward selection probability 1, the rest toward 0.
            // Without an absolute anchor the sparsity drift sinks every
            // probability below the hardening cut and the blend's soft
            // conjunction is lost at rounding time.
            let mean_hinge = branch_hinge.iter().sum::<f64>() / branches as f64;
            for (k, h) in branch_hinge.iter().enumerate() {
                let target = if *h <= mean_hinge { 1.0 } else { 0.0 };
                grad.branch_probs[k] +=
                    SELECTION_PULL * cfg.branch_supervision * (params.branch_probs[k] - target);
            }
            add_regularizer_grad(&mut grad, &params, &cfg);
            let mut flat = params.flatten();
            let gflat = grad.flatten();
            for (theta, g) in flat.iter_mut().zip(gflat) {
                *theta -= cfg.learning_rate * g;
            }
            params.assign_flat(&flat);
            params.project();
        }
    }
    Ok(params)
}

/// Gradient of the binarization and sparsity penalties at the current
/// parameters, added into the batch gradient. Predicate weights carry a
/// small L1 push as well: correlated KPI channels otherwise pull every atom
/// toward a mixed-channel compromise, while sparse atoms read as
/// single-channel thresholds.
fn add_regularizer_grad(grad: &mut LearnerGrads, params: &LearnerParams, cfg: &TemplateConfig) {
    let rb = cfg.reg_binarize;
    let rs = cfg.reg_sparsity;
    for (g, &p) in grad
        .temporal_always_probs
        .iter_mut()
        .zip(&params.temporal_always_probs)
    {
        *g += rb * (1.0 - 2.0 * p);
    }
    for (g, &p) in grad.branch_probs.iter_mut().zip(&params.branch_probs) {
        *g += rb * (1.0 - 2.0 * p) + rs;
    }
    grad.boolean_and_prob += rb * (1.0 - 2.0 * params.boolean_and_prob);
    for (grow, prow) in grad
        .predicate_weights
        .iter_mut()
        .zip(&params.predicate_weights)
    {
        for (g, &w) in grow.iter_mut().zip(prow) {
            *g += cfg.reg_atom_sparsity * w.signum();
        }
    }
}

/// Fisher-Yates shuffle with a caller-supplied RNG; kept local so the
/// permutation stream is pinned by this crate.
fn shuffle(order: &mut [usize], rng: &mut impl Rng) {
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
}

/// Round the relaxed parameters into a discrete formula.
///
/// Probabilities round at 0.5 (Always / And / branch kept when >= 0.5);
/// when no branch clears the cut the single highest-probability branch is
/// kept. Windows round to integer steps clamped into the trace. Predicate
/// rows are rewritten from standardized to raw coordinates, an exact affine
/// change that preserves robustness values.
pub fn harden(params: &LearnerParams) -> Result<Formula, LearnError> {
    let p = params.num_branches();
    let last = params.trace_length - 1;
    let mut kept: Vec<usize> = (0..p).filter(|&k| params.branch_probs[k] >= 0.5).collect();
    if kept.is_empty() {
        // Strictly-greater comparison keeps the lowest index on ties.
        let mut best = 0;
        for k in 1..p {
            if params.branch_probs[k] > params.branch_probs[best] {
                best = k;
            }
        }
        kept.push(best);
    }

    let mut children = Vec::with_capacity(kept.len());
    for &k in &kept {
        let d = params.num_channels();
        let mut weights = vec![0.0; d];
        let mut threshold = params.predicate_offsets[k];
        for ch in 0..d {
            let wz = params.predicate_weights[k][ch];
            weights[ch] = wz / params.standardize_halfrange[ch];
            threshold += wz * params.standardize_mid[ch] / params.standardize_halfrange[ch];
        }
        let atom = Formula::Atom(Atom::new(weights, threshold)?);

        let c = params.interval_centers[k];
        let w = params.interval_half_widths[k];
        let t1 = ((c - w).round().clamp(0.0, last as f64)) as usize;
        let t2 = ((c + w).round().clamp(0.0, last as f64) as usize).max(t1);
        let node = if params.temporal_always_probs[k] >= 0.5 {
            Formula::always(t1, IntervalEnd::Step(t2), atom)?
        } else {
            Formula::eventually(t1, IntervalEnd::Step(t2), atom)?
        };
        children.push(node);
    }

    if children.len() == 1 {
        Ok(children.pop().expect("one child"))
    } else if params.boolean_and_prob >= 0.5 {
        Ok(Formula::and(children)?)
    } else {
        Ok(Formula::or(children)?)
    }
}
