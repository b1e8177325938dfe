//! KPI traces, binary labels, and labeled datasets.
//!
//! A [`Trace`] is a finite discrete-time trajectory: `d` named channels
//! (e.g. latency in ms, backlog in kilobytes) sampled at `T` uniform time
//! steps. A [`LabeledDataset`] is a non-empty collection of traces that all
//! share the same shape and channel names, each tagged with a binary
//! [`Label`].

use thiserror::Error;

/// Errors raised when constructing traces or datasets.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("trace must have at least one channel")]
    NoChannels,
    #[error("trace must have at least one time step")]
    NoSteps,
    #[error("channel {channel} has {got} steps, expected {expected}")]
    RaggedChannels {
        channel: usize,
        got: usize,
        expected: usize,
    },
    #[error("expected {expected} channel names, got {got}")]
    ChannelNameCount { expected: usize, got: usize },
    #[error("duplicate channel name `{0}`")]
    DuplicateChannel(String),
    #[error("non-finite value {value} in channel `{channel}` at step {step}")]
    NonFinite {
        channel: String,
        step: usize,
        value: f64,
    },
    #[error("dataset must contain at least one trace")]
    EmptyDataset,
    #[error("trace {index} has shape {got_channels}x{got_steps}, expected {expected_channels}x{expected_steps}")]
    ShapeMismatch {
        index: usize,
        got_channels: usize,
        got_steps: usize,
        expected_channels: usize,
        expected_steps: usize,
    },
    #[error("trace {index} channel names differ from the dataset's")]
    ChannelNameMismatch { index: usize },
    #[error("label must be +1 or -1, got {0}")]
    BadLabel(i64),
    #[error("invalid dataset file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Binary trace label: `Positive` encodes +1, `Negative` encodes -1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    /// The integer encoding used in dataset files: +1 or -1.
    pub fn to_int(self) -> i64 {
        match self {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }

    pub fn from_int(value: i64) -> Result<Self, DataError> {
        match value {
            1 => Ok(Label::Positive),
            -1 => Ok(Label::Negative),
            other => Err(DataError::BadLabel(other)),
        }
    }

    /// Sign as a float (+1.0 or -1.0), used in margin computations.
    pub fn sign(self) -> f64 {
        self.to_int() as f64
    }
}

/// A `d x T` matrix of KPI values over discrete time, with named channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    channels: Vec<Vec<f64>>,
    channel_names: Vec<String>,
}

impl Trace {
    /// Build a trace from per-channel sample vectors.
    ///
    /// Requires at least one channel and one step, equal-length channels,
    /// distinct channel names, and finite values throughout.
    pub fn new(channels: Vec<Vec<f64>>, channel_names: Vec<String>) -> Result<Self, DataError> {
        if channels.is_empty() {
            return Err(DataError::NoChannels);
        }
        let steps = channels[0].len();
        if steps == 0 {
            return Err(DataError::NoSteps);
        }
        for (i, ch) in channels.iter().enumerate() {
            if ch.len() != steps {
                return Err(DataError::RaggedChannels {
                    channel: i,
                    got: ch.len(),
                    expected: steps,
                });
            }
        }
        if channel_names.len() != channels.len() {
            return Err(DataError::ChannelNameCount {
                expected: channels.len(),
                got: channel_names.len(),
            });
        }
        for (i, name) in channel_names.iter().enumerate() {
            if channel_names[..i].contains(name) {
                return Err(DataError::DuplicateChannel(name.clone()));
            }
        }
        for (ch, values) in channels.iter().enumerate() {
            for (t, &v) in values.iter().enumerate() {
                if !v.is_finite() {
                    return Err(DataError::NonFinite {
                        channel: channel_names[ch].clone(),
                        step: t,
                        value: v,
                    });
                }
            }
        }
        Ok(Trace {
            channels,
            channel_names,
        })
    }

    /// Number of channels `d`.
    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    /// Number of time steps `T`.
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false // a constructed trace always has T >= 1
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    /// Index of the channel with the given name.
    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channel_names.iter().position(|n| n == name)
    }

    /// Value of channel `ch` at step `t`.
    pub fn value(&self, ch: usize, t: usize) -> f64 {
        self.channels[ch][t]
    }

    /// All samples of one channel.
    pub fn channel(&self, ch: usize) -> &[f64] {
        &self.channels[ch]
    }

    /// Dot product of a weight vector with the state at step `t`.
    pub fn dot_state(&self, weights: &[f64], t: usize) -> f64 {
        weights
            .iter()
            .zip(self.channels.iter())
            .map(|(w, ch)| w * ch[t])
            .sum()
    }
}

/// A non-empty list of labeled traces with homogeneous shape.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    items: Vec<(Trace, Label)>,
}

impl LabeledDataset {
    pub fn new(items: Vec<(Trace, Label)>) -> Result<Self, DataError> {
        if items.is_empty() {
            return Err(DataError::EmptyDataset);
        }
        let (first, _) = &items[0];
        let (d, steps) = (first.num_channels(), first.len());
        for (i, (trace, _)) in items.iter().enumerate().skip(1) {
            if trace.num_channels() != d || trace.len() != steps {
                return Err(DataError::ShapeMismatch {
                    index: i,
                    got_channels: trace.num_channels(),
                    got_steps: trace.len(),
                    expected_channels: d,
                    expected_steps: steps,
                });
            }
            if trace.channel_names() != items[0].0.channel_names() {
                return Err(DataError::ChannelNameMismatch { index: i });
            }
        }
        Ok(LabeledDataset { items })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        false // non-empty by construction
    }

    pub fn items(&self) -> &[(Trace, Label)] {
        &self.items
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Trace, Label)> {
        self.items.iter()
    }

    pub fn trace(&self, i: usize) -> &Trace {
        &self.items[i].0
    }

    pub fn label(&self, i: usize) -> Label {
        self.items[i].1
    }

    /// Number of channels shared by every trace.
    pub fn num_channels(&self) -> usize {
        self.items[0].0.num_channels()
    }

    /// Trace length shared by every trace.
    pub fn trace_length(&self) -> usize {
        self.items[0].0.len()
    }

    pub fn channel_names(&self) -> &[String] {
        self.items[0].0.channel_names()
    }

    /// True when both label classes occur.
    pub fn has_both_labels(&self) -> bool {
        let first = self.items[0].1;
        self.items.iter().any(|(_, l)| *l != first)
    }

    /// Fraction of traces labeled positive.
    pub fn positive_fraction(&self) -> f64 {
        let pos = self
            .items
            .iter()
            .filter(|(_, l)| *l == Label::Positive)
            .count();
        pos as f64 / self.items.len() as f64
    }

    /// Per-channel (min, max) over every trace and step.
    ///
    /// Used to scale learner initialization to the data.
    pub fn channel_bounds(&self) -> Vec<(f64, f64)> {
        let d = self.num_channels();
        let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); d];
        for (trace, _) in &self.items {
            for ch in 0..d {
                for &v in trace.channel(ch) {
                    if v < bounds[ch].0 {
                        bounds[ch].0 = v;
                    }
                    if v > bounds[ch].1 {
                        bounds[ch].1 = v;
                    }
                }
            }
        }
        bounds
    }

    /// Per-channel (lower, upper) sample quantiles over every trace and
    /// step. Heavy-tailed KPIs make plain min/max a poor scaling range, so
    /// learner standardization uses an inner quantile band.
    pub fn channel_quantile_bounds(&self, lower: f64, upper: f64) -> Vec<(f64, f64)> {
        let d = self.num_channels();
        let mut bounds = Vec::with_capacity(d);
        for ch in 0..d {
            let mut values: Vec<f64> = self
                .items
                .iter()
                .flat_map(|(trace, _)| trace.channel(ch).iter().copied())
                .collect();
            values.sort_by(|a, b| a.partial_cmp(b).expect("finite trace values"));
            let pick = |q: f64| values[((values.len() - 1) as f64 * q).round() as usize];
            bounds.push((pick(lower), pick(upper)));
        }
        bounds
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn trace_construction_checks_shape() {
        let err = Trace::new(vec![], names(&[]));
        assert!(matches!(err, Err(DataError::NoChannels)));

        let err = Trace::new(vec![vec![]], names(&["x"]));
        assert!(matches!(err, Err(DataError::NoSteps)));

        let err = Trace::new(vec![vec![1.0], vec![1.0, 2.0]], names(&["a", "b"]));
        assert!(matches!(err, Err(DataError::RaggedChannels { .. })));

        let err = Trace::new(vec![vec![1.0], vec![2.0]], names(&["a", "a"]));
        assert!(matches!(err, Err(DataError::DuplicateChannel(_))));

        let err = Trace::new(vec![vec![f64::NAN]], names(&["a"]));
        assert!(matches!(err, Err(DataError::NonFinite { .. })));
    }

    #[test]
    fn dot_state_applies_weights() {
        let trace = Trace::new(
            vec![vec![60.0, 1.0], vec![7.0, 2.0]],
            names(&["latency", "backlog"]),
        )
        .unwrap();
        assert_eq!(trace.dot_state(&[1.0, 0.0], 0), 60.0);
        assert_eq!(trace.dot_state(&[0.5, 2.0], 1), 0.5 + 4.0);
    }

    #[test]
    fn label_round_trip() {
        assert_eq!(Label::from_int(1).unwrap(), Label::Positive);
        assert_eq!(Label::from_int(-1).unwrap(), Label::Negative);
        assert!(matches!(Label::from_int(0), Err(DataError::BadLabel(0))));
        assert_eq!(Label::Positive.sign(), 1.0);
        assert_eq!(Label::Negative.sign(), -1.0);
    }

    #[test]
    fn dataset_requires_homogeneous_traces() {
        let t1 = Trace::new(vec![vec![1.0, 2.0]], names(&["x"])).unwrap();
        let t2 = Trace::new(vec![vec![1.0, 2.0, 3.0]], names(&["x"])).unwrap();
        let err = LabeledDataset::new(vec![(t1, Label::Positive), (t2, Label::Negative)]);
        assert!(matches!(err, Err(DataError::ShapeMismatch { .. })));

        let err = LabeledDataset::new(vec![]);
        assert!(matches!(err, Err(DataError::EmptyDataset)));
    }

    #[test]
    fn channel_bounds_cover_all_traces() {
        let t1 = Trace::new(vec![vec![1.0, 5.0]], names(&["x"])).unwrap();
        let t2 = Trace::new(vec![vec![-3.0, 2.0]], names(&["x"])).unwrap();
        let ds = LabeledDataset::new(vec![(t1, Label::Positive), (t2, Label::Negative)]).unwrap();
        assert_eq!(ds.channel_bounds(), vec![(-3.0, 5.0)]);
    }
}
