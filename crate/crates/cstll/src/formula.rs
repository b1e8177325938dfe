//! Signal temporal logic formulas over KPI traces.
//!
//! Formulas are built from linear atomic predicates `a . x > b`, the n-ary
//! Boolean connectives AND / OR, and the bounded temporal operators
//! Eventually (`F[t1,t2]`) and Always (`G[t1,t2]`). Intervals use discrete
//! step offsets; an unbounded upper limit (`inf` in the text grammar) is
//! resolved to the last trace step at evaluation time.
//!
//! Only the `>` comparison exists internally: `e < b` in the text grammar is
//! desugared to `-e > -b` during parsing, and the canonical printer folds it
//! back when every coefficient is negative.

use thiserror::Error;

/// Errors from formula construction.
#[derive(Debug, Error)]
pub enum FormulaError {
    #[error("atom weight vector must be non-empty with at least one nonzero entry")]
    DegenerateAtom,
    #[error("atom weights and threshold must be finite")]
    NonFiniteAtom,
    #[error("{op} requires at least two children, got {got}")]
    TooFewChildren { op: &'static str, got: usize },
    #[error("interval [{start},{end}] has start > end")]
    BadInterval { start: usize, end: usize },
    #[error("complexity capacity must be positive")]
    ZeroCapacity,
}

/// Upper end of a temporal interval: a concrete step offset or unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalEnd {
    Step(usize),
    /// Resolves to the final trace step during evaluation.
    Unbounded,
}

impl IntervalEnd {
    /// Concrete upper offset given the trace length.
    pub fn resolve(self, trace_len: usize) -> usize {
        match self {
            IntervalEnd::Step(s) => s,
            IntervalEnd::Unbounded => trace_len - 1,
        }
    }
}

/// A linear atomic predicate `weights . x_t > threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub weights: Vec<f64>,
    pub threshold: f64,
}

impl Atom {
    pub fn new(weights: Vec<f64>, threshold: f64) -> Result<Self, FormulaError> {
        if weights.iter().any(|w| !w.is_finite()) || !threshold.is_finite() {
            return Err(FormulaError::NonFiniteAtom);
        }
        if weights.is_empty() || weights.iter().all(|&w| w == 0.0) {
            return Err(FormulaError::DegenerateAtom);
        }
        Ok(Atom { weights, threshold })
    }

    /// One-hot atom `x[channel] > threshold` over `d` channels.
    pub fn channel_gt(d: usize, channel: usize, threshold: f64) -> Result<Self, FormulaError> {
        let mut weights = vec![0.0; d];
        weights[channel] = 1.0;
        Atom::new(weights, threshold)
    }

    /// One-hot atom `x[channel] < threshold`, desugared to the `>` form.
    pub fn channel_lt(d: usize, channel: usize, threshold: f64) -> Result<Self, FormulaError> {
        let mut weights = vec![0.0; d];
        weights[channel] = -1.0;
        Atom::new(weights, -threshold)
    }
}

/// Recursive STL syntax tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    Atom(Atom),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Eventually {
        start: usize,
        end: IntervalEnd,
        child: Box<Formula>,
    },
    Always {
        start: usize,
        end: IntervalEnd,
        child: Box<Formula>,
    },
}

impl Formula {
    pub fn and(children: Vec<Formula>) -> Result<Self, FormulaError> {
        if children.len() < 2 {
            return Err(FormulaError::TooFewChildren {
                op: "and",
                got: children.len(),
            });
        }
        Ok(Formula::And(children))
    }

    pub fn or(children: Vec<Formula>) -> Result<Self, FormulaError> {
        if children.len() < 2 {
            return Err(FormulaError::TooFewChildren {
                op: "or",
                got: children.len(),
            });
        }
        Ok(Formula::Or(children))
    }

    pub fn eventually(start: usize, end: IntervalEnd, child: Formula) -> Result<Self, FormulaError> {
        check_interval(start, end)?;
        Ok(Formula::Eventually {
            start,
            end,
            child: Box::new(child),
        })
    }

    pub fn always(start: usize, end: IntervalEnd, child: Formula) -> Result<Self, FormulaError> {
        check_interval(start, end)?;
        Ok(Formula::Always {
            start,
            end,
            child: Box::new(child),
        })
    }

    /// Count of temporal nodes (Eventually and Always) in the tree.
    pub fn temporal_count(&self) -> usize {
        match self {
            Formula::Atom(_) => 0,
            Formula::And(cs) | Formula::Or(cs) => cs.iter().map(Formula::temporal_count).sum(),
            Formula::Eventually { child, .. } | Formula::Always { child, .. } => {
                1 + child.temporal_count()
            }
        }
    }

    /// Total node count (atoms, connectives, temporal operators).
    pub fn node_count(&self) -> usize {
        match self {
            Formula::Atom(_) => 1,
            Formula::And(cs) | Formula::Or(cs) => {
                1 + cs.iter().map(Formula::node_count).sum::<usize>()
            }
            Formula::Eventually { child, .. } | Formula::Always { child, .. } => {
                1 + child.node_count()
            }
        }
    }
}

fn check_interval(start: usize, end: IntervalEnd) -> Result<(), FormulaError> {
    if let IntervalEnd::Step(e) = end {
        if start > e {
            return Err(FormulaError::BadInterval { start, end: e });
        }
    }
    Ok(())
}

/// Normalized structural complexity: temporal-node count divided by the
/// template's temporal-module capacity. A formula without temporal nodes has
/// complexity 0.
pub fn complexity(formula: &Formula, capacity: usize) -> Result<f64, FormulaError> {
    if capacity == 0 {
        return Err(FormulaError::ZeroCapacity);
    }
    Ok(formula.temporal_count() as f64 / capacity as f64)
}

/// Canonical text form of a formula.
///
/// Children of AND/OR are printed in lexicographic order of their own
/// canonical strings, so structurally equal sets of children always produce
/// the same text regardless of construction order. Numbers use the shortest
/// representation that parses back to the identical `f64`.
pub fn format_formula(formula: &Formula, channel_names: &[String]) -> String {
    render(formula, channel_names, false)
}

fn render(formula: &Formula, names: &[String], parenthesize_bool: bool) -> String {
    match formula {
        Formula::Atom(atom) => render_atom(atom, names),
        Formula::And(children) => {
            let body = sorted_children(children, names).join(" & ");
            if parenthesize_bool {
                format!("({body})")
            } else {
                body
            }
        }
        Formula::Or(children) => {
            let body = sorted_children(children, names).join(" | ");
            if parenthesize_bool {
                format!("({body})")
            } else {
                body
            }
        }
        Formula::Eventually { start, end, child } => {
            format!(
                "F[{start},{}]({})",
                render_end(*end),
                render(child, names, false)
            )
        }
        Formula::Always { start, end, child } => {
            format!(
                "G[{start},{}]({})",
                render_end(*end),
                render(child, names, false)
            )
        }
    }
}

fn sorted_children(children: &[Formula], names: &[String]) -> Vec<String> {
    let mut rendered: Vec<String> = children
        .iter()
        .map(|c| render(c, names, matches!(c, Formula::And(_) | Formula::Or(_))))
        .collect();
    rendered.sort();
    rendered
}

fn render_end(end: IntervalEnd) -> String {
    match end {
        IntervalEnd::Step(s) => s.to_string(),
        IntervalEnd::Unbounded => "inf".to_string(),
    }
}

fn render_atom(atom: &Atom, names: &[String]) -> String {
    // All-negative coefficients fold back to the `<` surface form; negation
    // of an f64 is exact, so the round trip preserves the stored values.
    let all_negative = atom
        .weights
        .iter()
        .filter(|&&w| w != 0.0)
        .all(|&w| w < 0.0);
    let (weights, threshold, cmp): (Vec<f64>, f64, &str) = if all_negative {
        (
            atom.weights.iter().map(|&w| -w).collect(),
            -atom.threshold,
            "<",
        )
    } else {
        (atom.weights.clone(), atom.threshold, ">")
    };

    let mut expr = String::new();
    for (ch, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let name = names
            .get(ch)
            .map(String::as_str)
            .unwrap_or("<?>")
            .to_string();
        let magnitude = w.abs();
        let term = if magnitude == 1.0 {
            name
        } else {
            format!("{magnitude}*{name}")
        };
        if expr.is_empty() {
            if w < 0.0 {
                expr.push_str("-");
            }
            expr.push_str(&term);
        } else {
            expr.push_str(if w < 0.0 { " - " } else { " + " });
            expr.push_str(&term);
        }
    }
    format!("{expr} {cmp} {threshold}")
}
