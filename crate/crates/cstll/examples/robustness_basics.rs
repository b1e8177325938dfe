//! Parse STL formulas, evaluate quantitative robustness on KPI traces, and
//! classify traces by robustness sign.
//!
//! ```bash
//! cargo run --release --example robustness_basics
//! ```

use cstll::formula::format_formula;
use cstll::parse::parse_formula;
use cstll::robustness::{accuracy, classify, distance, eval_robustness, quality};
use cstll::trace::{Label, LabeledDataset, Trace};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let channels = vec!["latency".to_string(), "backlog".to_string()];

    // A quiet trace and one with a mid-trace latency spike.
    let quiet = Trace::new(
        vec![vec![70.0; 61], vec![12.0; 61]],
        channels.clone(),
    )?;
    let mut spiky_latency = vec![70.0; 61];
    spiky_latency[30] = 135.0;
    let spiky = Trace::new(vec![spiky_latency, vec![12.0; 61]], channels.clone())?;

    // The standard requirement shape: latency stays below a threshold the
    // whole time, and the backlog is low over the final five steps.
    let formula = parse_formula(
        "G[0,60](latency < 100) & G[56,60](backlog < 30)",
        &channels,
    )?;
    println!("formula: {}", format_formula(&formula, &channels));

    for (name, trace) in [("quiet", &quiet), ("spiky", &spiky)] {
        let rho = eval_robustness(&formula, trace, 0)?;
        let label = classify(&formula, trace)?;
        println!(
            "  {name}: robustness {:+.2} -> {}",
            rho.value(),
            if label == Label::Positive { "positive" } else { "negative" }
        );
    }

    // Robustness is a margin: the quiet trace's tightest conjunct (backlog)
    // clears by 18 kB, the spike violates the latency bound by 35 ms.

    // Dataset-level measures used by set construction.
    let dataset = LabeledDataset::new(vec![
        (quiet, Label::Positive),
        (spiky, Label::Negative),
    ])?;
    let alternative = parse_formula("F[0,10](backlog < 5)", &channels)?;
    println!("accuracy of the formula on the pair: {}", accuracy(&formula, &dataset)?);
    println!("quality  (sigmoid of mean robustness): {:.4}", quality(&formula, &dataset)?);
    println!(
        "distance (robustness-profile dissimilarity) to `{}`: {:.4}",
        format_formula(&alternative, &channels),
        distance(&formula, &alternative, &dataset)?
    );
    println!(
        "distance of the formula to itself: {:.4} (minimum possible)",
        distance(&formula, &formula, &dataset)?
    );
    Ok(())
}
