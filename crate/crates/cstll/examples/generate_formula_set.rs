//! Sequential formula-set construction: train candidates one by one, accept
//! them under complexity and diversity thresholds, and stop early once the
//! set quality is high enough.
//!
//! ```bash
//! cargo run --release --example generate_formula_set
//! ```

use cstll::formula::format_formula;
use cstll::generate::{generate_set, Hyper};
use cstll::learn::TemplateConfig;
use cstll::robustness::accuracy;
use cstll::tracegen::{make_dataset_pair, SimParams, Task};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pair = make_dataset_pair(&Task::by_id(2), 500, 200, &SimParams::default(), 3)?;
    let config = TemplateConfig::desk_scale();
    let names = pair.train.channel_names();

    // Accept candidates with fewer than half the temporal budget, farther
    // than 0.52 from every accepted formula, and stop once mean quality
    // exceeds 0.6.
    let hyper = Hyper::new(0.5, 0.52, 0.6)?;
    let set = generate_set(&pair.train, &hyper, &config, 10, 0)?;

    println!("generation log:");
    for record in &set.log {
        println!(
            "  iter {}: H={:.2} minD={} -> {}{}",
            record.iteration,
            record.complexity,
            record
                .min_distance
                .map(|d| format!("{d:.3}"))
                .unwrap_or_else(|| "-".to_string()),
            if record.accepted { "accepted" } else { "rejected" },
            record
                .reason
                .map(|r| format!(" ({})", r.as_str()))
                .unwrap_or_default(),
        );
    }

    println!("accepted set ({} formulas):", set.len());
    for accepted in &set.accepted {
        let acc = accuracy(&accepted.formula, &pair.valid)?;
        println!(
            "  [iter {}] held-out accuracy {acc:.3}: {}",
            accepted.iteration,
            format_formula(&accepted.formula, names)
        );
    }

    // The audit recomputes every invariant from scratch.
    set.verify_invariants(&pair.train, &hyper, config.num_temporal, 10)
        .map_err(|e| format!("set invariant violated: {e}"))?;
    println!("post-hoc audit: every accepted formula satisfies the thresholds.");
    Ok(())
}
