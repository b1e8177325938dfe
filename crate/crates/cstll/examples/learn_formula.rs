//! Train one STL formula from labeled traces by differentiable template
//! learning, then inspect it on held-out data.
//!
//! ```bash
//! cargo run --release --example learn_formula
//! ```

use cstll::formula::format_formula;
use cstll::learn::{train_formula, TemplateConfig};
use cstll::robustness::accuracy;
use cstll::tracegen::{make_dataset_pair, SimParams, Task};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let task = Task::by_id(0);
    let pair = make_dataset_pair(&task, 500, 200, &SimParams::default(), 11)?;
    println!(
        "task 0 labels: latency < {} ms throughout, backlog < {} kB over the last 5 steps",
        task.latency_threshold, task.backlog_threshold
    );
    println!(
        "train: {} traces ({:.1}% positive), held out: {} traces",
        pair.train.len(),
        100.0 * pair.train.positive_fraction(),
        pair.valid.len()
    );

    let config = TemplateConfig::desk_scale();
    for seed in 0..3u64 {
        let formula = train_formula(&pair.train, &config, seed)?;
        let train_acc = accuracy(&formula, &pair.train)?;
        let valid_acc = accuracy(&formula, &pair.valid)?;
        println!("seed {seed}: train {train_acc:.3}, held out {valid_acc:.3}");
        println!("  {}", format_formula(&formula, pair.train.channel_names()));
    }
    println!("different seeds give different formulas; set construction exploits that.");
    Ok(())
}
