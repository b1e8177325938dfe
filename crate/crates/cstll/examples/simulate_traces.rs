//! Generate synthetic latency/backlog traces, label them with the
//! benchmark threshold tasks, and write a dataset CSV.
//!
//! ```bash
//! cargo run --release --example simulate_traces
//! ```

use cstll::io::write_dataset_file;
use cstll::tracegen::{simulate_dataset, simulate_trace, SimParams, Task};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = SimParams::default();

    // One trace up close.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let trace = simulate_trace(&params, &mut rng);
    println!("one simulated trace ({} steps):", trace.len());
    let peak_latency = trace.channel(0).iter().cloned().fold(f64::MIN, f64::max);
    let peak_backlog = trace.channel(1).iter().cloned().fold(f64::MIN, f64::max);
    println!("  peak latency {peak_latency:.1} ms, peak backlog {peak_backlog:.0} kB");

    // Label balance across the five benchmark tasks.
    println!("label balance over 1000 traces per task:");
    for task in Task::all() {
        let ds = simulate_dataset(&task, 1000, &params, 42)?;
        println!(
            "  task {} (latency < {}, final backlog < {}): {:.1}% positive",
            task.id,
            task.latency_threshold,
            task.backlog_threshold,
            100.0 * ds.positive_fraction()
        );
    }

    // Write one dataset in the CSV exchange format.
    let out = std::env::temp_dir().join("cstll_task0.csv");
    let ds = simulate_dataset(&Task::by_id(0), 200, &params, 1)?;
    write_dataset_file(&out, &ds)?;
    println!("wrote {} traces to {}", ds.len(), out.display());
    Ok(())
}
