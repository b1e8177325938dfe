//! A reduced benchmark matrix: calibrated set construction and its
//! ablations across risk tolerances, with metrics and SVG charts.
//!
//! This trims the pair counts so it completes in several minutes; the
//! acceptance suite and the `cstll experiment` command run the full
//! desk-scale matrix.
//!
//! ```bash
//! cargo run --release --example benchmark_matrix
//! ```

use cstll::experiment::{run_experiment, ExperimentConfig, Method};
use cstll::report::write_plots;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join("cstll_benchmark_matrix");
    let config = ExperimentConfig {
        methods: vec![
            Method::Stll,
            Method::Cstll,
            Method::StoppingOnly,
            Method::Bonferroni,
        ],
        epsilons: vec![0.2, 0.3],
        n_cal_pairs: 12,
        n_test_pairs: 6,
        seeds: vec![0, 1],
        out_dir: out.clone(),
        write_artifacts: false,
        ..ExperimentConfig::desk_scale()
    };
    let output = run_experiment(&config)?;

    println!("{:>15} {:>5} {:>5} {:>6} {:>6} {:>6} {:>6}", "method", "eps", "seed", "risk", "size", "H", "D");
    for row in &output.rows {
        println!(
            "{:>15} {:>5} {:>5} {:>6.2} {:>6.2} {:>6} {:>6}",
            row.method.name(),
            row.epsilon,
            row.seed,
            row.avg_risk,
            row.avg_set_size,
            row.avg_complexity
                .map(|v| format!("{v:.2}"))
                .unwrap_or_else(|| "n/a".to_string()),
            row.avg_diversity
                .map(|v| format!("{v:.3}"))
                .unwrap_or_else(|| "n/a".to_string()),
        );
    }

    let plots = write_plots(&output.metrics_path, &out.join("plots"))?;
    println!("metrics: {}", output.metrics_path.display());
    for p in plots {
        println!("chart:   {}", p.display());
    }
    Ok(())
}
