//! Calibrate the acceptance and stopping thresholds with family-wise error
//! control, so the returned triple keeps the set-level miss risk below a
//! tolerance with high confidence.
//!
//! Uses a reduced grid and pair count so the run finishes in a couple of
//! minutes; the `cstll calibrate` command runs the full configuration.
//!
//! ```bash
//! cargo run --release --example calibrate_thresholds
//! ```

use cstll::calibrate::{calibrate_lambda, CalibrationOptions, Grid, MhtMethod};
use cstll::learn::TemplateConfig;
use cstll::seed::derive_seed;
use cstll::tracegen::{make_dataset_pair, sample_task, SimParams};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sim = SimParams::default();
    let template = TemplateConfig::desk_scale();

    // Calibration pairs: each draws a task uniformly, then a train and a
    // validation dataset from it.
    let mut task_rng = ChaCha8Rng::seed_from_u64(5);
    let pairs: Vec<_> = (0..20)
        .map(|k| {
            let task = sample_task(&mut task_rng);
            make_dataset_pair(&task, 500, 200, &sim, derive_seed(77, k))
        })
        .collect::<Result<_, _>>()?;
    println!("{} calibration pairs drawn across the benchmark tasks", pairs.len());

    let grid = Grid::from_axes(&[0.5, 0.67], &[0.50, 0.54], &[0.4, 0.6])?;
    let options = CalibrationOptions {
        epsilon: 0.3,
        delta: 0.05,
        accuracy_threshold: 0.8,
        method: MhtMethod::Pareto,
        split_fraction: 0.5,
        l_max: 6,
        run_seed: 9,
    };
    let result = calibrate_lambda(&grid, &pairs, &options, &template)?;

    println!("grid screening (first split) and testing (second split):");
    for report in &result.reports {
        println!(
            "  H<{:.2} D>{:.2} F>{:.1}: risk {:.2}, size {:.1}, p {:.3}{}{}",
            report.hyper.max_complexity,
            report.hyper.min_diversity,
            report.hyper.stop_quality,
            report.screen_risk.unwrap_or(f64::NAN),
            report.screen_size.unwrap_or(f64::NAN),
            report.screen_pvalue.unwrap_or(f64::NAN),
            if report.on_frontier { "  [frontier]" } else { "" },
            if report.rejected { "  [validated]" } else { "" },
        );
    }
    if result.fallback_used {
        println!("nothing validated at this pair budget; falling back to the permissive triple");
    }
    println!(
        "selected thresholds: complexity < {}, diversity > {}, stop quality > {}",
        result.selected.max_complexity, result.selected.min_diversity, result.selected.stop_quality
    );
    Ok(())
}
