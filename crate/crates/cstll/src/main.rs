//! Thin command-line front end over the library. Everything here parses
//! arguments, loads files, calls one library entry point, and writes the
//! results; the capabilities themselves live in the library and its
//! examples.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cstll::calibrate::{
    calibrate_lambda, write_calibration_report, write_calibration_summary, CalibrationOptions,
};
use cstll::experiment::{run_experiment, ExperimentConfig, Method};
use cstll::generate::{generate_set, write_formula_set, write_generation_log, Hyper};
use cstll::io::{read_dataset_file, write_dataset_file};
use cstll::learn::train_formula;
use cstll::report::write_plots;
use cstll::robustness::accuracy;
use cstll::seed::derive_seed;
use cstll::tracegen::{make_dataset_pair, sample_task, simulate_dataset, Task};

#[derive(Parser)]
#[command(name = "cstll", version, about = "STL formula-set learning with calibrated risk control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// TOML configuration file; defaults apply for missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use the reduced desk-scale size preset.
    #[arg(long)]
    desk_scale: bool,
    /// Override the seed list with a single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig, Box<dyn std::error::Error>> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_toml_file(path)?,
            None if self.desk_scale => ExperimentConfig::desk_scale(),
            None => ExperimentConfig::default(),
        };
        if self.config.is_some() && self.desk_scale {
            let desk = ExperimentConfig::desk_scale();
            cfg.n_train = desk.n_train;
            cfg.n_valid = desk.n_valid;
            cfg.n_cal_pairs = desk.n_cal_pairs;
            cfg.n_test_pairs = desk.n_test_pairs;
            cfg.template.batch_size = desk.template.batch_size;
        }
        if let Some(seed) = self.seed {
            cfg.seeds = vec![seed];
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Emit labeled synthetic datasets, one CSV per benchmark task.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Traces per task.
        #[arg(long, default_value_t = 500)]
        n_traces: usize,
        /// Restrict to one task id (0-4).
        #[arg(long)]
        task: Option<usize>,
    },
    /// Train a single formula on a dataset file.
    Learn {
        #[command(flatten)]
        config: ConfigArgs,
        /// Training dataset CSV.
        #[arg(long)]
        data: PathBuf,
        /// Optional held-out dataset for an accuracy report.
        #[arg(long)]
        valid: Option<PathBuf>,
    },
    /// Run sequential set generation with explicit thresholds.
    Generate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Training dataset CSV.
        #[arg(long)]
        data: PathBuf,
        /// Complexity threshold ("inf" allowed).
        #[arg(long, default_value = "inf", value_parser = parse_threshold)]
        lambda1: f64,
        /// Diversity threshold.
        #[arg(long, default_value_t = 0.0)]
        lambda2: f64,
        /// Stopping threshold ("inf" allowed).
        #[arg(long, default_value = "inf", value_parser = parse_threshold)]
        lambda3: f64,
    },
    /// Calibrate thresholds over simulated calibration pairs.
    Calibrate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Risk tolerance.
        #[arg(long, default_value_t = 0.2)]
        epsilon: f64,
        /// Selection method: cstll (Pareto testing) or bonferroni.
        #[arg(long, default_value = "cstll")]
        method: String,
    },
    /// Run the full benchmark matrix from a configuration.
    Experiment {
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated method list (overrides the configuration).
        #[arg(long)]
        method: Option<String>,
        /// Comma-separated epsilon list (overrides the configuration).
        #[arg(long)]
        epsilon: Option<String>,
    },
    /// Render SVG charts from a metrics.csv file.
    Report {
        /// metrics.csv produced by `experiment`.
        #[arg(long)]
        metrics: PathBuf,
        /// Output directory for the charts.
        #[arg(long, default_value = "plots")]
        out: PathBuf,
    },
}

fn parse_threshold(s: &str) -> Result<f64, String> {
    if s == "inf" {
        return Ok(f64::INFINITY);
    }
    s.parse().map_err(|_| format!("expected a number or `inf`, got `{s}`"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::Simulate {
            config,
            n_traces,
            task,
        } => {
            let cfg = config.load()?;
            std::fs::create_dir_all(&cfg.out_dir)?;
            let seed = cfg.seeds[0];
            let tasks: Vec<Task> = match task {
                Some(id) => vec![Task::by_id(id)],
                None => Task::all(),
            };
            for t in tasks {
                let ds = simulate_dataset(&t, n_traces, &cfg.sim, derive_seed(seed, t.id as u64))?;
                let path = cfg.out_dir.join(format!("dataset_task{}.csv", t.id));
                write_dataset_file(&path, &ds)?;
                println!(
                    "task {} ({} ms, {} kB): {} traces, {:.1}% positive -> {}",
                    t.id,
                    t.latency_threshold,
                    t.backlog_threshold,
                    ds.len(),
                    100.0 * ds.positive_fraction(),
                    path.display()
                );
            }
        }
        Command::Learn {
            config,
            data,
            valid,
        } => {
            let cfg = config.load()?;
            let dataset = read_dataset_file(&data)?;
            let seed = cfg.seeds[0];
            let formula = train_formula(&dataset, &cfg.template, seed)?;
            let text = cstll::format_formula(&formula, dataset.channel_names());
            println!("learned: {text}");
            println!("train accuracy: {:.4}", accuracy(&formula, &dataset)?);
            if let Some(valid_path) = valid {
                let valid_ds = read_dataset_file(&valid_path)?;
                println!("held-out accuracy: {:.4}", accuracy(&formula, &valid_ds)?);
            }
        }
        Command::Generate {
            config,
            data,
            lambda1,
            lambda2,
            lambda3,
        } => {
            let cfg = config.load()?;
            std::fs::create_dir_all(&cfg.out_dir)?;
            let dataset = read_dataset_file(&data)?;
            let hyper = Hyper::new(lambda1, lambda2, lambda3)?;
            let set = generate_set(&dataset, &hyper, &cfg.template, cfg.l_max, cfg.seeds[0])?;
            println!(
                "accepted {} of {} candidates",
                set.len(),
                set.log.len()
            );
            for a in &set.accepted {
                println!(
                    "  [iter {}] H={:.3} Q={:.3}  {}",
                    a.iteration,
                    a.complexity,
                    a.quality,
                    cstll::format_formula(&a.formula, dataset.channel_names())
                );
            }
            let set_path = cfg.out_dir.join("formula_set.json");
            write_formula_set(&set_path, &set, dataset.channel_names(), Some(&dataset))?;
            write_generation_log(&cfg.out_dir.join("generation_log.csv"), &set)?;
            println!("wrote {}", set_path.display());
        }
        Command::Calibrate {
            config,
            epsilon,
            method,
        } => {
            let cfg = config.load()?;
            std::fs::create_dir_all(&cfg.out_dir)?;
            let m = match method.as_str() {
                "cstll" | "pareto" => Method::Cstll,
                "bonferroni" => Method::Bonferroni,
                other => return Err(format!("unknown calibration method `{other}`").into()),
            };
            let grid = m.restrict_grid(&cfg.grid).expect("calibrated method");
            let seed = cfg.seeds[0];
            use rand::SeedableRng as _;
            let mut task_rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
            let mut pairs = Vec::with_capacity(cfg.n_cal_pairs);
            for k in 0..cfg.n_cal_pairs {
                let task = sample_task(&mut task_rng);
                pairs.push(make_dataset_pair(
                    &task,
                    cfg.n_train,
                    cfg.n_valid,
                    &cfg.sim,
                    derive_seed(derive_seed(seed, 2), k as u64),
                )?);
            }
            let options = CalibrationOptions {
                epsilon,
                delta: cfg.delta,
                accuracy_threshold: cfg.accuracy_threshold,
                method: match m {
                    Method::Bonferroni => cstll::MhtMethod::Bonferroni,
                    _ => cstll::MhtMethod::Pareto,
                },
                split_fraction: cfg.split_fraction,
                l_max: cfg.l_max,
                run_seed: derive_seed(seed, 3),
            };
            let result = calibrate_lambda(&grid, &pairs, &options, &cfg.template)?;
            let show = |v: f64| {
                if v.is_infinite() {
                    "inf".to_string()
                } else {
                    format!("{v}")
                }
            };
            println!(
                "selected thresholds: complexity<{} diversity>{} stop>{}{}",
                show(result.selected.max_complexity),
                show(result.selected.min_diversity),
                show(result.selected.stop_quality),
                if result.fallback_used {
                    "  (fallback: nothing validated)"
                } else {
                    ""
                }
            );
            println!("validated candidates: {}", result.valid.len());
            write_calibration_report(&cfg.out_dir.join("calibration.csv"), &result)?;
            write_calibration_summary(
                &cfg.out_dir.join("calibration_summary.json"),
                &result,
            )?;
            println!("wrote {}", cfg.out_dir.join("calibration.csv").display());
        }
        Command::Experiment {
            config,
            method,
            epsilon,
        } => {
            let mut cfg = config.load()?;
            if let Some(methods) = method {
                cfg.methods = methods
                    .split(',')
                    .map(|m| Method::parse(m.trim()))
                    .collect::<Result<_, _>>()?;
            }
            if let Some(eps) = epsilon {
                cfg.epsilons = eps
                    .split(',')
                    .map(|e| e.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| format!("bad epsilon list: {e}"))?;
            }
            let output = run_experiment(&cfg)?;
            println!("wrote {} ({} rows)", output.metrics_path.display(), output.rows.len());
            let plots = write_plots(&output.metrics_path, &cfg.out_dir.join("plots"))?;
            for p in plots {
                println!("wrote {}", p.display());
            }
        }
        Command::Report { metrics, out } => {
            let plots = write_plots(&metrics, &out)?;
            for p in plots {
                println!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}
