use cstll::experiment::*;
use std::time::Instant;

fn main() {
    let cfg = ExperimentConfig {
        methods: Method::all().to_vec(),
        epsilons: vec![0.1, 0.2, 0.3],
        n_cal_pairs: 8,
        n_test_pairs: 4,
        seeds: vec![0],
        out_dir: std::path::PathBuf::from("/tmp/smoke_out"),
        write_artifacts: true,
        ..ExperimentConfig::desk_scale()
    };
    let t0 = Instant::now();
    let out = run_experiment(&cfg).unwrap();
    println!("elapsed {:.1}s, {} rows", t0.elapsed().as_secs_f64(), out.rows.len());
    for r in &out.rows {
        println!(
            "{:>20} eps={} seed={} risk={:.2} size={:.2} H={} D={} fb={}",
            r.method.name(), r.epsilon, r.seed, r.avg_risk, r.avg_set_size,
            r.avg_complexity.map(|v| format!("{v:.2}")).unwrap_or("n/a".into()),
            r.avg_diversity.map(|v| format!("{v:.3}")).unwrap_or("n/a".into()),
            r.fallback_used,
        );
    }
}
