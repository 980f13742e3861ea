//! End-to-end benchmark: generate the bundled synthetic bookmarking dataset,
//! train the translational model and the plain metric-learning baseline under
//! the same protocol, and compare test HR@10 / NDCG@10 over several seeds.
//!
//!     cargo run --release -p transcf --example benchmark_comparison
//!
//! Optional positional overrides:
//!     <seeds> <epochs> <dim> <lr> <margin> <lambda_nbr> <lambda_dist>
//!     <noise> <popularity> <categories>

use transcf::dataset::SplitDataset;
use transcf::embed::{HyperParams, Variant};
use transcf::eval::{evaluate, EvalConfig, Which};
use transcf::synthetic::{benchmark, BenchmarkSpec};
use transcf::trainer::{train, TrainConfig};

fn arg<T: std::str::FromStr>(n: usize, default: T) -> T {
    std::env::args()
        .nth(n)
        .and_then(|s| s.parse().ok())
        .unwrap_or(default)
}

fn main() -> transcf::Result<()> {
    let seeds: u64 = arg(1, 5);
    let epochs: usize = arg(2, 60);
    let dim: usize = arg(3, 64);
    let lr: f64 = arg(4, 0.05);
    let margin: f64 = arg(5, 0.5);
    let lambda_nbr: f64 = arg(6, 0.1);
    let lambda_dist: f64 = arg(7, 0.1);
    let noise: f64 = arg(8, BenchmarkSpec::default().noise);
    let popularity_exponent: f64 = arg(9, BenchmarkSpec::default().popularity_exponent);
    let categories: usize = arg(10, BenchmarkSpec::default().categories);

    let spec = BenchmarkSpec {
        noise,
        popularity_exponent,
        categories,
        ..BenchmarkSpec::default()
    };
    let ds = benchmark(&spec).dataset();
    let split: SplitDataset = ds.leave_one_out_split();
    println!(
        "benchmark: {} users, {} items, {} interactions ({} train after split)",
        ds.n_users(),
        ds.n_items(),
        ds.n_interactions(),
        split.train.n_interactions()
    );

    let eval_cfg = EvalConfig {
        candidate_negatives: 99,
        cutoffs: vec![10, 20],
        seed: 17,
        full_catalog: false,
    };

    for variant in [Variant::TransCf, Variant::Cml] {
        let mut hr10 = Vec::new();
        let mut ndcg10 = Vec::new();
        for seed in 0..seeds {
            let hyper = HyperParams {
                dim,
                learning_rate: lr,
                margin,
                lambda_nbr,
                lambda_dist,
                epochs,
                negatives_per_user: 100,
                batch_size: 1000,
                seed,
            };
            let cfg = TrainConfig::new(hyper, variant);
            let started = std::time::Instant::now();
            let (model, log) = train(&split, &cfg)?;
            let report = evaluate(&model, &split, Which::Test, &eval_cfg)?;
            println!(
                "  {variant} seed {seed}: test HR@10 {:.4} NDCG@10 {:.4} (best epoch {:?}, {} epochs run, {:.1}s)",
                report.hr[&10],
                report.ndcg[&10],
                log.best_epoch,
                log.epochs.len(),
                started.elapsed().as_secs_f64()
            );
            hr10.push(report.hr[&10]);
            ndcg10.push(report.ndcg[&10]);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        println!(
            "{variant}: mean test HR@10 {:.4}, NDCG@10 {:.4} over {seeds} seeds",
            mean(&hr10),
            mean(&ndcg10)
        );
    }
    Ok(())
}
