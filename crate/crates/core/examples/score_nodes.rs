//! Scores every node with a trained model and lists the most anomalous.
//!
//! cargo run --release --example score_nodes

use cfgad::harness::{benchmark_graph, fit, RunConfig};

fn main() -> cfgad::Result<()> {
    let g = benchmark_graph(5)?;
    let cfg = RunConfig {
        seed: 5,
        ..RunConfig::default()
    }
    .resolve(&g, true);
    let report = fit(&g, &cfg)?.report;
    let labels = g.labels().expect("benchmark graphs are labeled");

    println!("auc {:.4}, f1@{} {:.4}", report.auc.unwrap_or(f64::NAN), report.m, report.f1.unwrap_or(f64::NAN));
    println!("\nrank  node     score  anomaly");
    for (r, &i) in report.ranking.iter().take(15).enumerate() {
        println!("{:>4}  {i:>4}  {:>8.4}  {}", r + 1, report.scores[i], labels[i]);
    }
    Ok(())
}
