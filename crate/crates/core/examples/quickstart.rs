//! End-to-end run on the seeded synthetic benchmark.
//!
//! cargo run --release --example quickstart

use cfgad::prelude::*;

fn main() -> Result<()> {
    let cfg = RunConfig {
        seed: 7,
        ..RunConfig::default()
    };
    let run = run_pipeline(&cfg, &GraphSource::Synthetic, None)?;
    println!(
        "n = {}, selected {} nodes, trained {} epochs",
        run.graph.n(),
        run.fit.subset.len(),
        run.fit.trained.log.epochs.len()
    );
    print!("{}", run.metrics.to_json());
    Ok(())
}
