//! Epoch time, peak memory and AUC of random augmentation, counterfactual
//! training on every node, and counterfactual training on the active subset.
//!
//! cargo run --release --example efficiency

use cfgad::harness::{efficiency_csv, prepare_graph, GraphSource, RunConfig};
use cfgad::quality::{efficiency_bench, EfficiencyStrategy};
use cfgad::select::select_subset;

fn main() -> cfgad::Result<()> {
    let mut cfg = RunConfig {
        seed: 9,
        ..RunConfig::default()
    };
    cfg.synthetic.n = 1000;
    let (g, cfg) = prepare_graph(&cfg, &GraphSource::Synthetic)?;
    let subset = select_subset(&g, &cfg.selection(&g));
    let rows = efficiency_bench(
        &g,
        &subset,
        &cfg.train_config(&g),
        &cfg.augmentation(),
        &EfficiencyStrategy::ALL,
    )?;
    print!("{}", efficiency_csv(&rows));
    Ok(())
}
