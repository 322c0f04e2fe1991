//! Compares counterfactual views with the random, degree-based and
//! feature-noise baselines on positive similarity, negative margin and
//! neighborhood preservation.
//!
//! cargo run --release --example quality_metrics

use cfgad::counterfactual::generate_pairs;
use cfgad::harness::{benchmark_graph, quality_bench, quality_csv};
use cfgad::prelude::*;
use cfgad::quality::BaselineConfig;

fn main() -> Result<()> {
    let g = benchmark_graph(8)?;
    let subset = select_subset(&g, &SelectionConfig::for_graph(&g));
    let trained = train(&g, &subset, &TrainConfig::for_graph(&g, 8), &Augmentation::default())?;
    let pairs = generate_pairs(
        &g,
        &CfContext::new(&g),
        &subset.members,
        &CfConfig::default(),
        &ConsistencyConfig::default(),
    );
    let rows = quality_bench(&g, &trained.params, &pairs, &[0, 1, 2], &BaselineConfig::default())?;
    print!("{}", quality_csv(&rows));
    Ok(())
}
