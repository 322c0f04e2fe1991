//! Trains once, then scores increasingly perturbed copies of the graph to
//! see how detection quality degrades with feature noise and edge flips.
//!
//! cargo run --release --example robustness

use cfgad::harness::benchmark_graph;
use cfgad::prelude::*;

fn main() -> Result<()> {
    let g = benchmark_graph(10)?;
    let subset = select_subset(&g, &SelectionConfig::for_graph(&g));
    let trained = train(&g, &subset, &TrainConfig::for_graph(&g, 10), &Augmentation::default())?;

    println!("sigma  flip_rate     auc");
    for (sigma, flip) in [(0.0, 0.0), (0.1, 0.0), (0.0, 0.1), (0.3, 0.1), (0.5, 0.3)] {
        let noisy = perturb_graph(
            &g,
            &PerturbationConfig {
                feature_sigma: sigma,
                edge_flip_rate: flip,
                seed: 10,
            },
        )?;
        let report = AnomalyReport::evaluate(&noisy, &trained.params)?;
        println!("{sigma:>5.1}  {flip:>9.1}  {:>6.4}", report.auc.unwrap_or(f64::NAN));
    }
    Ok(())
}
