//! Generates positive and negative counterfactual views and shows how each
//! moves the node's consistency score.
//!
//! cargo run --release --example counterfactuals

use cfgad::counterfactual::{generate_pairs, satisfaction_rate};
use cfgad::harness::benchmark_graph;
use cfgad::prelude::*;

fn main() -> Result<()> {
    let g = benchmark_graph(2)?;
    let (cfg, ccfg) = (CfConfig::default(), ConsistencyConfig::default());
    let ctx = CfContext::new(&g);
    let nodes: Vec<usize> = (0..g.n()).filter(|&i| g.degree(i) > 0).take(200).collect();
    let pairs = generate_pairs(&g, &ctx, &nodes, &cfg, &ccfg);
    println!("satisfaction rate over {} nodes: {:.3}", pairs.len(), satisfaction_rate(&pairs));

    println!("\n{:>5} {:>8} {:>8} {:>8}  pos edits  neg edits", "node", "base", "pos", "neg");
    for p in pairs.iter().filter(|p| p.pos_ok && p.neg_ok).take(8) {
        let i = p.node;
        let base = consistency_score(&g, i, None, None, &ccfg)?;
        let pos = consistency_score(&g, i, p.pos_features.as_deref(), Some(&p.pos_edits), &ccfg)?;
        let neg_x = p.neg_features.as_deref();
        let neg = consistency_score(&g, i, neg_x, Some(&p.neg_edits), &ccfg)?;
        println!(
            "{i:>5} {base:>8.4} {pos:>8.4} {neg:>8.4}  {:>9}  {:>9}",
            p.pos_edits.cost(),
            p.neg_edits.cost()
        );
    }
    Ok(())
}
