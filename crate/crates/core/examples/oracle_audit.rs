//! Audits the greedy structural and gradient-guided feature generators
//! against exhaustive search on small sampled subgraphs.
//!
//! cargo run --release --example oracle_audit

use cfgad::harness::{benchmark_graph, oracle_audit, AuditConfig, AuditSummary};
use cfgad::prelude::*;

fn main() -> Result<()> {
    let g = benchmark_graph(6)?;
    let acfg = AuditConfig {
        samples: 20,
        max_nodes: 60,
        seed: 6,
        ..AuditConfig::default()
    };
    let rows = oracle_audit(&g, &acfg, &CfConfig::default(), &ConsistencyConfig::default());
    let s = AuditSummary::of(&rows);
    println!("{} audit rows over {} subgraphs", rows.len(), acfg.samples);
    println!(
        "structural cost ratio: mean {:?}, median {:?}",
        s.mean_ratio(),
        s.median_ratio()
    );
    println!(
        "structural success: greedy {:.2}, oracle {:.2}",
        s.struct_greedy_success, s.struct_oracle_success
    );
    println!(
        "feature success: greedy {:.2}, oracle {:.2}",
        s.feature_greedy_success, s.feature_oracle_success
    );
    Ok(())
}
