//! Plants structural and attribute anomalies into a clean graph and writes
//! it in the on-disk format the CLI reads.
//!
//! cargo run --release --example inject_anomalies

use cfgad::prelude::*;

fn main() -> Result<()> {
    let clean = synthetic_graph(&SyntheticConfig {
        n: 300,
        seed: 3,
        ..SyntheticConfig::default()
    });
    let inj = inject_anomalies(
        &clean,
        &InjectionConfig {
            anomaly_ratio: 0.1,
            seed: 3,
            ..InjectionConfig::default()
        },
    )?;
    println!(
        "{} structural, {} attribute, {} skipped rewiring",
        inj.structural.len(),
        inj.attribute.len(),
        inj.skipped.len()
    );
    println!("edges {} -> {}", clean.num_edges(), inj.graph.num_edges());

    let dir = std::env::temp_dir().join("cfgad-inject-example");
    save_graph_dir(&inj.graph, &dir)?;
    let back = load_graph_dir(&dir)?.graph;
    println!(
        "wrote {} and read back {} nodes, {} labeled anomalies",
        dir.display(),
        back.n(),
        back.anomaly_count().unwrap_or(0)
    );
    Ok(())
}
