//! Picks the informative subset by topology entropy and attribute
//! deviation, and checks how many planted anomalies it covers.
//!
//! cargo run --release --example active_selection

use cfgad::harness::benchmark_graph;
use cfgad::select::{anomaly_coverage, select_subset, SelectionConfig};

fn main() -> cfgad::Result<()> {
    let g = benchmark_graph(1)?;
    for fraction in [0.02, 0.05, 0.1, 0.2] {
        let s = select_subset(&g, &SelectionConfig::with_fraction(&g, fraction));
        println!(
            "k = {:>3} ({:>4.0}%): anomaly coverage {:.2}",
            s.len(),
            100.0 * fraction,
            anomaly_coverage(&s, &g)?
        );
    }

    let s = select_subset(&g, &SelectionConfig::for_graph(&g));
    println!("\nfirst members of the default subset:");
    println!("{:>6} {:>9} {:>9}  provenance", "node", "entropy", "deviation");
    for (&i, p) in s.members.iter().zip(&s.provenance).take(10) {
        println!("{i:>6} {:>9.4} {:>9.4}  {}", s.entropy[i], s.deviation[i], p.as_str());
    }
    Ok(())
}
