//! Compares the full method with a few ablation variants over two seeds.
//!
//! cargo run --release --example ablation

use cfgad::harness::{compare_ablations, GraphSource, RunConfig, Variant};

fn main() -> cfgad::Result<()> {
    let variants = [Variant::Full, Variant::RandomAug, Variant::NoUniformity, Variant::Budget(2)];
    let table = compare_ablations(&RunConfig::default(), &GraphSource::Synthetic, &variants, &[0, 1])?;
    println!("{:<16} {:>8} {:>8}", "variant", "auc", "f1");
    for (name, auc, f1) in table.means() {
        let pct = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{:.2}", 100.0 * x));
        println!("{name:<16} {:>8} {:>8}", pct(auc), pct(f1));
    }
    Ok(())
}
