//! Trains the encoder on the active subset, saves a checkpoint and shows
//! that the reloaded model scores identically.
//!
//! cargo run --release --example train_and_checkpoint

use cfgad::encoder::{load_checkpoint, save_checkpoint};
use cfgad::harness::benchmark_graph;
use cfgad::prelude::*;

fn main() -> Result<()> {
    let g = benchmark_graph(4)?;
    let subset = select_subset(&g, &SelectionConfig::for_graph(&g));
    let trained = train(&g, &subset, &TrainConfig::for_graph(&g, 4), &Augmentation::default())?;

    println!("epoch  train_loss  val_loss  cf_pos_ok  cf_neg_ok");
    for e in trained.log.epochs.iter().step_by(10) {
        println!(
            "{:>5}  {:>10.4}  {:>8.4}  {:>9}  {:>9}",
            e.epoch, e.train_loss, e.val_loss, e.cf_pos_ok, e.cf_neg_ok
        );
    }
    println!("best epoch {}", trained.log.best_epoch);

    let path = std::env::temp_dir().join("cfgad-example-model.txt");
    save_checkpoint(&trained.params, &path)?;
    let reloaded = load_checkpoint(&path)?;
    let a = anomaly_scores(&g, &trained.params)?;
    let b = anomaly_scores(&g, &reloaded)?;
    println!("checkpoint {} reproduces scores: {}", path.display(), a == b);
    Ok(())
}
