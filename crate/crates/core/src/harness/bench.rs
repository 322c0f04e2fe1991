use std::fmt::Write as _;

use crate::counterfactual::CounterfactualPair;
use crate::encoder::ModelParams;
use crate::error::Result;
use crate::graph::AttributedGraph;
use crate::quality::{baseline_augment, quality_metrics, view_quality, BaselineConfig, BaselineStrategy, EfficiencyRow, QualityReport};

/// A quality report with the baseline seed it was drawn with, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityRow {
    pub seed: Option<u64>,
    pub report: QualityReport,
}

/// The counterfactual row, then one row per baseline strategy and seed,
/// all over the nodes of `pairs`.
pub fn quality_bench(
    g: &AttributedGraph,
    params: &ModelParams,
    pairs: &[CounterfactualPair],
    seeds: &[u64],
    bcfg: &BaselineConfig,
) -> Result<Vec<QualityRow>> {
    let nodes: Vec<usize> = pairs.iter().map(|p| p.node).collect();
    let mut rows = vec![QualityRow {
        seed: None,
        report: quality_metrics(g, params, pairs)?,
    }];
    for &seed in seeds {
        for s in BaselineStrategy::ALL {
            let views = baseline_augment(g, &nodes, s, bcfg, seed);
            rows.push(QualityRow {
                seed: Some(seed),
                report: view_quality(g, params, &views, s.as_str(), None)?,
            });
        }
    }
    Ok(rows)
}

pub fn quality_csv(rows: &[QualityRow]) -> String {
    let mut out = String::from(
        "strategy,seed,pos_similarity_mean,pos_similarity_std,neg_margin_mean,neg_margin_std,\
         nbhd_preservation_mean,nbhd_preservation_std,constraint_sat\n",
    );
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.6}"));
    for QualityRow { seed, report: r } in rows {
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{},{},{:.6},{:.6},{}",
            r.strategy,
            seed.map_or(String::new(), |s| s.to_string()),
            r.pos_similarity.mean,
            r.pos_similarity.std,
            opt(r.neg_margin.map(|m| m.mean)),
            opt(r.neg_margin.map(|m| m.std)),
            r.nbhd_preservation.mean,
            r.nbhd_preservation.std,
            opt(r.constraint_sat),
        );
    }
    out
}

pub fn efficiency_csv(rows: &[EfficiencyRow]) -> String {
    let mut out = String::from("strategy,epochs,epoch_seconds,peak_rss_kb,auc\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{:.6},{},{}",
            r.strategy.as_str(),
            r.epochs,
            r.epoch_seconds,
            r.peak_rss_kb.map_or(String::new(), |k| k.to_string()),
            r.auc.map_or(String::new(), |a| format!("{a:.6}")),
        );
    }
    out
}
