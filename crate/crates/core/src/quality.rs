//! View-quality metrics, augmentation baselines and the efficiency bench.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::counterfactual::{satisfaction_rate, CounterfactualPair, EditSet};
use crate::encoder::{embed, ModelParams, View, ViewOverride};
use crate::error::{Error, Result};
use crate::graph::{cosine_sim, AttributedGraph};
use crate::linalg::{dist, mean_std};
use crate::score::AnomalyReport;
use crate::seed::{self, Stage};
use crate::select::SelectedSubset;
use crate::train::{train, Augmentation, NodeViews, PositiveSource, TrainConfig, Trained};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineStrategy {
    /// Drop incident edges at a fixed rate and zero a fixed share of dims.
    RandomEdgeFeature,
    /// Drop incident edges with probability proportional to neighbor degree.
    DegreeBased,
    /// Additive Gaussian feature noise, no edge edits.
    FeatureNoise,
}

impl BaselineStrategy {
    pub const ALL: [BaselineStrategy; 3] = [
        BaselineStrategy::RandomEdgeFeature,
        BaselineStrategy::DegreeBased,
        BaselineStrategy::FeatureNoise,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BaselineStrategy::RandomEdgeFeature => "random",
            BaselineStrategy::DegreeBased => "degree",
            BaselineStrategy::FeatureNoise => "noise",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    pub edge_drop: f64,
    pub mask_fraction: f64,
    pub noise_std: f64,
    /// Cap on the per-edge drop probability of the degree-based strategy.
    pub max_drop: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            edge_drop: 0.2,
            mask_fraction: 0.2,
            noise_std: 0.1,
            max_drop: 0.5,
        }
    }
}

/// One augmented view of node `i`. The stream is derived from
/// `(seed, node)`, so views are independent across nodes and reproducible.
pub fn baseline_view(
    g: &AttributedGraph,
    i: usize,
    strategy: BaselineStrategy,
    cfg: &BaselineConfig,
    seed: u64,
) -> ViewOverride {
    let mut rng = seed::rng(seed, Stage::Augment, i as u64, strategy as u64);
    let nbrs = g.neighbors(i);
    match strategy {
        BaselineStrategy::RandomEdgeFeature => {
            let removes = nbrs.iter().copied().filter(|_| rng.random_bool(cfg.edge_drop)).collect();
            let mut x = g.feature(i).to_vec();
            let masked = (cfg.mask_fraction * g.d() as f64).round() as usize;
            for k in index::sample(&mut rng, g.d(), masked.min(g.d())) {
                x[k] = 0.0;
            }
            ViewOverride {
                features: Some(x),
                edits: EditSet::new(vec![], removes),
            }
        }
        BaselineStrategy::DegreeBased => {
            // Probabilities scaled so the mean rate over the neighborhood is
            // `edge_drop`, then capped.
            let mean_deg = nbrs.iter().map(|&j| g.degree(j) as f64).sum::<f64>() / nbrs.len().max(1) as f64;
            let removes = nbrs
                .iter()
                .copied()
                .filter(|&j| {
                    let p = (cfg.edge_drop * g.degree(j) as f64 / mean_deg).min(cfg.max_drop);
                    rng.random_bool(p.clamp(0.0, 1.0))
                })
                .collect();
            ViewOverride {
                features: None,
                edits: EditSet::new(vec![], removes),
            }
        }
        BaselineStrategy::FeatureNoise => {
            let noise = Normal::new(0.0, cfg.noise_std).expect("finite std");
            let x = g.feature(i).iter().map(|v| v + noise.sample(&mut rng)).collect();
            ViewOverride {
                features: Some(x),
                edits: EditSet::default(),
            }
        }
    }
}

/// Positive and negative baseline views for `nodes`. The negative is a
/// second independent draw of the same strategy.
pub fn baseline_augment(
    g: &AttributedGraph,
    nodes: &[usize],
    strategy: BaselineStrategy,
    cfg: &BaselineConfig,
    seed: u64,
) -> Vec<NodeViews> {
    let neg_seed = seed::derive(seed, Stage::Augment, u64::MAX, 1);
    nodes
        .iter()
        .map(|&i| NodeViews {
            node: i,
            pos: baseline_view(g, i, strategy, cfg, seed),
            neg: Some(baseline_view(g, i, strategy, cfg, neg_seed)),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let (mean, std) = mean_std(values.iter().copied());
        Some(Self {
            mean,
            std,
            count: values.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    pub strategy: String,
    /// Cosine similarity between anchor and positive-view embeddings.
    pub pos_similarity: Summary,
    /// Distance between anchor and negative-view embeddings; absent when no
    /// negative view exists.
    pub neg_margin: Option<Summary>,
    /// Jaccard similarity of original and positive-view neighborhoods, over
    /// views with edge edits.
    pub nbhd_preservation: Summary,
    /// Share of generated views meeting their constraint (counterfactuals only).
    pub constraint_sat: Option<f64>,
}

fn jaccard(a: &[usize], b: &[usize]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.iter().filter(|x| b.binary_search(x).is_ok()).count();
    inter as f64 / (a.len() + b.len() - inter) as f64
}

/// Quality metrics for arbitrary positive/negative views.
pub fn view_quality(
    g: &AttributedGraph,
    params: &ModelParams,
    views: &[NodeViews],
    strategy: &str,
    constraint_sat: Option<f64>,
) -> Result<QualityReport> {
    if views.is_empty() {
        return Err(Error::Config("no views to evaluate".into()));
    }
    let mut requests: Vec<View> = views.iter().map(|v| View::anchor(v.node)).collect();
    requests.extend(views.iter().map(|v| View::with_override(v.node, &v.pos)));
    let mut neg_rows = Vec::new();
    for (k, v) in views.iter().enumerate() {
        if let Some(n) = &v.neg {
            neg_rows.push((k, requests.len()));
            requests.push(View::with_override(v.node, n));
        }
    }
    let emb = embed(g, params, &requests)?;
    let b = views.len();
    let sims: Vec<f64> = (0..b).map(|k| cosine_sim(emb.row(k), emb.row(b + k))).collect();
    let margins: Vec<f64> = neg_rows.iter().map(|&(k, r)| dist(emb.row(k), emb.row(r))).collect();
    let jac: Vec<f64> = views
        .iter()
        .filter(|v| !v.pos.edits.is_empty())
        .map(|v| jaccard(g.neighbors(v.node), &v.pos.edits.apply(g.neighbors(v.node))))
        .collect();
    // With no edited view every neighborhood is preserved.
    let preservation = Summary::of(&jac).unwrap_or(Summary {
        mean: 1.0,
        std: 0.0,
        count: 0,
    });
    Ok(QualityReport {
        strategy: strategy.to_string(),
        pos_similarity: Summary::of(&sims).expect("non-empty"),
        neg_margin: Summary::of(&margins),
        nbhd_preservation: preservation,
        constraint_sat,
    })
}

/// Quality metrics for counterfactual pairs. Negatives that failed their
/// constraint are excluded from the margin.
pub fn quality_metrics(g: &AttributedGraph, params: &ModelParams, pairs: &[CounterfactualPair]) -> Result<QualityReport> {
    let views: Vec<NodeViews> = pairs.iter().map(NodeViews::from_pair).collect();
    view_quality(g, params, &views, "counterfactual", Some(satisfaction_rate(pairs)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EfficiencyStrategy {
    /// Random augmentation over the selected subset.
    Random,
    /// Counterfactuals for every node.
    FullCf,
    /// Counterfactuals for the selected subset only.
    ActiveCf,
}

impl EfficiencyStrategy {
    pub const ALL: [EfficiencyStrategy; 3] = [EfficiencyStrategy::Random, EfficiencyStrategy::FullCf, EfficiencyStrategy::ActiveCf];

    pub fn as_str(self) -> &'static str {
        match self {
            EfficiencyStrategy::Random => "random",
            EfficiencyStrategy::FullCf => "full-cf",
            EfficiencyStrategy::ActiveCf => "active-cf",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyRow {
    pub strategy: EfficiencyStrategy,
    pub epochs: usize,
    /// Mean wall time of the epochs after the warmup ones.
    pub epoch_seconds: f64,
    pub peak_rss_kb: Option<u64>,
    pub auc: Option<f64>,
}

/// Peak resident set size of this process in kB, if the platform exposes it.
pub fn peak_rss_kb() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    status
        .lines()
        .find_map(|l| l.strip_prefix("VmHWM:"))
        .and_then(|v| v.trim().trim_end_matches("kB").trim().parse().ok())
}

fn reset_peak_rss() {
    let _ = std::fs::write("/proc/self/clear_refs", "5");
}

pub const WARMUP_EPOCHS: usize = 2;

/// Trains once per strategy and reports mean epoch time (excluding
/// [`WARMUP_EPOCHS`]), peak memory and AUC. `subset` drives the random and
/// active strategies; full-cf trains on every node.
pub fn efficiency_bench(
    g: &AttributedGraph,
    subset: &SelectedSubset,
    cfg: &TrainConfig,
    aug: &Augmentation,
    strategies: &[EfficiencyStrategy],
) -> Result<Vec<EfficiencyRow>> {
    let everything = SelectedSubset::all(g);
    let mut rows = Vec::new();
    for &s in strategies {
        let (nodes, a) = match s {
            EfficiencyStrategy::Random => (subset, Augmentation::random()),
            EfficiencyStrategy::FullCf => (&everything, cf_only(aug)),
            EfficiencyStrategy::ActiveCf => (subset, cf_only(aug)),
        };
        reset_peak_rss();
        let t = train(g, nodes, cfg, &a)?;
        rows.push(EfficiencyRow {
            strategy: s,
            epochs: t.log.epochs.len(),
            epoch_seconds: mean_epoch_seconds(&t),
            peak_rss_kb: peak_rss_kb(),
            auc: auc_of(g, &t)?,
        });
    }
    Ok(rows)
}

fn cf_only(aug: &Augmentation) -> Augmentation {
    Augmentation {
        positive: PositiveSource::Counterfactual,
        negative: crate::train::NegativeSource::Counterfactual,
        ..aug.clone()
    }
}

fn auc_of(g: &AttributedGraph, t: &Trained) -> Result<Option<f64>> {
    if g.labels().is_none() {
        return Ok(None);
    }
    Ok(AnomalyReport::evaluate(g, &t.params)?.auc)
}

pub fn mean_epoch_seconds(t: &Trained) -> f64 {
    let timed: Vec<f64> = t.log.epochs.iter().skip(WARMUP_EPOCHS).map(|e| e.seconds).collect();
    if timed.is_empty() {
        t.log.epochs.iter().map(|e| e.seconds).sum::<f64>() / t.log.epochs.len().max(1) as f64
    } else {
        timed.iter().sum::<f64>() / timed.len() as f64
    }
}
