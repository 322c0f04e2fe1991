//! Contrastive training loop.

mod loss;

pub use loss::{info_nce, total_loss, uniformity, InfoNceGrads};

use std::time::Instant;

use rand::seq::SliceRandom;

use crate::counterfactual::{generate_pairs, CfConfig, CfContext, ConsistencyConfig, CounterfactualPair};
use crate::encoder::{adam_step, backward, forward, AdamConfig, Gradients, ModelParams, View, ViewOverride};
use crate::error::{Error, Result};
use crate::graph::AttributedGraph;
use crate::linalg::Matrix;
use loss::{info_nce_value, uniformity_value};
use crate::quality::{baseline_view, BaselineConfig, BaselineStrategy};
use crate::seed::{self, Stage};
use crate::select::SelectedSubset;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub tau: f64,
    pub lambda_u: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub val_fraction: f64,
    pub seed: u64,
    pub lr: f64,
    pub weight_decay: f64,
    pub hidden_dim: usize,
    pub embed_dim: usize,
    pub proj_hidden_dim: usize,
}

impl TrainConfig {
    /// Defaults with `lambda_u` chosen by edge density: 0.05 when
    /// `|E|/|V| >= 3`, otherwise 0.1.
    pub fn for_graph(g: &AttributedGraph, seed: u64) -> Self {
        Self {
            lambda_u: if g.edge_ratio() >= 3.0 { 0.05 } else { 0.1 },
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::Config("tau must be > 0".into()));
        }
        if self.patience > self.max_epochs {
            return Err(Error::Config("patience must not exceed max_epochs".into()));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 0.5) {
            return Err(Error::Config("val_fraction must be in (0, 0.5)".into()));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::Config("batch_size and max_epochs must be positive".into()));
        }
        if !(self.lambda_u >= 0.0) {
            return Err(Error::Config("lambda_u must be >= 0".into()));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            weight_decay: self.weight_decay,
            ..AdamConfig::default()
        }
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            tau: 0.1,
            lambda_u: 0.1,
            max_epochs: 200,
            patience: 20,
            batch_size: 512,
            val_fraction: 0.1,
            seed: 0,
            lr: 1e-3,
            weight_decay: 5e-4,
            hidden_dim: crate::encoder::HIDDEN_DIM,
            embed_dim: crate::encoder::EMBED_DIM,
            proj_hidden_dim: crate::encoder::PROJ_HIDDEN_DIM,
        }
    }
}

/// Where the positive view of each anchor comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum PositiveSource {
    Counterfactual,
    Baseline(BaselineStrategy),
}

/// Whether anchors also contrast against their counterfactual negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NegativeSource {
    Counterfactual,
    InBatchOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Augmentation {
    pub positive: PositiveSource,
    pub negative: NegativeSource,
    pub cf: CfConfig,
    pub consistency: ConsistencyConfig,
    pub baseline: BaselineConfig,
}

impl Default for Augmentation {
    fn default() -> Self {
        Self {
            positive: PositiveSource::Counterfactual,
            negative: NegativeSource::Counterfactual,
            cf: CfConfig::default(),
            consistency: ConsistencyConfig::default(),
            baseline: BaselineConfig::default(),
        }
    }
}

impl Augmentation {
    /// Random edge-drop and feature-mask positives, in-batch negatives only.
    pub fn random() -> Self {
        Self {
            positive: PositiveSource::Baseline(BaselineStrategy::RandomEdgeFeature),
            negative: NegativeSource::InBatchOnly,
            ..Self::default()
        }
    }

    fn uses_counterfactuals(&self) -> bool {
        self.positive == PositiveSource::Counterfactual || self.negative == NegativeSource::Counterfactual
    }
}

/// Positive and optional negative view of one anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeViews {
    pub node: usize,
    pub pos: ViewOverride,
    pub neg: Option<ViewOverride>,
}

impl NodeViews {
    pub fn from_pair(p: &CounterfactualPair) -> Self {
        Self {
            node: p.node,
            pos: ViewOverride {
                features: p.pos_features.clone(),
                edits: p.pos_edits.clone(),
            },
            neg: p.neg_ok.then(|| ViewOverride {
                features: p.neg_features.clone(),
                edits: p.neg_edits.clone(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean per-anchor objective over the training nodes.
    pub train_loss: f64,
    /// Mean per-anchor objective over the holdout (training loss when the
    /// holdout is empty).
    pub val_loss: f64,
    /// Mean per-anchor InfoNCE over the training nodes.
    pub contrastive: f64,
    /// Mean uniformity term over training batches.
    pub uniformity: f64,
    pub cf_pos_ok: usize,
    pub cf_neg_ok: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
    pub best_epoch: usize,
}

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,val_loss,contrastive,uniformity,cf_pos_ok,cf_neg_ok,seconds\n");
        for e in &self.epochs {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{:.6}\n",
                e.epoch, e.train_loss, e.val_loss, e.contrastive, e.uniformity, e.cf_pos_ok, e.cf_neg_ok, e.seconds
            ));
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct Trained {
    /// Parameters from the epoch with the lowest validation loss.
    pub params: ModelParams,
    pub log: TrainLog,
    pub train_nodes: Vec<usize>,
    pub holdout: Vec<usize>,
    /// Counterfactual pairs from the final epoch (empty when unused).
    pub pairs: Vec<CounterfactualPair>,
}

/// Objective value and its parts for one batch.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BatchLoss {
    pub contrastive: f64,
    pub uniformity: f64,
    pub total: f64,
}

fn finite_loss(contrastive: f64, uniformity: f64, lambda_u: f64) -> Result<BatchLoss> {
    let total = total_loss(contrastive, uniformity, lambda_u);
    if !total.is_finite() {
        return Err(Error::Diverged(format!("non-finite loss {total}")));
    }
    Ok(BatchLoss {
        contrastive,
        uniformity,
        total,
    })
}

/// Objective over one batch of anchors and, when requested, the parameter
/// gradients.
pub fn batch_objective(
    g: &AttributedGraph,
    params: &ModelParams,
    batch: &[&NodeViews],
    tau: f64,
    lambda_u: f64,
    with_grad: bool,
) -> Result<(BatchLoss, Option<Gradients>)> {
    let b = batch.len();
    let mut views: Vec<View> = batch.iter().map(|v| View::anchor(v.node)).collect();
    views.extend(batch.iter().map(|v| View::with_override(v.node, &v.pos)));
    let mut neg_row = vec![None; b];
    for (k, v) in batch.iter().enumerate() {
        if let Some(n) = &v.neg {
            neg_row[k] = Some(views.len());
            views.push(View::with_override(v.node, n));
        }
    }
    let (emb, cache) = forward(g, params, &views, with_grad)?;
    let e = params.embed_dim();
    let take = |offset: usize| {
        let mut m = Matrix::zeros(b, e);
        for k in 0..b {
            m.row_mut(k).copy_from_slice(emb.row(offset + k));
        }
        m
    };
    let anchors = take(0);
    let positives = take(b);
    let mut negatives = Matrix::zeros(b, e);
    for (k, r) in neg_row.iter().enumerate() {
        if let Some(r) = r {
            negatives.row_mut(k).copy_from_slice(emb.row(*r));
        }
    }
    let has_neg: Vec<bool> = neg_row.iter().map(Option::is_some).collect();
    if !with_grad {
        let contrastive = info_nce_value(&anchors, &positives, &negatives, &has_neg, tau);
        let u = if b >= 2 { uniformity_value(&anchors) } else { 0.0 };
        return finite_loss(contrastive, u, lambda_u).map(|l| (l, None));
    }
    let (contrastive, grads) = info_nce(&anchors, &positives, &negatives, &has_neg, tau)?;
    let unif = if b >= 2 { Some(uniformity(&anchors)?) } else { None };
    let u = unif.as_ref().map_or(0.0, |(v, _)| *v);
    let loss = finite_loss(contrastive, u, lambda_u)?;
    let mut gz = Matrix::zeros(views.len(), e);
    for k in 0..b {
        let row = gz.row_mut(k);
        row.copy_from_slice(grads.anchors.row(k));
        if let Some((_, gu)) = &unif {
            for (x, y) in row.iter_mut().zip(gu.row(k)) {
                *x += lambda_u * y;
            }
        }
        gz.row_mut(b + k).copy_from_slice(grads.positives.row(k));
        if let Some(r) = neg_row[k] {
            gz.row_mut(r).copy_from_slice(grads.negatives.row(k));
        }
    }
    Ok((loss, Some(backward(params, &cache, &gz)?)))
}

/// Seeded holdout of `val_fraction` of the subset (at least one node when
/// the subset has two or more). Returns `(train, holdout)`, both ascending.
pub fn split_holdout(members: &[usize], val_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    if members.len() < 2 {
        return (members.to_vec(), Vec::new());
    }
    let count = ((val_fraction * members.len() as f64).round() as usize).clamp(1, members.len() - 1);
    let mut shuffled = members.to_vec();
    shuffled.shuffle(&mut seed::rng(seed, Stage::Holdout, 0, 0));
    let mut holdout = shuffled[..count].to_vec();
    let mut train = shuffled[count..].to_vec();
    holdout.sort_unstable();
    train.sort_unstable();
    (train, holdout)
}

fn epoch_views(
    g: &AttributedGraph,
    ctx: &CfContext,
    nodes: &[usize],
    aug: &Augmentation,
    seed: u64,
    epoch: usize,
) -> (Vec<NodeViews>, Vec<CounterfactualPair>) {
    let pairs = if aug.uses_counterfactuals() {
        generate_pairs(g, ctx, nodes, &aug.cf, &aug.consistency)
    } else {
        Vec::new()
    };
    let epoch_seed = seed::derive(seed, Stage::Augment, epoch as u64, 0);
    let views = nodes
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            let pos = match &aug.positive {
                PositiveSource::Counterfactual => NodeViews::from_pair(&pairs[k]).pos,
                PositiveSource::Baseline(s) => baseline_view(g, i, *s, &aug.baseline, epoch_seed),
            };
            let neg = match aug.negative {
                NegativeSource::Counterfactual => NodeViews::from_pair(&pairs[k]).neg,
                NegativeSource::InBatchOnly => None,
            };
            NodeViews { node: i, pos, neg }
        })
        .collect();
    (views, pairs)
}

fn mean_objective(
    g: &AttributedGraph,
    params: &ModelParams,
    views: &[&NodeViews],
    cfg: &TrainConfig,
) -> Result<f64> {
    let mut total = 0.0;
    for chunk in views.chunks(cfg.batch_size) {
        total += batch_objective(g, params, chunk, cfg.tau, cfg.lambda_u, false)?.0.total;
    }
    Ok(total / views.len() as f64)
}

/// Trains the encoder on the selected subset.
///
/// Each epoch regenerates the views of every subset member, shuffles the
/// training part into batches of at most `batch_size`, and takes one Adam
/// step per batch. Training stops after `patience` epochs without a new
/// best validation loss; the best parameters are returned.
pub fn train(g: &AttributedGraph, subset: &SelectedSubset, cfg: &TrainConfig, aug: &Augmentation) -> Result<Trained> {
    train_from(g, subset, cfg, aug, None)
}

/// As [`train`], optionally starting from existing parameters.
pub fn train_from(
    g: &AttributedGraph,
    subset: &SelectedSubset,
    cfg: &TrainConfig,
    aug: &Augmentation,
    init: Option<ModelParams>,
) -> Result<Trained> {
    cfg.validate()?;
    aug.cf.validate()?;
    aug.consistency.validate()?;
    if subset.is_empty() {
        return Err(Error::Config("selected subset is empty".into()));
    }
    let mut params = match init {
        Some(p) => p,
        None => ModelParams::with_dims(g.d(), cfg.hidden_dim, cfg.embed_dim, cfg.proj_hidden_dim, cfg.seed),
    };
    let (train_nodes, holdout) = split_holdout(&subset.members, cfg.val_fraction, cfg.seed);
    let ctx = CfContext::new(g);
    let adam = cfg.adam();

    let mut log = TrainLog::default();
    let mut best = (f64::INFINITY, params.clone());
    let mut since_best = 0;
    let mut last_pairs = Vec::new();
    for epoch in 0..cfg.max_epochs {
        let start = Instant::now();
        let (views, pairs) = epoch_views(g, &ctx, &subset.members, aug, cfg.seed, epoch);
        let by_node = |n: &usize| &views[subset.members.binary_search(n).expect("member")];

        let mut order: Vec<&NodeViews> = train_nodes.iter().map(by_node).collect();
        order.shuffle(&mut seed::rng(cfg.seed, Stage::Shuffle, epoch as u64, 0));
        let mut sums = BatchLoss::default();
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let (l, grads) = batch_objective(g, &params, chunk, cfg.tau, cfg.lambda_u, true)?;
            adam_step(&mut params, &grads.expect("requested"), &adam)
                .map_err(|e| Error::Diverged(format!("epoch {epoch}: {e}")))?;
            sums.contrastive += l.contrastive;
            sums.uniformity += l.uniformity;
            sums.total += l.total;
            batches += 1;
        }
        let n_train = order.len() as f64;
        let train_loss = sums.total / n_train;
        let val_loss = if holdout.is_empty() {
            mean_objective(g, &params, &order, cfg)?
        } else {
            let hv: Vec<&NodeViews> = holdout.iter().map(by_node).collect();
            mean_objective(g, &params, &hv, cfg)?
        };
        log.epochs.push(EpochLog {
            epoch,
            train_loss,
            val_loss,
            contrastive: sums.contrastive / n_train,
            uniformity: sums.uniformity / batches as f64,
            cf_pos_ok: pairs.iter().filter(|p| p.pos_ok).count(),
            cf_neg_ok: pairs.iter().filter(|p| p.neg_ok).count(),
            seconds: start.elapsed().as_secs_f64(),
        });
        last_pairs = pairs;
        log::debug!("epoch {epoch}: train {train_loss:.5} val {val_loss:.5}");
        if val_loss < best.0 {
            best = (val_loss, params.clone());
            log.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    Ok(Trained {
        params: best.1,
        log,
        train_nodes,
        holdout,
        pairs: last_pairs,
    })
}
