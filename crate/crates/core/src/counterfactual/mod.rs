//! Counterfactual view generation for selected nodes.
//!
//! A positive view nudges a node's features away from its neighbor centroid
//! and drops edges to feature-similar neighbors, so its neighborhood
//! consistency score strictly increases. A negative view does the opposite.
//! Every accepted view is re-verified against the consistency score with
//! both the feature and the edge overrides applied.

mod feature;
mod oracle;
mod structural;

pub use feature::{gen_feature_cf, gen_feature_cf_negative, gen_feature_cf_positive, FeatureCf, FeatureStatus};
pub use oracle::{oracle_feature_cf, oracle_struct_cf, OracleGrid};
pub use structural::{gen_struct_cf, StructCf, StructStatus};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{cosine_sim, stats_over, AttributedGraph};
use crate::linalg::{dist, mean_std};

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyConfig {
    pub lambda_attr: f64,
    pub lambda_struct: f64,
    pub sim_threshold: f64,
    pub delta: f64,
}

impl Default for ConsistencyConfig {
    fn default() -> Self {
        Self {
            lambda_attr: 0.8,
            lambda_struct: 0.2,
            sim_threshold: 0.7,
            delta: 1e-6,
        }
    }
}

impl ConsistencyConfig {
    pub fn validate(&self) -> Result<()> {
        if (self.lambda_attr + self.lambda_struct - 1.0).abs() > 1e-9 {
            return Err(Error::Config("lambda_attr + lambda_struct must equal 1".into()));
        }
        if !(self.sim_threshold > -1.0 && self.sim_threshold < 1.0) {
            return Err(Error::Config("sim_threshold must be in (-1, 1)".into()));
        }
        if !(self.delta > 0.0) {
            return Err(Error::Config("delta must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CfConfig {
    pub gamma: f64,
    pub beta: f64,
    pub max_step: f64,
    pub max_retries: usize,
    pub edge_budget_remove: usize,
    pub edge_budget_add: usize,
    pub degree_delta_max: usize,
    /// Keep editing until the edge budget is spent instead of stopping at
    /// the first edit that satisfies the homophily constraint.
    pub exhaust_budget: bool,
    pub use_feature: bool,
    pub use_structural: bool,
}

impl Default for CfConfig {
    fn default() -> Self {
        Self {
            gamma: 1.3,
            beta: 0.7,
            max_step: 0.3,
            max_retries: 5,
            edge_budget_remove: 2,
            edge_budget_add: 2,
            degree_delta_max: 2,
            exhaust_budget: false,
            use_feature: true,
            use_structural: true,
        }
    }
}

impl CfConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 1.0) {
            return Err(Error::Config("gamma must be > 1".into()));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::Config("beta must be in (0, 1)".into()));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::Config("max_step must be > 0".into()));
        }
        Ok(())
    }
}

/// Graph-level constants shared by every per-node generation call.
#[derive(Debug, Clone, PartialEq)]
pub struct CfContext {
    /// Population standard deviation over every entry of the feature matrix.
    pub feature_std: f64,
}

impl CfContext {
    pub fn new(g: &AttributedGraph) -> Self {
        Self {
            feature_std: mean_std(g.features().as_slice().iter().copied()).1,
        }
    }

    /// Largest admissible feature perturbation norm.
    pub fn perturbation_bound(&self) -> f64 {
        0.5 * self.feature_std
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
        }
    }

    /// Whether `after` moves strictly in this polarity's direction from `before`.
    pub(crate) fn improves(self, before: f64, after: f64) -> bool {
        match self {
            Polarity::Positive => after > before,
            Polarity::Negative => after < before,
        }
    }
}

/// Edits to the edges incident to one node. Both lists are ascending.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EditSet {
    pub adds: Vec<usize>,
    pub removes: Vec<usize>,
}

impl EditSet {
    pub fn new(mut adds: Vec<usize>, mut removes: Vec<usize>) -> Self {
        adds.sort_unstable();
        removes.sort_unstable();
        Self { adds, removes }
    }

    pub fn is_empty(&self) -> bool {
        self.adds.is_empty() && self.removes.is_empty()
    }

    /// Size of the symmetric difference with the original incident edge set.
    pub fn cost(&self) -> usize {
        self.adds.len() + self.removes.len()
    }

    pub fn degree_delta(&self) -> isize {
        self.adds.len() as isize - self.removes.len() as isize
    }

    /// Neighbor list after applying the edits, ascending.
    pub fn apply(&self, neighbors: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = neighbors
            .iter()
            .copied()
            .filter(|j| self.removes.binary_search(j).is_err())
            .collect();
        out.extend(self.adds.iter().copied().filter(|a| neighbors.binary_search(a).is_err()));
        out.sort_unstable();
        out
    }
}

pub(crate) fn effective_neighbors(g: &AttributedGraph, i: usize, edits: Option<&EditSet>) -> Vec<usize> {
    match edits {
        Some(e) => e.apply(g.neighbors(i)),
        None => g.neighbors(i).to_vec(),
    }
}

/// Consistency of feature row `x` against the neighbor set `nbrs`.
pub(crate) fn consistency_of(
    g: &AttributedGraph,
    x: &[f64],
    nbrs: &[usize],
    cfg: &ConsistencyConfig,
) -> Option<f64> {
    let stats = stats_over(g.features(), nbrs)?;
    let attr = dist(x, &stats.centroid) / (stats.scalar_std + cfg.delta);
    let similar = nbrs
        .iter()
        .filter(|&&j| cosine_sim(x, g.feature(j)) > cfg.sim_threshold)
        .count();
    let structural = 1.0 - similar as f64 / nbrs.len() as f64;
    Some(cfg.lambda_attr * attr + cfg.lambda_struct * structural)
}

/// Weighted blend of attribute deviation and the fraction of dissimilar
/// neighbors, evaluated with optional feature and edge overrides for `i`.
pub fn consistency_score(
    g: &AttributedGraph,
    i: usize,
    features_override: Option<&[f64]>,
    edges_override: Option<&EditSet>,
    cfg: &ConsistencyConfig,
) -> Result<f64> {
    let nbrs = effective_neighbors(g, i, edges_override);
    let x = features_override.unwrap_or(g.feature(i));
    consistency_of(g, x, &nbrs, cfg).ok_or(Error::UndefinedConsistency(i))
}

pub(crate) fn homophily_of(g: &AttributedGraph, i: usize, nbrs: &[usize], threshold: f64) -> Option<f64> {
    if nbrs.is_empty() {
        return None;
    }
    let x = g.feature(i);
    let similar = nbrs
        .iter()
        .filter(|&&j| cosine_sim(x, g.feature(j)) > threshold)
        .count();
    Some(similar as f64 / nbrs.len() as f64)
}

/// Fraction of neighbors (under the effective edge set) whose cosine
/// similarity with the node exceeds `threshold`.
pub fn homophily(
    g: &AttributedGraph,
    i: usize,
    edges_override: Option<&EditSet>,
    threshold: f64,
) -> Result<f64> {
    let nbrs = effective_neighbors(g, i, edges_override);
    homophily_of(g, i, &nbrs, threshold).ok_or(Error::UndefinedConsistency(i))
}

/// Positive and negative views of one node.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterfactualPair {
    pub node: usize,
    /// `None` means the original feature row.
    pub pos_features: Option<Vec<f64>>,
    /// `None` means the negative was discarded (or uses the original row
    /// when only edges changed; see `neg_ok`).
    pub neg_features: Option<Vec<f64>>,
    pub pos_edits: EditSet,
    pub neg_edits: EditSet,
    pub pos_ok: bool,
    pub neg_ok: bool,
    pub pos_retries: usize,
    pub neg_retries: usize,
}

impl CounterfactualPair {
    fn unchanged(node: usize) -> Self {
        Self {
            node,
            pos_features: None,
            neg_features: None,
            pos_edits: EditSet::default(),
            neg_edits: EditSet::default(),
            pos_ok: false,
            neg_ok: false,
            pos_retries: 0,
            neg_retries: 0,
        }
    }
}

struct View {
    features: Option<Vec<f64>>,
    edits: EditSet,
    ok: bool,
    retries: usize,
}

fn combine(
    g: &AttributedGraph,
    ctx: &CfContext,
    i: usize,
    polarity: Polarity,
    cfg: &CfConfig,
    ccfg: &ConsistencyConfig,
) -> View {
    let failed = View {
        features: None,
        edits: EditSet::default(),
        ok: false,
        retries: 0,
    };
    let Some(base) = consistency_of(g, g.feature(i), g.neighbors(i), ccfg) else {
        return failed;
    };
    let feat = cfg
        .use_feature
        .then(|| gen_feature_cf(g, ctx, i, polarity, cfg, ccfg))
        .and_then(|f| match f.status {
            FeatureStatus::Accepted { retries } => Some((f.features, retries)),
            _ => None,
        });
    let edits = cfg
        .use_structural
        .then(|| gen_struct_cf(g, i, polarity, cfg, ccfg))
        .filter(|s| s.status == StructStatus::Modified)
        .map(|s| s.edits);

    let mut candidates: Vec<(Option<&(Vec<f64>, usize)>, Option<&EditSet>)> = Vec::new();
    if feat.is_some() && edits.is_some() {
        candidates.push((feat.as_ref(), edits.as_ref()));
    }
    if feat.is_some() {
        candidates.push((feat.as_ref(), None));
    }
    if edits.is_some() {
        candidates.push((None, edits.as_ref()));
    }
    for (f, e) in candidates {
        let x = f.map_or(g.feature(i), |(x, _)| x.as_slice());
        let nbrs = effective_neighbors(g, i, e);
        let Some(c) = consistency_of(g, x, &nbrs, ccfg) else {
            continue;
        };
        if polarity.improves(base, c) {
            return View {
                features: f.map(|(x, _)| x.clone()),
                edits: e.cloned().unwrap_or_default(),
                ok: true,
                retries: f.map_or(0, |(_, r)| *r),
            };
        }
    }
    failed
}

/// Bundles feature and structural counterfactuals of both polarities.
///
/// For each polarity the joint view is tried first, then feature-only,
/// then edges-only; the first that moves the consistency score strictly in
/// the required direction is kept. A failed positive falls back to the
/// original node, a failed negative is discarded.
pub fn generate_pair(
    g: &AttributedGraph,
    ctx: &CfContext,
    i: usize,
    cfg: &CfConfig,
    ccfg: &ConsistencyConfig,
) -> CounterfactualPair {
    if g.degree(i) == 0 {
        return CounterfactualPair::unchanged(i);
    }
    let pos = combine(g, ctx, i, Polarity::Positive, cfg, ccfg);
    let neg = combine(g, ctx, i, Polarity::Negative, cfg, ccfg);
    CounterfactualPair {
        node: i,
        pos_features: pos.features,
        neg_features: neg.features,
        pos_edits: pos.edits,
        neg_edits: neg.edits,
        pos_ok: pos.ok,
        neg_ok: neg.ok,
        pos_retries: pos.retries,
        neg_retries: neg.retries,
    }
}

/// Generates pairs for `nodes` in parallel; output follows input order.
pub fn generate_pairs(
    g: &AttributedGraph,
    ctx: &CfContext,
    nodes: &[usize],
    cfg: &CfConfig,
    ccfg: &ConsistencyConfig,
) -> Vec<CounterfactualPair> {
    nodes
        .par_iter()
        .map(|&i| generate_pair(g, ctx, i, cfg, ccfg))
        .collect()
}

/// Fraction of generated views (positive and negative) that satisfied
/// their constraints.
pub fn satisfaction_rate(pairs: &[CounterfactualPair]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let ok: usize = pairs
        .iter()
        .map(|p| p.pos_ok as usize + p.neg_ok as usize)
        .sum();
    ok as f64 / (2 * pairs.len()) as f64
}

#[cfg(test)]
pub(crate) mod test_graphs {
    use crate::graph::AttributedGraph;
    use crate::linalg::Matrix;

    pub fn build(rows: &[Vec<f64>], edges: &[(usize, usize)]) -> AttributedGraph {
        AttributedGraph::from_edges(Matrix::from_rows(rows), edges, None)
            .unwrap()
            .0
    }

    /// Node 0 at [2, 0] with neighbors [1, 0] and [-1, 0].
    pub fn deviant() -> AttributedGraph {
        build(
            &[vec![2.0, 0.0], vec![1.0, 0.0], vec![-1.0, 0.0]],
            &[(0, 1), (0, 2)],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::test_graphs::*;
    use super::*;
    use crate::inject::{inject_anomalies, synthetic_graph, InjectionConfig, SyntheticConfig};
    use crate::graph::zscore_features;
    use proptest::prelude::*;

    #[test]
    fn consistency_examples() {
        let g = deviant();
        let cfg = ConsistencyConfig::default();
        let c = consistency_score(&g, 0, None, None, &cfg).unwrap();
        let attr = 0.8 * 2.0 / (0.5f64.sqrt() + 1e-6);
        assert!((c - (attr + 0.1)).abs() < 1e-12);
        assert!((c - 2.3627).abs() < 1e-4);

        let g = build(&[vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0]], &[(0, 1), (0, 2)]);
        assert_eq!(consistency_score(&g, 0, None, None, &cfg).unwrap(), 0.0);

        let g = deviant();
        let attr_only = ConsistencyConfig {
            lambda_attr: 1.0,
            lambda_struct: 0.0,
            ..cfg.clone()
        };
        let c = consistency_score(&g, 0, None, None, &attr_only).unwrap();
        assert_eq!(c, crate::select::attribute_deviation(&g, 0));
    }

    #[test]
    fn consistency_overrides() {
        let g = deviant();
        let cfg = ConsistencyConfig::default();
        let c = consistency_score(&g, 0, Some(&[0.0, 0.0]), None, &cfg).unwrap();
        assert!((c - 0.2).abs() < 1e-12);
        let remove_all = EditSet::new(vec![], vec![1, 2]);
        assert!(matches!(
            consistency_score(&g, 0, None, Some(&remove_all), &cfg),
            Err(Error::UndefinedConsistency(0))
        ));
        let keep_one = EditSet::new(vec![], vec![2]);
        let c = consistency_score(&g, 0, None, Some(&keep_one), &cfg).unwrap();
        // Single neighbor [1, 0]: std over {1, 0} = 0.5, distance 1, similar.
        assert!((c - 0.8 * 1.0 / (0.5 + 1e-6)).abs() < 1e-12);
    }

    #[test]
    fn homophily_examples() {
        let g = build(
            &[vec![1.0, 0.0], vec![1.0, 0.0], vec![1.0, 0.1], vec![0.0, 1.0], vec![-1.0, 0.0]],
            &[(0, 1), (0, 2), (0, 3), (0, 4)],
        );
        assert_eq!(homophily(&g, 0, None, 0.7).unwrap(), 0.5);
        let same = build(&vec![vec![1.0, 2.0]; 3], &[(0, 1), (0, 2)]);
        assert_eq!(homophily(&same, 0, None, 0.7).unwrap(), 1.0);
    }

    #[test]
    fn isolated_pair_is_unchanged() {
        let g = build(&[vec![1.0], vec![2.0]], &[]);
        let p = generate_pair(&g, &CfContext::new(&g), 0, &CfConfig::default(), &ConsistencyConfig::default());
        assert!(!p.pos_ok && !p.neg_ok);
        assert!(p.pos_features.is_none() && p.neg_features.is_none());
        assert!(p.pos_edits.is_empty() && p.neg_edits.is_empty());
    }

    #[test]
    fn deviant_node_gets_both_views() {
        let g = deviant();
        let p = generate_pair(&g, &CfContext::new(&g), 0, &CfConfig::default(), &ConsistencyConfig::default());
        assert!(p.pos_ok && p.neg_ok);
    }

    fn bench(seed: u64) -> AttributedGraph {
        let clean = synthetic_graph(&SyntheticConfig {
            n: 150,
            d: 8,
            seed,
            ..Default::default()
        });
        let g = inject_anomalies(&clean, &InjectionConfig { seed, ..Default::default() })
            .unwrap()
            .graph;
        zscore_features(&g)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn pair_invariants(seed in 0u64..1000) {
            let g = bench(seed);
            let ctx = CfContext::new(&g);
            let cfg = CfConfig::default();
            let ccfg = ConsistencyConfig::default();
            let nodes: Vec<usize> = (0..g.n()).collect();
            let pairs = generate_pairs(&g, &ctx, &nodes, &cfg, &ccfg);
            for p in &pairs {
                let i = p.node;
                for (edits, feats, ok, pol) in [
                    (&p.pos_edits, &p.pos_features, p.pos_ok, Polarity::Positive),
                    (&p.neg_edits, &p.neg_features, p.neg_ok, Polarity::Negative),
                ] {
                    prop_assert!(edits.degree_delta().unsigned_abs() <= cfg.degree_delta_max);
                    if g.degree(i) > 0 {
                        prop_assert!(!edits.apply(g.neighbors(i)).is_empty());
                    }
                    if let Some(x) = feats {
                        prop_assert!(dist(x, g.feature(i)) <= ctx.perturbation_bound());
                    }
                    if ok {
                        let before = consistency_score(&g, i, None, None, &ccfg).unwrap();
                        let after = consistency_score(&g, i, feats.as_deref(), Some(edits), &ccfg).unwrap();
                        prop_assert!(pol.improves(before, after));
                    }
                }
            }
            let again = generate_pairs(&g, &ctx, &nodes, &cfg, &ccfg);
            prop_assert_eq!(pairs, again);
        }
    }
}
