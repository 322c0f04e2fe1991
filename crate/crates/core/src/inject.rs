//! Synthetic benchmarks: a community-structured attributed graph generator,
//! labelled anomaly injection, and robustness perturbations.

use std::collections::{BTreeSet, HashSet};

use log::warn;
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal};

use crate::error::{Error, Result};
use crate::graph::AttributedGraph;
use crate::linalg::Matrix;
use crate::seed::{self, Stage};

#[derive(Debug, Clone, PartialEq)]
pub struct InjectionConfig {
    pub anomaly_ratio: f64,
    pub rewire_fraction: f64,
    pub noise_std: f64,
    pub mask_fraction: f64,
    pub seed: u64,
}

impl Default for InjectionConfig {
    fn default() -> Self {
        Self {
            anomaly_ratio: 0.05,
            rewire_fraction: 0.5,
            noise_std: 0.5,
            mask_fraction: 0.3,
            seed: 0,
        }
    }
}

impl InjectionConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        let frac = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be in [0, 1], got {v}")))
            }
        };
        frac("rewire_fraction", self.rewire_fraction)?;
        frac("mask_fraction", self.mask_fraction)?;
        if !(self.anomaly_ratio > 0.0 && self.anomaly_ratio < 1.0) {
            return Err(Error::Config(format!(
                "anomaly_ratio must be in (0, 1), got {}",
                self.anomaly_ratio
            )));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::Config("noise_std must be finite and >= 0".into()));
        }
        let count = self.anomaly_count(n);
        if count > n {
            return Err(Error::Config(format!(
                "anomaly count {count} exceeds node count {n}"
            )));
        }
        if self.anomaly_ratio * (n as f64) < 1.0 - 1e-9 {
            return Err(Error::Config("anomaly_ratio * n must be at least 1".into()));
        }
        Ok(())
    }

    pub fn anomaly_count(&self, n: usize) -> usize {
        (self.anomaly_ratio * n as f64 - 1e-9).ceil() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationConfig {
    pub feature_sigma: f64,
    pub edge_flip_rate: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Injection {
    pub graph: AttributedGraph,
    pub structural: Vec<usize>,
    pub attribute: Vec<usize>,
    /// Structural anomalies that could not be rewired (graph too dense).
    pub skipped: Vec<usize>,
}

/// Injects `ceil(ratio * n)` labelled anomalies. The first half (rounded up)
/// of the sampled nodes get half of their incident edges rewired to random
/// non-neighbors; the rest get Gaussian feature noise followed by zeroing a
/// random subset of dimensions.
pub fn inject_anomalies(g: &AttributedGraph, cfg: &InjectionConfig) -> Result<Injection> {
    let n = g.n();
    cfg.validate(n)?;
    let count = cfg.anomaly_count(n);
    let mut rng = seed::rng(cfg.seed, Stage::Inject, 0, 0);
    let chosen = index::sample(&mut rng, n, count).into_vec();
    let n_struct = count.div_ceil(2);
    let (structural, attribute) = chosen.split_at(n_struct);

    let mut adj: Vec<BTreeSet<usize>> = (0..n)
        .map(|i| g.neighbors(i).iter().copied().collect())
        .collect();
    let mut skipped = Vec::new();
    for &i in structural {
        let k = adj[i].len();
        let rewire = (cfg.rewire_fraction * k as f64 - 1e-9).ceil() as usize;
        if rewire == 0 {
            continue;
        }
        if n - 1 - k == 0 {
            warn!("node {i}: no rewiring targets available, skipping");
            skipped.push(i);
            continue;
        }
        let current: Vec<usize> = adj[i].iter().copied().collect();
        let picks = index::sample(&mut rng, k, rewire).into_vec();
        for p in picks {
            let j = current[p];
            let candidates: Vec<usize> = (0..n)
                .filter(|&t| t != i && t != j && !adj[i].contains(&t))
                .collect();
            if candidates.is_empty() {
                break;
            }
            let t = candidates[rng.random_range(0..candidates.len())];
            adj[i].remove(&j);
            adj[j].remove(&i);
            adj[i].insert(t);
            adj[t].insert(i);
        }
    }

    let mut features = g.features().clone();
    let d = g.d();
    let noise = Normal::new(0.0, cfg.noise_std).map_err(|e| Error::Config(e.to_string()))?;
    let masked = (cfg.mask_fraction * d as f64 - 1e-9).ceil() as usize;
    for &i in attribute {
        for v in features.row_mut(i) {
            *v += noise.sample(&mut rng);
        }
        for c in index::sample(&mut rng, d, masked.min(d)) {
            features.set(i, c, 0.0);
        }
    }

    let mut labels = vec![false; n];
    for &i in &chosen {
        labels[i] = true;
    }
    let adj = adj.into_iter().map(|s| s.into_iter().collect()).collect();
    Ok(Injection {
        graph: AttributedGraph::from_adjacency(features, adj, Some(labels)),
        structural: structural.to_vec(),
        attribute: attribute.to_vec(),
        skipped,
    })
}

/// Adds `N(0, sigma^2)` to every feature entry and flips `floor(rho * |E|)`
/// distinct uniformly chosen node pairs (present edges are removed, absent
/// pairs are added).
pub fn perturb_graph(g: &AttributedGraph, cfg: &PerturbationConfig) -> Result<AttributedGraph> {
    if !(cfg.feature_sigma >= 0.0 && cfg.feature_sigma.is_finite()) {
        return Err(Error::Config("feature_sigma must be finite and >= 0".into()));
    }
    if !(0.0..=1.0).contains(&cfg.edge_flip_rate) {
        return Err(Error::Config("edge_flip_rate must be in [0, 1]".into()));
    }
    let n = g.n();
    let mut rng = seed::rng(cfg.seed, Stage::Perturb, 0, 0);
    let mut features = g.features().clone();
    if cfg.feature_sigma > 0.0 {
        let noise = Normal::new(0.0, cfg.feature_sigma).expect("valid sigma");
        for v in features.as_mut_slice() {
            *v += noise.sample(&mut rng);
        }
    }
    let flips = (cfg.edge_flip_rate * g.num_edges() as f64 + 1e-9).floor() as usize;
    let total_pairs = n * n.saturating_sub(1) / 2;
    let flips = flips.min(total_pairs);
    let mut adj: Vec<BTreeSet<usize>> = (0..n)
        .map(|i| g.neighbors(i).iter().copied().collect())
        .collect();
    let mut seen = HashSet::with_capacity(flips);
    while seen.len() < flips {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a == b {
            continue;
        }
        let pair = (a.min(b), a.max(b));
        if !seen.insert(pair) {
            continue;
        }
        if !adj[a].remove(&b) {
            adj[a].insert(b);
            adj[b].insert(a);
        } else {
            adj[b].remove(&a);
        }
    }
    let adj = adj.into_iter().map(|s| s.into_iter().collect()).collect();
    Ok(AttributedGraph::from_adjacency(
        features,
        adj,
        g.labels().map(<[bool]>::to_vec),
    ))
}

/// Parameters of the clean community graph used as a desk-scale benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n: usize,
    pub d: usize,
    pub communities: usize,
    pub avg_degree: f64,
    /// Probability mass of edges that stay inside a community.
    pub intra_fraction: f64,
    /// Per-entry feature noise around the community center.
    pub feature_noise: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n: 500,
            d: 32,
            communities: 5,
            avg_degree: 8.0,
            intra_fraction: 0.9,
            feature_noise: 0.5,
            seed: 0,
        }
    }
}

/// Degree-corrected planted-partition graph with Gaussian community
/// feature centers. Unlabelled.
pub fn synthetic_graph(cfg: &SyntheticConfig) -> AttributedGraph {
    let SyntheticConfig { n, d, communities, .. } = *cfg;
    let c = communities.max(1);
    let mut rng = seed::rng(cfg.seed, Stage::Synthetic, 0, 0);
    let community: Vec<usize> = (0..n).map(|i| i % c).collect();
    let std_normal = Normal::new(0.0, 1.0).unwrap();
    let centers: Vec<Vec<f64>> = (0..c)
        .map(|_| (0..d).map(|_| std_normal.sample(&mut rng)).collect())
        .collect();
    let weight = LogNormal::new(0.0, 0.5).unwrap();
    let theta: Vec<f64> = (0..n).map(|_| weight.sample(&mut rng)).collect();
    let mean_theta = theta.iter().sum::<f64>() / n.max(1) as f64;

    // Expected degree of i is ~ avg_degree * theta_i / mean_theta.
    let size = (n / c).max(1) as f64;
    let p_in = cfg.avg_degree * cfg.intra_fraction / size;
    let p_out = if c > 1 {
        cfg.avg_degree * (1.0 - cfg.intra_fraction) / (n as f64 - size)
    } else {
        0.0
    };
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let base = if community[i] == community[j] { p_in } else { p_out };
            let p = (base * theta[i] * theta[j] / (mean_theta * mean_theta)).min(1.0);
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    let mut features = Matrix::zeros(n, d);
    let noise = Normal::new(0.0, cfg.feature_noise.max(0.0)).unwrap();
    for i in 0..n {
        for (v, &m) in features.row_mut(i).iter_mut().zip(&centers[community[i]]) {
            *v = m + noise.sample(&mut rng);
        }
    }
    AttributedGraph::from_edges(features, &edges, None)
        .expect("generated ids are in range")
        .0
}
