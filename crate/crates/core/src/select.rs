//! Active subset selection by local topology entropy and attribute deviation.

use rand::seq::index;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{stats_over_neighbors, structural_profile, AttributedGraph, StructuralProfile};
use crate::linalg::dist;
use crate::seed::{self, Stage};

/// Stabilizer added to the neighbor standard deviation.
pub const DEVIATION_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    /// Union of the top `ceil(k/2)` by entropy and top `ceil(k/2)` by deviation.
    Dual,
    EntropyOnly,
    DeviationOnly,
    /// Uniform sample of `k` nodes.
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionConfig {
    pub k: usize,
    pub bins: usize,
    pub criterion: Criterion,
}

impl SelectionConfig {
    /// `k = max(100, floor(0.1 n))`, capped at `n`.
    pub fn for_graph(g: &AttributedGraph) -> Self {
        Self {
            k: (g.n() / 10).max(100).min(g.n()),
            bins: 5,
            criterion: Criterion::Dual,
        }
    }

    /// `k = max(1, floor(fraction * n))`.
    pub fn with_fraction(g: &AttributedGraph, fraction: f64) -> Self {
        Self {
            k: ((fraction * g.n() as f64 + 1e-9).floor() as usize)
                .max(1)
                .min(g.n()),
            ..Self::for_graph(g)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    EntropyRank,
    DeviationRank,
    Both,
    /// Included only because the budget covers the whole graph.
    FullBudget,
    Random,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::EntropyRank => "entropy",
            Provenance::DeviationRank => "deviation",
            Provenance::Both => "both",
            Provenance::FullBudget => "budget",
            Provenance::Random => "random",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectedSubset {
    /// Ascending node ids.
    pub members: Vec<usize>,
    /// Topology entropy of every node.
    pub entropy: Vec<f64>,
    /// Attribute deviation of every node.
    pub deviation: Vec<f64>,
    /// One tag per member.
    pub provenance: Vec<Provenance>,
}

impl SelectedSubset {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    /// Subset containing every node of `g`.
    pub fn all(g: &AttributedGraph) -> Self {
        let scores = NodeScores::compute(g, 5);
        Self {
            members: (0..g.n()).collect(),
            provenance: vec![Provenance::FullBudget; g.n()],
            entropy: scores.entropy,
            deviation: scores.deviation,
        }
    }
}

/// Graph-wide quantile cut points for each structural indicator.
#[derive(Debug, Clone)]
pub struct TopologyBins {
    bins: usize,
    cuts: [Vec<f64>; 3],
}

/// Linear-interpolation empirical quantile of sorted values.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn indicators(p: &StructuralProfile, i: usize) -> [f64; 3] {
    [p.degree[i] as f64, p.clustering[i], p.triangles[i] as f64]
}

impl TopologyBins {
    pub fn new(profile: &StructuralProfile, bins: usize) -> Self {
        assert!(bins >= 2, "need at least two bins");
        let n = profile.degree.len();
        let cuts = std::array::from_fn(|k| {
            let mut vals: Vec<f64> = (0..n).map(|i| indicators(profile, i)[k]).collect();
            vals.sort_by(f64::total_cmp);
            (1..bins)
                .map(|b| quantile(&vals, b as f64 / bins as f64))
                .collect()
        });
        Self { bins, cuts }
    }

    /// Bin index: number of cut points strictly below the value.
    fn bin(&self, indicator: usize, v: f64) -> usize {
        self.cuts[indicator].iter().filter(|&&c| v > c).count()
    }
}

pub(crate) fn entropy_from_counts(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            p * p.ln()
        })
        .sum::<f64>()
}

fn entropy_with(g: &AttributedGraph, p: &StructuralProfile, bins: &TopologyBins, i: usize) -> f64 {
    let nb = g.neighbors(i);
    if nb.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    let mut counts = vec![0usize; bins.bins];
    for k in 0..3 {
        counts.iter_mut().for_each(|c| *c = 0);
        for &j in nb {
            counts[bins.bin(k, indicators(p, j)[k])] += 1;
        }
        total += entropy_from_counts(&counts);
    }
    total / 3.0
}

/// Mean over degree, clustering and triangle count of the Shannon entropy
/// (natural log) of the neighbors' quantile-bin distribution.
pub fn topology_entropy(
    g: &AttributedGraph,
    profile: &StructuralProfile,
    i: usize,
    bins: usize,
) -> f64 {
    entropy_with(g, profile, &TopologyBins::new(profile, bins), i)
}

/// `||x_i - centroid|| / (scalar_std + 1e-6)`; 0 for isolated nodes.
pub fn attribute_deviation(g: &AttributedGraph, i: usize) -> f64 {
    match stats_over_neighbors(g, i) {
        Some(s) => dist(g.feature(i), &s.centroid) / (s.scalar_std + DEVIATION_EPS),
        None => 0.0,
    }
}

struct NodeScores {
    entropy: Vec<f64>,
    deviation: Vec<f64>,
}

impl NodeScores {
    fn compute(g: &AttributedGraph, bins: usize) -> Self {
        let profile = structural_profile(g);
        let tb = TopologyBins::new(&profile, bins);
        let entropy = (0..g.n())
            .into_par_iter()
            .map(|i| entropy_with(g, &profile, &tb, i))
            .collect();
        let deviation = (0..g.n())
            .into_par_iter()
            .map(|i| attribute_deviation(g, i))
            .collect();
        Self { entropy, deviation }
    }
}

/// Node ids by descending score, ties by ascending id.
pub fn rank_desc(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

pub fn select_subset(g: &AttributedGraph, cfg: &SelectionConfig) -> SelectedSubset {
    let n = g.n();
    let k = cfg.k.min(n);
    let NodeScores { entropy, deviation } = NodeScores::compute(g, cfg.bins);
    let mut tag: Vec<Option<Provenance>> = vec![None; n];
    let mark = |tag: &mut Vec<Option<Provenance>>, ids: &[usize], p: Provenance| {
        for &i in ids {
            tag[i] = Some(match (tag[i], p) {
                (Some(Provenance::EntropyRank), Provenance::DeviationRank) => Provenance::Both,
                (Some(old), _) if old != Provenance::FullBudget => old,
                _ => p,
            });
        }
    };
    match cfg.criterion {
        Criterion::Dual => {
            let half = k.div_ceil(2);
            mark(&mut tag, &rank_desc(&entropy)[..half], Provenance::EntropyRank);
            mark(&mut tag, &rank_desc(&deviation)[..half], Provenance::DeviationRank);
            if k >= n {
                for t in tag.iter_mut().filter(|t| t.is_none()) {
                    *t = Some(Provenance::FullBudget);
                }
            }
        }
        Criterion::EntropyOnly => mark(&mut tag, &rank_desc(&entropy)[..k], Provenance::EntropyRank),
        Criterion::DeviationOnly => {
            mark(&mut tag, &rank_desc(&deviation)[..k], Provenance::DeviationRank)
        }
        Criterion::Random { seed } => {
            let mut rng = seed::rng(seed, Stage::Sample, 0, 0);
            let ids = index::sample(&mut rng, n, k).into_vec();
            mark(&mut tag, &ids, Provenance::Random);
        }
    }
    let (members, provenance) = tag
        .iter()
        .enumerate()
        .filter_map(|(i, t)| t.map(|p| (i, p)))
        .unzip();
    SelectedSubset {
        members,
        entropy,
        deviation,
        provenance,
    }
}

/// Fraction of labelled anomalies contained in the subset.
pub fn anomaly_coverage(s: &SelectedSubset, g: &AttributedGraph) -> Result<f64> {
    let labels = g.labels().ok_or(Error::Unlabeled)?;
    let total = labels.iter().filter(|&&b| b).count();
    if total == 0 {
        return Ok(1.0);
    }
    let hit = s.members.iter().filter(|&&i| labels[i]).count();
    Ok(hit as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inject::{synthetic_graph, SyntheticConfig};
    use crate::linalg::Matrix;
    use proptest::prelude::*;

    fn toy(rows: &[Vec<f64>], edges: &[(usize, usize)]) -> AttributedGraph {
        AttributedGraph::from_edges(Matrix::from_rows(rows), edges, None)
            .unwrap()
            .0
    }

    #[test]
    fn entropy_of_uniform_and_degenerate_counts() {
        assert_eq!(entropy_from_counts(&[4, 0, 0, 0, 0]), 0.0);
        let per_indicator = [entropy_from_counts(&[1, 1, 1, 1, 0]), 0.0, 0.0];
        let mean = per_indicator.iter().sum::<f64>() / 3.0;
        assert!((mean - 4f64.ln() / 3.0).abs() < 1e-15);
        assert!((mean - 0.4621).abs() < 1e-4);
    }

    #[test]
    fn entropy_degenerate_cases() {
        // K4 plus an isolated node: all neighbors share the same indicators.
        let rows = vec![vec![0.0]; 5];
        let edges: Vec<_> = (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j))).collect();
        let g = toy(&rows, &edges);
        let p = structural_profile(&g);
        assert_eq!(topology_entropy(&g, &p, 0, 5), 0.0);
        assert_eq!(topology_entropy(&g, &p, 4, 5), 0.0);
    }

    #[test]
    fn quantile_cuts_interpolate() {
        let sorted = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&sorted, 0.2), 1.8);
        assert_eq!(quantile(&sorted, 0.5), 3.0);
    }

    #[test]
    fn deviation_examples() {
        let g = toy(
            &[vec![2.0, 0.0], vec![1.0, 0.0], vec![-1.0, 0.0]],
            &[(0, 1), (0, 2)],
        );
        let expected = 2.0 / (0.5f64.sqrt() + 1e-6);
        assert!((attribute_deviation(&g, 0) - expected).abs() < 1e-12);
        assert!((attribute_deviation(&g, 0) - 2.8284).abs() < 1e-4);

        let g = toy(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![-1.0, 0.0]], &[(0, 1), (0, 2)]);
        assert_eq!(attribute_deviation(&g, 0), 0.0);

        let g = toy(&[vec![1.0, 0.0], vec![0.0, 0.0], vec![0.0, 0.0], vec![0.0; 2]], &[(0, 1), (0, 2)]);
        assert!((attribute_deviation(&g, 0) - 1e6).abs() < 1e-3);
        assert_eq!(attribute_deviation(&g, 3), 0.0);
    }

    fn bench(seed: u64) -> AttributedGraph {
        synthetic_graph(&SyntheticConfig {
            n: 120,
            d: 6,
            seed,
            ..Default::default()
        })
    }

    #[test]
    fn full_budget_selects_everything() {
        let g = bench(1);
        let s = select_subset(
            &g,
            &SelectionConfig {
                k: g.n(),
                bins: 5,
                criterion: Criterion::Dual,
            },
        );
        assert_eq!(s.members, (0..g.n()).collect::<Vec<_>>());
        assert_eq!(s.provenance.len(), g.n());
    }

    #[test]
    fn union_size_bounds() {
        let g = bench(2);
        for k in [1, 7, 20, 41] {
            let s = select_subset(&g, &SelectionConfig { k, bins: 5, criterion: Criterion::Dual });
            let half = k.div_ceil(2);
            assert!(s.len() >= half && s.len() <= 2 * half);
            let both = s.provenance.iter().filter(|&&p| p == Provenance::Both).count();
            assert_eq!(s.len(), 2 * half - both);
        }
    }

    #[test]
    fn coverage() {
        let g = bench(3);
        let mut labels = vec![false; g.n()];
        labels[5] = true;
        labels[9] = true;
        let g = g.with_labels(Some(labels)).unwrap();
        let mut s = SelectedSubset::all(&g);
        assert_eq!(anomaly_coverage(&s, &g).unwrap(), 1.0);
        s.members = vec![0, 1, 2];
        assert_eq!(anomaly_coverage(&s, &g).unwrap(), 0.0);
        s.members = vec![5];
        assert_eq!(anomaly_coverage(&s, &g).unwrap(), 0.5);
        assert!(anomaly_coverage(&s, &bench(3)).is_err());
    }

    proptest! {
        #[test]
        fn entropy_bounded(seed in 0u64..50) {
            let g = bench(seed);
            let s = select_subset(&g, &SelectionConfig::for_graph(&g));
            for &h in &s.entropy {
                prop_assert!(h >= 0.0 && h <= 5f64.ln() + 1e-12);
            }
        }

        #[test]
        fn enlarging_budget_is_monotone(seed in 0u64..50, k in 1usize..60) {
            let g = bench(seed);
            let cfg = |k| SelectionConfig { k, bins: 5, criterion: Criterion::Dual };
            let small = select_subset(&g, &cfg(k));
            let large = select_subset(&g, &cfg(k + 1));
            for m in &small.members {
                prop_assert!(large.contains(*m));
            }
        }

        #[test]
        fn members_come_from_top_lists(seed in 0u64..50, k in 1usize..60) {
            let g = bench(seed);
            let s = select_subset(&g, &SelectionConfig { k, bins: 5, criterion: Criterion::Dual });
            let half = k.div_ceil(2);
            let top_e = &rank_desc(&s.entropy)[..half];
            let top_d = &rank_desc(&s.deviation)[..half];
            prop_assert!(s.members.windows(2).all(|w| w[0] < w[1]));
            for m in &s.members {
                prop_assert!(top_e.contains(m) || top_d.contains(m));
            }
        }

        #[test]
        fn relabeling_permutes_selection(seed in 0u64..20) {
            // Reversing node ids maps scores one-to-one.
            let g = bench(seed);
            let n = g.n();
            let perm: Vec<usize> = (0..n).rev().collect();
            let h = g.induced_subgraph(&perm);
            let a = select_subset(&g, &SelectionConfig::for_graph(&g));
            let b = select_subset(&h, &SelectionConfig::for_graph(&h));
            for i in 0..n {
                prop_assert!((a.entropy[perm[i]] - b.entropy[i]).abs() < 1e-12);
                prop_assert!((a.deviation[perm[i]] - b.deviation[i]).abs() < 1e-9);
            }
        }
    }
}
