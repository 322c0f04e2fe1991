//! Attributed graph model: CSR adjacency, dense features, optional labels.

mod io;
mod stats;

pub use io::{load_graph, load_graph_dir, read_labels, save_graph_dir, LoadedGraph, EDGES_FILE, FEATURES_FILE, LABELS_FILE};
pub use stats::{
    cosine_sim, neighbor_stats, structural_profile, two_hop_neighbors, zscore_features,
    NeighborStats, StructuralProfile,
};
pub(crate) use stats::stats_over;

pub(crate) fn stats_over_neighbors(g: &AttributedGraph, i: usize) -> Option<NeighborStats> {
    stats_over(g.features(), g.neighbors(i))
}

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Undirected simple graph with a feature row per node.
///
/// Adjacency is stored in both directions with sorted, deduplicated
/// neighbor lists and no self-loops. The value is immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributedGraph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    features: Matrix,
    labels: Option<Vec<bool>>,
}

impl AttributedGraph {
    /// Builds a graph from an undirected edge list. Edges are symmetrized
    /// and deduplicated; self-loops are dropped and counted.
    pub fn from_edges(
        features: Matrix,
        edges: &[(usize, usize)],
        labels: Option<Vec<bool>>,
    ) -> Result<(Self, usize)> {
        let n = features.rows();
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::RowCountMismatch {
                    what: "labels",
                    found: l.len(),
                    expected: n,
                });
            }
        }
        for r in 0..n {
            if let Some(c) = features.row(r).iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { row: r, col: c });
            }
        }
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut self_loops = 0;
        for &(a, b) in edges {
            for id in [a, b] {
                if id >= n {
                    return Err(Error::NodeOutOfRange { id, n });
                }
            }
            if a == b {
                self_loops += 1;
                continue;
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        Ok((Self::from_adjacency(features, adj, labels), self_loops))
    }

    /// Builds from per-node neighbor lists; lists are sorted and deduplicated
    /// here but must already be symmetric and loop-free.
    pub(crate) fn from_adjacency(
        features: Matrix,
        mut adj: Vec<Vec<usize>>,
        labels: Option<Vec<bool>>,
    ) -> Self {
        let mut offsets = Vec::with_capacity(adj.len() + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for list in adj.iter_mut() {
            list.sort_unstable();
            list.dedup();
            targets.extend_from_slice(list);
            offsets.push(targets.len());
        }
        Self {
            offsets,
            targets,
            features,
            labels,
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.features.cols()
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.targets.len() / 2
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&j).is_ok()
    }

    #[inline]
    pub fn features(&self) -> &Matrix {
        &self.features
    }

    #[inline]
    pub fn feature(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    pub fn labels(&self) -> Option<&[bool]> {
        self.labels.as_deref()
    }

    pub fn anomaly_count(&self) -> Option<usize> {
        self.labels().map(|l| l.iter().filter(|&&b| b).count())
    }

    /// Undirected edges as `(i, j)` with `i < j`, in CSR order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .filter(move |&&j| j > i)
                .map(move |&j| (i, j))
        })
    }

    #[cfg(test)]
    pub(crate) fn adjacency_lists(&self) -> Vec<Vec<usize>> {
        (0..self.n()).map(|i| self.neighbors(i).to_vec()).collect()
    }

    pub fn with_features(&self, features: Matrix) -> Result<Self> {
        if features.rows() != self.n() {
            return Err(Error::RowCountMismatch {
                what: "features",
                found: features.rows(),
                expected: self.n(),
            });
        }
        Ok(Self {
            features,
            ..self.clone()
        })
    }

    pub fn with_labels(&self, labels: Option<Vec<bool>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != self.n() {
                return Err(Error::RowCountMismatch {
                    what: "labels",
                    found: l.len(),
                    expected: self.n(),
                });
            }
        }
        Ok(Self {
            labels,
            ..self.clone()
        })
    }

    /// Edge density `|E| / |V|`.
    pub fn edge_ratio(&self) -> f64 {
        if self.n() == 0 {
            0.0
        } else {
            self.num_edges() as f64 / self.n() as f64
        }
    }

    /// Induced subgraph on `nodes` (relabelled to `0..nodes.len()` in the
    /// given order).
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Self {
        let mut index = vec![usize::MAX; self.n()];
        for (k, &v) in nodes.iter().enumerate() {
            index[v] = k;
        }
        let adj = nodes
            .iter()
            .map(|&v| {
                self.neighbors(v)
                    .iter()
                    .filter_map(|&u| (index[u] != usize::MAX).then_some(index[u]))
                    .collect()
            })
            .collect();
        let rows: Vec<Vec<f64>> = nodes.iter().map(|&v| self.feature(v).to_vec()).collect();
        let features = if rows.is_empty() {
            Matrix::zeros(0, self.d())
        } else {
            Matrix::from_rows(&rows)
        };
        let labels = self
            .labels
            .as_ref()
            .map(|l| nodes.iter().map(|&v| l[v]).collect());
        Self::from_adjacency(features, adj, labels)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n()).all(|i| self.neighbors(i).iter().all(|&j| self.has_edge(j, i)))
    }

    pub fn is_simple(&self) -> bool {
        (0..self.n()).all(|i| {
            let nb = self.neighbors(i);
            nb.windows(2).all(|w| w[0] < w[1]) && !nb.contains(&i)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetrizes_and_drops_loops() {
        let (g, loops) = AttributedGraph::from_edges(
            Matrix::zeros(3, 2),
            &[(0, 1), (1, 0), (1, 2), (1, 1)],
            None,
        )
        .unwrap();
        assert_eq!(loops, 1);
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.neighbors(1), &[0, 2]);
        assert!(g.is_symmetric() && g.is_simple());
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn rejects_out_of_range() {
        let err = AttributedGraph::from_edges(Matrix::zeros(2, 1), &[(0, 2)], None).unwrap_err();
        assert!(matches!(err, Error::NodeOutOfRange { id: 2, n: 2 }));
    }

    #[test]
    fn induced_subgraph_relabels() {
        let (g, _) = AttributedGraph::from_edges(
            Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]),
            &[(0, 1), (1, 2), (2, 3)],
            None,
        )
        .unwrap();
        let s = g.induced_subgraph(&[2, 1, 3]);
        assert_eq!(s.neighbors(0), &[1, 2]);
        assert_eq!(s.feature(0), &[2.0]);
    }
}
