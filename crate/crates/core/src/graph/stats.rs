use std::collections::BTreeSet;

use super::AttributedGraph;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, Matrix};

/// Per-node degree, closed-triangle count and local clustering coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralProfile {
    pub degree: Vec<usize>,
    pub triangles: Vec<usize>,
    pub clustering: Vec<f64>,
}

/// Neighbor feature centroid and the population standard deviation over
/// every entry of the neighbor feature submatrix.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborStats {
    pub centroid: Vec<f64>,
    pub scalar_std: f64,
}

/// Z-scores each feature column with the population standard deviation.
/// Zero-variance columns become all-zero.
pub fn zscore_features(g: &AttributedGraph) -> AttributedGraph {
    let (n, d) = g.features().shape();
    let mut out = g.features().clone();
    if n > 0 {
        for c in 0..d {
            let mean = (0..n).map(|r| g.features().get(r, c)).sum::<f64>() / n as f64;
            let var = (0..n)
                .map(|r| (g.features().get(r, c) - mean).powi(2))
                .sum::<f64>()
                / n as f64;
            let std = var.sqrt();
            for r in 0..n {
                let v = if std > 1e-12 {
                    (g.features().get(r, c) - mean) / std
                } else {
                    0.0
                };
                out.set(r, c, v);
            }
        }
    }
    g.with_features(out).expect("same shape")
}

pub fn structural_profile(g: &AttributedGraph) -> StructuralProfile {
    let n = g.n();
    let degree: Vec<usize> = (0..n).map(|i| g.degree(i)).collect();
    let mut triangles = vec![0usize; n];
    for i in 0..n {
        for &j in g.neighbors(i).iter().filter(|&&j| j > i) {
            // Count each triangle once through its smallest edge (i, j), with w > j.
            let (a, b) = (g.neighbors(i), g.neighbors(j));
            let (mut p, mut q) = (a.partition_point(|&x| x <= j), b.partition_point(|&x| x <= j));
            while p < a.len() && q < b.len() {
                match a[p].cmp(&b[q]) {
                    std::cmp::Ordering::Less => p += 1,
                    std::cmp::Ordering::Greater => q += 1,
                    std::cmp::Ordering::Equal => {
                        let w = a[p];
                        triangles[i] += 1;
                        triangles[j] += 1;
                        triangles[w] += 1;
                        p += 1;
                        q += 1;
                    }
                }
            }
        }
    }
    let clustering = degree
        .iter()
        .zip(&triangles)
        .map(|(&k, &t)| {
            if k < 2 {
                0.0
            } else {
                2.0 * t as f64 / (k * (k - 1)) as f64
            }
        })
        .collect();
    StructuralProfile {
        degree,
        triangles,
        clustering,
    }
}

pub(crate) fn stats_over(features: &Matrix, nodes: &[usize]) -> Option<NeighborStats> {
    if nodes.is_empty() {
        return None;
    }
    let d = features.cols();
    let k = nodes.len() as f64;
    let mut centroid = vec![0.0; d];
    for &j in nodes {
        for (c, v) in centroid.iter_mut().zip(features.row(j)) {
            *c += v;
        }
    }
    centroid.iter_mut().for_each(|c| *c /= k);
    let count = k * d as f64;
    let mean = centroid.iter().sum::<f64>() / d.max(1) as f64;
    let var = nodes
        .iter()
        .flat_map(|&j| features.row(j).iter())
        .map(|v| (v - mean).powi(2))
        .sum::<f64>()
        / count.max(1.0);
    Some(NeighborStats {
        centroid,
        scalar_std: var.sqrt(),
    })
}

pub fn neighbor_stats(g: &AttributedGraph, i: usize) -> Result<NeighborStats> {
    stats_over(g.features(), g.neighbors(i)).ok_or(Error::NoNeighbors(i))
}

/// Cosine similarity, defined as 0 when either vector has zero norm.
pub fn cosine_sim(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot(a, b) / (na * nb)).clamp(-1.0, 1.0)
    }
}

/// Nodes at shortest-path distance exactly two from `i`, ascending.
pub fn two_hop_neighbors(g: &AttributedGraph, i: usize) -> Vec<usize> {
    let first = g.neighbors(i);
    let set: BTreeSet<usize> = first
        .iter()
        .flat_map(|&j| g.neighbors(j).iter().copied())
        .filter(|&w| w != i && first.binary_search(&w).is_err())
        .collect();
    set.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use proptest::prelude::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> AttributedGraph {
        AttributedGraph::from_edges(Matrix::zeros(n, 1), edges, None)
            .unwrap()
            .0
    }

    fn complete(n: usize) -> AttributedGraph {
        let edges: Vec<_> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        graph(n, &edges)
    }

    fn column(vals: &[f64]) -> AttributedGraph {
        let rows: Vec<Vec<f64>> = vals.iter().map(|&v| vec![v]).collect();
        AttributedGraph::from_edges(Matrix::from_rows(&rows), &[], None)
            .unwrap()
            .0
    }

    #[test]
    fn zscore_examples() {
        let z = zscore_features(&column(&[1.0, 3.0]));
        assert_eq!(z.features().as_slice(), &[-1.0, 1.0]);
        let z = zscore_features(&column(&[5.0, 5.0, 5.0]));
        assert_eq!(z.features().as_slice(), &[0.0, 0.0, 0.0]);
        let z = zscore_features(&column(&[0.0, 1.0, 2.0]));
        let e = 1.5f64.sqrt();
        for (a, b) in z.features().as_slice().iter().zip([-e, 0.0, e]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn profiles_of_small_graphs() {
        let p = structural_profile(&complete(3));
        assert_eq!(p.degree, vec![2, 2, 2]);
        assert_eq!(p.triangles, vec![1, 1, 1]);
        assert_eq!(p.clustering, vec![1.0; 3]);

        let p = structural_profile(&graph(3, &[(0, 1), (1, 2)]));
        assert_eq!(p.triangles, vec![0, 0, 0]);
        assert_eq!(p.clustering, vec![0.0; 3]);

        let p = structural_profile(&complete(4));
        assert_eq!(p.triangles, vec![3; 4]);
        assert_eq!(p.clustering, vec![1.0; 4]);
    }

    #[test]
    fn neighbor_stats_examples() {
        let feats = Matrix::from_rows(&[vec![2.0, 0.0], vec![1.0, 0.0], vec![-1.0, 0.0]]);
        let g = AttributedGraph::from_edges(feats, &[(0, 1), (0, 2)], None)
            .unwrap()
            .0;
        let s = neighbor_stats(&g, 0).unwrap();
        assert_eq!(s.centroid, vec![0.0, 0.0]);
        assert!((s.scalar_std - 0.5f64.sqrt()).abs() < 1e-15);

        let feats = Matrix::from_rows(&[vec![0.0, 0.0], vec![2.0, 3.0], vec![0.0, 0.0]]);
        let g = AttributedGraph::from_edges(feats, &[(0, 1)], None).unwrap().0;
        let s = neighbor_stats(&g, 0).unwrap();
        assert_eq!(s.centroid, vec![2.0, 3.0]);
        assert_eq!(s.scalar_std, 0.5);
        assert!(matches!(neighbor_stats(&g, 2), Err(Error::NoNeighbors(2))));
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine_sim(&[1.0, 0.0], &[1.0, 0.0]), 1.0);
        assert_eq!(cosine_sim(&[1.0, 0.0], &[0.0, 1.0]), 0.0);
        assert_eq!(cosine_sim(&[0.0, 0.0], &[1.0, 1.0]), 0.0);
    }

    fn bfs_distance_two(g: &AttributedGraph, s: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; g.n()];
        dist[s] = 0;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &v in g.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        (0..g.n()).filter(|&v| dist[v] == 2).collect()
    }

    #[test]
    fn two_hop_examples() {
        let path = graph(3, &[(0, 1), (1, 2)]);
        assert_eq!(two_hop_neighbors(&path, 0), vec![2]);
        assert!(two_hop_neighbors(&complete(3), 0).is_empty());
        let star = graph(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
        assert!(two_hop_neighbors(&star, 0).is_empty());
        assert_eq!(two_hop_neighbors(&star, 2), bfs_distance_two(&star, 2));
        assert_eq!(two_hop_neighbors(&star, 2), vec![1, 3, 4]);
    }

    fn arb_graph(max_n: usize) -> impl Strategy<Value = AttributedGraph> {
        (2..max_n).prop_flat_map(|n| {
            prop::collection::vec((0..n, 0..n), 0..n * 3).prop_map(move |edges| graph(n, &edges))
        })
    }

    fn brute_clustering(g: &AttributedGraph, i: usize) -> f64 {
        let nb = g.neighbors(i);
        if nb.len() < 2 {
            return 0.0;
        }
        let mut links = 0;
        for a in 0..nb.len() {
            for b in a + 1..nb.len() {
                if g.has_edge(nb[a], nb[b]) {
                    links += 1;
                }
            }
        }
        links as f64 / (nb.len() * (nb.len() - 1) / 2) as f64
    }

    proptest! {
        #[test]
        fn clustering_matches_pair_counting(g in arb_graph(50)) {
            let p = structural_profile(&g);
            for i in 0..g.n() {
                prop_assert!((0.0..=1.0).contains(&p.clustering[i]));
                prop_assert_eq!(p.clustering[i], brute_clustering(&g, i));
                if p.degree[i] < 2 {
                    prop_assert_eq!(p.triangles[i], 0);
                }
            }
        }

        #[test]
        fn symmetric_after_build(g in arb_graph(40)) {
            prop_assert!(g.is_symmetric());
            prop_assert!(g.is_simple());
        }

        #[test]
        fn two_hop_matches_bfs(g in arb_graph(30), s in 0usize..30) {
            let s = s % g.n();
            prop_assert_eq!(two_hop_neighbors(&g, s), bfs_distance_two(&g, s));
        }

        #[test]
        fn zscore_idempotent(rows in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 3), 3..20)) {
            let g = AttributedGraph::from_edges(Matrix::from_rows(&rows), &[], None).unwrap().0;
            let once = zscore_features(&g);
            let twice = zscore_features(&once);
            for (a, b) in once.features().as_slice().iter().zip(twice.features().as_slice()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn centroid_matches_row_mean(rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 4), 2..12)) {
            let n = rows.len();
            let edges: Vec<_> = (1..n).map(|j| (0, j)).collect();
            let g = AttributedGraph::from_edges(Matrix::from_rows(&rows), &edges, None).unwrap().0;
            let s = neighbor_stats(&g, 0).unwrap();
            for c in 0..4 {
                let mean = rows[1..].iter().map(|r| r[c]).sum::<f64>() / (n - 1) as f64;
                prop_assert!((s.centroid[c] - mean).abs() < 1e-12);
            }
        }
    }
}
