use std::cmp::Ordering;

use super::{homophily_of, CfConfig, ConsistencyConfig, EditSet, Polarity};
use crate::graph::{cosine_sim, two_hop_neighbors, AttributedGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructStatus {
    Modified,
    Unchanged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructCf {
    pub edits: EditSet,
    pub status: StructStatus,
}

impl StructCf {
    pub(crate) fn unchanged() -> Self {
        Self {
            edits: EditSet::default(),
            status: StructStatus::Unchanged,
        }
    }
}

struct Editor<'a> {
    g: &'a AttributedGraph,
    i: usize,
    threshold: f64,
    current: Vec<usize>,
    adds: Vec<usize>,
    removes: Vec<usize>,
    max_delta: usize,
}

impl Editor<'_> {
    fn homophily(&self, nbrs: &[usize]) -> Option<f64> {
        homophily_of(self.g, self.i, nbrs, self.threshold)
    }

    fn cos(&self, j: usize) -> f64 {
        cosine_sim(self.g.feature(self.i), self.g.feature(j))
    }

    fn delta_ok(&self, adds: usize, removes: usize) -> bool {
        (adds as isize - removes as isize).unsigned_abs() <= self.max_delta
    }

    fn without(&self, j: usize) -> Vec<usize> {
        self.current.iter().copied().filter(|&v| v != j).collect()
    }

    fn with(&self, t: usize) -> Vec<usize> {
        let mut v = self.current.clone();
        let pos = v.partition_point(|&x| x < t);
        v.insert(pos, t);
        v
    }

    /// Best single removal for the polarity, if it moves homophily strictly.
    fn try_remove(&mut self, polarity: Polarity) -> bool {
        if self.current.len() <= 1 || !self.delta_ok(self.adds.len(), self.removes.len() + 1) {
            return false;
        }
        let now = self.homophily(&self.current).unwrap_or(0.0);
        // Positive: drop the most similar neighbor; negative: the least similar.
        let mut best: Option<(f64, f64, usize)> = None;
        for &j in &self.current {
            let h = self.homophily(&self.without(j)).unwrap_or(0.0);
            let key = match polarity {
                Polarity::Positive => (h, -self.cos(j), j),
                Polarity::Negative => (-h, self.cos(j), j),
            };
            let better = best.is_none_or(|b| {
                key.0
                    .total_cmp(&b.0)
                    .then(key.1.total_cmp(&b.1))
                    .then(key.2.cmp(&b.2))
                    == Ordering::Less
            });
            if better {
                best = Some(key);
            }
        }
        let Some((_, _, j)) = best else { return false };
        let after = self.homophily(&self.without(j)).unwrap_or(0.0);
        if !polarity.moves(now, after) {
            return false;
        }
        self.current = self.without(j);
        if let Some(p) = self.adds.iter().position(|&a| a == j) {
            self.adds.remove(p);
        } else {
            self.removes.push(j);
        }
        true
    }

    /// Best single addition among `candidates`, if it moves homophily strictly.
    fn try_add(&mut self, candidates: &[usize], polarity: Polarity) -> bool {
        if !self.delta_ok(self.adds.len() + 1, self.removes.len()) {
            return false;
        }
        let now = self.homophily(&self.current).unwrap_or(0.0);
        // Positive: the most dissimilar candidate; negative: the most similar.
        let pick = candidates
            .iter()
            .copied()
            .filter(|t| self.current.binary_search(t).is_err())
            .min_by(|&a, &b| {
                let (ca, cb) = (self.cos(a), self.cos(b));
                match polarity {
                    Polarity::Positive => ca.total_cmp(&cb),
                    Polarity::Negative => cb.total_cmp(&ca),
                }
                .then(a.cmp(&b))
            });
        let Some(t) = pick else { return false };
        let after = self.homophily(&self.with(t)).unwrap_or(0.0);
        if !polarity.moves(now, after) {
            return false;
        }
        self.current = self.with(t);
        self.adds.push(t);
        true
    }
}

impl Polarity {
    /// Positive views lower homophily, negative views raise it.
    fn moves(self, before: f64, after: f64) -> bool {
        match self {
            Polarity::Positive => after < before,
            Polarity::Negative => after > before,
        }
    }
}

/// Greedy structural counterfactual.
///
/// Positive mode removes edges to the most feature-similar neighbors (at
/// most `edge_budget_remove`), adding one edge to the most dissimilar
/// 2-hop neighbor only if removals cannot lower homophily. Negative mode
/// adds edges to the most similar 2-hop neighbors (at most
/// `edge_budget_add`), then removes the most dissimilar neighbor if that is
/// still needed. Each accepted step must move homophily strictly; the net
/// degree change stays within `degree_delta_max` and the node is never
/// isolated. Unless `exhaust_budget` is set, editing stops as soon as the
/// homophily constraint holds.
pub fn gen_struct_cf(
    g: &AttributedGraph,
    i: usize,
    polarity: Polarity,
    cfg: &CfConfig,
    ccfg: &ConsistencyConfig,
) -> StructCf {
    let original = g.neighbors(i);
    let Some(h0) = homophily_of(g, i, original, ccfg.sim_threshold) else {
        return StructCf::unchanged();
    };
    let mut ed = Editor {
        g,
        i,
        threshold: ccfg.sim_threshold,
        current: original.to_vec(),
        adds: Vec::new(),
        removes: Vec::new(),
        max_delta: cfg.degree_delta_max,
    };
    let satisfied = |ed: &Editor| {
        ed.homophily(&ed.current)
            .is_some_and(|h| polarity.moves(h0, h))
    };
    let two_hop = two_hop_neighbors(g, i);
    match polarity {
        Polarity::Positive => {
            while ed.removes.len() < cfg.edge_budget_remove {
                if (!cfg.exhaust_budget && satisfied(&ed)) || !ed.try_remove(polarity) {
                    break;
                }
            }
            if !satisfied(&ed) && cfg.edge_budget_add > 0 {
                let dissimilar: Vec<usize> = two_hop
                    .iter()
                    .copied()
                    .filter(|&t| ed.cos(t) <= ccfg.sim_threshold)
                    .collect();
                ed.try_add(&dissimilar, polarity);
            }
        }
        Polarity::Negative => {
            let similar: Vec<usize> = two_hop
                .iter()
                .copied()
                .filter(|&t| ed.cos(t) > ccfg.sim_threshold)
                .collect();
            while ed.adds.len() < cfg.edge_budget_add {
                if (!cfg.exhaust_budget && satisfied(&ed)) || !ed.try_add(&similar, polarity) {
                    break;
                }
            }
            if (cfg.exhaust_budget || !satisfied(&ed)) && cfg.edge_budget_remove > 0 {
                ed.try_remove(polarity);
            }
        }
    }
    if !satisfied(&ed) {
        return StructCf::unchanged();
    }
    StructCf {
        edits: EditSet::new(ed.adds, ed.removes),
        status: StructStatus::Modified,
    }
}

#[cfg(test)]
mod tests {
    use super::super::test_graphs::build;
    use super::super::homophily;
    use super::*;

    /// Node 0 with similar neighbors 1, 2, 3 and a dissimilar neighbor 4.
    /// Node 5 hangs off node 4 and is dissimilar to node 0.
    fn mixed() -> AttributedGraph {
        build(
            &[
                vec![1.0, 0.0],
                vec![1.0, 0.1],
                vec![1.0, 0.2],
                vec![1.0, -0.1],
                vec![0.0, 1.0],
                vec![-1.0, 0.0],
            ],
            &[(0, 1), (0, 2), (0, 3), (0, 4), (4, 5)],
        )
    }

    fn exhaustive() -> CfConfig {
        CfConfig {
            exhaust_budget: true,
            ..CfConfig::default()
        }
    }

    #[test]
    fn positive_removes_two_similar_when_exhausting_budget() {
        let g = mixed();
        let ccfg = ConsistencyConfig::default();
        assert_eq!(homophily(&g, 0, None, 0.7).unwrap(), 0.75);
        let s = gen_struct_cf(&g, 0, Polarity::Positive, &exhaustive(), &ccfg);
        assert_eq!(s.status, StructStatus::Modified);
        assert_eq!(s.edits.removes.len(), 2);
        assert!(s.edits.adds.is_empty());
        // Most similar first: node 1 (cos ~0.995) and node 3 tie on
        // similarity; ascending id breaks the tie.
        assert_eq!(s.edits.removes, vec![1, 3]);
        assert_eq!(homophily(&g, 0, Some(&s.edits), 0.7).unwrap(), 0.5);
    }

    #[test]
    fn positive_stops_at_first_satisfying_edit() {
        let g = mixed();
        let ccfg = ConsistencyConfig::default();
        let s = gen_struct_cf(&g, 0, Polarity::Positive, &CfConfig::default(), &ccfg);
        assert_eq!(s.edits.cost(), 1);
        let h = homophily(&g, 0, Some(&s.edits), 0.7).unwrap();
        assert!((h - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn degree_one_positive_can_only_add() {
        // 0 - 1 - 2, node 1 similar to 0, node 2 dissimilar.
        let g = build(&[vec![1.0, 0.0], vec![1.0, 0.1], vec![0.0, 1.0]], &[(0, 1), (1, 2)]);
        let s = gen_struct_cf(&g, 0, Polarity::Positive, &exhaustive(), &ConsistencyConfig::default());
        assert_eq!(s.status, StructStatus::Modified);
        assert!(s.edits.removes.is_empty());
        assert_eq!(s.edits.adds, vec![2]);
        assert!(s.edits.degree_delta() <= 2);
    }

    #[test]
    fn negative_without_two_hop() {
        let ccfg = ConsistencyConfig::default();
        // Star center 0; leaves 1, 2 dissimilar, leaf 3 similar. No 2-hop.
        let g = build(
            &[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![1.0, 0.1]],
            &[(0, 1), (0, 2), (0, 3)],
        );
        let s = gen_struct_cf(&g, 0, Polarity::Negative, &exhaustive(), &ccfg);
        assert_eq!(s.status, StructStatus::Modified);
        assert!(s.edits.adds.is_empty());
        assert_eq!(s.edits.removes.len(), 1);
        assert_eq!(homophily(&g, 0, Some(&s.edits), 0.7).unwrap(), 0.5);

        // All neighbors dissimilar: nothing can raise homophily.
        let g = build(
            &[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]],
            &[(0, 1), (0, 2)],
        );
        let s = gen_struct_cf(&g, 0, Polarity::Negative, &exhaustive(), &ccfg);
        assert_eq!(s.status, StructStatus::Unchanged);
        assert!(s.edits.is_empty());
    }

    #[test]
    fn negative_adds_similar_two_hop() {
        // 0 - 1 - 2 with 2 similar to 0 and 1 dissimilar.
        let g = build(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.05]], &[(0, 1), (1, 2)]);
        let s = gen_struct_cf(&g, 0, Polarity::Negative, &CfConfig::default(), &ConsistencyConfig::default());
        assert_eq!(s.edits.adds, vec![2]);
        assert_eq!(homophily(&g, 0, Some(&s.edits), 0.7).unwrap(), 0.5);
    }
}
