use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::Rng;

use crate::counterfactual::{
    gen_feature_cf, gen_struct_cf, oracle_feature_cf, oracle_struct_cf, CfConfig, CfContext, ConsistencyConfig,
    OracleGrid, Polarity, StructStatus,
};
use crate::graph::AttributedGraph;
use crate::linalg::dist;
use crate::seed::{self, Stage};

/// Breadth-first ball around `root` with at most `max_nodes` nodes, in
/// visit order (so `root` maps to local id 0).
pub fn bfs_ball(g: &AttributedGraph, root: usize, max_nodes: usize) -> Vec<usize> {
    let mut seen = vec![false; g.n()];
    let mut order = Vec::new();
    let mut queue = VecDeque::from([root]);
    seen[root] = true;
    while let Some(v) = queue.pop_front() {
        if order.len() == max_nodes {
            break;
        }
        order.push(v);
        for &u in g.neighbors(v) {
            if !seen[u] {
                seen[u] = true;
                queue.push_back(u);
            }
        }
    }
    order
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditMode {
    Structural,
    Feature,
}

impl AuditMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AuditMode::Structural => "structural",
            AuditMode::Feature => "feature",
        }
    }
}

/// Heuristic and oracle outcome for one node, mode and polarity. Cost is
/// the edit count for structural views and the perturbation norm for
/// feature views.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditRow {
    pub sample: usize,
    /// Root node in the source graph.
    pub node: usize,
    pub mode: AuditMode,
    pub polarity: Polarity,
    pub greedy_cost: Option<f64>,
    pub oracle_cost: Option<f64>,
}

impl AuditRow {
    /// Heuristic cost over oracle cost when both succeed.
    pub fn ratio(&self) -> Option<f64> {
        match (self.greedy_cost, self.oracle_cost) {
            (Some(g), Some(o)) if o > 0.0 => Some(g / o),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditConfig {
    pub samples: usize,
    pub max_nodes: usize,
    pub grid: OracleGrid,
    pub seed: u64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            samples: 100,
            max_nodes: 100,
            grid: OracleGrid::default(),
            seed: 0,
        }
    }
}

/// Compares the greedy and gradient-direction generators against their
/// exhaustive counterparts on BFS balls around seeded random roots. Roots
/// without neighbors are skipped.
pub fn oracle_audit(g: &AttributedGraph, acfg: &AuditConfig, cfg: &CfConfig, ccfg: &ConsistencyConfig) -> Vec<AuditRow> {
    let mut rng = seed::rng(acfg.seed, Stage::Sample, 0, 0);
    let mut rows = Vec::new();
    let mut sample = 0;
    let mut attempts = 0;
    while sample < acfg.samples && attempts < 100 * acfg.samples.max(1) && g.n() > 0 {
        attempts += 1;
        let root = rng.random_range(0..g.n());
        if g.degree(root) == 0 {
            continue;
        }
        let sub = g.induced_subgraph(&bfs_ball(g, root, acfg.max_nodes));
        let ctx = CfContext::new(&sub);
        let grid = OracleGrid {
            seed: seed::derive(acfg.seed, Stage::Oracle, sample as u64, 0),
            ..acfg.grid.clone()
        };
        for polarity in [Polarity::Positive, Polarity::Negative] {
            let cost = |s: &crate::counterfactual::StructCf| {
                (s.status == StructStatus::Modified).then(|| s.edits.cost() as f64)
            };
            rows.push(AuditRow {
                sample,
                node: root,
                mode: AuditMode::Structural,
                polarity,
                greedy_cost: cost(&gen_struct_cf(&sub, 0, polarity, cfg, ccfg)),
                oracle_cost: cost(&oracle_struct_cf(&sub, 0, polarity, cfg, ccfg)),
            });
            let x = sub.feature(0);
            let heur = gen_feature_cf(&sub, &ctx, 0, polarity, cfg, ccfg);
            rows.push(AuditRow {
                sample,
                node: root,
                mode: AuditMode::Feature,
                polarity,
                greedy_cost: heur.accepted().then(|| dist(&heur.features, x)),
                oracle_cost: oracle_feature_cf(&sub, &ctx, 0, polarity, cfg, ccfg, &grid).map(|o| dist(&o, x)),
            });
        }
        sample += 1;
    }
    rows
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditSummary {
    /// Structural cost ratios where both methods succeed.
    pub struct_ratios: Vec<f64>,
    pub feature_greedy_success: f64,
    pub feature_oracle_success: f64,
    pub struct_greedy_success: f64,
    pub struct_oracle_success: f64,
}

fn rate(rows: &[&AuditRow], f: impl Fn(&AuditRow) -> bool) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    rows.iter().filter(|r| f(r)).count() as f64 / rows.len() as f64
}

impl AuditSummary {
    pub fn of(rows: &[AuditRow]) -> Self {
        let by = |m: AuditMode| rows.iter().filter(|r| r.mode == m).collect::<Vec<_>>();
        let (s, f) = (by(AuditMode::Structural), by(AuditMode::Feature));
        Self {
            struct_ratios: s.iter().filter_map(|r| r.ratio()).collect(),
            feature_greedy_success: rate(&f, |r| r.greedy_cost.is_some()),
            feature_oracle_success: rate(&f, |r| r.oracle_cost.is_some()),
            struct_greedy_success: rate(&s, |r| r.greedy_cost.is_some()),
            struct_oracle_success: rate(&s, |r| r.oracle_cost.is_some()),
        }
    }

    pub fn mean_ratio(&self) -> Option<f64> {
        (!self.struct_ratios.is_empty()).then(|| self.struct_ratios.iter().sum::<f64>() / self.struct_ratios.len() as f64)
    }

    pub fn median_ratio(&self) -> Option<f64> {
        let mut v = self.struct_ratios.clone();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let m = v.len() / 2;
        Some(if v.len() % 2 == 1 { v[m] } else { (v[m - 1] + v[m]) / 2.0 })
    }
}

/// One line per method: `sample,node_id,mode,polarity,method,success,cost,ratio`.
/// The ratio is filled on greedy rows where both methods succeed.
pub fn audit_csv(rows: &[AuditRow]) -> String {
    let mut out = String::from("sample,node_id,mode,polarity,method,success,cost,ratio\n");
    for r in rows {
        for (method, cost, ratio) in [("greedy", r.greedy_cost, r.ratio()), ("oracle", r.oracle_cost, None)] {
            let _ = writeln!(
                out,
                "{},{},{},{},{method},{},{},{}",
                r.sample,
                r.node,
                r.mode.as_str(),
                r.polarity.as_str(),
                cost.is_some() as u8,
                cost.map_or(String::new(), |c| format!("{c:e}")),
                ratio.map_or(String::new(), |c| format!("{c:e}")),
            );
        }
    }
    out
}
