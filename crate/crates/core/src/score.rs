//! Neighborhood-deviation anomaly scores and evaluation metrics.

use crate::encoder::{embed_all, EmbeddingSet, ModelParams};
use crate::error::{Error, Result};
use crate::graph::AttributedGraph;
use crate::linalg::norm;

/// `|z_i - mean_{j in N(i)} z_j|` per node; isolated nodes score `|z_i|`.
pub fn anomaly_scores(g: &AttributedGraph, params: &ModelParams) -> Result<Vec<f64>> {
    Ok(scores_from_embeddings(g, &embed_all(g, params)?))
}

pub fn scores_from_embeddings(g: &AttributedGraph, emb: &EmbeddingSet) -> Vec<f64> {
    let e = emb.z.cols();
    (0..g.n())
        .map(|i| {
            let z = emb.row(i);
            let nb = g.neighbors(i);
            if nb.is_empty() {
                return norm(z);
            }
            let mut mean = vec![0.0; e];
            for &j in nb {
                for (m, v) in mean.iter_mut().zip(emb.row(j)) {
                    *m += v;
                }
            }
            let k = nb.len() as f64;
            z.iter()
                .zip(&mean)
                .map(|(a, m)| (a - m / k).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// Node ids by descending score, ties by ascending id.
pub fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

fn class_counts(labels: &[bool]) -> Result<(usize, usize)> {
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    Ok((pos, neg))
}

/// Probability that a random anomaly outscores a random normal node, ties
/// counting one half. Computed from an exact integer count of
/// `2 * wins + ties`.
pub fn auc_roc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::RowCountMismatch {
            what: "labels",
            found: labels.len(),
            expected: scores.len(),
        });
    }
    let (pos, neg) = class_counts(labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut doubled: u128 = 0;
    let mut normals_below: u128 = 0;
    let mut k = 0;
    while k < order.len() {
        let mut end = k;
        while end < order.len() && scores[order[end]].total_cmp(&scores[order[k]]).is_eq() {
            end += 1;
        }
        let group = &order[k..end];
        let anomalies = group.iter().filter(|&&i| labels[i]).count() as u128;
        let normals = group.len() as u128 - anomalies;
        doubled += anomalies * (2 * normals_below + normals);
        normals_below += normals;
        k = end;
    }
    Ok(doubled as f64 / (2 * pos as u128 * neg as u128) as f64)
}

/// Precision, recall and F1 of flagging the top `m` nodes.
pub fn precision_recall_at_m(scores: &[f64], labels: &[bool], m: Option<usize>) -> Result<(f64, f64, f64)> {
    if scores.len() != labels.len() {
        return Err(Error::RowCountMismatch {
            what: "labels",
            found: labels.len(),
            expected: scores.len(),
        });
    }
    let anomalies = labels.iter().filter(|&&l| l).count();
    let m = m.unwrap_or(anomalies);
    if m > scores.len() {
        return Err(Error::Config(format!("m = {m} exceeds {} nodes", scores.len())));
    }
    let hits = ranking(scores)[..m].iter().filter(|&&i| labels[i]).count() as f64;
    let precision = if m == 0 { 0.0 } else { hits / m as f64 };
    let recall = if anomalies == 0 { 0.0 } else { hits / anomalies as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok((precision, recall, f1))
}

/// F1 of the top `m` flagged nodes; `m` defaults to the anomaly count.
pub fn f1_at_m(scores: &[f64], labels: &[bool], m: Option<usize>) -> Result<f64> {
    precision_recall_at_m(scores, labels, m).map(|(_, _, f)| f)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyReport {
    pub scores: Vec<f64>,
    pub ranking: Vec<usize>,
    pub flagged: Vec<usize>,
    pub auc: Option<f64>,
    pub f1: Option<f64>,
    pub m: usize,
}

/// Flag count when no labels are available: 5% of the nodes, at least one.
pub fn default_flag_count(n: usize) -> usize {
    ((0.05 * n as f64).ceil() as usize).clamp(1, n.max(1))
}

impl AnomalyReport {
    /// Ranks and flags nodes; AUC and F1 are filled when `labels` holds both
    /// classes. `m` defaults to the anomaly count, or [`default_flag_count`]
    /// without labels.
    pub fn from_scores(scores: Vec<f64>, labels: Option<&[bool]>, m: Option<usize>) -> Result<Self> {
        let n = scores.len();
        let m = m
            .or_else(|| labels.map(|l| l.iter().filter(|&&x| x).count()))
            .unwrap_or_else(|| default_flag_count(n));
        if m > n {
            return Err(Error::Config(format!("m = {m} exceeds {n} nodes")));
        }
        let ranking = ranking(&scores);
        let mut flagged = ranking[..m].to_vec();
        flagged.sort_unstable();
        let (auc, f1) = match labels {
            Some(l) if class_counts(l).is_ok() => (Some(auc_roc(&scores, l)?), Some(f1_at_m(&scores, l, Some(m))?)),
            _ => (None, None),
        };
        Ok(Self {
            scores,
            ranking,
            flagged,
            auc,
            f1,
            m,
        })
    }

    pub fn evaluate(g: &AttributedGraph, params: &ModelParams) -> Result<Self> {
        Self::from_scores(anomaly_scores(g, params)?, g.labels(), None)
    }

    /// `node_id,score,rank,flagged` with ranks starting at 1.
    pub fn to_csv(&self) -> String {
        let mut rank = vec![0; self.scores.len()];
        for (r, &i) in self.ranking.iter().enumerate() {
            rank[i] = r + 1;
        }
        let mut s = String::from("node_id,score,rank,flagged\n");
        for (i, score) in self.scores.iter().enumerate() {
            let f = self.flagged.binary_search(&i).is_ok() as u8;
            s.push_str(&format!("{i},{score:e},{},{f}\n", rank[i]));
        }
        s
    }
}
