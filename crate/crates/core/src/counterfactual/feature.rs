use super::{consistency_of, CfConfig, CfContext, ConsistencyConfig, Polarity};
use crate::graph::{stats_over, AttributedGraph};
use crate::linalg::{dist, norm, sub};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureStatus {
    /// Constraint met after `retries` step halvings.
    Accepted { retries: usize },
    /// Positive view gave up; `features` holds the original row.
    Fallback,
    /// Negative view gave up; `features` holds the original row.
    Discarded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCf {
    pub features: Vec<f64>,
    pub status: FeatureStatus,
}

impl FeatureCf {
    pub fn accepted(&self) -> bool {
        matches!(self.status, FeatureStatus::Accepted { .. })
    }

    fn failed(x: &[f64], polarity: Polarity) -> Self {
        Self {
            features: x.to_vec(),
            status: match polarity {
                Polarity::Positive => FeatureStatus::Fallback,
                Polarity::Negative => FeatureStatus::Discarded,
            },
        }
    }
}

/// Unit direction from `x` toward the neighbor centroid (stabilized by
/// `delta`) and the distance to it.
pub(crate) fn centroid_direction(
    g: &AttributedGraph,
    i: usize,
    delta: f64,
) -> Option<(Vec<f64>, f64)> {
    let stats = stats_over(g.features(), g.neighbors(i))?;
    let toward = sub(&stats.centroid, g.feature(i));
    let len = norm(&toward);
    let dir = toward.iter().map(|v| v / (len + delta)).collect();
    Some((dir, len))
}

/// Initial adaptive step: `min(max_step, factor * dist / (0.5 std(X)))`.
pub(crate) fn initial_step(ctx: &CfContext, polarity: Polarity, distance: f64, cfg: &CfConfig) -> f64 {
    let factor = match polarity {
        Polarity::Positive => cfg.gamma - 1.0,
        Polarity::Negative => 1.0 - cfg.beta,
    };
    let bound = ctx.perturbation_bound();
    if bound <= 0.0 {
        return 0.0;
    }
    cfg.max_step.min(factor * distance / bound)
}

/// Signed step along the centroid direction: positives move away from the
/// centroid, negatives toward it.
pub(crate) fn step_along(x: &[f64], dir: &[f64], alpha: f64, polarity: Polarity) -> Vec<f64> {
    let sign = match polarity {
        Polarity::Positive => -1.0,
        Polarity::Negative => 1.0,
    };
    x.iter().zip(dir).map(|(v, u)| v + sign * alpha * u).collect()
}

/// Step sizes tried by the heuristic, in order.
pub(crate) fn halving_ladder(alpha: f64, retries: usize) -> impl Iterator<Item = f64> {
    (0..=retries).map(move |r| alpha * 0.5f64.powi(r as i32))
}

/// Adaptive-step feature counterfactual along the neighbor-centroid axis.
/// The step is halved up to `max_retries` times until the consistency
/// score moves strictly in the required direction and the perturbation
/// stays within `0.5 std(X)`.
pub fn gen_feature_cf(
    g: &AttributedGraph,
    ctx: &CfContext,
    i: usize,
    polarity: Polarity,
    cfg: &CfConfig,
    ccfg: &ConsistencyConfig,
) -> FeatureCf {
    let x = g.feature(i);
    let Some((dir, distance)) = centroid_direction(g, i, ccfg.delta) else {
        return FeatureCf::failed(x, polarity);
    };
    let Some(base) = consistency_of(g, x, g.neighbors(i), ccfg) else {
        return FeatureCf::failed(x, polarity);
    };
    let bound = ctx.perturbation_bound();
    let alpha = initial_step(ctx, polarity, distance, cfg);
    for (retries, step) in halving_ladder(alpha, cfg.max_retries).enumerate() {
        let candidate = step_along(x, &dir, step, polarity);
        if dist(&candidate, x) > bound {
            continue;
        }
        let Some(c) = consistency_of(g, &candidate, g.neighbors(i), ccfg) else {
            break;
        };
        if polarity.improves(base, c) {
            return FeatureCf {
                features: candidate,
                status: FeatureStatus::Accepted { retries },
            };
        }
    }
    FeatureCf::failed(x, polarity)
}

pub fn gen_feature_cf_positive(
    g: &AttributedGraph,
    ctx: &CfContext,
    i: usize,
    cfg: &CfConfig,
    ccfg: &ConsistencyConfig,
) -> FeatureCf {
    gen_feature_cf(g, ctx, i, Polarity::Positive, cfg, ccfg)
}

pub fn gen_feature_cf_negative(
    g: &AttributedGraph,
    ctx: &CfContext,
    i: usize,
    cfg: &CfConfig,
    ccfg: &ConsistencyConfig,
) -> FeatureCf {
    gen_feature_cf(g, ctx, i, Polarity::Negative, cfg, ccfg)
}

#[cfg(test)]
mod tests {
    use super::super::test_graphs::*;
    use super::super::consistency_score;
    use super::*;

    fn run(g: &AttributedGraph, i: usize, polarity: Polarity) -> FeatureCf {
        gen_feature_cf(g, &CfContext::new(g), i, polarity, &CfConfig::default(), &ConsistencyConfig::default())
    }

    /// Node 0 sits 3 units along the first axis from a tight cluster.
    fn far_node() -> AttributedGraph {
        build(
            &[vec![3.0, 0.0], vec![0.1, 1.0], vec![-0.1, 1.0], vec![0.0, 1.1], vec![0.0, -1.0]],
            &[(0, 1), (0, 2), (0, 3), (1, 4)],
        )
    }

    #[test]
    fn positive_moves_away() {
        let g = far_node();
        let ccfg = ConsistencyConfig::default();
        let cf = run(&g, 0, Polarity::Positive);
        assert!(cf.accepted());
        let before = consistency_score(&g, 0, None, None, &ccfg).unwrap();
        let after = consistency_score(&g, 0, Some(&cf.features), None, &ccfg).unwrap();
        assert!(after > before);
        let centroid = [0.0, 1.1 / 3.0 + 2.0 / 3.0];
        assert!(dist(&cf.features, &centroid) > dist(g.feature(0), &centroid));
        assert!(cf.features[0] > 3.0);
    }

    #[test]
    fn negative_moves_toward() {
        let g = far_node();
        let ccfg = ConsistencyConfig::default();
        let cf = run(&g, 0, Polarity::Negative);
        assert!(cf.accepted());
        let before = consistency_score(&g, 0, None, None, &ccfg).unwrap();
        let after = consistency_score(&g, 0, Some(&cf.features), None, &ccfg).unwrap();
        assert!(after < before);
        assert!(cf.features[0] < 3.0);
        assert_eq!(cf, run(&g, 0, Polarity::Negative));
    }

    #[test]
    fn node_at_centroid_gives_up() {
        let g = build(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![-1.0, 0.0]], &[(0, 1), (0, 2)]);
        let pos = run(&g, 0, Polarity::Positive);
        assert_eq!(pos.status, FeatureStatus::Fallback);
        assert_eq!(pos.features, g.feature(0));
        let neg = run(&g, 0, Polarity::Negative);
        assert_eq!(neg.status, FeatureStatus::Discarded);
    }

    #[test]
    fn isolated_node_gives_up() {
        let g = build(&[vec![1.0], vec![2.0]], &[]);
        assert_eq!(run(&g, 0, Polarity::Positive).status, FeatureStatus::Fallback);
        assert_eq!(run(&g, 0, Polarity::Negative).status, FeatureStatus::Discarded);
    }
}
