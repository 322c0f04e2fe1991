use std::fmt::Write as _;

use super::{fit, prepare_graph, CriterionKind, GraphSource, RunConfig};
use crate::error::{Error, Result};
use crate::quality::BaselineStrategy;
use crate::train::{NegativeSource, PositiveSource};

/// Selection budgets of the k-sweep, in percent of the nodes.
pub const K_SWEEP_PERCENT: [u32; 5] = [2, 5, 10, 15, 20];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Full,
    /// Random edge-drop and feature-mask positives, in-batch negatives only.
    RandomAug,
    /// Random positives, counterfactual negatives kept.
    NoCfPos,
    NoCfNeg,
    NoFeatureCf,
    NoStructCf,
    EntropyOnly,
    DeviationOnly,
    NoUniformity,
    /// Selection budget of `k` percent of the nodes.
    Budget(u32),
}

impl Variant {
    pub const STANDARD: [Variant; 9] = [
        Variant::Full,
        Variant::RandomAug,
        Variant::NoCfPos,
        Variant::NoCfNeg,
        Variant::NoFeatureCf,
        Variant::NoStructCf,
        Variant::EntropyOnly,
        Variant::DeviationOnly,
        Variant::NoUniformity,
    ];

    pub fn name(self) -> String {
        match self {
            Variant::Full => "full".into(),
            Variant::RandomAug => "random-aug".into(),
            Variant::NoCfPos => "no-cf-pos".into(),
            Variant::NoCfNeg => "no-cf-neg".into(),
            Variant::NoFeatureCf => "no-feature-cf".into(),
            Variant::NoStructCf => "no-struct-cf".into(),
            Variant::EntropyOnly => "entropy-only".into(),
            Variant::DeviationOnly => "deviation-only".into(),
            Variant::NoUniformity => "no-uniformity".into(),
            Variant::Budget(p) => format!("k={p}%"),
        }
    }

    /// Parses one name; `k-sweep` expands to every budget and `all` to
    /// every variant.
    pub fn parse(name: &str) -> Result<Vec<Variant>> {
        let sweep = || K_SWEEP_PERCENT.iter().map(|&p| Variant::Budget(p)).collect::<Vec<_>>();
        match name {
            "k-sweep" => return Ok(sweep()),
            "all" => return Ok(Variant::STANDARD.iter().copied().chain(sweep()).collect()),
            _ => {}
        }
        if let Some(p) = name.strip_prefix("k=").and_then(|p| p.strip_suffix('%')) {
            return match p.parse::<u32>() {
                Ok(p) if (1..=100).contains(&p) => Ok(vec![Variant::Budget(p)]),
                _ => Err(Error::Config(format!("bad budget variant {name:?}"))),
            };
        }
        Variant::STANDARD
            .iter()
            .find(|v| v.name() == name)
            .map(|&v| vec![v])
            .ok_or_else(|| Error::Config(format!("unknown variant {name:?}")))
    }

    pub fn apply(self, cfg: &mut RunConfig) {
        let random = PositiveSource::Baseline(BaselineStrategy::RandomEdgeFeature);
        match self {
            Variant::Full => {}
            Variant::RandomAug => {
                cfg.positive = random;
                cfg.negative = NegativeSource::InBatchOnly;
            }
            Variant::NoCfPos => cfg.positive = random,
            Variant::NoCfNeg => cfg.negative = NegativeSource::InBatchOnly,
            Variant::NoFeatureCf => cfg.cf.use_feature = false,
            Variant::NoStructCf => cfg.cf.use_structural = false,
            Variant::EntropyOnly => cfg.criterion = CriterionKind::Entropy,
            Variant::DeviationOnly => cfg.criterion = CriterionKind::Deviation,
            Variant::NoUniformity => cfg.lambda_u = Some(0.0),
            Variant::Budget(p) => {
                cfg.k = None;
                cfg.k_fraction = Some(p as f64 / 100.0);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub variant: String,
    pub seed: u64,
    pub auc: Option<f64>,
    pub f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    /// Mean AUC and F1 per variant in first-seen order.
    pub fn means(&self) -> Vec<(String, Option<f64>, Option<f64>)> {
        let mut names: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !names.contains(&r.variant.as_str()) {
                names.push(&r.variant);
            }
        }
        let mean = |v: Vec<Option<f64>>| -> Option<f64> {
            let v: Option<Vec<f64>> = v.into_iter().collect();
            v.filter(|v| !v.is_empty()).map(|v| v.iter().sum::<f64>() / v.len() as f64)
        };
        names
            .into_iter()
            .map(|name| {
                let rows: Vec<&AblationRow> = self.rows.iter().filter(|r| r.variant == name).collect();
                (
                    name.to_string(),
                    mean(rows.iter().map(|r| r.auc).collect()),
                    mean(rows.iter().map(|r| r.f1).collect()),
                )
            })
            .collect()
    }

    pub fn mean_auc(&self, variant: Variant) -> Option<f64> {
        let name = variant.name();
        self.means().into_iter().find(|m| m.0 == name).and_then(|m| m.1)
    }

    /// Per-seed rows followed by `mean` rows.
    pub fn to_csv(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.6}"));
        let mut out = String::from("variant,seed,auc,f1\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", r.variant, r.seed, fmt(r.auc), fmt(r.f1));
        }
        for (name, auc, f1) in self.means() {
            let _ = writeln!(out, "{name},mean,{},{}", fmt(auc), fmt(f1));
        }
        out
    }
}

/// Trains every variant on every seed. The graph for a seed is prepared
/// once from the base config with that seed and shared by all variants.
pub fn compare_ablations(
    base: &RunConfig,
    source: &GraphSource,
    variants: &[Variant],
    seeds: &[u64],
) -> Result<AblationTable> {
    let mut table = AblationTable::default();
    for &seed in seeds {
        let seeded = RunConfig { seed, ..base.clone() };
        let (g, resolved) = prepare_graph(&seeded, source)?;
        for &v in variants {
            // Start from the unresolved config so budget and lambda_u
            // overrides take effect.
            let mut cfg = seeded.clone();
            cfg.inject = resolved.inject;
            v.apply(&mut cfg);
            let f = fit(&g, &cfg)?;
            log::info!("variant {} seed {seed}: auc {:?}", v.name(), f.report.auc);
            table.rows.push(AblationRow {
                variant: v.name(),
                seed,
                auc: f.report.auc,
                f1: f.report.f1,
            });
        }
    }
    Ok(table)
}
