//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys are
//! rejected. Keys whose default depends on the graph (`k`, `lambda_u`,
//! `inject`) accept `auto`; [`RunConfig::resolve`] fills them in, and
//! [`RunConfig::echo`] writes every key back in a form `parse` accepts.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::counterfactual::{CfConfig, ConsistencyConfig};
use crate::error::{Error, Result};
use crate::graph::AttributedGraph;
use crate::inject::{InjectionConfig, SyntheticConfig};
use crate::quality::{BaselineConfig, BaselineStrategy};
use crate::select::{Criterion, SelectionConfig};
use crate::train::{Augmentation, NegativeSource, PositiveSource, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriterionKind {
    Dual,
    Entropy,
    Deviation,
    Random,
}

impl CriterionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CriterionKind::Dual => "dual",
            CriterionKind::Entropy => "entropy",
            CriterionKind::Deviation => "deviation",
            CriterionKind::Random => "random",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    /// Selection budget; `None` means `max(100, n/10)` or `k_fraction`.
    pub k: Option<usize>,
    pub k_fraction: Option<f64>,
    pub bins: usize,
    pub criterion: CriterionKind,
    pub cf: CfConfig,
    pub consistency: ConsistencyConfig,
    pub tau: f64,
    /// `None` means 0.05 for graphs with `|E|/|V| >= 3`, else 0.1.
    pub lambda_u: Option<f64>,
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub val_fraction: f64,
    pub lr: f64,
    pub weight_decay: f64,
    pub hidden_dim: usize,
    pub embed_dim: usize,
    pub proj_hidden_dim: usize,
    /// `None` injects into synthetic graphs only.
    pub inject: Option<bool>,
    pub injection: InjectionConfig,
    pub positive: PositiveSource,
    pub negative: NegativeSource,
    pub baseline: BaselineConfig,
    pub synthetic: SyntheticConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainConfig {
            lambda_u: 0.0,
            ..TrainConfig::default()
        };
        let aug = Augmentation::default();
        Self {
            seed: 0,
            k: None,
            k_fraction: None,
            bins: 5,
            criterion: CriterionKind::Dual,
            cf: aug.cf,
            consistency: aug.consistency,
            tau: t.tau,
            lambda_u: None,
            max_epochs: t.max_epochs,
            patience: t.patience,
            batch_size: t.batch_size,
            val_fraction: t.val_fraction,
            lr: t.lr,
            weight_decay: t.weight_decay,
            hidden_dim: t.hidden_dim,
            embed_dim: t.embed_dim,
            proj_hidden_dim: t.proj_hidden_dim,
            inject: None,
            injection: InjectionConfig::default(),
            positive: aug.positive,
            negative: aug.negative,
            baseline: aug.baseline,
            synthetic: SyntheticConfig::default(),
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got {value:?}"))),
    }
}

fn parse_auto<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value == "auto" {
        Ok(None)
    } else {
        parse_num(key, value).map(Some)
    }
}

fn auto_str<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or("auto".into(), T::to_string)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", k + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    /// Applies one `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got {pair:?}")))?;
        self.set(key.trim(), value.trim())
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse_num(key, v)?,
            "k" => self.k = parse_auto(key, v)?,
            "k_fraction" => self.k_fraction = parse_auto(key, v)?,
            "bins" => self.bins = parse_num(key, v)?,
            "criterion" => {
                self.criterion = match v {
                    "dual" => CriterionKind::Dual,
                    "entropy" => CriterionKind::Entropy,
                    "deviation" => CriterionKind::Deviation,
                    "random" => CriterionKind::Random,
                    _ => return Err(Error::Config(format!("criterion: unknown value {v:?}"))),
                }
            }
            "gamma" => self.cf.gamma = parse_num(key, v)?,
            "beta" => self.cf.beta = parse_num(key, v)?,
            "max_step" => self.cf.max_step = parse_num(key, v)?,
            "max_retries" => self.cf.max_retries = parse_num(key, v)?,
            "edge_budget_remove" => self.cf.edge_budget_remove = parse_num(key, v)?,
            "edge_budget_add" => self.cf.edge_budget_add = parse_num(key, v)?,
            "degree_delta_max" => self.cf.degree_delta_max = parse_num(key, v)?,
            "exhaust_budget" => self.cf.exhaust_budget = parse_bool(key, v)?,
            "use_feature_cf" => self.cf.use_feature = parse_bool(key, v)?,
            "use_struct_cf" => self.cf.use_structural = parse_bool(key, v)?,
            "lambda_attr" => self.consistency.lambda_attr = parse_num(key, v)?,
            "lambda_struct" => self.consistency.lambda_struct = parse_num(key, v)?,
            "sim_threshold" => self.consistency.sim_threshold = parse_num(key, v)?,
            "delta" => self.consistency.delta = parse_num(key, v)?,
            "tau" => self.tau = parse_num(key, v)?,
            "lambda_u" => self.lambda_u = parse_auto(key, v)?,
            "max_epochs" => self.max_epochs = parse_num(key, v)?,
            "patience" => self.patience = parse_num(key, v)?,
            "batch_size" => self.batch_size = parse_num(key, v)?,
            "val_fraction" => self.val_fraction = parse_num(key, v)?,
            "lr" => self.lr = parse_num(key, v)?,
            "weight_decay" => self.weight_decay = parse_num(key, v)?,
            "hidden_dim" => self.hidden_dim = parse_num(key, v)?,
            "embed_dim" => self.embed_dim = parse_num(key, v)?,
            "proj_hidden_dim" => self.proj_hidden_dim = parse_num(key, v)?,
            "inject" => {
                self.inject = if v == "auto" {
                    None
                } else {
                    Some(parse_bool(key, v)?)
                }
            }
            "anomaly_ratio" => self.injection.anomaly_ratio = parse_num(key, v)?,
            "rewire_fraction" => self.injection.rewire_fraction = parse_num(key, v)?,
            "noise_std" => self.injection.noise_std = parse_num(key, v)?,
            "mask_fraction" => self.injection.mask_fraction = parse_num(key, v)?,
            "positive" => {
                self.positive = match v {
                    "cf" => PositiveSource::Counterfactual,
                    _ => PositiveSource::Baseline(
                        BaselineStrategy::parse(v)
                            .ok_or_else(|| Error::Config(format!("positive: unknown value {v:?}")))?,
                    ),
                }
            }
            "negative" => {
                self.negative = match v {
                    "cf" => NegativeSource::Counterfactual,
                    "in-batch" => NegativeSource::InBatchOnly,
                    _ => return Err(Error::Config(format!("negative: unknown value {v:?}"))),
                }
            }
            "baseline_edge_drop" => self.baseline.edge_drop = parse_num(key, v)?,
            "baseline_mask_fraction" => self.baseline.mask_fraction = parse_num(key, v)?,
            "baseline_noise_std" => self.baseline.noise_std = parse_num(key, v)?,
            "baseline_max_drop" => self.baseline.max_drop = parse_num(key, v)?,
            "synthetic_n" => self.synthetic.n = parse_num(key, v)?,
            "synthetic_d" => self.synthetic.d = parse_num(key, v)?,
            "synthetic_communities" => self.synthetic.communities = parse_num(key, v)?,
            "synthetic_avg_degree" => self.synthetic.avg_degree = parse_num(key, v)?,
            "synthetic_intra_fraction" => self.synthetic.intra_fraction = parse_num(key, v)?,
            "synthetic_feature_noise" => self.synthetic.feature_noise = parse_num(key, v)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Every key with its current value, one `key = value` per line.
    pub fn echo(&self) -> String {
        let positive = match &self.positive {
            PositiveSource::Counterfactual => "cf",
            PositiveSource::Baseline(s) => s.as_str(),
        };
        let negative = match self.negative {
            NegativeSource::Counterfactual => "cf",
            NegativeSource::InBatchOnly => "in-batch",
        };
        let entries: Vec<(&str, String)> = vec![
            ("seed", self.seed.to_string()),
            ("k", auto_str(&self.k)),
            ("k_fraction", auto_str(&self.k_fraction)),
            ("bins", self.bins.to_string()),
            ("criterion", self.criterion.as_str().into()),
            ("gamma", self.cf.gamma.to_string()),
            ("beta", self.cf.beta.to_string()),
            ("max_step", self.cf.max_step.to_string()),
            ("max_retries", self.cf.max_retries.to_string()),
            ("edge_budget_remove", self.cf.edge_budget_remove.to_string()),
            ("edge_budget_add", self.cf.edge_budget_add.to_string()),
            ("degree_delta_max", self.cf.degree_delta_max.to_string()),
            ("exhaust_budget", self.cf.exhaust_budget.to_string()),
            ("use_feature_cf", self.cf.use_feature.to_string()),
            ("use_struct_cf", self.cf.use_structural.to_string()),
            ("lambda_attr", self.consistency.lambda_attr.to_string()),
            ("lambda_struct", self.consistency.lambda_struct.to_string()),
            ("sim_threshold", self.consistency.sim_threshold.to_string()),
            ("delta", self.consistency.delta.to_string()),
            ("tau", self.tau.to_string()),
            ("lambda_u", auto_str(&self.lambda_u)),
            ("max_epochs", self.max_epochs.to_string()),
            ("patience", self.patience.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("val_fraction", self.val_fraction.to_string()),
            ("lr", self.lr.to_string()),
            ("weight_decay", self.weight_decay.to_string()),
            ("hidden_dim", self.hidden_dim.to_string()),
            ("embed_dim", self.embed_dim.to_string()),
            ("proj_hidden_dim", self.proj_hidden_dim.to_string()),
            ("inject", auto_str(&self.inject)),
            ("anomaly_ratio", self.injection.anomaly_ratio.to_string()),
            ("rewire_fraction", self.injection.rewire_fraction.to_string()),
            ("noise_std", self.injection.noise_std.to_string()),
            ("mask_fraction", self.injection.mask_fraction.to_string()),
            ("positive", positive.into()),
            ("negative", negative.into()),
            ("baseline_edge_drop", self.baseline.edge_drop.to_string()),
            ("baseline_mask_fraction", self.baseline.mask_fraction.to_string()),
            ("baseline_noise_std", self.baseline.noise_std.to_string()),
            ("baseline_max_drop", self.baseline.max_drop.to_string()),
            ("synthetic_n", self.synthetic.n.to_string()),
            ("synthetic_d", self.synthetic.d.to_string()),
            ("synthetic_communities", self.synthetic.communities.to_string()),
            ("synthetic_avg_degree", self.synthetic.avg_degree.to_string()),
            ("synthetic_intra_fraction", self.synthetic.intra_fraction.to_string()),
            ("synthetic_feature_noise", self.synthetic.feature_noise.to_string()),
        ];
        let mut out = String::new();
        for (k, v) in entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Copy with every graph-dependent default made explicit.
    pub fn resolve(&self, g: &AttributedGraph, synthetic_source: bool) -> Self {
        let mut r = self.clone();
        r.k = Some(self.selection(g).k);
        r.lambda_u = Some(self.train_config(g).lambda_u);
        r.inject = Some(self.inject.unwrap_or(synthetic_source));
        r
    }

    pub fn validate(&self) -> Result<()> {
        self.cf.validate()?;
        self.consistency.validate()?;
        if let Some(f) = self.k_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config("k_fraction must be in (0, 1]".into()));
            }
        }
        if self.k == Some(0) {
            return Err(Error::Config("k must be positive".into()));
        }
        if self.bins == 0 {
            return Err(Error::Config("bins must be positive".into()));
        }
        Ok(())
    }

    pub fn selection(&self, g: &AttributedGraph) -> SelectionConfig {
        let base = match self.k_fraction {
            Some(f) => SelectionConfig::with_fraction(g, f),
            None => SelectionConfig::for_graph(g),
        };
        SelectionConfig {
            k: self.k.map_or(base.k, |k| k.min(g.n())),
            bins: self.bins,
            criterion: match self.criterion {
                CriterionKind::Dual => Criterion::Dual,
                CriterionKind::Entropy => Criterion::EntropyOnly,
                CriterionKind::Deviation => Criterion::DeviationOnly,
                CriterionKind::Random => Criterion::Random { seed: self.seed },
            },
        }
    }

    pub fn train_config(&self, g: &AttributedGraph) -> TrainConfig {
        let auto = TrainConfig::for_graph(g, self.seed);
        TrainConfig {
            tau: self.tau,
            lambda_u: self.lambda_u.unwrap_or(auto.lambda_u),
            max_epochs: self.max_epochs,
            patience: self.patience,
            batch_size: self.batch_size,
            val_fraction: self.val_fraction,
            seed: self.seed,
            lr: self.lr,
            weight_decay: self.weight_decay,
            hidden_dim: self.hidden_dim,
            embed_dim: self.embed_dim,
            proj_hidden_dim: self.proj_hidden_dim,
        }
    }

    pub fn augmentation(&self) -> Augmentation {
        Augmentation {
            positive: self.positive.clone(),
            negative: self.negative,
            cf: self.cf.clone(),
            consistency: self.consistency.clone(),
            baseline: self.baseline.clone(),
        }
    }

    pub fn injection(&self) -> InjectionConfig {
        InjectionConfig {
            seed: self.seed,
            ..self.injection.clone()
        }
    }

    pub fn synthetic(&self) -> SyntheticConfig {
        SyntheticConfig {
            seed: self.seed,
            ..self.synthetic.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.set("tau", "0.25").unwrap();
        cfg.set("positive", "degree").unwrap();
        cfg.set("negative", "in-batch").unwrap();
        cfg.set("k", "37").unwrap();
        cfg.set("exhaust_budget", "true").unwrap();
        assert_eq!(RunConfig::parse(&cfg.echo()).unwrap(), cfg);
        assert_eq!(RunConfig::parse(&RunConfig::default().echo()).unwrap(), RunConfig::default());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(matches!(RunConfig::parse("tua = 0.1"), Err(Error::Config(m)) if m.contains("tua")));
        assert!(RunConfig::parse("tau 0.1").is_err());
        assert!(RunConfig::parse("max_epochs = -3").is_err());
        assert!(RunConfig::parse("inject = maybe").is_err());
        let cfg = RunConfig::parse("# comment\n\nseed = 7\n").unwrap();
        assert_eq!(cfg.seed, 7);
    }
}
