use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::RunConfig;
use crate::encoder::save_checkpoint;
use crate::error::{Error, Result};
use crate::graph::{load_graph_dir, zscore_features, AttributedGraph};
use crate::inject::{inject_anomalies, synthetic_graph};
use crate::score::AnomalyReport;
use crate::select::{select_subset, SelectedSubset};
use crate::train::{train, Trained};

pub const SELECTION_FILE: &str = "selection.csv";
pub const CHECKPOINT_FILE: &str = "model.txt";
pub const TRAIN_LOG_FILE: &str = "train_log.csv";
pub const SCORES_FILE: &str = "scores.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const CONFIG_ECHO_FILE: &str = "config.txt";

/// Where the input graph comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphSource {
    Dir(PathBuf),
    /// Planted-partition graph built from the config's `synthetic_*` keys
    /// and seed.
    Synthetic,
}

impl GraphSource {
    /// `synthetic` selects the generator; anything else is a directory.
    pub fn parse(s: &str) -> Self {
        if s == "synthetic" {
            GraphSource::Synthetic
        } else {
            GraphSource::Dir(PathBuf::from(s))
        }
    }
}

/// Loads or generates the graph, injects anomalies when configured, and
/// z-scores features. Also returns the config with graph-dependent
/// defaults resolved.
pub fn prepare_graph(cfg: &RunConfig, source: &GraphSource) -> Result<(AttributedGraph, RunConfig)> {
    cfg.validate()?;
    let (raw, synthetic) = match source {
        GraphSource::Dir(dir) => {
            let loaded = load_graph_dir(dir).map_err(|e| e.in_stage("load"))?;
            if loaded.self_loops_dropped > 0 {
                log::warn!("dropped {} self-loops", loaded.self_loops_dropped);
            }
            (loaded.graph, false)
        }
        GraphSource::Synthetic => (synthetic_graph(&cfg.synthetic()), true),
    };
    let resolved = cfg.resolve(&raw, synthetic);
    let injected = if resolved.inject == Some(true) {
        let inj = inject_anomalies(&raw, &resolved.injection()).map_err(|e| e.in_stage("inject"))?;
        if !inj.skipped.is_empty() {
            log::warn!("{} anomalies skipped rewiring", inj.skipped.len());
        }
        inj.graph
    } else {
        raw
    };
    Ok((zscore_features(&injected), resolved))
}

/// The synthetic benchmark: a 500-node planted-partition graph with 5%
/// injected anomalies, z-scored.
pub fn benchmark_graph(seed: u64) -> Result<AttributedGraph> {
    let cfg = RunConfig {
        seed,
        ..RunConfig::default()
    };
    Ok(prepare_graph(&cfg, &GraphSource::Synthetic)?.0)
}

#[derive(Debug, Clone)]
pub struct Fit {
    pub subset: SelectedSubset,
    pub trained: Trained,
    pub report: AnomalyReport,
}

/// Select, train and score on an already prepared graph.
pub fn fit(g: &AttributedGraph, cfg: &RunConfig) -> Result<Fit> {
    let subset = select_subset(g, &cfg.selection(g));
    if subset.is_empty() {
        return Err(Error::Config("empty selection".into()).in_stage("select"));
    }
    let trained = train(g, &subset, &cfg.train_config(g), &cfg.augmentation()).map_err(|e| e.in_stage("train"))?;
    let report = AnomalyReport::evaluate(g, &trained.params).map_err(|e| e.in_stage("score"))?;
    Ok(Fit {
        subset,
        trained,
        report,
    })
}

/// Contents of `metrics.json`; `auc` and `f1` are null without labels.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct Metrics {
    pub auc: Option<f64>,
    pub f1: Option<f64>,
    pub m: usize,
    pub n: usize,
    pub anomalies: Option<usize>,
}

impl Metrics {
    pub fn of(report: &AnomalyReport, labels: Option<&[bool]>) -> Self {
        Self {
            auc: report.auc,
            f1: report.f1,
            m: report.m,
            n: report.scores.len(),
            anomalies: labels.map(|l| l.iter().filter(|&&x| x).count()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain struct serializes") + "\n"
    }
}

/// One row per node; `provenance` is empty for unselected nodes.
pub fn selection_csv(s: &SelectedSubset) -> String {
    let mut tag = vec![""; s.entropy.len()];
    for (&i, p) in s.members.iter().zip(&s.provenance) {
        tag[i] = p.as_str();
    }
    let mut out = String::from("node_id,entropy,deviation,selected,provenance\n");
    for (i, t) in tag.iter().enumerate() {
        let _ = writeln!(
            out,
            "{i},{:e},{:e},{},{t}",
            s.entropy[i],
            s.deviation[i],
            u8::from(!t.is_empty())
        );
    }
    out
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub config: RunConfig,
    pub graph: AttributedGraph,
    pub fit: Fit,
    pub metrics: Metrics,
}

/// Writes `body` to `path`, creating parent directories.
pub fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

/// Runs load, inject, z-score, select, train, score and evaluate. When
/// `out` is given, writes the selection, checkpoint, training log, scores,
/// metrics and the effective config there.
pub fn run_pipeline(cfg: &RunConfig, source: &GraphSource, out: Option<&Path>) -> Result<PipelineRun> {
    let (g, resolved) = prepare_graph(cfg, source)?;
    let fit = fit(&g, &resolved)?;
    let metrics = Metrics::of(&fit.report, g.labels());
    if let Some(dir) = out {
        let write = |name: &str, body: &str| write_file(&dir.join(name), body).map_err(|e| e.in_stage("write"));
        write(CONFIG_ECHO_FILE, &resolved.echo())?;
        write(SELECTION_FILE, &selection_csv(&fit.subset))?;
        save_checkpoint(&fit.trained.params, &dir.join(CHECKPOINT_FILE)).map_err(|e| e.in_stage("write"))?;
        write(TRAIN_LOG_FILE, &fit.trained.log.to_csv())?;
        write(SCORES_FILE, &fit.report.to_csv())?;
        write(METRICS_FILE, &metrics.to_json())?;
    }
    Ok(PipelineRun {
        config: resolved,
        graph: g,
        fit,
        metrics,
    })
}

/// Reads the `score` column of a scores CSV, indexed by `node_id`.
pub fn read_scores(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, msg: &str| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    };
    let mut rows = Vec::new();
    for (k, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let id: usize = cols
            .next()
            .and_then(|c| c.trim().parse().ok())
            .ok_or_else(|| parse_err(k + 1, "bad node_id"))?;
        let score: f64 = cols
            .next()
            .and_then(|c| c.trim().parse().ok())
            .ok_or_else(|| parse_err(k + 1, "bad score"))?;
        rows.push((id, score));
    }
    let mut scores = vec![f64::NAN; rows.len()];
    for (id, s) in rows {
        if id >= scores.len() || !scores[id].is_nan() {
            return Err(Error::NodeOutOfRange { id, n: scores.len() });
        }
        scores[id] = s;
    }
    Ok(scores)
}
