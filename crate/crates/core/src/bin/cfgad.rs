use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cfgad::counterfactual::{generate_pairs, CfContext};
use cfgad::encoder::{load_checkpoint, save_checkpoint};
use cfgad::graph::{load_graph_dir, read_labels, save_graph_dir, AttributedGraph};
use cfgad::harness::{
    audit_csv, compare_ablations, efficiency_csv, oracle_audit, prepare_graph, quality_bench, quality_csv,
    read_scores, run_pipeline, selection_csv, write_file, CHECKPOINT_FILE, TRAIN_LOG_FILE, AuditConfig, AuditSummary, GraphSource, Metrics, RunConfig,
    Variant,
};
use cfgad::inject::{inject_anomalies, synthetic_graph};
use cfgad::quality::{efficiency_bench, EfficiencyStrategy};
use cfgad::score::AnomalyReport;
use cfgad::select::select_subset;
use cfgad::train::train;
use cfgad::Error;

#[derive(Parser)]
#[command(name = "cfgad", version, about = "Graph anomaly detection with counterfactual contrastive learning")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Default)]
struct Shared {
    /// Graph directory, or `synthetic` for the seeded generator.
    #[arg(long)]
    graph: Option<String>,
    /// Flat key = value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Config override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Inject labeled anomalies and write the graph files.
    Inject {
        #[command(flatten)]
        shared: Shared,
        /// Anomaly ratio; overrides the config.
        #[arg(long)]
        ratio: Option<f64>,
    },
    /// Score nodes for selection and write them as CSV.
    Select {
        #[command(flatten)]
        shared: Shared,
        /// Budget as a fraction of the nodes; overrides the config.
        #[arg(long)]
        k_frac: Option<f64>,
    },
    /// Select and train; writes the checkpoint and training log into --out.
    Train {
        #[command(flatten)]
        shared: Shared,
    },
    /// Score every node with a trained model.
    Score {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        model: PathBuf,
    },
    /// Compute AUC and F1 from a scores file and labels.
    Evaluate {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// Flag count; defaults to the anomaly count.
        #[arg(long)]
        m: Option<usize>,
    },
    /// Full pipeline; writes every artifact into the --out directory.
    Run {
        #[command(flatten)]
        shared: Shared,
    },
    /// Compare the heuristic generators with exhaustive search.
    Oracle {
        #[command(flatten)]
        shared: Shared,
        #[arg(long, default_value_t = 100)]
        subgraphs: usize,
        #[arg(long, default_value_t = 100)]
        max_nodes: usize,
    },
    /// Counterfactual quality metrics against the augmentation baselines.
    BenchQuality {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
    },
    /// Epoch time, memory and AUC of random, full and active training.
    BenchEfficiency {
        #[command(flatten)]
        shared: Shared,
    },
    /// Train ablation variants over several seeds.
    Ablate {
        #[command(flatten)]
        shared: Shared,
        /// Comma-separated variant names, `k-sweep` or `all`.
        #[arg(long, default_value = "all")]
        variants: String,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
    },
}

impl Cmd {
    fn shared(&self) -> &Shared {
        match self {
            Cmd::Inject { shared, .. }
            | Cmd::Select { shared, .. }
            | Cmd::Train { shared }
            | Cmd::Score { shared, .. }
            | Cmd::Evaluate { shared, .. }
            | Cmd::Run { shared }
            | Cmd::Oracle { shared, .. }
            | Cmd::BenchQuality { shared, .. }
            | Cmd::BenchEfficiency { shared }
            | Cmd::Ablate { shared, .. } => shared,
        }
    }
}

type Res<T> = Result<T, Error>;

fn config(s: &Shared) -> Res<RunConfig> {
    let mut cfg = match &s.config {
        Some(p) => RunConfig::parse(&fs::read_to_string(p).map_err(|e| Error::Io {
            path: p.clone(),
            source: e,
        })?)?,
        None => RunConfig::default(),
    };
    for pair in &s.set {
        cfg.set_pair(pair)?;
    }
    if let Some(seed) = s.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn source(s: &Shared) -> Res<GraphSource> {
    s.graph
        .as_deref()
        .map(GraphSource::parse)
        .ok_or_else(|| Error::Config("--graph is required".into()))
}

fn out_path(s: &Shared) -> Res<&Path> {
    s.out
        .as_deref()
        .ok_or_else(|| Error::Config("--out is required".into()))
}

/// Writes to `--out` when given, otherwise to stdout.
fn emit(s: &Shared, body: &str) -> Res<()> {
    match &s.out {
        Some(p) => write_file(p, body),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn prepared(s: &Shared) -> Res<(AttributedGraph, RunConfig)> {
    prepare_graph(&config(s)?, &source(s)?)
}

fn execute(cmd: &Cmd) -> Res<()> {
    match cmd {
        Cmd::Inject { shared, ratio } => {
            let mut cfg = config(shared)?;
            if let Some(r) = ratio {
                cfg.injection.anomaly_ratio = *r;
            }
            let raw = match source(shared)? {
                GraphSource::Dir(dir) => load_graph_dir(&dir).map_err(|e| e.in_stage("load"))?.graph,
                GraphSource::Synthetic => synthetic_graph(&cfg.synthetic()),
            };
            let inj = inject_anomalies(&raw, &cfg.injection()).map_err(|e| e.in_stage("inject"))?;
            save_graph_dir(&inj.graph, out_path(shared)?)?;
            eprintln!(
                "injected {} structural and {} attribute anomalies ({} skipped rewiring)",
                inj.structural.len(),
                inj.attribute.len(),
                inj.skipped.len()
            );
        }
        Cmd::Select { shared, k_frac } => {
            let mut cfg = config(shared)?;
            if let Some(f) = k_frac {
                cfg.k = None;
                cfg.k_fraction = Some(*f);
            }
            let (g, cfg) = prepare_graph(&cfg, &source(shared)?)?;
            let s = select_subset(&g, &cfg.selection(&g));
            emit(shared, &selection_csv(&s))?;
            eprintln!("selected {} of {} nodes", s.len(), g.n());
        }
        Cmd::Train { shared } => {
            let (g, cfg) = prepared(shared)?;
            let s = select_subset(&g, &cfg.selection(&g));
            let t = train(&g, &s, &cfg.train_config(&g), &cfg.augmentation()).map_err(|e| e.in_stage("train"))?;
            let dir = out_path(shared)?;
            save_checkpoint(&t.params, &dir.join(CHECKPOINT_FILE))?;
            write_file(&dir.join(TRAIN_LOG_FILE), &t.log.to_csv())?;
            eprintln!("trained {} epochs, best epoch {}", t.log.epochs.len(), t.log.best_epoch);
        }
        Cmd::Score { shared, model } => {
            let (g, _) = prepared(shared)?;
            let params = load_checkpoint(model).map_err(|e| e.in_stage("load model"))?;
            let report = AnomalyReport::evaluate(&g, &params).map_err(|e| e.in_stage("score"))?;
            emit(shared, &report.to_csv())?;
            if let Some(auc) = report.auc {
                eprintln!("auc {auc:.4}");
            }
        }
        Cmd::Evaluate { shared, scores, labels, m } => {
            let scores = read_scores(scores)?;
            let labels = read_labels(labels)?;
            if labels.len() != scores.len() {
                return Err(Error::RowCountMismatch {
                    what: "labels",
                    found: labels.len(),
                    expected: scores.len(),
                });
            }
            let report = AnomalyReport::from_scores(scores, Some(&labels), *m)?;
            emit(shared, &Metrics::of(&report, Some(&labels)).to_json())?;
        }
        Cmd::Run { shared } => {
            let run = run_pipeline(&config(shared)?, &source(shared)?, shared.out.as_deref())?;
            eprint!("{}", run.metrics.to_json());
        }
        Cmd::Oracle {
            shared,
            subgraphs,
            max_nodes,
        } => {
            let (g, cfg) = prepared(shared)?;
            let acfg = AuditConfig {
                samples: *subgraphs,
                max_nodes: *max_nodes,
                seed: cfg.seed,
                ..AuditConfig::default()
            };
            let rows = oracle_audit(&g, &acfg, &cfg.cf, &cfg.consistency);
            emit(shared, &audit_csv(&rows))?;
            let s = AuditSummary::of(&rows);
            eprintln!(
                "structural ratio mean {:?} median {:?}; feature success greedy {:.3} oracle {:.3}",
                s.mean_ratio(),
                s.median_ratio(),
                s.feature_greedy_success,
                s.feature_oracle_success
            );
        }
        Cmd::BenchQuality { shared, model, seeds } => {
            let (g, cfg) = prepared(shared)?;
            let params = load_checkpoint(model).map_err(|e| e.in_stage("load model"))?;
            let s = select_subset(&g, &cfg.selection(&g));
            let pairs = generate_pairs(&g, &CfContext::new(&g), &s.members, &cfg.cf, &cfg.consistency);
            let seeds: Vec<u64> = (0..*seeds).collect();
            emit(shared, &quality_csv(&quality_bench(&g, &params, &pairs, &seeds, &cfg.baseline)?))?;
        }
        Cmd::BenchEfficiency { shared } => {
            let (g, cfg) = prepared(shared)?;
            let s = select_subset(&g, &cfg.selection(&g));
            let rows = efficiency_bench(
                &g,
                &s,
                &cfg.train_config(&g),
                &cfg.augmentation(),
                &EfficiencyStrategy::ALL,
            )?;
            emit(shared, &efficiency_csv(&rows))?;
        }
        Cmd::Ablate {
            shared,
            variants,
            seeds,
        } => {
            let mut vs = Vec::new();
            for name in variants.split(',').map(str::trim).filter(|n| !n.is_empty()) {
                vs.extend(Variant::parse(name)?);
            }
            let base = config(shared)?;
            let seeds: Vec<u64> = (0..*seeds).map(|k| base.seed + k).collect();
            let table = compare_ablations(&base, &source(shared)?, &vs, &seeds)?;
            emit(shared, &table.to_csv())?;
        }
    }
    Ok(())
}

fn graph_missing(e: &Error) -> bool {
    match e {
        Error::GraphNotFound(_) => true,
        Error::Stage { source, .. } => graph_missing(source),
        _ => false,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.cmd.shared().threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match execute(&cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if graph_missing(&e) { 2 } else { 1 })
        }
    }
}
