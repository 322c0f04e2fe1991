//! Unsupervised graph anomaly detection with active counterfactual
//! contrastive learning.
//!
//! The pipeline selects a small informative subset of nodes, generates
//! counterfactual positive and negative views for them, trains a two-layer
//! GCN encoder with an InfoNCE objective, and scores every node by the
//! distance between its embedding and its neighbors' mean embedding.
//!
//! ```no_run
//! use cfgad::prelude::*;
//!
//! let clean = synthetic_graph(&SyntheticConfig::default());
//! let g = inject_anomalies(&clean, &InjectionConfig::default())?.graph;
//! let g = zscore_features(&g);
//! let subset = select_subset(&g, &SelectionConfig::for_graph(&g));
//! let trained = train(&g, &subset, &TrainConfig::for_graph(&g, 0), &Augmentation::default())?;
//! let report = AnomalyReport::evaluate(&g, &trained.params)?;
//! println!("auc = {:?}", report.auc);
//! # Ok::<(), cfgad::Error>(())
//! ```

pub mod counterfactual;
pub mod encoder;
pub mod error;
pub mod graph;
pub mod harness;
pub mod inject;
pub mod linalg;
pub mod quality;
pub mod score;
pub mod seed;
pub mod select;
pub mod train;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::counterfactual::{
        consistency_score, generate_pair, CfConfig, CfContext, ConsistencyConfig,
        CounterfactualPair, EditSet, Polarity,
    };
    pub use crate::encoder::{embed_all, EmbeddingSet, ModelParams, View, ViewOverride};
    pub use crate::error::{Error, Result};
    pub use crate::harness::{benchmark_graph, run_pipeline, GraphSource, RunConfig};
    pub use crate::graph::{load_graph_dir, save_graph_dir, zscore_features, AttributedGraph};
    pub use crate::inject::{
        inject_anomalies, perturb_graph, synthetic_graph, InjectionConfig, PerturbationConfig,
        SyntheticConfig,
    };
    pub use crate::linalg::Matrix;
    pub use crate::score::{anomaly_scores, auc_roc, f1_at_m, AnomalyReport};
    pub use crate::select::{select_subset, SelectedSubset, SelectionConfig};
    pub use crate::train::{train, Augmentation, TrainConfig, Trained};
}
