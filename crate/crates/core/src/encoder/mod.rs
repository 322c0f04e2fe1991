//! Two-layer GCN encoder with a two-layer projection head.
//!
//! Embeddings for a single node are computed on its 2-hop receptive field,
//! which makes per-node counterfactual views cheap: the node's feature row
//! and incident edges are substituted and only the affected normalization
//! coefficients are recomputed. [`embed_all`] runs the same network over the
//! whole graph with sparse products and is what scoring uses.

mod adam;
mod adjacency;
mod checkpoint;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use adjacency::{normalize_adjacency, NormalizedAdjacency};
pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC};

use rayon::prelude::*;

use crate::counterfactual::EditSet;
use crate::error::{Error, Result};
use crate::graph::AttributedGraph;
use crate::linalg::{dot, norm, Matrix};
use crate::seed::{self, Stage};

pub const HIDDEN_DIM: usize = 64;
pub const EMBED_DIM: usize = 32;
pub const PROJ_HIDDEN_DIM: usize = 64;

/// Encoder and projection weights plus optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// `d x hidden`
    pub w0: Matrix,
    /// `hidden x embed`
    pub w1: Matrix,
    /// `embed x proj_hidden`
    pub wp1: Matrix,
    /// `proj_hidden x embed`
    pub wp2: Matrix,
    pub adam: AdamState,
}

impl ModelParams {
    /// Standard dimensions (`d x 64`, `64 x 32`, `32 x 64`, `64 x 32`).
    pub fn new(d: usize, seed: u64) -> Self {
        Self::with_dims(d, HIDDEN_DIM, EMBED_DIM, PROJ_HIDDEN_DIM, seed)
    }

    pub fn with_dims(d: usize, hidden: usize, embed: usize, proj_hidden: usize, seed: u64) -> Self {
        let mut rng = seed::rng(seed, Stage::Init, 0, 0);
        let w0 = Matrix::glorot(d, hidden, &mut rng);
        let w1 = Matrix::glorot(hidden, embed, &mut rng);
        let wp1 = Matrix::glorot(embed, proj_hidden, &mut rng);
        let wp2 = Matrix::glorot(proj_hidden, embed, &mut rng);
        Self::from_weights(w0, w1, wp1, wp2).expect("consistent shapes")
    }

    pub fn from_weights(w0: Matrix, w1: Matrix, wp1: Matrix, wp2: Matrix) -> Result<Self> {
        if w0.cols() != w1.rows() || w1.cols() != wp1.rows() || wp1.cols() != wp2.rows() || wp2.cols() != w1.cols() {
            return Err(Error::Shape(format!(
                "incompatible weights {:?} {:?} {:?} {:?}",
                w0.shape(),
                w1.shape(),
                wp1.shape(),
                wp2.shape()
            )));
        }
        let adam = AdamState::for_shapes(&[w0.shape(), w1.shape(), wp1.shape(), wp2.shape()]);
        Ok(Self {
            w0,
            w1,
            wp1,
            wp2,
            adam,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.w0.rows()
    }

    pub fn embed_dim(&self) -> usize {
        self.wp2.cols()
    }

    pub fn weights(&self) -> [&Matrix; 4] {
        [&self.w0, &self.w1, &self.wp1, &self.wp2]
    }

    pub fn weights_mut(&mut self) -> [&mut Matrix; 4] {
        [&mut self.w0, &mut self.w1, &mut self.wp1, &mut self.wp2]
    }

    pub fn is_finite(&self) -> bool {
        self.weights().iter().all(|w| w.is_finite())
    }

    fn check_input(&self, g: &AttributedGraph) -> Result<()> {
        if g.d() != self.input_dim() {
            return Err(Error::Shape(format!(
                "graph has {} feature columns, model expects {}",
                g.d(),
                self.input_dim()
            )));
        }
        Ok(())
    }
}

/// Gradients with the same shapes as the four weight matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w0: Matrix,
    pub w1: Matrix,
    pub wp1: Matrix,
    pub wp2: Matrix,
}

impl Gradients {
    pub fn zeros_like(p: &ModelParams) -> Self {
        let z = |m: &Matrix| Matrix::zeros(m.rows(), m.cols());
        Self {
            w0: z(&p.w0),
            w1: z(&p.w1),
            wp1: z(&p.wp1),
            wp2: z(&p.wp2),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        self.w0.add_assign(&other.w0);
        self.w1.add_assign(&other.w1);
        self.wp1.add_assign(&other.wp1);
        self.wp2.add_assign(&other.wp2);
    }

    pub fn tensors(&self) -> [&Matrix; 4] {
        [&self.w0, &self.w1, &self.wp1, &self.wp2]
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|m| m.is_finite())
    }
}

/// Substitutions applied to one node before encoding it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ViewOverride {
    pub features: Option<Vec<f64>>,
    pub edits: EditSet,
}

/// A node to encode, optionally with its own feature row and incident
/// edges replaced.
#[derive(Debug, Clone, Copy)]
pub struct View<'a> {
    pub node: usize,
    pub features: Option<&'a [f64]>,
    pub edits: Option<&'a EditSet>,
}

impl<'a> View<'a> {
    pub fn anchor(node: usize) -> Self {
        Self {
            node,
            features: None,
            edits: None,
        }
    }

    pub fn with_override(node: usize, o: &'a ViewOverride) -> Self {
        Self {
            node,
            features: o.features.as_deref(),
            edits: Some(&o.edits),
        }
    }
}

/// ℓ2-normalized projection outputs, one row per requested view.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    pub nodes: Vec<usize>,
    pub z: Matrix,
    /// Rows whose projection output was exactly zero; those rows are zero.
    pub degenerate: Vec<bool>,
}

impl EmbeddingSet {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        self.z.row(k)
    }
}

/// Intermediates of one local forward pass.
#[derive(Debug, Clone)]
struct LocalCache {
    /// Aggregation coefficients `Â'[i, u]` for each 1-hop member `u`.
    coef: Vec<f64>,
    /// `(Â' X')[u]` per member.
    p: Matrix,
    /// Pre-activation of layer one per member.
    a1: Matrix,
    /// Aggregated hidden vector `(Â' H1)[i]`.
    q: Vec<f64>,
    /// Encoder output.
    emb: Vec<f64>,
    /// Projection pre-activation.
    a2: Vec<f64>,
    /// Unnormalized projection output norm.
    h_norm: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    entries: Vec<Option<LocalCache>>,
}

impl ForwardCache {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Neighborhood of the target and its neighbors after substitution.
struct LocalGraph<'a> {
    g: &'a AttributedGraph,
    target: usize,
    features: Option<&'a [f64]>,
    edits: Option<&'a EditSet>,
    target_nbrs: Vec<usize>,
}

impl<'a> LocalGraph<'a> {
    fn new(g: &'a AttributedGraph, view: &View<'a>) -> Self {
        let target_nbrs = match view.edits {
            Some(e) => e.apply(g.neighbors(view.node)),
            None => g.neighbors(view.node).to_vec(),
        };
        Self {
            g,
            target: view.node,
            features: view.features,
            edits: view.edits,
            target_nbrs,
        }
    }

    fn feature(&self, w: usize) -> &[f64] {
        match self.features {
            Some(x) if w == self.target => x,
            _ => self.g.feature(w),
        }
    }

    /// Degree including the self-loop.
    fn tilde_degree(&self, w: usize) -> f64 {
        if w == self.target {
            return (self.target_nbrs.len() + 1) as f64;
        }
        let mut d = self.g.degree(w) as isize + 1;
        if let Some(e) = self.edits {
            if e.adds.binary_search(&w).is_ok() && !self.g.has_edge(self.target, w) {
                d += 1;
            }
            if e.removes.binary_search(&w).is_ok() && self.g.has_edge(self.target, w) {
                d -= 1;
            }
        }
        d as f64
    }

    /// `(Â' X')[u]` for `u` in the target's closed neighborhood.
    fn aggregate(&self, u: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let du = self.tilde_degree(u);
        let mut add = |w: usize| {
            let c = 1.0 / (du * self.tilde_degree(w)).sqrt();
            for (o, v) in out.iter_mut().zip(self.feature(w)) {
                *o += c * v;
            }
        };
        if u == self.target {
            add(u);
            for &w in &self.target_nbrs {
                add(w);
            }
            return;
        }
        add(u);
        let mut saw_target = false;
        for &w in self.g.neighbors(u) {
            if w == self.target {
                saw_target = true;
            }
            add(w);
        }
        // `u` is a post-edit neighbor of the target, so the edge exists.
        if !saw_target {
            add(self.target);
        }
    }

    fn members(&self) -> Vec<usize> {
        let mut m = Vec::with_capacity(self.target_nbrs.len() + 1);
        m.push(self.target);
        m.extend_from_slice(&self.target_nbrs);
        m
    }
}

fn project(params: &ModelParams, emb: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let a2 = params.wp1.vec_mul(emb);
    let r: Vec<f64> = a2.iter().map(|&v| v.max(0.0)).collect();
    let h = params.wp2.vec_mul(&r);
    (a2, h)
}

fn normalize(h: Vec<f64>) -> (Vec<f64>, f64, bool) {
    let len = norm(&h);
    if len == 0.0 {
        (h, 0.0, true)
    } else {
        (h.into_iter().map(|v| v / len).collect(), len, false)
    }
}

fn local_forward(g: &AttributedGraph, params: &ModelParams, view: &View) -> (Vec<f64>, bool, LocalCache) {
    let lg = LocalGraph::new(g, view);
    let members = lg.members();
    let hidden = params.w0.cols();
    let mut p = Matrix::zeros(members.len(), g.d());
    let mut a1 = Matrix::zeros(members.len(), hidden);
    let mut coef = Vec::with_capacity(members.len());
    let mut q = vec![0.0; hidden];
    let di = lg.tilde_degree(view.node);
    for (k, &u) in members.iter().enumerate() {
        lg.aggregate(u, p.row_mut(k));
        params.w0.vec_mul_into(p.row(k), a1.row_mut(k));
        let c = 1.0 / (di * lg.tilde_degree(u)).sqrt();
        for (acc, &v) in q.iter_mut().zip(a1.row(k)) {
            *acc += c * v.max(0.0);
        }
        coef.push(c);
    }
    let emb = params.w1.vec_mul(&q);
    let (a2, h) = project(params, &emb);
    let (z, h_norm, degenerate) = normalize(h);
    let cache = LocalCache {
        coef,
        p,
        a1,
        q,
        emb,
        a2,
        h_norm,
    };
    (z, degenerate, cache)
}

/// Encodes each view on its local receptive field. Rows follow `views`.
pub fn forward(
    g: &AttributedGraph,
    params: &ModelParams,
    views: &[View],
    keep_cache: bool,
) -> Result<(EmbeddingSet, ForwardCache)> {
    params.check_input(g)?;
    for v in views {
        if v.node >= g.n() {
            return Err(Error::NodeOutOfRange { id: v.node, n: g.n() });
        }
        if let Some(x) = v.features {
            if x.len() != g.d() {
                return Err(Error::Shape(format!("override for node {} has length {}", v.node, x.len())));
            }
        }
    }
    let outs: Vec<_> = views.par_iter().with_min_len(8).map(|v| local_forward(g, params, v)).collect();
    let e = params.embed_dim();
    let mut z = Matrix::zeros(views.len(), e);
    let mut degenerate = Vec::with_capacity(views.len());
    let mut entries = Vec::with_capacity(views.len());
    for (k, (row, deg, cache)) in outs.into_iter().enumerate() {
        z.row_mut(k).copy_from_slice(&row);
        degenerate.push(deg);
        entries.push(keep_cache.then_some(cache));
    }
    let set = EmbeddingSet {
        nodes: views.iter().map(|v| v.node).collect(),
        z,
        degenerate,
    };
    Ok((set, ForwardCache { entries }))
}

/// Convenience wrapper: embeddings only.
pub fn embed(g: &AttributedGraph, params: &ModelParams, views: &[View]) -> Result<EmbeddingSet> {
    forward(g, params, views, false).map(|(e, _)| e)
}

fn local_backward(params: &ModelParams, c: &LocalCache, gz: &[f64], out: &mut Gradients) {
    if c.h_norm == 0.0 || gz.iter().all(|&v| v == 0.0) {
        return;
    }
    // Through normalization: dz/dh = (I - z z^T) / |h|.
    let r: Vec<f64> = c.a2.iter().map(|&v| v.max(0.0)).collect();
    let h = params.wp2.vec_mul(&r);
    let z: Vec<f64> = h.iter().map(|v| v / c.h_norm).collect();
    let zg = dot(&z, gz);
    let gh: Vec<f64> = gz.iter().zip(&z).map(|(g, zi)| (g - zi * zg) / c.h_norm).collect();

    out.wp2.add_outer(&r, &gh, 1.0);
    let gr = params.wp2.mul_vec(&gh);
    let ga2: Vec<f64> = gr.iter().zip(&c.a2).map(|(g, &a)| if a > 0.0 { *g } else { 0.0 }).collect();
    out.wp1.add_outer(&c.emb, &ga2, 1.0);
    let gemb = params.wp1.mul_vec(&ga2);

    out.w1.add_outer(&c.q, &gemb, 1.0);
    let gq = params.w1.mul_vec(&gemb);
    for (k, &coef) in c.coef.iter().enumerate() {
        let ga1: Vec<f64> = gq
            .iter()
            .zip(c.a1.row(k))
            .map(|(g, &a)| if a > 0.0 { coef * g } else { 0.0 })
            .collect();
        out.w0.add_outer(c.p.row(k), &ga1, 1.0);
    }
}

const BACKWARD_CHUNK: usize = 64;

/// Parameter gradients given the loss gradient with respect to each
/// emitted embedding row. Accumulation order is fixed, so the result does
/// not depend on the thread count.
pub fn backward(params: &ModelParams, cache: &ForwardCache, grad_z: &Matrix) -> Result<Gradients> {
    if grad_z.rows() != cache.len() || grad_z.cols() != params.embed_dim() {
        return Err(Error::Shape(format!(
            "gradient is {:?}, expected ({}, {})",
            grad_z.shape(),
            cache.len(),
            params.embed_dim()
        )));
    }
    for (k, e) in cache.entries.iter().enumerate() {
        if e.is_none() && grad_z.row(k).iter().any(|&v| v != 0.0) {
            return Err(Error::MissingCache(k));
        }
    }
    let partials: Vec<Gradients> = (0..cache.len())
        .collect::<Vec<_>>()
        .par_chunks(BACKWARD_CHUNK)
        .map(|chunk| {
            let mut acc = Gradients::zeros_like(params);
            for &k in chunk {
                if let Some(c) = &cache.entries[k] {
                    local_backward(params, c, grad_z.row(k), &mut acc);
                }
            }
            acc
        })
        .collect();
    let mut total = Gradients::zeros_like(params);
    for p in &partials {
        total.add_assign(p);
    }
    Ok(total)
}

/// Encodes every node of the unmodified graph with sparse whole-graph
/// products.
pub fn embed_all(g: &AttributedGraph, params: &ModelParams) -> Result<EmbeddingSet> {
    params.check_input(g)?;
    let a = normalize_adjacency(g);
    let mut h1 = a.left_mul(g.features()).matmul(&params.w0);
    h1.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
    let emb = a.left_mul(&h1).matmul(&params.w1);
    let rows: Vec<(Vec<f64>, bool)> = (0..g.n())
        .into_par_iter()
        .map(|i| {
            let (_, h) = project(params, emb.row(i));
            let (z, _, deg) = normalize(h);
            (z, deg)
        })
        .collect();
    let mut z = Matrix::zeros(g.n(), params.embed_dim());
    let mut degenerate = Vec::with_capacity(g.n());
    for (i, (row, deg)) in rows.into_iter().enumerate() {
        z.row_mut(i).copy_from_slice(&row);
        degenerate.push(deg);
    }
    Ok(EmbeddingSet {
        nodes: (0..g.n()).collect(),
        z,
        degenerate,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::counterfactual::EditSet;
    use crate::inject::{synthetic_graph, SyntheticConfig};
    use proptest::prelude::*;

    /// Whole-graph dense reference: every product is a dense matrix product.
    pub(crate) fn dense_reference(g: &AttributedGraph, params: &ModelParams) -> Matrix {
        let n = g.n();
        let mut a = Matrix::zeros(n, n);
        let deg: Vec<f64> = (0..n).map(|i| (g.degree(i) + 1) as f64).collect();
        for i in 0..n {
            a.set(i, i, 1.0 / deg[i]);
            for &j in g.neighbors(i) {
                a.set(i, j, 1.0 / (deg[i] * deg[j]).sqrt());
            }
        }
        let relu = |mut m: Matrix| {
            m.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
            m
        };
        let h1 = relu(a.matmul(g.features()).matmul(&params.w0));
        let z = a.matmul(&h1).matmul(&params.w1);
        let h = relu(z.matmul(&params.wp1)).matmul(&params.wp2);
        let mut out = Matrix::zeros(n, h.cols());
        for i in 0..n {
            let len = norm(h.row(i));
            for (o, v) in out.row_mut(i).iter_mut().zip(h.row(i)) {
                *o = if len > 0.0 { v / len } else { 0.0 };
            }
        }
        out
    }

    /// Materializes the graph with one node's view applied.
    pub(crate) fn apply_view(g: &AttributedGraph, view: &View) -> AttributedGraph {
        let i = view.node;
        let mut adj = g.adjacency_lists();
        if let Some(e) = view.edits {
            let new_nbrs = e.apply(g.neighbors(i));
            for &j in g.neighbors(i) {
                adj[j].retain(|&v| v != i);
            }
            for &j in &new_nbrs {
                adj[j].push(i);
            }
            adj[i] = new_nbrs;
        }
        let mut features = g.features().clone();
        if let Some(x) = view.features {
            features.row_mut(i).copy_from_slice(x);
        }
        let edges: Vec<(usize, usize)> = adj
            .iter()
            .enumerate()
            .flat_map(|(a, l)| l.iter().map(move |&b| (a, b)))
            .collect();
        AttributedGraph::from_edges(features, &edges, None).unwrap().0
    }

    pub(crate) fn small_graph(n: usize, d: usize, seed: u64) -> AttributedGraph {
        crate::graph::zscore_features(&synthetic_graph(&SyntheticConfig {
            n,
            d,
            communities: 2,
            avg_degree: 3.0,
            seed,
            ..Default::default()
        }))
    }

    #[test]
    fn global_matches_dense_reference() {
        let g = small_graph(40, 6, 1);
        let p = ModelParams::new(6, 3);
        let fast = embed_all(&g, &p).unwrap();
        let dense = dense_reference(&g, &p);
        for (a, b) in fast.z.as_slice().iter().zip(dense.as_slice()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn local_matches_global() {
        let g = small_graph(40, 6, 2);
        let p = ModelParams::new(6, 4);
        let views: Vec<View> = (0..g.n()).map(View::anchor).collect();
        let local = embed(&g, &p, &views).unwrap();
        let global = embed_all(&g, &p).unwrap();
        for (a, b) in local.z.as_slice().iter().zip(global.z.as_slice()) {
            assert!((a - b).abs() < 1e-10);
        }
        for i in 0..g.n() {
            if !local.degenerate[i] {
                assert!((norm(local.row(i)) - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn noop_override_matches_anchor() {
        let g = small_graph(30, 5, 3);
        let p = ModelParams::new(5, 1);
        let empty = EditSet::default();
        let x = g.feature(4).to_vec();
        let views = [
            View::anchor(4),
            View {
                node: 4,
                features: Some(&x),
                edits: Some(&empty),
            },
        ];
        let e = embed(&g, &p, &views).unwrap();
        for (a, b) in e.row(0).iter().zip(e.row(1)) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_weights_flag_degenerate() {
        let g = small_graph(20, 4, 1);
        let mut p = ModelParams::with_dims(4, 8, 4, 8, 0);
        for w in p.weights_mut() {
            w.fill(0.0);
        }
        let e = embed_all(&g, &p).unwrap();
        assert!(e.degenerate.iter().all(|&d| d));
        assert!(e.z.as_slice().iter().all(|&v| v == 0.0));
        let (_, cache) = forward(&g, &p, &[View::anchor(0)], true).unwrap();
        let grads = backward(&p, &cache, &Matrix::from_rows(&[vec![1.0; 4]])).unwrap();
        assert!(grads.tensors().iter().all(|m| m.frobenius_norm() == 0.0));
    }

    #[test]
    fn shape_and_cache_errors() {
        let g = small_graph(20, 4, 1);
        let p = ModelParams::new(5, 0);
        assert!(matches!(embed_all(&g, &p), Err(Error::Shape(_))));
        let p = ModelParams::new(4, 0);
        let (_, cache) = forward(&g, &p, &[View::anchor(0)], false).unwrap();
        let gz = Matrix::from_rows(&[vec![1.0; EMBED_DIM]]);
        assert!(matches!(backward(&p, &cache, &gz), Err(Error::MissingCache(0))));
        let zero = Matrix::zeros(1, EMBED_DIM);
        assert!(backward(&p, &cache, &zero).is_ok());
    }

    fn random_view_override(g: &AttributedGraph, i: usize, seed: u64) -> ViewOverride {
        use rand::Rng;
        let mut rng = seed::rng(seed, Stage::Sample, i as u64, 0);
        let features = g.feature(i).iter().map(|v| v + rng.random_range(-0.3..0.3)).collect();
        let removes: Vec<usize> = g.neighbors(i).iter().copied().take(1).collect();
        let adds: Vec<usize> = crate::graph::two_hop_neighbors(g, i).into_iter().take(2).collect();
        let edits = if g.degree(i) > 1 { EditSet::new(adds, removes) } else { EditSet::new(adds, vec![]) };
        ViewOverride {
            features: Some(features),
            edits,
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn local_override_matches_materialized_graph(seed in 0u64..10_000, node in 0usize..30) {
            let g = small_graph(30, 5, seed);
            let p = ModelParams::with_dims(5, 8, 6, 8, seed);
            let o = random_view_override(&g, node, seed);
            let view = View::with_override(node, &o);
            let local = embed(&g, &p, &[view]).unwrap();
            let reference = dense_reference(&apply_view(&g, &view), &p);
            for (a, b) in local.row(0).iter().zip(reference.row(node)) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
    }
}
