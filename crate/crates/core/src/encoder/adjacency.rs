use crate::graph::AttributedGraph;
use crate::linalg::Matrix;

/// Sparse `D^-1/2 (A + I) D^-1/2`, row-major with the diagonal entry stored
/// alongside the neighbor entries.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<f64>,
}

pub fn normalize_adjacency(g: &AttributedGraph) -> NormalizedAdjacency {
    let inv_sqrt: Vec<f64> = (0..g.n())
        .map(|i| 1.0 / ((g.degree(i) + 1) as f64).sqrt())
        .collect();
    let mut offsets = Vec::with_capacity(g.n() + 1);
    let mut cols = Vec::with_capacity(2 * g.num_edges() + g.n());
    let mut weights = Vec::with_capacity(cols.capacity());
    offsets.push(0);
    for i in 0..g.n() {
        let nb = g.neighbors(i);
        let split = nb.partition_point(|&j| j < i);
        for &j in nb[..split].iter().chain(std::iter::once(&i)).chain(&nb[split..]) {
            cols.push(j);
            weights.push(inv_sqrt[i] * inv_sqrt[j]);
        }
        offsets.push(cols.len());
    }
    NormalizedAdjacency {
        offsets,
        cols,
        weights,
    }
}

impl NormalizedAdjacency {
    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Nonzero entries `(column, weight)` of row `i`, ascending by column.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.weights[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, w)| w)
    }

    /// `Â M`.
    pub fn left_mul(&self, m: &Matrix) -> Matrix {
        assert_eq!(m.rows(), self.n());
        let mut out = Matrix::zeros(m.rows(), m.cols());
        for i in 0..self.n() {
            let dst = out.row_mut(i);
            for (j, w) in self.row(i) {
                for (o, v) in dst.iter_mut().zip(m.row(j)) {
                    *o += w * v;
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> Matrix {
        let mut out = Matrix::zeros(self.n(), self.n());
        for i in 0..self.n() {
            for (j, w) in self.row(i) {
                out.set(i, j, w);
            }
        }
        out
    }
}
