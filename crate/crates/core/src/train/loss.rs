use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};

/// Gradients of [`info_nce`] with respect to each input row.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoNceGrads {
    pub anchors: Matrix,
    pub positives: Matrix,
    pub negatives: Matrix,
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Summed InfoNCE over anchors. Each anchor contrasts its positive against
/// every other anchor in the batch and, when `has_negative[i]` is set, its
/// own counterfactual negative. Rows of `negatives` without a flag are
/// ignored and receive zero gradient.
pub fn info_nce(
    anchors: &Matrix,
    positives: &Matrix,
    negatives: &Matrix,
    has_negative: &[bool],
    tau: f64,
) -> Result<(f64, InfoNceGrads)> {
    let b = anchors.rows();
    if b == 0 {
        return Err(Error::Shape("info_nce needs at least one anchor".into()));
    }
    if positives.shape() != anchors.shape() || negatives.shape() != anchors.shape() || has_negative.len() != b {
        return Err(Error::Shape("info_nce inputs disagree in shape".into()));
    }
    let e = anchors.cols();
    let mut grads = InfoNceGrads {
        anchors: Matrix::zeros(b, e),
        positives: Matrix::zeros(b, e),
        negatives: Matrix::zeros(b, e),
    };
    let mut total = 0.0;
    let mut logits = Vec::with_capacity(b + 1);
    for i in 0..b {
        let a = anchors.row(i);
        // Logit order: positive, other anchors ascending, negative.
        logits.clear();
        logits.push(dot(a, positives.row(i)) / tau);
        for j in (0..b).filter(|&j| j != i) {
            logits.push(dot(a, anchors.row(j)) / tau);
        }
        if has_negative[i] {
            logits.push(dot(a, negatives.row(i)) / tau);
        }
        let lse = log_sum_exp(&logits);
        total += lse - logits[0];

        let w: Vec<f64> = logits.iter().map(|l| (l - lse).exp()).collect();
        let mut ga = vec![0.0; e];
        let c0 = (w[0] - 1.0) / tau;
        for (g, p) in ga.iter_mut().zip(positives.row(i)) {
            *g += c0 * p;
        }
        for (g, x) in grads.positives.row_mut(i).iter_mut().zip(a) {
            *g += c0 * x;
        }
        for (k, j) in (0..b).filter(|&j| j != i).enumerate() {
            let c = w[k + 1] / tau;
            for (g, x) in ga.iter_mut().zip(anchors.row(j)) {
                *g += c * x;
            }
            for (g, x) in grads.anchors.row_mut(j).iter_mut().zip(a) {
                *g += c * x;
            }
        }
        if has_negative[i] {
            let c = w[w.len() - 1] / tau;
            for (g, x) in ga.iter_mut().zip(negatives.row(i)) {
                *g += c * x;
            }
            for (g, x) in grads.negatives.row_mut(i).iter_mut().zip(a) {
                *g += c * x;
            }
        }
        for (g, x) in grads.anchors.row_mut(i).iter_mut().zip(&ga) {
            *g += x;
        }
    }
    Ok((total, grads))
}

/// The value of [`info_nce`] without gradients; inputs are assumed valid.
pub(crate) fn info_nce_value(anchors: &Matrix, positives: &Matrix, negatives: &Matrix, has_negative: &[bool], tau: f64) -> f64 {
    let b = anchors.rows();
    let mut total = 0.0;
    let mut logits = Vec::with_capacity(b + 1);
    for i in 0..b {
        let a = anchors.row(i);
        logits.clear();
        logits.push(dot(a, positives.row(i)) / tau);
        for j in (0..b).filter(|&j| j != i) {
            logits.push(dot(a, anchors.row(j)) / tau);
        }
        if has_negative[i] {
            logits.push(dot(a, negatives.row(i)) / tau);
        }
        total += log_sum_exp(&logits) - logits[0];
    }
    total
}

/// The value of [`uniformity`] without gradients, for two or more rows.
pub(crate) fn uniformity_value(z: &Matrix) -> f64 {
    let n = z.rows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d2: f64 = z.row(i).iter().zip(z.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            sum += 2.0 * (-2.0 * d2).exp();
        }
    }
    (sum / (n * (n - 1)) as f64).ln()
}

/// `log mean_{i != j} exp(-2 |z_i - z_j|^2)` over ordered pairs, with its
/// gradient.
pub fn uniformity(z: &Matrix) -> Result<(f64, Matrix)> {
    let n = z.rows();
    if n < 2 {
        return Err(Error::Shape("uniformity needs at least two embeddings".into()));
    }
    let mut k = Matrix::zeros(n, n);
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d2: f64 = z.row(i).iter().zip(z.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            let v = (-2.0 * d2).exp();
            k.set(i, j, v);
            k.set(j, i, v);
            sum += 2.0 * v;
        }
    }
    let loss = (sum / (n * (n - 1)) as f64).ln();
    let mut grad = Matrix::zeros(n, z.cols());
    for i in 0..n {
        let gi = grad.row_mut(i);
        for j in (0..n).filter(|&j| j != i) {
            let c = -8.0 * k.get(i, j) / sum;
            for ((g, a), b) in gi.iter_mut().zip(z.row(i)).zip(z.row(j)) {
                *g += c * (a - b);
            }
        }
    }
    Ok((loss, grad))
}

pub fn total_loss(contrastive: f64, uniformity: f64, lambda_u: f64) -> f64 {
    contrastive + lambda_u * uniformity
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::seed::{self, Stage};
    use rand::Rng;

    /// Direct evaluation with explicit exponentials and no stabilization.
    pub(crate) fn naive_info_nce(a: &Matrix, p: &Matrix, n: &Matrix, has: &[bool], tau: f64) -> f64 {
        let mut total = 0.0;
        for i in 0..a.rows() {
            let s = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(u, v)| u * v).sum::<f64>() / tau;
            let pos = s(a.row(i), p.row(i));
            let mut denom = pos.exp();
            for j in 0..a.rows() {
                if j != i {
                    denom += s(a.row(i), a.row(j)).exp();
                }
            }
            if has[i] {
                denom += s(a.row(i), n.row(i)).exp();
            }
            total += -pos + denom.ln();
        }
        total
    }

    pub(crate) fn naive_uniformity(z: &Matrix) -> f64 {
        let n = z.rows();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let d2: f64 = z.row(i).iter().zip(z.row(j)).map(|(a, b)| (a - b).powi(2)).sum();
                    acc += (-2.0 * d2).exp();
                }
            }
        }
        (acc / (n * (n - 1)) as f64).ln()
    }

    pub(crate) fn random_unit_rows(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
        let mut m = Matrix::zeros(rows, cols);
        for r in 0..rows {
            let row: Vec<f64> = (0..cols).map(|_| rng.random_range(-1.0..1.0)).collect();
            let len = crate::linalg::norm(&row);
            m.row_mut(r).copy_from_slice(&row.iter().map(|v| v / len).collect::<Vec<_>>());
        }
        m
    }

    #[test]
    fn hand_example() {
        let a = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let p = a.clone();
        let n = Matrix::from_rows(&[vec![-1.0, 0.0], vec![0.0, 0.0]]);
        // Two orthogonal anchors; only the first has a negative, at -z.
        let (loss, _) = info_nce(&a, &p, &n, &[true, false], 1.0).unwrap();
        let first = -1.0 + (1f64.exp() + 1.0 + (-1f64).exp()).ln();
        let second = -1.0 + (1f64.exp() + 1.0).ln();
        assert!((loss - first - second).abs() < 1e-12);
        assert!((first - 0.4077).abs() < 1e-4);
    }

    #[test]
    fn single_anchor_without_negative_is_zero() {
        let a = Matrix::from_rows(&[vec![0.6, 0.8]]);
        let (loss, g) = info_nce(&a, &a, &Matrix::zeros(1, 2), &[false], 0.1).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.anchors.as_slice().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn uniformity_cases() {
        let same = Matrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]);
        assert_eq!(uniformity(&same).unwrap().0, 0.0);
        let unit = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]);
        assert!((uniformity(&unit).unwrap().0 + 2.0).abs() < 1e-15);
        let anti = Matrix::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0]]);
        assert!((uniformity(&anti).unwrap().0 + 8.0).abs() < 1e-15);
        assert!(uniformity(&Matrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn total_arithmetic() {
        assert_eq!(total_loss(1.5, -3.0, 0.0), 1.5);
        assert!((total_loss(0.0, -2.0, 0.1) + 0.2).abs() < 1e-15);
    }

    #[test]
    fn empty_batch_is_error() {
        let m = Matrix::zeros(0, 2);
        assert!(info_nce(&m, &m, &m, &[], 0.1).is_err());
    }

    #[test]
    fn matches_naive_and_finite_differences() {
        let mut rng = seed::rng(11, Stage::Sample, 0, 0);
        for trial in 0..20 {
            let b = 1 + trial % 5;
            let a = random_unit_rows(&mut rng, b, 4);
            let p = random_unit_rows(&mut rng, b, 4);
            let n = random_unit_rows(&mut rng, b, 4);
            let has: Vec<bool> = (0..b).map(|_| rng.random_bool(0.5)).collect();
            let (loss, g) = info_nce(&a, &p, &n, &has, 0.5).unwrap();
            assert!((loss - naive_info_nce(&a, &p, &n, &has, 0.5)).abs() < 1e-10);
            assert_eq!(loss, info_nce_value(&a, &p, &n, &has, 0.5));
            let h = 1e-6;
            for (which, grad) in [(0, &g.anchors), (1, &g.positives), (2, &g.negatives)] {
                for idx in 0..a.as_slice().len() {
                    let eval = |delta: f64| {
                        let (mut a2, mut p2, mut n2) = (a.clone(), p.clone(), n.clone());
                        let m = [&mut a2, &mut p2, &mut n2][which].as_mut_slice();
                        m[idx] += delta;
                        naive_info_nce(&a2, &p2, &n2, &has, 0.5)
                    };
                    let fd = (eval(h) - eval(-h)) / (2.0 * h);
                    assert!((fd - grad.as_slice()[idx]).abs() < 1e-6);
                }
            }
            if b >= 2 {
                let (u, gu) = uniformity(&a).unwrap();
                assert!((u - naive_uniformity(&a)).abs() < 1e-10);
                assert_eq!(u, uniformity_value(&a));
                for idx in 0..a.as_slice().len() {
                    let eval = |delta: f64| {
                        let mut a2 = a.clone();
                        a2.as_mut_slice()[idx] += delta;
                        naive_uniformity(&a2)
                    };
                    let fd = (eval(h) - eval(-h)) / (2.0 * h);
                    assert!((fd - gu.as_slice()[idx]).abs() < 1e-6);
                }
            }
        }
    }
}
