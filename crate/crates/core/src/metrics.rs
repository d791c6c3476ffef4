//! Misclassification under the best label matching, and subspace sparse
//! recovery error.

use nalgebra::DMatrix;
use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;

use crate::error::{Error, Result};

/// `counts[(p, t)]` = number of points predicted `p` whose true label is `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<i64>>,
}

impl ConfusionMatrix {
    pub fn new(pred: &[usize], truth: &[usize], clusters: usize) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::Shape(format!(
                "{} predicted labels vs {} true labels",
                pred.len(),
                truth.len()
            )));
        }
        let mut counts = vec![vec![0i64; clusters]; clusters];
        for (&p, &t) in pred.iter().zip(truth) {
            if p >= clusters || t >= clusters {
                return Err(Error::InvalidParam(format!(
                    "label {} out of range for {clusters} clusters",
                    p.max(t)
                )));
            }
            counts[p][t] += 1;
        }
        Ok(Self { counts })
    }

    pub fn total(&self) -> i64 {
        self.counts.iter().flatten().sum()
    }
}

/// Permutation `perm` with `perm[p] = t` maximizing the number of points
/// whose predicted label `p` maps to their true label. Also returns that
/// agreement count.
pub fn best_label_matching(pred: &[usize], truth: &[usize], clusters: usize) -> Result<(Vec<usize>, usize)> {
    let confusion = ConfusionMatrix::new(pred, truth, clusters)?;
    if clusters == 0 {
        return Ok((Vec::new(), 0));
    }
    let weights = Matrix::from_rows(confusion.counts).expect("square confusion matrix");
    let (agreement, perm) = kuhn_munkres(&weights);
    Ok((perm, agreement as usize))
}

/// Fraction of points misclassified under the best label matching.
pub fn misclassification(pred: &[usize], truth: &[usize], clusters: usize) -> Result<f64> {
    if pred.is_empty() {
        return Err(Error::Shape("no labels".into()));
    }
    let (_, agreement) = best_label_matching(pred, truth, clusters)?;
    Ok((pred.len() - agreement) as f64 / pred.len() as f64)
}

/// `1 - mean_i |z_i restricted to i's true cluster|_1 / |z_i|_1`, where
/// `z_i` is column `i` of `Z`. Columns with no mass count as fully wrong.
pub fn ssr_error(z: &DMatrix<f64>, truth: &[usize], clusters: usize) -> Result<f64> {
    let n = z.ncols();
    if z.nrows() != n || truth.len() != n {
        return Err(Error::Shape(format!(
            "coefficients {:?} vs {} labels",
            z.shape(),
            truth.len()
        )));
    }
    if n == 0 {
        return Err(Error::Shape("no points".into()));
    }
    if let Some(&bad) = truth.iter().find(|&&l| l >= clusters) {
        return Err(Error::InvalidParam(format!(
            "label {bad} out of range for {clusters} clusters"
        )));
    }
    let mut recovered = 0.0;
    for i in 0..n {
        let mut inside = 0.0;
        let mut total = 0.0;
        for (j, &v) in z.column(i).iter().enumerate() {
            total += v.abs();
            if truth[j] == truth[i] {
                inside += v.abs();
            }
        }
        if total > 0.0 {
            recovered += inside / total;
        }
    }
    Ok(1.0 - recovered / n as f64)
}
