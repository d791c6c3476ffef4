//! Normalized-cuts spectral clustering of the similarity matrix, and an
//! incremental variant that only relabels points touched by uncertain points.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::kmeans::{constrained_lloyd, kmeans};

/// Row-normalized eigenvector coordinates, one row per point.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEmbedding {
    pub coords: DMatrix<f64>,
    /// The `C` smallest eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Points whose eigenvector row was numerically zero and was left unnormalized.
    pub zero_rows: Vec<usize>,
}

/// Rows with a smaller norm than this are treated as exactly zero.
const ZERO_ROW_NORM: f64 = 1e-12;

/// `I - D^{-1/2} W D^{-1/2}`. Zero-degree vertices keep an identity row.
pub fn normalized_laplacian(w: &DMatrix<f64>) -> DMatrix<f64> {
    let n = w.nrows();
    let inv_sqrt: Vec<f64> = w
        .row_iter()
        .map(|row| {
            let d: f64 = row.iter().sum();
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            let scaled = -(w[(i, j)] * (inv_sqrt[i] * inv_sqrt[j]));
            l[(i, j)] = if i == j { 1.0 + scaled } else { scaled };
        }
    }
    l
}

/// Eigenvectors of the `clusters` smallest eigenvalues of the symmetric
/// matrix `l`, stacked as columns, then row-normalized.
pub fn spectral_embed(l: &DMatrix<f64>, clusters: usize) -> Result<SpectralEmbedding> {
    let n = l.nrows();
    if clusters == 0 || clusters > n {
        return Err(Error::InvalidClusterCount { clusters, points: n });
    }
    let eig = SymmetricEigen::try_new(l.clone(), f64::EPSILON, 0).ok_or(Error::EigenFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    order.truncate(clusters);

    let mut coords = DMatrix::zeros(n, clusters);
    for (c, &idx) in order.iter().enumerate() {
        coords.set_column(c, &eig.eigenvectors.column(idx));
    }
    let mut zero_rows = Vec::new();
    for i in 0..n {
        let nrm = coords.row(i).norm();
        if nrm < ZERO_ROW_NORM {
            coords.row_mut(i).fill(0.0);
            zero_rows.push(i);
        } else {
            coords.row_mut(i).unscale_mut(nrm);
        }
    }
    Ok(SpectralEmbedding {
        coords,
        eigenvalues: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        zero_rows,
    })
}

/// Laplacian, embedding and k-means in one call.
pub fn cluster_full(zbar: &DMatrix<f64>, clusters: usize, seed: u64, restarts: usize) -> Result<Vec<usize>> {
    let embedding = spectral_embed(&normalized_laplacian(zbar), clusters)?;
    Ok(kmeans(&embedding.coords, clusters, seed, restarts).labels)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncrementalOutcome {
    pub labels: Vec<usize>,
    /// Size of the relabeled set (uncertain points and their neighbours).
    pub affected: usize,
    /// Set when some cluster had no fixed point and full clustering was used.
    pub fell_back: bool,
}

/// Uncertain points plus every point sharing a nonzero similarity with one.
pub fn affected_set(zbar: &DMatrix<f64>, uncertain: &[usize]) -> Vec<bool> {
    let n = zbar.nrows();
    let mut affected = vec![false; n];
    for &i in uncertain {
        affected[i] = true;
        for (j, &v) in zbar.column(i).iter().enumerate() {
            if v != 0.0 {
                affected[j] = true;
            }
        }
    }
    affected
}

/// Relabels only the affected set. Points outside it keep `prev_labels`;
/// affected points are reassigned by constrained Lloyd iterations on the
/// full embedding with centroids anchored by the fixed points.
pub fn cluster_incremental(
    zbar: &DMatrix<f64>,
    prev_labels: &[usize],
    uncertain: &[usize],
    clusters: usize,
    seed: u64,
    restarts: usize,
) -> Result<IncrementalOutcome> {
    let n = zbar.nrows();
    if prev_labels.len() != n {
        return Err(Error::Shape(format!(
            "{} previous labels for {n} points",
            prev_labels.len()
        )));
    }
    if let Some(&bad) = prev_labels.iter().find(|&&l| l >= clusters) {
        return Err(Error::InvalidParam(format!(
            "label {bad} out of range for {clusters} clusters"
        )));
    }
    if let Some(&bad) = uncertain.iter().find(|&&i| i >= n) {
        return Err(Error::InvalidParam(format!("uncertain index {bad} out of range")));
    }
    if uncertain.is_empty() {
        return Ok(IncrementalOutcome {
            labels: prev_labels.to_vec(),
            affected: 0,
            fell_back: false,
        });
    }
    let affected = affected_set(zbar, uncertain);
    let affected_count = affected.iter().filter(|&&a| a).count();
    let embedding = spectral_embed(&normalized_laplacian(zbar), clusters)?;
    match constrained_lloyd(&embedding.coords, prev_labels, &affected, clusters) {
        Some(labels) => Ok(IncrementalOutcome {
            labels,
            affected: affected_count,
            fell_back: false,
        }),
        None => Ok(IncrementalOutcome {
            labels: kmeans(&embedding.coords, clusters, seed, restarts).labels,
            affected: affected_count,
            fell_back: true,
        }),
    }
}
