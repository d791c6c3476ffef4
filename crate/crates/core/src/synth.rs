//! Random unions of intersecting linear subspaces.
//!
//! The first subspace is spanned by an orthonormalized Gaussian `n x d`
//! matrix. Every further subspace shares the first `s` basis vectors of the
//! first one and completes them with `d - s` fresh random directions
//! orthogonalized against that shared block, so all bases are orthonormal
//! and every pairwise intersection has dimension exactly `s` (generically).

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::DataMatrix;
use crate::rng::rng_from;

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceModel {
    pub clusters: usize,
    pub ambient_dim: usize,
    pub dim: usize,
    pub intersection: usize,
    pub points_per_subspace: usize,
    /// One orthonormal `n x d` basis per subspace.
    pub bases: Vec<DMatrix<f64>>,
}

fn gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn orthonormalize(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

/// Removes the component of `m` lying in the span of the orthonormal `basis`.
fn project_out(m: &DMatrix<f64>, basis: &DMatrix<f64>) -> DMatrix<f64> {
    m - basis * (basis.transpose() * m)
}

pub fn generate_subspaces(
    clusters: usize,
    ambient_dim: usize,
    dim: usize,
    intersection: usize,
    points_per_subspace: usize,
    seed: u64,
) -> Result<SubspaceModel> {
    if clusters < 2 {
        return Err(Error::Dimension(format!("need at least 2 subspaces, got {clusters}")));
    }
    if !(intersection < dim && dim <= ambient_dim) {
        return Err(Error::Dimension(format!(
            "need s < d <= n, got s={intersection}, d={dim}, n={ambient_dim}"
        )));
    }
    if dim == 0 || points_per_subspace == 0 {
        return Err(Error::Dimension(
            "subspace dimension and point count must be positive".into(),
        ));
    }
    let fresh = dim - intersection;
    let needed = intersection + clusters * fresh;
    if needed > ambient_dim {
        return Err(Error::Dimension(format!(
            "{clusters} subspaces of dimension {dim} sharing {intersection} directions need n >= {needed}"
        )));
    }

    let mut rng = rng_from(seed, &[]);
    let first = orthonormalize(gaussian(ambient_dim, dim, &mut rng));
    let shared = first.columns(0, intersection).into_owned();
    let mut bases = vec![first];
    for _ in 1..clusters {
        let raw = gaussian(ambient_dim, fresh, &mut rng);
        // Two rounds of projection keep the fresh block orthogonal to the
        // shared one to working precision.
        let mut own = orthonormalize(project_out(&raw, &shared));
        own = orthonormalize(project_out(&own, &shared));
        let mut basis = DMatrix::zeros(ambient_dim, dim);
        basis.columns_mut(0, intersection).copy_from(&shared);
        basis.columns_mut(intersection, fresh).copy_from(&own);
        bases.push(basis);
    }
    Ok(SubspaceModel {
        clusters,
        ambient_dim,
        dim,
        intersection,
        points_per_subspace,
        bases,
    })
}

/// Draws `points_per_subspace` unit vectors uniformly from each subspace's
/// unit sphere. Columns are grouped by subspace; the second value holds the
/// matching labels.
pub fn sample_points(model: &SubspaceModel, seed: u64) -> Result<(DataMatrix, Vec<usize>)> {
    let mut rng = rng_from(seed, &[]);
    let total = model.clusters * model.points_per_subspace;
    let mut values = DMatrix::zeros(model.ambient_dim, total);
    let mut labels = Vec::with_capacity(total);
    for (j, basis) in model.bases.iter().enumerate() {
        for p in 0..model.points_per_subspace {
            let coeffs = gaussian(model.dim, 1, &mut rng);
            let mut x = basis * coeffs;
            let nrm = x.norm();
            x /= nrm;
            values.set_column(j * model.points_per_subspace + p, &x.column(0));
            labels.push(j);
        }
    }
    Ok((DataMatrix::new(values)?, labels))
}

/// Intersection dimension for a ratio `s/d`, rounded to the nearest integer.
pub fn intersection_for_ratio(dim: usize, ratio: f64) -> usize {
    (ratio * dim as f64).round() as usize
}
