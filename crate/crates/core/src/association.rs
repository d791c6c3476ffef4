//! Degree-of-association probabilities, the delayed-association threshold,
//! the certain/uncertain soft assignment and the association matrix.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{argmax_row, AssociationMatrix, SoftAssignment};

/// `P` together with the points whose similarity column had no mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Probabilities {
    pub p: DMatrix<f64>,
    pub zero_mass: Vec<usize>,
}

/// `p_ik` is the share of point `i`'s similarity mass that falls on points
/// currently labeled `k`. A point with an all-zero column gets the uniform
/// row `1/C` and is listed in `zero_mass`.
pub fn compute_probabilities(zbar: &DMatrix<f64>, labels: &[usize], clusters: usize) -> Result<Probabilities> {
    let n = zbar.ncols();
    if labels.len() != n {
        return Err(Error::Shape(format!("{} labels for {n} points", labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= clusters) {
        return Err(Error::InvalidParam(format!(
            "label {bad} out of range for {clusters} clusters"
        )));
    }
    let mut p = DMatrix::zeros(n, clusters);
    let mut zero_mass = Vec::new();
    let mut sums = vec![0.0; clusters];
    for i in 0..n {
        sums.fill(0.0);
        for (j, &v) in zbar.column(i).iter().enumerate() {
            sums[labels[j]] += v.abs();
        }
        // Total as the sum of the per-cluster sums, so a fully contained
        // column yields exactly 1.
        let total: f64 = sums.iter().sum();
        if total > 0.0 {
            for (k, &s) in sums.iter().enumerate() {
                p[(i, k)] = s / total;
            }
        } else {
            p.row_mut(i).fill(1.0 / clusters as f64);
            zero_mass.push(i);
        }
    }
    Ok(Probabilities { p, zero_mass })
}

/// `M = P^T P`.
pub fn affinity(p: &DMatrix<f64>) -> DMatrix<f64> {
    p.transpose() * p
}

/// `Omega = 1 - sum_{k != l} M_kl / ((C - 1) sum_k M_kk)` with `M = P^T P`.
///
/// Lies in `[0, 1]` whenever the rows of `P` sum to one; the result is
/// clamped there to absorb round-off.
pub fn compute_omega(p: &DMatrix<f64>) -> Result<f64> {
    let clusters = p.ncols();
    if clusters < 2 {
        return Err(Error::InvalidClusterCount {
            clusters,
            points: p.nrows(),
        });
    }
    let m = affinity(p);
    let mut diag = 0.0;
    let mut off = 0.0;
    for l in 0..clusters {
        for k in 0..clusters {
            if k == l {
                diag += m[(k, l)];
            } else {
                off += m[(k, l)];
            }
        }
    }
    if diag <= 0.0 {
        return Err(Error::DegenerateAffinity);
    }
    Ok((1.0 - off / ((clusters - 1) as f64 * diag)).clamp(0.0, 1.0))
}

/// Splits points by `max_k p_ik >= omega`: certain points get a one-hot row
/// at their most probable cluster (lowest index on ties), uncertain points
/// keep their probability row.
pub fn build_soft_assignment(p: &DMatrix<f64>, omega: f64) -> SoftAssignment {
    let (n, clusters) = p.shape();
    let mut phi = DMatrix::zeros(n, clusters);
    let mut certain = vec![false; n];
    for i in 0..n {
        let best = argmax_row(p, i);
        if p[(i, best)] >= omega {
            certain[i] = true;
            phi[(i, best)] = 1.0;
        } else {
            phi.set_row(i, &p.row(i));
        }
    }
    let kappa = certain.iter().filter(|&&c| !c).count();
    SoftAssignment {
        phi,
        certain,
        probabilities: p.clone(),
        omega,
        kappa,
    }
}

/// `A = Phi Phi^T`, filled pairwise so it is exactly symmetric.
pub fn build_association(assignment: &SoftAssignment) -> AssociationMatrix {
    let phi = &assignment.phi;
    let n = phi.nrows();
    let mut a = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let v = phi.row(i).dot(&phi.row(j));
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    AssociationMatrix { a }
}
