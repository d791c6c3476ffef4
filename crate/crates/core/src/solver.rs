//! Association-weighted sparse self-representation.
//!
//! Column `i` of `Z` minimizes
//!
//! ```text
//! lambda0 * |z|_1 + 1/2 |x_i - X z|^2 + lambda1 * sum_j w_j^2 z_j^2,   z_i = 0
//! ```
//!
//! with `w_j = 1 - a_ij`. Each column is a weighted elastic net, solved by
//! cyclic coordinate descent with exact coordinate minimizers. The solver
//! works in Gram form (`G = X^T X`) and keeps `q = G z` up to date, so
//! visiting a coordinate whose value does not change costs O(1).

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{AssociationMatrix, CoefficientState, DataMatrix, HyperParams};

/// `lambda0 = mu / alpha`, where `mu = min_i max_{j != i} |x_i^T x_j|`.
///
/// `mu` is the smallest "best correlation" any point has with the rest of
/// the dataset, i.e. the largest `lambda0` at which no column is forced to
/// zero. Fails with [`Error::DegenerateScale`] when some point is orthogonal
/// to every other point.
pub fn compute_lambda0(x: &DataMatrix, alpha: f64) -> Result<f64> {
    let gram = x.values().transpose() * x.values();
    lambda0_from_gram(&gram, alpha)
}

fn lambda0_from_gram(gram: &DMatrix<f64>, alpha: f64) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParam(format!("alpha must be positive, got {alpha}")));
    }
    let n = gram.ncols();
    let mut mu = f64::INFINITY;
    for i in 0..n {
        let best = (0..n)
            .filter(|&j| j != i)
            .map(|j| gram[(j, i)].abs())
            .fold(0.0, f64::max);
        mu = mu.min(best);
    }
    if mu <= 0.0 {
        return Err(Error::DegenerateScale);
    }
    Ok(mu / alpha)
}

#[inline]
pub fn soft_threshold(v: f64, threshold: f64) -> f64 {
    if v > threshold {
        v - threshold
    } else if v < -threshold {
        v + threshold
    } else {
        0.0
    }
}

/// Exact minimizer of the objective along one coordinate, given the partial
/// residual correlation `rho`.
#[inline]
pub fn coordinate_update(rho: f64, col_sq_norm: f64, weight: f64, lambda0: f64, lambda1: f64) -> f64 {
    soft_threshold(rho, lambda0) / (col_sq_norm + 2.0 * lambda1 * weight * weight)
}

/// A dataset together with its Gram matrix.
#[derive(Debug, Clone)]
pub struct Dictionary<'a> {
    x: &'a DataMatrix,
    gram: DMatrix<f64>,
}

impl<'a> Dictionary<'a> {
    pub fn new(x: &'a DataMatrix) -> Self {
        let gram = x.values().transpose() * x.values();
        Self { x, gram }
    }

    pub fn data(&self) -> &'a DataMatrix {
        self.x
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn num_points(&self) -> usize {
        self.gram.ncols()
    }
}

/// One column subproblem.
#[derive(Debug, Clone, Copy)]
pub struct ColumnProblem<'d, 'a> {
    pub dictionary: &'d Dictionary<'a>,
    /// The point being represented; its own coefficient is pinned to zero.
    pub excluded_index: usize,
    /// `1 - a_ij` per point, in `[0, 1]`.
    pub weights: &'d [f64],
    pub lambda0: f64,
    pub lambda1: f64,
}

impl ColumnProblem<'_, '_> {
    /// `lambda0 |z|_1 + 1/2 |x_i - X z|^2 + lambda1 sum_j w_j^2 z_j^2`.
    pub fn objective(&self, z: &[f64]) -> f64 {
        let x = self.dictionary.data().values();
        let mut residual: DVector<f64> = x.column(self.excluded_index).into_owned();
        for (j, &zj) in z.iter().enumerate() {
            if zj != 0.0 {
                residual.axpy(-zj, &x.column(j), 1.0);
            }
        }
        let l1: f64 = z.iter().map(|v| v.abs()).sum();
        let ridge: f64 = z.iter().zip(self.weights).map(|(zj, wj)| wj * wj * zj * zj).sum();
        self.lambda0 * l1 + 0.5 * residual.norm_squared() + self.lambda1 * ridge
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSolution {
    pub z: Vec<f64>,
    pub sweeps: usize,
    /// False when `max_sweeps` ran out before the change fell below `tol`.
    pub converged: bool,
}

/// Coordinate descent from zero.
pub fn solve_column(problem: &ColumnProblem, tol: f64, max_sweeps: usize) -> ColumnSolution {
    let init = vec![0.0; problem.dictionary.num_points()];
    solve_column_from(problem, init, tol, max_sweeps)
}

/// Coordinate descent from `init`. Stops once the largest coordinate change
/// in a sweep is at most `tol`.
pub fn solve_column_from(problem: &ColumnProblem, mut z: Vec<f64>, tol: f64, max_sweeps: usize) -> ColumnSolution {
    let gram = problem.dictionary.gram();
    let n = gram.ncols();
    let i = problem.excluded_index;
    assert_eq!(z.len(), n, "initial coefficient vector has wrong length");
    assert_eq!(problem.weights.len(), n, "weight vector has wrong length");
    z[i] = 0.0;

    // q = G z
    let mut q = vec![0.0; n];
    for (k, &zk) in z.iter().enumerate() {
        if zk != 0.0 {
            for (qj, gjk) in q.iter_mut().zip(gram.column(k).iter()) {
                *qj += gjk * zk;
            }
        }
    }

    let target = gram.column(i);
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut max_change = 0.0f64;
        for j in 0..n {
            if j == i {
                continue;
            }
            let gjj = gram[(j, j)];
            let old = z[j];
            let rho = target[j] - (q[j] - gjj * old);
            let new = coordinate_update(rho, gjj, problem.weights[j], problem.lambda0, problem.lambda1);
            let delta = new - old;
            if delta != 0.0 {
                z[j] = new;
                for (qk, gkj) in q.iter_mut().zip(gram.column(j).iter()) {
                    *qk += gkj * delta;
                }
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change <= tol {
            converged = true;
            break;
        }
    }
    ColumnSolution { z, sweeps, converged }
}

/// Aggregate diagnostics of a full self-representation solve.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveReport {
    /// Columns that hit the sweep limit.
    pub not_converged: usize,
    pub max_sweeps_used: usize,
}

/// Solves every column of the self-representation problem for a fixed
/// association matrix.
#[derive(Debug, Clone)]
pub struct RepresentationSolver<'a> {
    dictionary: Dictionary<'a>,
    pub lambda0: f64,
    pub lambda1: f64,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl<'a> RepresentationSolver<'a> {
    /// Sets `lambda0` from the data via [`compute_lambda0`] and
    /// `lambda1 = lambda0 / lambda_ratio`.
    pub fn new(x: &'a DataMatrix, params: &HyperParams) -> Result<Self> {
        params.validate()?;
        let dictionary = Dictionary::new(x);
        let lambda0 = lambda0_from_gram(dictionary.gram(), params.alpha)?;
        Ok(Self {
            dictionary,
            lambda0,
            lambda1: lambda0 / params.lambda_ratio,
            tol: params.solver_tol,
            max_sweeps: params.solver_max_sweeps,
        })
    }

    pub fn with_lambdas(x: &'a DataMatrix, lambda0: f64, lambda1: f64, tol: f64, max_sweeps: usize) -> Self {
        Self {
            dictionary: Dictionary::new(x),
            lambda0,
            lambda1,
            tol,
            max_sweeps,
        }
    }

    pub fn dictionary(&self) -> &Dictionary<'a> {
        &self.dictionary
    }

    /// Solves all `N` columns. `warm_start`, when given, seeds each column
    /// with the previous coefficients. Columns are independent and solved in
    /// parallel; the result does not depend on the worker count.
    pub fn solve(
        &self,
        association: &AssociationMatrix,
        warm_start: Option<&DMatrix<f64>>,
    ) -> Result<(CoefficientState, SolveReport)> {
        let n = self.dictionary.num_points();
        if association.a.shape() != (n, n) {
            return Err(Error::Shape(format!(
                "association matrix is {:?}, expected {n}x{n}",
                association.a.shape()
            )));
        }
        if let Some(w) = warm_start {
            if w.shape() != (n, n) {
                return Err(Error::Shape(format!("warm start is {:?}, expected {n}x{n}", w.shape())));
            }
        }

        let columns: Vec<ColumnSolution> = (0..n)
            .into_par_iter()
            .map(|i| {
                let weights: Vec<f64> = association
                    .a
                    .column(i)
                    .iter()
                    .map(|a| (1.0 - a).clamp(0.0, 1.0))
                    .collect();
                let problem = ColumnProblem {
                    dictionary: &self.dictionary,
                    excluded_index: i,
                    weights: &weights,
                    lambda0: self.lambda0,
                    lambda1: self.lambda1,
                };
                let init = match warm_start {
                    Some(w) => w.column(i).iter().copied().collect(),
                    None => vec![0.0; n],
                };
                solve_column_from(&problem, init, self.tol, self.max_sweeps)
            })
            .collect();

        let mut report = SolveReport::default();
        let mut z = DMatrix::zeros(n, n);
        for (i, col) in columns.into_iter().enumerate() {
            if !col.converged {
                report.not_converged += 1;
            }
            report.max_sweeps_used = report.max_sweeps_used.max(col.sweeps);
            z.column_mut(i).copy_from_slice(&col.z);
        }
        let state = CoefficientState::from_coefficients(self.dictionary.data(), z)?;
        Ok((state, report))
    }

    pub fn objective(&self, z: &DMatrix<f64>, association: &AssociationMatrix) -> f64 {
        objective_value(self.dictionary.data(), z, association, self.lambda0, self.lambda1)
    }
}

/// Convenience wrapper: one cold-start solve with parameters from `params`.
pub fn solve_self_representation(
    x: &DataMatrix,
    association: &AssociationMatrix,
    params: &HyperParams,
) -> Result<(CoefficientState, SolveReport)> {
    RepresentationSolver::new(x, params)?.solve(association, None)
}

/// `lambda0 |Z|_1 + 1/2 |X - XZ|_F^2 + lambda1 |(1 - A) * Z|_F^2`.
pub fn objective_value(
    x: &DataMatrix,
    z: &DMatrix<f64>,
    association: &AssociationMatrix,
    lambda0: f64,
    lambda1: f64,
) -> f64 {
    let residual = x.values() - x.values() * z;
    let l1: f64 = z.iter().map(|v| v.abs()).sum();
    let weighted: f64 = z
        .iter()
        .zip(association.a.iter())
        .map(|(zij, aij)| {
            let w = 1.0 - aij;
            w * w * zij * zij
        })
        .sum();
    lambda0 * l1 + 0.5 * residual.norm_squared() + lambda1 * weighted
}
