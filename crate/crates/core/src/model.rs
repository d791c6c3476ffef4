//! Shared domain types: the dataset, coefficient state, soft assignment,
//! association matrix, hyper-parameters and the clustering result.
//!
//! Points are stored as columns throughout (`n` ambient rows by `N` points).
//! Labels are 0-based.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense `n x N` dataset with one point per column.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    column_norms: Vec<f64>,
}

impl DataMatrix {
    /// Wraps a matrix after checking its shape and that every entry is finite.
    /// Columns are not normalized here; see [`validate_dataset`].
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        let (n, points) = values.shape();
        if n < 1 || points < 2 {
            return Err(Error::Shape(format!(
                "dataset must have at least 1 row and 2 columns, got {n}x{points}"
            )));
        }
        for col in 0..points {
            for row in 0..n {
                if !values[(row, col)].is_finite() {
                    return Err(Error::NonFinite { row, col });
                }
            }
        }
        let column_norms = values.column_iter().map(|c| c.norm()).collect();
        Ok(Self { values, column_norms })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    /// Ambient dimension `n`.
    pub fn ambient_dim(&self) -> usize {
        self.values.nrows()
    }

    /// Number of points `N`.
    pub fn num_points(&self) -> usize {
        self.values.ncols()
    }

    pub fn column_norms(&self) -> &[f64] {
        &self.column_norms
    }

    /// Returns a copy with every column scaled to unit l2 norm.
    pub fn normalized(&self) -> Result<Self> {
        if let Some(idx) = self.column_norms.iter().position(|&nrm| nrm == 0.0) {
            return Err(Error::ZeroColumn(idx));
        }
        let mut values = self.values.clone();
        for (mut col, &nrm) in values.column_iter_mut().zip(&self.column_norms) {
            col /= nrm;
        }
        let column_norms = values.column_iter().map(|c| c.norm()).collect();
        Ok(Self { values, column_norms })
    }
}

/// Checks a raw matrix for use with `clusters` clusters and (optionally)
/// l2-normalizes its columns.
///
/// Rejects non-finite entries, all-zero columns, and datasets with fewer than
/// `2 * clusters` points.
pub fn validate_dataset(values: DMatrix<f64>, clusters: usize, normalize: bool) -> Result<DataMatrix> {
    let data = DataMatrix::new(values)?;
    if clusters == 0 {
        return Err(Error::InvalidClusterCount {
            clusters,
            points: data.num_points(),
        });
    }
    if data.num_points() < 2 * clusters {
        return Err(Error::TooFewPoints {
            points: data.num_points(),
            clusters,
        });
    }
    if let Some(idx) = data.column_norms.iter().position(|&nrm| nrm == 0.0) {
        return Err(Error::ZeroColumn(idx));
    }
    if normalize {
        data.normalized()
    } else {
        Ok(data)
    }
}

/// Self-representation coefficients `Z`, residual `E = X - XZ`, and the
/// similarity `Zbar = (|Z| + |Z^T|) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientState {
    pub z: DMatrix<f64>,
    pub e: DMatrix<f64>,
    pub zbar: DMatrix<f64>,
}

impl CoefficientState {
    /// Derives `E` and `Zbar` from `Z`. The diagonal of `Z` must already be zero.
    pub fn from_coefficients(x: &DataMatrix, z: DMatrix<f64>) -> Result<Self> {
        let points = x.num_points();
        if z.shape() != (points, points) {
            return Err(Error::Shape(format!(
                "coefficient matrix is {:?}, expected {points}x{points}",
                z.shape()
            )));
        }
        debug_assert!((0..points).all(|i| z[(i, i)] == 0.0));
        let e = x.values() - x.values() * &z;
        let zbar = similarity(&z);
        Ok(Self { z, e, zbar })
    }
}

/// `(|Z| + |Z^T|) / 2`, built entry by entry so the result is exactly symmetric.
pub fn similarity(z: &DMatrix<f64>) -> DMatrix<f64> {
    let n = z.nrows();
    let mut zbar = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..j {
            let v = 0.5 * (z[(i, j)].abs() + z[(j, i)].abs());
            zbar[(i, j)] = v;
            zbar[(j, i)] = v;
        }
    }
    zbar
}

/// The `N x C` soft clustering matrix together with the probabilities it was
/// built from and the threshold that split certain from uncertain points.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftAssignment {
    pub phi: DMatrix<f64>,
    pub certain: Vec<bool>,
    pub probabilities: DMatrix<f64>,
    pub omega: f64,
    pub kappa: usize,
}

impl SoftAssignment {
    pub fn num_points(&self) -> usize {
        self.phi.nrows()
    }

    pub fn num_clusters(&self) -> usize {
        self.phi.ncols()
    }

    pub fn uncertain_indices(&self) -> Vec<usize> {
        self.certain
            .iter()
            .enumerate()
            .filter_map(|(i, &c)| (!c).then_some(i))
            .collect()
    }

    /// Most probable cluster for every point. Certain points get their hard
    /// label; ties go to the lowest cluster index.
    pub fn labels(&self) -> Vec<usize> {
        (0..self.phi.nrows()).map(|i| argmax_row(&self.phi, i)).collect()
    }

    /// Entrywise equality within `tol` plus identical certain masks.
    pub fn same_as(&self, other: &SoftAssignment, tol: f64) -> bool {
        self.phi.shape() == other.phi.shape()
            && self.certain == other.certain
            && self.phi.iter().zip(other.phi.iter()).all(|(a, b)| (a - b).abs() <= tol)
    }
}

/// Index of the largest entry of row `i`, lowest index on ties.
pub(crate) fn argmax_row(m: &DMatrix<f64>, i: usize) -> usize {
    let mut best = 0;
    for k in 1..m.ncols() {
        if m[(i, k)] > m[(i, best)] {
            best = k;
        }
    }
    best
}

/// `A = Phi Phi^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociationMatrix {
    pub a: DMatrix<f64>,
}

impl AssociationMatrix {
    /// The initialization matrix of all ones, under which the pairwise
    /// penalty vanishes.
    pub fn all_ones(points: usize) -> Self {
        Self {
            a: DMatrix::from_element(points, points, 1.0),
        }
    }

    pub fn num_points(&self) -> usize {
        self.a.nrows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SpectralMode {
    /// Recluster every point from scratch each iteration.
    Full,
    /// Only relabel uncertain points and their neighbours in `Zbar`.
    #[default]
    Incremental,
}

impl fmt::Display for SpectralMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectralMode::Full => f.write_str("full"),
            SpectralMode::Incremental => f.write_str("incremental"),
        }
    }
}

impl std::str::FromStr for SpectralMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "full" => Ok(SpectralMode::Full),
            "incremental" => Ok(SpectralMode::Incremental),
            other => Err(format!(
                "unknown spectral mode '{other}' (expected full or incremental)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// `lambda0 = mu / alpha`, see [`crate::solver::compute_lambda0`].
    pub alpha: f64,
    /// `lambda0 / lambda1`.
    pub lambda_ratio: f64,
    pub t_max: usize,
    pub solver_tol: f64,
    pub solver_max_sweeps: usize,
    pub kmeans_restarts: usize,
    pub seed: u64,
    pub spectral_mode: SpectralMode,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            alpha: 20.0,
            lambda_ratio: 100.0,
            t_max: 10,
            solver_tol: 1e-6,
            solver_max_sweeps: 1000,
            kmeans_restarts: 20,
            seed: 0,
            spectral_mode: SpectralMode::default(),
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParam(format!("{name} must be positive, got {v}")))
            }
        };
        positive("alpha", self.alpha)?;
        positive("lambda_ratio", self.lambda_ratio)?;
        positive("solver_tol", self.solver_tol)?;
        for (name, v) in [
            ("t_max", self.t_max),
            ("solver_max_sweeps", self.solver_max_sweeps),
            ("kmeans_restarts", self.kmeans_restarts),
        ] {
            if v == 0 {
                return Err(Error::InvalidParam(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    PhiFixedPoint,
    KappaNondecreasing,
    TMaxReached,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::PhiFixedPoint => "phi_fixed_point",
            StopReason::KappaNondecreasing => "kappa_nondecreasing",
            StopReason::TMaxReached => "t_max_reached",
        })
    }
}

/// One outer iteration of the alternating loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub t: usize,
    pub kappa: usize,
    pub omega: f64,
    /// Objective of the coefficient solve under the association matrix it used.
    pub objective: f64,
    pub labels: Vec<usize>,
}

/// Conditions worth reporting that did not stop the run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Warning {
    NotConverged { t: usize, columns: usize },
    FallbackToFull { t: usize },
    RankGuardTripped { t: usize },
    ZeroMassPoints { t: usize, count: usize },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::NotConverged { t, columns } => {
                write!(f, "t={t}: {columns} column solves hit the sweep limit")
            }
            Warning::FallbackToFull { t } => {
                write!(f, "t={t}: incremental clustering fell back to full clustering")
            }
            Warning::RankGuardTripped { t } => {
                write!(f, "t={t}: cluster coverage guard tripped")
            }
            Warning::ZeroMassPoints { t, count } => {
                write!(f, "t={t}: {count} points have an all-zero similarity column")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClusteringResult {
    pub labels: Vec<usize>,
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
    pub stop_reason: StopReason,
    pub warnings: Vec<Warning>,
    pub lambda0: f64,
    pub lambda1: f64,
    /// Coefficients from the final solve.
    pub coefficients: CoefficientState,
    /// Soft assignment from the final iteration.
    pub assignment: SoftAssignment,
}

impl ClusteringResult {
    /// Kappa trace, one entry per iteration.
    pub fn kappa_trace(&self) -> Vec<usize> {
        self.history.iter().map(|h| h.kappa).collect()
    }
}
