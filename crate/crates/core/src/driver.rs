//! The alternating loop: solve for `Z` under the current association
//! matrix, cluster `Zbar`, split points into certain and uncertain, rebuild
//! the association matrix, and repeat until `Phi` stops changing, the number
//! of uncertain points stops falling, or `t_max` is reached.

use nalgebra::DMatrix;

use crate::association::{build_association, build_soft_assignment, compute_omega, compute_probabilities};
use crate::error::{Error, Result};
use crate::model::{
    AssociationMatrix, ClusteringResult, DataMatrix, HyperParams, IterationRecord, SoftAssignment, SpectralMode,
    StopReason, Warning,
};
use crate::rng::{derive_seed, stream};
use crate::solver::RepresentationSolver;
use crate::spectral::{cluster_full, cluster_incremental};

/// Entrywise tolerance for treating two soft assignments as equal.
pub const PHI_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// When false, only `t_max` ends the loop (used to trace kappa decay).
    pub stop_clauses: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { stop_clauses: true }
    }
}

/// Checks the loop's termination clauses in order: fixed point of `Phi`,
/// non-decreasing kappa, then the iteration cap. `None` means continue.
pub fn stopping_check(prev: &SoftAssignment, curr: &SoftAssignment, t: usize, t_max: usize) -> Option<StopReason> {
    if curr.same_as(prev, PHI_TOL) {
        Some(StopReason::PhiFixedPoint)
    } else if curr.kappa >= prev.kappa {
        Some(StopReason::KappaNondecreasing)
    } else if t >= t_max {
        Some(StopReason::TMaxReached)
    } else {
        None
    }
}

/// Every cluster keeps at least one certain point; stands in for `rank(Phi) = C`.
pub fn covers_all_clusters(assignment: &SoftAssignment) -> bool {
    let mut seen = vec![false; assignment.num_clusters()];
    for (i, &certain) in assignment.certain.iter().enumerate() {
        if certain {
            seen[crate::model::argmax_row(&assignment.phi, i)] = true;
        }
    }
    seen.into_iter().all(|s| s)
}

fn check_clusters(x: &DataMatrix, clusters: usize) -> Result<()> {
    let points = x.num_points();
    if clusters < 2 || 2 * clusters > points {
        return Err(Error::InvalidClusterCount { clusters, points });
    }
    Ok(())
}

struct Assigned {
    assignment: SoftAssignment,
    zero_mass: usize,
}

fn assign(zbar: &DMatrix<f64>, labels: &[usize], clusters: usize) -> Result<Assigned> {
    let probs = compute_probabilities(zbar, labels, clusters)?;
    let omega = compute_omega(&probs.p)?;
    Ok(Assigned {
        assignment: build_soft_assignment(&probs.p, omega),
        zero_mass: probs.zero_mass.len(),
    })
}

/// Runs the full alternating algorithm.
pub fn run(x: &DataMatrix, clusters: usize, params: &HyperParams) -> Result<ClusteringResult> {
    run_with(x, clusters, params, RunOptions::default())
}

/// The initialization pass alone: one solve with `A` all ones (plain sparse
/// subspace clustering), full spectral clustering, and label extraction
/// through `Phi`. Identical to [`run`] with `t_max = 1`.
pub fn run_ssc_baseline(x: &DataMatrix, clusters: usize, params: &HyperParams) -> Result<ClusteringResult> {
    let params = HyperParams {
        t_max: 1,
        ..params.clone()
    };
    run_with(x, clusters, &params, RunOptions::default())
}

pub fn run_with(
    x: &DataMatrix,
    clusters: usize,
    params: &HyperParams,
    options: RunOptions,
) -> Result<ClusteringResult> {
    check_clusters(x, clusters)?;
    let solver = RepresentationSolver::new(x, params)?;
    let n = x.num_points();

    let mut association = AssociationMatrix::all_ones(n);
    let mut prev_z: Option<DMatrix<f64>> = None;
    let mut prev: Option<SoftAssignment> = None;
    let mut history = Vec::new();
    let mut warnings = Vec::new();

    let mut t = 0;
    loop {
        t += 1;
        let (state, report) = solver.solve(&association, prev_z.as_ref())?;
        if report.not_converged > 0 {
            warnings.push(Warning::NotConverged {
                t,
                columns: report.not_converged,
            });
        }
        let objective = solver.objective(&state.z, &association);
        let seed = derive_seed(params.seed, &[t as u64]);

        let labels = match (&prev, params.spectral_mode) {
            (Some(p), SpectralMode::Incremental) => {
                let out = cluster_incremental(
                    &state.zbar,
                    &p.labels(),
                    &p.uncertain_indices(),
                    clusters,
                    seed,
                    params.kmeans_restarts,
                )?;
                if out.fell_back {
                    warnings.push(Warning::FallbackToFull { t });
                }
                out.labels
            }
            _ => cluster_full(&state.zbar, clusters, seed, params.kmeans_restarts)?,
        };
        let mut current = assign(&state.zbar, &labels, clusters)?;

        let mut guard_stop = false;
        if !covers_all_clusters(&current.assignment) {
            warnings.push(Warning::RankGuardTripped { t });
            let reseed = derive_seed(params.seed, &[t as u64, stream::GUARD]);
            let labels = cluster_full(&state.zbar, clusters, reseed, params.kmeans_restarts)?;
            current = assign(&state.zbar, &labels, clusters)?;
            guard_stop = !covers_all_clusters(&current.assignment);
        }
        if current.zero_mass > 0 {
            warnings.push(Warning::ZeroMassPoints {
                t,
                count: current.zero_mass,
            });
        }

        let assignment = current.assignment;
        history.push(IterationRecord {
            t,
            kappa: assignment.kappa,
            omega: assignment.omega,
            objective,
            labels: assignment.labels(),
        });

        let stop = if guard_stop {
            Some(StopReason::TMaxReached)
        } else {
            match &prev {
                Some(p) if options.stop_clauses => stopping_check(p, &assignment, t, params.t_max),
                _ => (t >= params.t_max).then_some(StopReason::TMaxReached),
            }
        };

        if let Some(stop_reason) = stop {
            return Ok(ClusteringResult {
                labels: assignment.labels(),
                iterations: t,
                history,
                stop_reason,
                warnings,
                lambda0: solver.lambda0,
                lambda1: solver.lambda1,
                coefficients: state,
                assignment,
            });
        }

        association = build_association(&assignment);
        prev_z = Some(state.z);
        prev = Some(assignment);
    }
}
