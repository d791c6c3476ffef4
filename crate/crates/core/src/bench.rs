//! Seeded benchmark grids over random intersecting-subspace models.
//!
//! Every (cell, trial) pair is an independent job whose seeds derive from
//! `(base_seed, C, ratio, trial)` alone, so results do not depend on the
//! worker count or on scheduling order.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::driver::{run, run_ssc_baseline, run_with, RunOptions};
use crate::error::{Error, Result};
use crate::metrics::{misclassification, ssr_error};
use crate::model::{ClusteringResult, DataMatrix, HyperParams, StopReason};
use crate::rng::{derive_seed, stream};
use crate::synth::{generate_subspaces, intersection_for_ratio, sample_points};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pssc,
    Ssc,
}

impl Method {
    pub fn run(self, x: &DataMatrix, clusters: usize, params: &HyperParams) -> Result<ClusteringResult> {
        match self {
            Method::Pssc => run(x, clusters, params),
            Method::Ssc => run_ssc_baseline(x, clusters, params),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Pssc => "pssc",
            Method::Ssc => "ssc",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pssc" => Ok(Method::Pssc),
            "ssc" => Ok(Method::Ssc),
            other => Err(Error::InvalidParam(format!(
                "unknown method `{other}` (expected pssc or ssc)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkGrid {
    pub clusters: Vec<usize>,
    /// Intersection ratios `s/d` as fractions.
    pub ratios: Vec<f64>,
    pub methods: Vec<Method>,
    pub trials: usize,
    pub ambient_dim: usize,
    pub dim: usize,
    pub points_per_subspace: usize,
    /// Length of the extra pssc run with only the iteration cap as stopping
    /// rule. `None` skips it.
    pub trace_iterations: Option<usize>,
}

impl Default for BenchmarkGrid {
    fn default() -> Self {
        Self {
            clusters: vec![2],
            ratios: vec![0.5],
            methods: vec![Method::Pssc, Method::Ssc],
            trials: 20,
            ambient_dim: 200,
            dim: 10,
            points_per_subspace: 100,
            trace_iterations: Some(20),
        }
    }
}

impl BenchmarkGrid {
    pub fn cells(&self) -> Vec<(usize, f64)> {
        let mut cells = Vec::new();
        for &c in &self.clusters {
            for &r in &self.ratios {
                cells.push((c, r));
            }
        }
        cells
    }

    fn validate(&self) -> Result<()> {
        if self.clusters.is_empty() || self.ratios.is_empty() || self.methods.is_empty() {
            return Err(Error::InvalidParam("benchmark grid is empty".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParam("trials must be positive".into()));
        }
        if let Some(&r) = self.ratios.iter().find(|r| !(0.0..1.0).contains(*r)) {
            return Err(Error::InvalidParam(format!("intersection ratio {r} outside [0, 1)")));
        }
        if self.trace_iterations == Some(0) {
            return Err(Error::InvalidParam("trace length must be positive".into()));
        }
        Ok(())
    }
}

/// Seed of one trial, a pure function of the cell and trial index.
pub fn trial_seed(base_seed: u64, clusters: usize, ratio: f64, trial: usize) -> u64 {
    derive_seed(
        base_seed,
        &[stream::TRIAL, clusters as u64, ratio.to_bits(), trial as u64],
    )
}

/// Draws the data of one trial.
pub fn trial_data(
    grid: &BenchmarkGrid,
    base_seed: u64,
    clusters: usize,
    ratio: f64,
    trial: usize,
) -> Result<(DataMatrix, Vec<usize>)> {
    let seed = trial_seed(base_seed, clusters, ratio, trial);
    let model = generate_subspaces(
        clusters,
        grid.ambient_dim,
        grid.dim,
        intersection_for_ratio(grid.dim, ratio),
        grid.points_per_subspace,
        derive_seed(seed, &[stream::MODEL]),
    )?;
    sample_points(&model, derive_seed(seed, &[stream::SAMPLE]))
}

/// FNV-1a over the shape and the bit patterns of the entries.
pub fn matrix_hash(m: &DMatrix<f64>) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let words = [m.nrows() as u64, m.ncols() as u64]
        .into_iter()
        .chain(m.iter().map(|v| v.to_bits()));
    words.fold(OFFSET, |h, w| {
        w.to_le_bytes()
            .iter()
            .fold(h, |h, &b| (h ^ b as u64).wrapping_mul(PRIME))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    /// Uncertain fraction `kappa / N` per iteration.
    pub kappa_fraction: Vec<f64>,
    /// Misclassification of each iteration's labels.
    pub error: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub clusters: usize,
    pub ratio: f64,
    pub trial: usize,
    pub method: Method,
    pub data_hash: u64,
    pub misclassification: f64,
    pub ssr: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    /// Per-iteration trace of the regular run.
    pub trace: Trace,
    /// Trace of the run capped only by `trace_iterations` (pssc only).
    pub unconstrained: Option<Trace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub clusters: usize,
    pub ratio: f64,
    pub trial: usize,
    pub method: Option<Method>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub clusters: usize,
    pub ratio: f64,
    pub method: Method,
    pub trials: usize,
    pub failures: usize,
    pub mean_error: f64,
    pub median_error: f64,
    pub mean_ssr: f64,
    pub mean_iterations: f64,
    /// Trial-averaged error per iteration; shorter runs are padded with
    /// their final value up to the longest run.
    pub mean_error_trace: Vec<f64>,
    pub mean_unconstrained: Option<Trace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkTable {
    pub grid: BenchmarkGrid,
    pub base_seed: u64,
    pub params: HyperParams,
    pub trials: Vec<TrialRecord>,
    pub failures: Vec<TrialFailure>,
    pub cells: Vec<CellSummary>,
}

fn trace_of(result: &ClusteringResult, truth: &[usize], clusters: usize) -> Result<Trace> {
    let n = truth.len() as f64;
    let mut kappa_fraction = Vec::with_capacity(result.history.len());
    let mut error = Vec::with_capacity(result.history.len());
    for rec in &result.history {
        kappa_fraction.push(rec.kappa as f64 / n);
        error.push(misclassification(&rec.labels, truth, clusters)?);
    }
    Ok(Trace { kappa_fraction, error })
}

fn run_method(
    method: Method,
    x: &DataMatrix,
    truth: &[usize],
    clusters: usize,
    params: &HyperParams,
    trace_iterations: Option<usize>,
) -> Result<(ClusteringResult, Trace, Option<Trace>)> {
    let result = method.run(x, clusters, params)?;
    let trace = trace_of(&result, truth, clusters)?;
    let unconstrained = match (method, trace_iterations) {
        (Method::Pssc, Some(t_max)) => {
            let capped = HyperParams {
                t_max,
                ..params.clone()
            };
            let long = run_with(x, clusters, &capped, RunOptions { stop_clauses: false })?;
            Some(trace_of(&long, truth, clusters)?)
        }
        _ => None,
    };
    Ok((result, trace, unconstrained))
}

type JobOutcome = Vec<std::result::Result<TrialRecord, TrialFailure>>;

fn run_trial(
    grid: &BenchmarkGrid,
    base_seed: u64,
    params: &HyperParams,
    clusters: usize,
    ratio: f64,
    trial: usize,
) -> JobOutcome {
    let fail = |method, message: String| TrialFailure {
        clusters,
        ratio,
        trial,
        method,
        message,
    };
    let (x, truth) = match trial_data(grid, base_seed, clusters, ratio, trial) {
        Ok(data) => data,
        Err(e) => return vec![Err(fail(None, e.to_string()))],
    };
    let params = HyperParams {
        seed: trial_seed(base_seed, clusters, ratio, trial),
        ..params.clone()
    };
    grid.methods
        .iter()
        .map(|&method| {
            let data_hash = matrix_hash(x.values());
            let (result, trace, unconstrained) =
                run_method(method, &x, &truth, clusters, &params, grid.trace_iterations)
                    .map_err(|e| fail(Some(method), e.to_string()))?;
            let scored = misclassification(&result.labels, &truth, clusters)
                .and_then(|err| Ok((err, ssr_error(&result.coefficients.z, &truth, clusters)?)));
            let (misclassification, ssr) = scored.map_err(|e| fail(Some(method), e.to_string()))?;
            Ok(TrialRecord {
                clusters,
                ratio,
                trial,
                method,
                data_hash,
                misclassification,
                ssr,
                iterations: result.iterations,
                stop_reason: result.stop_reason,
                trace,
                unconstrained,
            })
        })
        .collect()
}

/// Runs every method on every trial of every cell using `workers` threads.
pub fn run_benchmark(
    grid: &BenchmarkGrid,
    base_seed: u64,
    params: &HyperParams,
    workers: usize,
) -> Result<BenchmarkTable> {
    grid.validate()?;
    params.validate()?;
    let jobs: Vec<(usize, f64, usize)> = grid
        .cells()
        .into_iter()
        .flat_map(|(c, r)| (0..grid.trials).map(move |t| (c, r, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParam(format!("thread pool: {e}")))?;
    let outcomes: Vec<JobOutcome> = pool.install(|| {
        jobs.par_iter()
            .map(|&(c, r, t)| run_trial(grid, base_seed, params, c, r, t))
            .collect()
    });

    let mut trials = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes.into_iter().flatten() {
        match outcome {
            Ok(rec) => trials.push(rec),
            Err(f) => failures.push(f),
        }
    }
    let cells = summarize(grid, &trials, &failures);
    Ok(BenchmarkTable {
        grid: grid.clone(),
        base_seed,
        params: params.clone(),
        trials,
        failures,
        cells,
    })
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Averages traces position by position after padding each with its last value.
pub fn mean_trace<'a>(traces: impl IntoIterator<Item = &'a [f64]>) -> Vec<f64> {
    let traces: Vec<&[f64]> = traces.into_iter().filter(|t| !t.is_empty()).collect();
    let len = traces.iter().map(|t| t.len()).max().unwrap_or(0);
    (0..len)
        .map(|i| mean(&traces.iter().map(|t| t[i.min(t.len() - 1)]).collect::<Vec<_>>()))
        .collect()
}

/// Aggregates per-trial records into one summary per (cell, method).
pub fn summarize(grid: &BenchmarkGrid, trials: &[TrialRecord], failures: &[TrialFailure]) -> Vec<CellSummary> {
    let mut cells = Vec::new();
    for (c, r) in grid.cells() {
        for &method in &grid.methods {
            let recs: Vec<&TrialRecord> = trials
                .iter()
                .filter(|t| t.clusters == c && t.ratio == r && t.method == method)
                .collect();
            let failed = failures
                .iter()
                .filter(|f| f.clusters == c && f.ratio == r && f.method.is_none_or(|m| m == method))
                .count();
            let errors: Vec<f64> = recs.iter().map(|t| t.misclassification).collect();
            let ssr: Vec<f64> = recs.iter().map(|t| t.ssr).collect();
            let iters: Vec<f64> = recs.iter().map(|t| t.iterations as f64).collect();
            let unconstrained: Vec<&Trace> = recs.iter().filter_map(|t| t.unconstrained.as_ref()).collect();
            let mean_unconstrained = (!unconstrained.is_empty()).then(|| Trace {
                kappa_fraction: mean_trace(unconstrained.iter().map(|t| t.kappa_fraction.as_slice())),
                error: mean_trace(unconstrained.iter().map(|t| t.error.as_slice())),
            });
            cells.push(CellSummary {
                clusters: c,
                ratio: r,
                method,
                trials: recs.len(),
                failures: failed,
                mean_error: mean(&errors),
                median_error: median(&errors),
                mean_ssr: mean(&ssr),
                mean_iterations: mean(&iters),
                mean_error_trace: mean_trace(recs.iter().map(|t| t.trace.error.as_slice())),
                mean_unconstrained,
            });
        }
    }
    cells
}

impl BenchmarkTable {
    pub fn cell(&self, clusters: usize, ratio: f64, method: Method) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.clusters == clusters && c.ratio == ratio && c.method == method)
    }
}
