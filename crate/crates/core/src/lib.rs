//! Probabilistic sparse subspace clustering with delayed association.
//!
//! The pipeline alternates between a weighted sparse self-representation
//! solve ([`solver`]) and a soft cluster assignment ([`association`]) built
//! on normalized-cuts spectral clustering ([`spectral`]). Points whose
//! cluster membership is not yet clear are kept *uncertain* and only
//! contribute soft weights to the next solve. [`driver`] runs the loop,
//! [`synth`] and [`bench`] reproduce the synthetic intersecting-subspace
//! experiments, and [`io`] holds the file formats.

pub mod association;
pub mod bench;
pub mod driver;
pub mod error;
pub mod io;
pub mod kmeans;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod solver;
pub mod spectral;
pub mod synth;

pub use driver::{run, run_ssc_baseline, run_with, RunOptions};
pub use error::{Error, Result};
pub use model::{
    validate_dataset, AssociationMatrix, ClusteringResult, CoefficientState, DataMatrix, HyperParams, IterationRecord,
    SoftAssignment, SpectralMode, StopReason, Warning,
};
