//! Voronoi percolation on flat tori: periodic Delaunay complexes, homology
//! of coloured subcomplexes over GF(q), instability audits and Monte Carlo
//! threshold sweeps.

pub mod complex;
pub mod field;
pub mod geometry;
pub mod homology;
pub mod simulation;
pub mod stability;

pub use complex::{DelaunayComplex, Subcomplex};
pub use field::FieldMatrix;
pub use geometry::{build_delaunay, sample_poisson, Coords, PointConfiguration, TorusDomain};
pub use homology::{events, induced_rank, induced_rank_cocycle, InducedMapReport};
pub use simulation::{run_sweep, run_trial, SweepConfig, SweepResult, TrialRecord};
pub use stability::{
    instability_report, AllocationScheme, CoarseState, InstabilityReport, StabilityConfig,
};
