//! Detection post-processing with quadratic unconstrained binary optimization.
//!
//! The crate replaces greedy non-maximum suppression by a QUBO whose linear
//! terms reward confident detections and whose pairwise terms penalise overlap
//! (IoU plus a centre-distance similarity). The QUBO is solved by a pluggable
//! [`Sampler`](solvers::Sampler): an exhaustive oracle, greedy descent, tabu
//! search, or multi-read simulated annealing. Boxes the solver rejects may be
//! recovered with Gaussian rescoring, as in soft-NMS.
//!
//! Evaluation (VOC-style AP/mAP and log-average miss rate over FPPI) lives in
//! [`eval`].
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration
//! and the command line live in the companion `qsqs` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

mod error;
pub mod eval;
pub mod geometry;
pub mod qubo;
pub mod solvers;
pub mod suppression;

pub use error::{Error, Result};
pub use geometry::BoundingBox;
pub use qubo::{EnhConfig, IsingModel, QsqsWeights, QuboInstance, Sense};
pub use solvers::{AnnealSchedule, SampleSet, Sampler, TabuParams};
pub use suppression::{Scheme, SuppressionConfig};
