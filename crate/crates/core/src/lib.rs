//! Sketching for Kronecker-structured vectors and Khatri-Rao matrices.
//!
//! The centerpiece is the Kronecker fast Johnson-Lindenstrauss transform
//! ([`SketchKind::Kfjlt`]), which mixes each factor of `x = x^(1) ⊗ … ⊗ x^(P)`
//! with its own randomized Hadamard transform and then samples rows of the
//! implicit Kronecker product without ever forming it. Four competing
//! sketches, leverage-score tooling, embedding-dimension calculators,
//! sketched least squares, CP-tensor distances and an MNIST IDX reader
//! round out the experiment harness.
//!
//! Indices are 0-based everywhere. Kronecker ordering is row-major (the
//! leftmost factor varies slowest) and dense matrices are column-major
//! `nalgebra::DMatrix<f64>`.

pub mod bounds;
pub mod cp;
pub mod error;
pub mod experiment;
pub mod hadamard;
pub mod idx;
pub mod kron;
pub mod leverage;
pub mod regress;
pub mod rng;
pub mod sketch;

pub use error::{Error, Result};
pub use kron::{KrMatrix, KronVector, MultiIndex, RowSource, Shape, DEFAULT_MATERIALIZATION_CAP};
pub use sketch::{SketchKind, SketchOperator, SketchOptions, SketchParams};
