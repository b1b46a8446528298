//! Finite-level invariants of graph algebras twisted by a divisor chain:
//! covering graphs, component partitions, Perron-Frobenius measure towers,
//! KMS state parametrisations and two independent algebra oracles.

#![allow(clippy::needless_range_loop)]

pub mod algebra;
pub mod corpus;
pub mod covering;
pub mod error;
pub mod graph;
pub mod kms;
pub mod linalg;
pub mod measures;
pub mod omega;
pub mod path;
pub mod repcheck;
pub mod scalar;
pub mod spectral;
pub mod suites;
pub mod system;
pub mod tolerance;

pub use error::{Error, ErrorKind, Result};
pub use graph::{EdgeId, Graph, RawGraph, VertexId};
pub use omega::OmegaPrefix;
pub use path::Path;
pub use scalar::{Real, Scalar};
pub use system::PathSystem;
pub use tolerance::Tolerances;

/// Exact weights for counterexample towers and oracles.
pub type Rational = num_rational::Rational64;

pub use algebra::{FormalSum, SpanningElement};
pub use kms::{Kms, KmsState, Provenance};
pub use measures::{LevelMeasure, MeasureTower};
pub use repcheck::TruncatedRep;
pub use spectral::Spectrum;
pub use suites::{run_suite, Suite, VerifyReport};

/// Double-precision measure at one level.
pub type Measure = LevelMeasure<f64>;
/// Double-precision measure tower.
pub type Tower = MeasureTower<f64>;
/// Exact measure tower.
pub type ExactTower = MeasureTower<Rational>;
/// Double-precision KMS state.
pub type State = KmsState<f64>;
/// Double-precision KMS solver.
pub type KmsF64 = Kms<f64>;
/// Double-precision spectral data.
pub type SpectrumF64 = Spectrum<f64>;
