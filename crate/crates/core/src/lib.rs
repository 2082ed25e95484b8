//! Finite-dimensional matrix mechanics in two inner-product geometries.
//!
//! States and observables live in a complex Hilbert space; every quantity is
//! also examined through the real trace form `<f|g>_R = tr <f|g>`. The crate
//! covers the scalar algebra, state vectors, hermitian operators, spectral
//! decompositions, model dynamics and projective measurement ensembles, plus
//! the `workbench` command-line front end.

pub mod dynamics;
pub mod error;
pub mod measurement;
pub mod operator;
pub mod polynomial;
pub mod random;
pub mod spectral;
pub mod state;
pub mod trace_algebra;
pub mod workbench;

pub use error::{Result, WorkbenchError};
pub use operator::{HermitianOperator, Operator};
pub use spectral::SpectralDecomposition;
pub use state::{GridMeta, StateVector};
pub use trace_algebra::{TraceForm, TraceScalar};
