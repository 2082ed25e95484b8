use thiserror::Error;

pub type Result<T> = std::result::Result<T, WorkbenchError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorkbenchError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("grid mismatch: {0}")]
    Grid(String),

    #[error("cannot normalize the zero vector")]
    ZeroVector,

    /// Gram-Schmidt hit a vector lying in the span of its predecessors.
    #[error("linearly dependent set: vector {index} has projection residual {residual:e}")]
    DegenerateSet { index: usize, residual: f64 },

    #[error("profile is not finite at x = {x}")]
    Sampling { x: f64 },

    #[error("operator is not hermitian: max |A - A^+| = {deviation:e} exceeds {bound:e}")]
    NotHermitian { deviation: f64, bound: f64 },

    #[error("state is not normalized: <psi|psi> = {norm_sq}")]
    State { norm_sq: f64 },

    #[error("eigensolver failed to converge: {0}")]
    Convergence(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("operators {first} and {second} do not commute: max |[A, B]| = {norm:e}")]
    NotCommuting { first: usize, second: usize, norm: f64 },

    #[error("function is not finite at eigenvalue {eigenvalue}")]
    FunctionDomain { eigenvalue: f64 },

    #[error("polynomial degree {degree} exceeds the cap of {cap}")]
    Degree { degree: u32, cap: u32 },

    #[error("state reaches the truncation edge: occupancy {occupancy:e}")]
    Truncation { occupancy: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("observable spectrum is degenerate: {0}")]
    DegenerateSpectrum(String),
}
