//! Orthomin(k) for complex non-Hermitian systems, plus the machinery used to
//! study its asymptotic convergence rate: spectral test-problem generators,
//! bound and hull diagnostics, the Orthomin(1) moment recurrence, and the
//! q-series identities behind the infinite-dimensional analysis.

pub mod diagnostics;
pub mod linop;
pub mod moments;
pub mod orthomin;
pub mod qseries;
pub mod scalar;
pub mod spectra;

pub use linop::{axpy, inner, norm, ComplexVector, LinearOperator, LinopError};
pub use orthomin::{
    residual_projection_oracle, solve, solve_with, BreakdownPolicy, ConvergenceTrace,
    OrthominError, OrthominState, Solution, SolveStatus, StoppingRule, TraceRecord,
};
pub use scalar::{ExactComplex, Scalar};
pub use spectra::{SpectraError, SpectrumSpec};
