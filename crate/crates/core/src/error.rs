//! Error types shared across the library.

use thiserror::Error;

/// Errors produced by the algorithmic kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    /// A tensor or operation was requested below its minimal dimension.
    #[error("invalid dimension {d}: {requirement}")]
    InvalidDimension { d: usize, requirement: &'static str },

    /// Vector or matrix sizes do not match the tensor dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionError { expected: usize, got: usize },

    /// An axis or coordinate index is out of range.
    #[error("index {index} out of range for dimension {d}")]
    IndexError { index: usize, d: usize },

    /// The QR iteration did not converge within the sweep cap.
    #[error("eigensolver failed to converge after {sweeps} sweeps (matrix hash {matrix_hash:#018x})")]
    SpectralFailure { sweeps: usize, matrix_hash: u64 },

    /// A spectral split was requested for an axis that is not hyperbolic.
    #[error("axis {axis} is not hyperbolic: {n_center} center eigenvalues")]
    NotHyperbolic { axis: usize, n_center: usize },

    /// Bracket-span depth exceeds the supported combinatorial budget.
    #[error("bracket depth {depth} exceeds maximum {max}")]
    DepthError { depth: usize, max: usize },

    /// A trajectory produced a non-finite state.
    #[error("trajectory blow-up detected at step {step}")]
    BlowupDetected { step: usize },

    /// Rejection sampling failed to find an admissible point.
    #[error("rejection sampling failed after {attempts} draws")]
    SamplingError { attempts: usize },

    /// Damping matrix failed validation.
    #[error("invalid damping spec: {0}")]
    InvalidDamping(&'static str),
}

pub type Result<T> = core::result::Result<T, CoreError>;
