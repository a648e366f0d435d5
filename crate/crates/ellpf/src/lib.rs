//! Elliptic theta kernels, complex Pfaffians, and the partition functions of
//! a free-fermion face model with a reflecting triangular boundary.
//!
//! The crate is organized around one question: do the closed-form elliptic
//! Pfaffian representations of the boundary partition functions agree with a
//! brute-force state-sum evaluation, and do all of the algebraic identities
//! they rest on hold numerically?
//!
//! - [`theta`] evaluates the odd theta function `[u]` from its truncated
//!   product and checks its quasi-periodicities and addition formula.
//! - [`pfaffian`] holds [`SkewMatrix`] and three independent Pfaffian
//!   algorithms (matching sum, first-row expansion, tridiagonalization).
//! - [`face`] builds the dynamical R-matrix and the off-diagonal boundary
//!   K-matrix and checks the Yang-Baxter and reflection equations.
//! - [`statesum`] contracts the monodromy matrices over the full spin space:
//!   the exact (if slow) oracle every closed form is measured against.
//! - [`formulas`] evaluates the two elliptic Pfaffian representations of the
//!   partition functions, the identity relating them, and the factorization
//!   formulas they degenerate to.
//! - [`suite`] wires the checks into seeded, reproducible verification
//!   suites with line-delimited reports; the `ellpf` binary is a thin
//!   wrapper over it.
//!
//! A narrative guide with runnable examples lives in `book/`; its chapters
//! are compiled as doc-tests through the [`guide`] module.

pub mod face;
pub mod formulas;
pub mod guide;
pub mod pfaffian;
pub mod report;
pub mod sampler;
pub mod statesum;
pub mod suite;
pub mod theta;

pub use face::{build_r_matrix, KMatrix, RMatrix};
pub use formulas::{eval_e, eval_f, KernelKind, PfaffianKernel};
pub use pfaffian::{pf_by_definition, pf_by_elimination, pf_by_expansion, SkewMatrix};
pub use report::{CheckParams, VerificationReport};
pub use sampler::{ParameterSampler, SplitMix64};
pub use statesum::{partition_function_oracle, ParameterPoint, SpinBasisState, StateVector};
pub use suite::{run_suite, Suite, SuiteConfig, SuiteOutcome};
pub use theta::EllipticContext;

use num_complex::Complex64;

/// Errors shared across the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An input contained a NaN or infinite component.
    #[error("non-finite argument: {0}")]
    NonFinite(String),
    /// The nome must lie strictly between 0 and 1.
    #[error("invalid nome {0}: must lie in the open interval (0, 1)")]
    InvalidNome(f64),
    /// A parameter landed too close to a zero of a theta denominator.
    #[error("pole: |[{factor}]| = {magnitude:.3e} is below the denominator guard {guard:.3e}")]
    Pole {
        factor: String,
        magnitude: f64,
        guard: f64,
    },
    /// A sampled value is too small to normalize a relative residual;
    /// the caller should resample.
    #[error("degenerate sample: |{quantity}| = {magnitude:.3e} is below the zero tolerance")]
    DegenerateSample { quantity: String, magnitude: f64 },
    /// Matrix construction received entries that are not skew-symmetric.
    #[error("not skew-symmetric at ({i}, {j}): |x[i][j] + x[j][i]| = {asymmetry:.3e}")]
    NotSkewSymmetric { i: usize, j: usize, asymmetry: f64 },
    /// Skew matrices must have even dimension.
    #[error("odd dimension {0}: skew matrices must be even-dimensional")]
    OddDimension(usize),
    /// Enumeration-based routines refuse dimensions whose cost explodes.
    #[error("dimension {dim} exceeds the capacity {max} of this routine")]
    CapacityExceeded { dim: usize, max: usize },
    /// A row/column index was out of range or invalid.
    #[error("invalid index {index} for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    /// Invalid configuration value.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// Resampling failed to find an admissible point.
    #[error("sampler gave up after {attempts} attempts: {reason}")]
    SamplerExhausted { attempts: usize, reason: String },
}

impl Error {
    pub(crate) fn non_finite(what: &str) -> Self {
        Error::NonFinite(what.to_string())
    }
}

pub(crate) fn ensure_finite(value: Complex64, what: &str) -> Result<(), Error> {
    if value.re.is_finite() && value.im.is_finite() {
        Ok(())
    } else {
        Err(Error::non_finite(what))
    }
}
