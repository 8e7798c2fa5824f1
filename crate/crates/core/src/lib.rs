//! Dynamics and steady-state analysis of a three-level Λ-type atom driven by
//! incoherent pumping and spontaneous decay.
//!
//! The model: an upper level `a` decays to two lower levels `b` and `c` at
//! rates `γ₁`, `γ₂`, and is incoherently pumped from them at rates `r₁`, `r₂`.
//! When the pumping fields share a common origin the two pump channels
//! interfere; the alignment parameter `p ∈ [-1, 1]` measures how strongly.
//! At perfect alignment (`p = 1`) and zero Raman detuning a dark superposition
//! of `b` and `c` decouples from the pump, and the system is driven into a
//! coherently trapped state — or, for symmetric rates, into a whole family of
//! steady states selected by the initial condition.
//!
//! Layout:
//! - [`params`]: rate/alignment/detuning parameter set with validation.
//! - [`density`]: 3×3 density matrices, observables, diagnostics.
//! - [`master`]: the equations of motion (right-hand side).
//! - [`integrator`]: fixed-step RK4 and adaptive RK45 time propagation.
//! - [`steady`]: steady-state computation (closed forms, null space, routing),
//!   uniqueness analysis, and classification of trapped states.
//! - [`dressed`]: dark/bright superposition basis, transformed dynamics.
//! - [`scenarios`]: canned parameter regimes with asserted outcomes, and
//!   parameter sweeps.

pub mod density;
pub mod dressed;
pub mod integrator;
pub mod master;
pub mod params;
pub mod scenarios;
pub mod steady;

pub use density::{Basis, DensityMatrix, DerivativeMatrix, Level, ObservableSet};
pub use dressed::{DressedBasis, DressedGenerator, DressedRateSet};
pub use integrator::{integrate, IntegratorConfig, Method, Sample, Trajectory};
pub use master::rhs;
pub use params::SystemParams;
pub use scenarios::{run_scenario, ScenarioResult, ScenarioSpec, SweepPoint};
pub use steady::{Classification, Provenance, SteadyStateReport, UniquenessReport};

/// Errors from constructing or validating model inputs.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    /// A decay or pump rate was negative, NaN, or infinite.
    #[error("rate {name} must be finite and non-negative (got {value})")]
    InvalidRate { name: &'static str, value: f64 },
    /// The pump alignment parameter left its physical range.
    #[error("alignment p must lie in [-1, 1] (got {value})")]
    InvalidAlignment { value: f64 },
    /// The two-photon detuning was NaN or infinite.
    #[error("detuning must be finite (got {value})")]
    InvalidDetuning { value: f64 },
    /// A matrix entry was NaN or infinite.
    #[error("non-finite entry at ({row:?}, {col:?})")]
    NonFinite { row: Level, col: Level },
    /// The matrix is not Hermitian within tolerance.
    #[error("not Hermitian: max |m[i][j] - conj(m[j][i])| = {deviation:.3e} exceeds {tolerance:.1e}")]
    NotHermitian { deviation: f64, tolerance: f64 },
    /// The matrix violates unit trace within tolerance.
    #[error("unit trace violated: |trace - 1| = {deviation:.3e} exceeds {tolerance:.1e}")]
    NotUnitTrace { deviation: f64, tolerance: f64 },
    /// The matrix has an eigenvalue below the negativity tolerance.
    #[error("not positive semidefinite: min eigenvalue {min_eigenvalue:.3e} below -{tolerance:.1e}")]
    NotPositive { min_eigenvalue: f64, tolerance: f64 },
    /// An operation received a matrix expressed in the wrong basis.
    #[error("expected a matrix in the {expected:?} basis, got {found:?}")]
    BasisMismatch { expected: Basis, found: Basis },
    /// The dark/bright superposition basis is undefined when both pump rates vanish.
    #[error("dark/bright basis undefined: r1 + r2 must be positive")]
    UndefinedDressedBasis,
}
