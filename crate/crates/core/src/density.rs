//! Density matrices of the three-level system, their observables and
//! numerical health diagnostics.

// Index pairs like (i, j)/(j, i) carry the symmetry logic here; iterator
// rewrites of those loops obscure it.
#![allow(clippy::needless_range_loop)]

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ModelError;

/// The three atomic levels: upper level `A`, lower levels `B` and `C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Level {
    A,
    B,
    C,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::A, Level::B, Level::C];

    /// Row/column index of this level in matrix storage.
    pub fn index(self) -> usize {
        match self {
            Level::A => 0,
            Level::B => 1,
            Level::C => 2,
        }
    }
}

/// Which basis a matrix is expressed in.
///
/// In the [`Dressed`](Basis::Dressed) basis the `B` slot holds the dark
/// superposition and the `C` slot the bright one; the `A` slot is the upper
/// level in both bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    Bare,
    Dressed,
}

pub(crate) type Mat3 = [[Complex64; 3]; 3];

/// Maximum allowed `|m[i][j] - conj(m[j][i])|` at construction.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Maximum allowed `|trace - 1|` at construction.
pub const TRACE_TOL: f64 = 1e-12;
/// Most negative eigenvalue tolerated at construction.
pub const POSITIVITY_TOL: f64 = 1e-9;

/// A validated 3×3 density matrix.
///
/// Construction enforces finiteness, Hermiticity within [`HERMITICITY_TOL`],
/// unit trace within [`TRACE_TOL`], and positive semidefiniteness down to
/// `-`[`POSITIVITY_TOL`]. States produced by the integrator are only
/// monitored, not re-projected: their drift is reported per sample instead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    m: Mat3,
    basis: Basis,
}

impl DensityMatrix {
    /// Validates `entries` and wraps them as a density matrix.
    pub fn new(entries: Mat3, basis: Basis) -> Result<Self, ModelError> {
        validate(&entries)?;
        Ok(Self { m: entries, basis })
    }

    /// Diagonal state `diag(pop_a, pop_b, pop_c)` in the bare basis.
    pub fn from_diagonal(pop_a: f64, pop_b: f64, pop_c: f64) -> Result<Self, ModelError> {
        let mut m = zero();
        m[0][0] = Complex64::new(pop_a, 0.0);
        m[1][1] = Complex64::new(pop_b, 0.0);
        m[2][2] = Complex64::new(pop_c, 0.0);
        Self::new(m, Basis::Bare)
    }

    /// Bare-basis state with lower-level populations `pop_b`, `pop_c`,
    /// coherence `ρ_bc = re + i·im`, and `ρ_aa = 1 - pop_b - pop_c`.
    pub fn with_bc_coherence(pop_b: f64, pop_c: f64, re: f64, im: f64) -> Result<Self, ModelError> {
        let mut m = zero();
        m[0][0] = Complex64::new(1.0 - pop_b - pop_c, 0.0);
        m[1][1] = Complex64::new(pop_b, 0.0);
        m[2][2] = Complex64::new(pop_c, 0.0);
        m[1][2] = Complex64::new(re, im);
        m[2][1] = Complex64::new(re, -im);
        Self::new(m, Basis::Bare)
    }

    /// The pure state `|l⟩⟨l|`.
    pub fn pure(l: Level) -> Self {
        let mut m = zero();
        m[l.index()][l.index()] = Complex64::ONE;
        Self {
            m,
            basis: Basis::Bare,
        }
    }

    /// The maximally mixed state `I/3`.
    pub fn maximally_mixed() -> Self {
        let third = Complex64::new(1.0 / 3.0, 0.0);
        let mut m = zero();
        for i in 0..3 {
            m[i][i] = third;
        }
        Self {
            m,
            basis: Basis::Bare,
        }
    }

    /// The antisymmetric maximal-coherence state
    /// `(|b⟩⟨b| + |c⟩⟨c| - |b⟩⟨c| - |c⟩⟨b|)/2`: the pure dark state of any
    /// symmetric (`r₁ = r₂`) configuration, left strictly invariant by the
    /// dynamics at `p = 1`, `Δ = 0`.
    pub fn robust() -> Self {
        Self::with_bc_coherence(0.5, 0.5, -0.5, 0.0).expect("fixed entries are valid")
    }

    /// The symmetric maximal-coherence state
    /// `(|b⟩⟨b| + |c⟩⟨c| + |b⟩⟨c| + |c⟩⟨b|)/2`: a steady state only in the
    /// absence of pumping, destroyed by any `r > 0`.
    pub fn weak() -> Self {
        Self::with_bc_coherence(0.5, 0.5, 0.5, 0.0).expect("fixed entries are valid")
    }

    pub(crate) fn from_raw_unchecked(m: Mat3, basis: Basis) -> Self {
        Self { m, basis }
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn entries(&self) -> &Mat3 {
        &self.m
    }

    pub fn entry(&self, row: Level, col: Level) -> Complex64 {
        self.m[row.index()][col.index()]
    }

    /// Real part of the diagonal entry for `l`.
    pub fn population(&self, l: Level) -> f64 {
        self.m[l.index()][l.index()].re
    }

    /// Off-diagonal entry `ρ_(row,col)`.
    pub fn coherence(&self, row: Level, col: Level) -> Complex64 {
        self.entry(row, col)
    }

    /// Dark-state population; meaningful for [`Basis::Dressed`] matrices.
    pub fn dark_population(&self) -> f64 {
        self.m[1][1].re
    }

    /// Bright-state population; meaningful for [`Basis::Dressed`] matrices.
    pub fn bright_population(&self) -> f64 {
        self.m[2][2].re
    }

    /// Dark–bright coherence; meaningful for [`Basis::Dressed`] matrices.
    pub fn dark_bright_coherence(&self) -> Complex64 {
        self.m[1][2]
    }

    pub fn trace(&self) -> f64 {
        (self.m[0][0] + self.m[1][1] + self.m[2][2]).re
    }

    /// `|trace - 1|`.
    pub fn trace_error(&self) -> f64 {
        let t = self.m[0][0] + self.m[1][1] + self.m[2][2];
        (t - Complex64::ONE).norm()
    }

    /// Max over entries of `|m[i][j] - conj(m[j][i])|`.
    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.m)
    }

    /// Smallest eigenvalue of the Hermitian part `(ρ + ρ†)/2`.
    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.m)
    }

    /// The combination `ρ_aa + ρ_bc + ρ_cb = ρ_aa + 2 Re ρ_bc`, conserved by
    /// the fully symmetric dynamics (`r₁ = r₂`, `γ₁ = γ₂`, `p = 1`, `Δ = 0`)
    /// and the quantity that selects among its degenerate steady states.
    pub fn c0(&self) -> f64 {
        self.m[0][0].re + 2.0 * self.m[1][2].re
    }

    /// Largest entry-wise distance `max |self[i][j] - other[i][j]|`.
    pub fn max_entry_distance(&self, other: &DensityMatrix) -> f64 {
        max_abs_diff(&self.m, &other.m)
    }

    /// Observables derived from the bare-basis entries.
    pub fn observables(&self) -> ObservableSet {
        ObservableSet {
            pop_a: self.m[0][0].re,
            pop_b: self.m[1][1].re,
            pop_c: self.m[2][2].re,
            inversion_ab: self.m[0][0].re - self.m[1][1].re,
            inversion_ac: self.m[0][0].re - self.m[2][2].re,
            coherence_re: self.m[1][2].re,
            coherence_im: self.m[1][2].im,
        }
    }
}

/// Population, inversion, and lower-level coherence read off one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservableSet {
    pub pop_a: f64,
    pub pop_b: f64,
    pub pop_c: f64,
    /// `ρ_aa - ρ_bb`; positive means inversion on the a–b transition.
    pub inversion_ab: f64,
    /// `ρ_aa - ρ_cc`.
    pub inversion_ac: f64,
    /// `Re ρ_bc`.
    pub coherence_re: f64,
    /// `Im ρ_bc`.
    pub coherence_im: f64,
}

/// Time derivative of a density matrix, as produced by [`crate::master::rhs`].
///
/// Not trace-one and not positive — only Hermitian (to roundoff) and
/// traceless for physical inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeMatrix {
    m: Mat3,
}

impl DerivativeMatrix {
    pub(crate) fn from_raw(m: Mat3) -> Self {
        Self { m }
    }

    pub fn entries(&self) -> &Mat3 {
        &self.m
    }

    pub fn entry(&self, row: Level, col: Level) -> Complex64 {
        self.m[row.index()][col.index()]
    }

    pub fn trace(&self) -> Complex64 {
        self.m[0][0] + self.m[1][1] + self.m[2][2]
    }

    /// Largest `|entry|`; the norm used for steady-state detection.
    pub fn max_norm(&self) -> f64 {
        max_abs(&self.m)
    }

    /// Max over entries of `|m[i][j] - conj(m[j][i])|`.
    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.m)
    }

    /// Rate of change of the combination `ρ_aa + 2 Re ρ_bc`.
    pub fn c0_rate(&self) -> f64 {
        self.m[0][0].re + 2.0 * self.m[1][2].re
    }
}

// --- raw 3×3 helpers shared by the integrator and basis transforms ---

pub(crate) fn zero() -> Mat3 {
    [[Complex64::ZERO; 3]; 3]
}

pub(crate) fn add_scaled(acc: &mut Mat3, m: &Mat3, factor: f64) {
    for (acc_row, row) in acc.iter_mut().zip(m) {
        for (acc_entry, entry) in acc_row.iter_mut().zip(row) {
            *acc_entry += entry * factor;
        }
    }
}

pub(crate) fn max_abs(m: &Mat3) -> f64 {
    let mut max = 0.0f64;
    for row in m {
        for e in row {
            max = max.max(e.norm());
        }
    }
    max
}

pub(crate) fn max_abs_diff(a: &Mat3, b: &Mat3) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .fold(0.0f64, |max, (x, y)| max.max((x - y).norm()))
}

pub(crate) fn hermiticity_error(m: &Mat3) -> f64 {
    let mut max = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            max = max.max((m[i][j] - m[j][i].conj()).norm());
        }
    }
    max
}

/// Replaces `m` with its Hermitian part `(m + m†)/2`.
pub(crate) fn resymmetrize(m: &mut Mat3) {
    for i in 0..3 {
        m[i][i] = Complex64::new(m[i][i].re, 0.0);
    }
    for i in 0..3 {
        for j in (i + 1)..3 {
            let upper = 0.5 * (m[i][j] + m[j][i].conj());
            m[i][j] = upper;
            m[j][i] = upper.conj();
        }
    }
}

pub(crate) fn is_finite(m: &Mat3) -> bool {
    m.iter()
        .flatten()
        .all(|e| e.re.is_finite() && e.im.is_finite())
}

/// Smallest eigenvalue of the Hermitian part of `m`, via the real symmetric
/// embedding `[[Re, -Im], [Im, Re]]` (each eigenvalue appears twice).
pub(crate) fn min_eigenvalue(m: &Mat3) -> f64 {
    let mut h = *m;
    resymmetrize(&mut h);
    let mut e = nalgebra::SMatrix::<f64, 6, 6>::zeros();
    for i in 0..3 {
        for j in 0..3 {
            e[(i, j)] = h[i][j].re;
            e[(i + 3, j + 3)] = h[i][j].re;
            e[(i, j + 3)] = -h[i][j].im;
            e[(i + 3, j)] = h[i][j].im;
        }
    }
    nalgebra::SymmetricEigen::new(e)
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |acc, &x| acc.min(x))
}

fn validate(m: &Mat3) -> Result<(), ModelError> {
    for (i, row) in Level::ALL.iter().enumerate() {
        for (j, col) in Level::ALL.iter().enumerate() {
            if !m[i][j].re.is_finite() || !m[i][j].im.is_finite() {
                return Err(ModelError::NonFinite {
                    row: *row,
                    col: *col,
                });
            }
        }
    }
    let herm = hermiticity_error(m);
    if herm > HERMITICITY_TOL {
        return Err(ModelError::NotHermitian {
            deviation: herm,
            tolerance: HERMITICITY_TOL,
        });
    }
    let trace = (m[0][0] + m[1][1] + m[2][2] - Complex64::ONE).norm();
    if trace > TRACE_TOL {
        return Err(ModelError::NotUnitTrace {
            deviation: trace,
            tolerance: TRACE_TOL,
        });
    }
    let min_eig = min_eigenvalue(m);
    if min_eig < -POSITIVITY_TOL {
        return Err(ModelError::NotPositive {
            min_eigenvalue: min_eig,
            tolerance: POSITIVITY_TOL,
        });
    }
    Ok(())
}
