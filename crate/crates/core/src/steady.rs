//! Steady states: closed forms, uniqueness analysis, generator matrices,
//! numerical null spaces, and classification of trapped states.
//!
//! In the trapping regime (`p = 1`, `Δ = 0`) the long-time behaviour is
//! governed by the discriminant `D = (√(r₂γ₁) - √(r₁γ₂))²` together with the
//! pump product `r₁·r₂`: when both are nonzero the system has a unique steady
//! state — the pure trapped superposition with `ρ_aa = 0` and maximally
//! negative coherence — independent of the decay rates. When either vanishes
//! (notably for fully symmetric rates) the generator acquires extra zero
//! modes and the reached state depends on the initial condition through the
//! conserved combination `c0 = ρ_aa + 2 Re ρ_bc`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::{self, DensityMatrix, Mat3};
use crate::integrator::{integrate, IntegrateError, IntegratorConfig};
use crate::master::rhs_raw;
use crate::params::SystemParams;
use crate::{Basis, ModelError};

/// Default relative singular-value threshold for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Entry-wise tolerance for recognizing the named limit states.
pub const CLASSIFY_TOL: f64 = 1e-6;

/// How a steady state was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    /// Closed-form trapped state of a unique trapping-regime configuration.
    AnalyticCpt,
    /// Trace-normalized one-dimensional null space of the generator.
    NullSpace,
    /// Closed-form limit of the fully symmetric configuration, selected by
    /// the initial condition through `c0`.
    DegenerateClosedForm,
    /// Long-time limit of a numerical trajectory from the initial condition.
    Integrated,
}

/// Which named limit a state matches (within [`CLASSIFY_TOL`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    /// The antisymmetric maximal-coherence state, `ρ_bc = -1/2`.
    Robust,
    /// The symmetric maximal-coherence state, `ρ_bc = +1/2`.
    Weak,
    /// A trapped state: empty upper level with maximally negative coherence
    /// relative to its populations, `ρ_bc = -√(ρ_bb ρ_cc)`.
    CptGeneric,
    Other,
}

/// Steady-state analysis errors.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SteadyError {
    /// The parameters admit more than one steady state.
    #[error("parameters admit multiple steady states (discriminant {discriminant:.3e}, r1·r2 = {pump_product:.3e}); the limit depends on the initial state")]
    NotUnique {
        discriminant: f64,
        pump_product: f64,
    },
    /// A closed form was requested outside `p = 1`, `Δ = 0`.
    #[error("closed forms require the trapping regime p = 1, delta = 0 (got p = {p}, delta = {delta})")]
    OutsideTrappingRegime { p: f64, delta: f64 },
    /// The symmetric closed form was requested with asymmetric rates.
    #[error("closed form requires r1 = r2 and gamma1 = gamma2 (got r1 = {r1}, r2 = {r2}, gamma1 = {gamma1}, gamma2 = {gamma2})")]
    NotSymmetric {
        r1: f64,
        r2: f64,
        gamma1: f64,
        gamma2: f64,
    },
    /// Selecting among multiple steady states needs an initial condition.
    #[error("an initial state is required to select among multiple steady states")]
    InitialRequired,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
}

/// Analytic-vs-numerical steady-state multiplicity verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    /// `(√(r₂γ₁) - √(r₁γ₂))²`.
    pub discriminant: f64,
    /// `r₁·r₂`.
    pub pump_product: f64,
    /// Trapping-regime criterion `discriminant ≠ 0 AND r₁r₂ ≠ 0`; absent
    /// outside `p = 1`, `Δ = 0` where the criterion does not apply.
    pub analytic_unique: Option<bool>,
    /// Dimension of the numerical null space of the generator.
    pub null_space_dim: usize,
    /// Whether the analytic verdict matches the kernel dimension. Boundary
    /// configurations (for example `r₂ = 0` with `γ₂ > 0`) can genuinely
    /// disagree: the analytic criterion sees a closed pump channel while the
    /// kernel still collapses to a single state. `false` is a diagnostic,
    /// not an error.
    pub consistent: bool,
}

impl UniquenessReport {
    pub fn numerically_unique(&self) -> bool {
        self.null_space_dim == 1
    }
}

/// A computed steady state with its origin and classification.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateReport {
    pub state: DensityMatrix,
    pub provenance: Provenance,
    pub classification: Classification,
    /// `ρ_aa + 2 Re ρ_bc` of the state.
    pub c0: f64,
    pub uniqueness: UniquenessReport,
}

/// Uniqueness analysis with the default rank tolerance.
pub fn uniqueness(params: &SystemParams) -> UniquenessReport {
    uniqueness_with_tol(params, DEFAULT_RANK_TOL)
}

/// Uniqueness analysis with an explicit relative rank tolerance.
pub fn uniqueness_with_tol(params: &SystemParams, rank_tol: f64) -> UniquenessReport {
    let discriminant = discriminant(params);
    let pump_product = params.r1() * params.r2();
    let null_space_dim = null_space_steady(params, rank_tol).dimension;
    let analytic_unique = params
        .is_trapping_regime()
        .then_some(discriminant != 0.0 && pump_product != 0.0);
    let consistent = match analytic_unique {
        Some(flag) => flag == (null_space_dim == 1),
        None => true,
    };
    UniquenessReport {
        discriminant,
        pump_product,
        analytic_unique,
        null_space_dim,
        consistent,
    }
}

/// `(√(r₂γ₁) - √(r₁γ₂))²`: zero exactly when pump and decay branching
/// ratios coincide, which is when the upper level stops discriminating
/// between the two lower levels.
pub fn discriminant(params: &SystemParams) -> f64 {
    let a = (params.r2() * params.gamma1()).sqrt();
    let b = (params.r1() * params.gamma2()).sqrt();
    (a - b) * (a - b)
}

/// Closed-form trapped steady state of a unique trapping-regime
/// configuration: `ρ_aa = 0`, `ρ_bb = r₂/R`, `ρ_cc = r₁/R`,
/// `ρ_bc = -√(r₁r₂)/R`. Independent of both decay rates.
pub fn analytic_cpt(params: &SystemParams) -> Result<SteadyStateReport, SteadyError> {
    if !params.is_trapping_regime() {
        return Err(SteadyError::OutsideTrappingRegime {
            p: params.p(),
            delta: params.delta(),
        });
    }
    let uniq = uniqueness(params);
    if uniq.analytic_unique != Some(true) {
        return Err(SteadyError::NotUnique {
            discriminant: uniq.discriminant,
            pump_product: uniq.pump_product,
        });
    }
    let r_sum = params.pump_sum();
    let state = DensityMatrix::with_bc_coherence(
        params.r2() / r_sum,
        params.r1() / r_sum,
        -(params.r1() * params.r2()).sqrt() / r_sum,
        0.0,
    )?;
    Ok(report(state, Provenance::AnalyticCpt, uniq))
}

/// Index layout of the real 9-coordinate Hermitian parameterization.
pub const REAL_COORDS: [&str; 9] = [
    "rho_aa", "rho_bb", "rho_cc", "re_ab", "im_ab", "re_ac", "im_ac", "re_bc", "im_bc",
];

/// The generator of the equations of motion as explicit matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGenerator {
    complex: DMatrix<Complex64>,
    real: DMatrix<f64>,
}

impl LinearGenerator {
    /// 9×9 complex matrix acting on the row-major vectorization
    /// `(ρ_aa, ρ_ab, ρ_ac, ρ_ba, ρ_bb, ρ_bc, ρ_ca, ρ_cb, ρ_cc)`.
    pub fn complex_matrix(&self) -> &DMatrix<Complex64> {
        &self.complex
    }

    /// 9×9 real matrix acting on the Hermitian coordinates [`REAL_COORDS`];
    /// same spectrum as the complex form on Hermitian directions.
    pub fn real_matrix(&self) -> &DMatrix<f64> {
        &self.real
    }

    /// Eigenvalues of the real form.
    pub fn spectrum(&self) -> Vec<Complex64> {
        self.real
            .clone()
            .complex_eigenvalues()
            .iter()
            .copied()
            .collect()
    }
}

/// Builds both matrix forms of the generator from coefficient tables
/// (independently of the entry-wise right-hand side, so the two can be
/// cross-checked).
pub fn build_liouvillian(params: &SystemParams) -> LinearGenerator {
    let (r1, r2) = (params.r1(), params.r2());
    let (g1, g2) = (params.gamma1(), params.gamma2());
    let k = params.pump_cross();
    let g = params.decay_cross();
    let delta = params.delta();
    let total = g1 + g2 + r1 + r2;
    let d_ab = 0.5 * (g1 + g2 + 2.0 * r1 + r2);
    let d_ac = 0.5 * (g1 + g2 + r1 + 2.0 * r2);
    let half_r = 0.5 * (r1 + r2);
    let half_k = 0.5 * k;

    #[rustfmt::skip]
    let real = DMatrix::from_row_slice(9, 9, &[
        // aa        bb       cc       re_ab   im_ab   re_ac   im_ac   re_bc    im_bc
        -total,      r1,      r2,      0.0,    0.0,    0.0,    0.0,    2.0 * k, 0.0,
        g1 + r1,    -r1,      0.0,     0.0,    0.0,    0.0,    0.0,    -k,      0.0,
        g2 + r2,     0.0,    -r2,     0.0,    0.0,    0.0,    0.0,    -k,      0.0,
        0.0,         0.0,     0.0,    -d_ab,   0.0,   -half_k, 0.0,    0.0,     0.0,
        0.0,         0.0,     0.0,     0.0,   -d_ab,   0.0,   -half_k, 0.0,     0.0,
        0.0,         0.0,     0.0,    -half_k, 0.0,   -d_ac,   0.0,    0.0,     0.0,
        0.0,         0.0,     0.0,     0.0,   -half_k, 0.0,   -d_ac,   0.0,     0.0,
        g + k,      -half_k, -half_k,  0.0,    0.0,    0.0,    0.0,   -half_r, -delta,
        0.0,         0.0,     0.0,     0.0,    0.0,    0.0,    0.0,    delta,  -half_r,
    ]);

    // Complex form on (aa, ab, ac, ba, bb, bc, ca, cb, cc).
    let mut complex = DMatrix::<Complex64>::zeros(9, 9);
    let re = |x: f64| Complex64::new(x, 0.0);
    let (aa, ab, ac, ba, bb, bc, ca, cb, cc) = (0, 1, 2, 3, 4, 5, 6, 7, 8);
    complex[(aa, aa)] = re(-total);
    complex[(aa, bb)] = re(r1);
    complex[(aa, cc)] = re(r2);
    complex[(aa, bc)] = re(k);
    complex[(aa, cb)] = re(k);
    complex[(ab, ab)] = re(-d_ab);
    complex[(ab, ac)] = re(-half_k);
    complex[(ac, ac)] = re(-d_ac);
    complex[(ac, ab)] = re(-half_k);
    complex[(ba, ba)] = re(-d_ab);
    complex[(ba, ca)] = re(-half_k);
    complex[(ca, ca)] = re(-d_ac);
    complex[(ca, ba)] = re(-half_k);
    complex[(bb, aa)] = re(g1 + r1);
    complex[(bb, bb)] = re(-r1);
    complex[(bb, bc)] = re(-half_k);
    complex[(bb, cb)] = re(-half_k);
    complex[(cc, aa)] = re(g2 + r2);
    complex[(cc, cc)] = re(-r2);
    complex[(cc, bc)] = re(-half_k);
    complex[(cc, cb)] = re(-half_k);
    complex[(bc, aa)] = re(g + k);
    complex[(bc, bb)] = re(-half_k);
    complex[(bc, cc)] = re(-half_k);
    complex[(bc, bc)] = Complex64::new(-half_r, delta);
    complex[(cb, aa)] = re(g + k);
    complex[(cb, bb)] = re(-half_k);
    complex[(cb, cc)] = re(-half_k);
    complex[(cb, cb)] = Complex64::new(-half_r, -delta);

    LinearGenerator { complex, real }
}

/// Magnitude of the real part of the slowest nonzero generator eigenvalue:
/// the asymptotic relaxation rate toward the steady manifold. `None` when
/// every mode is a zero mode (all rates vanish).
pub fn slowest_relaxation_rate(params: &SystemParams) -> Option<f64> {
    let zero_tol = 1e-9 * params.rate_scale();
    build_liouvillian(params)
        .spectrum()
        .iter()
        .filter(|ev| ev.norm() > zero_tol)
        .map(|ev| ev.re.abs())
        .fold(None, |acc: Option<f64>, x| {
            Some(acc.map_or(x, |a| a.min(x)))
        })
}

/// Numerical kernel of the generator in Hermitian coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct NullSpaceReport {
    pub dimension: usize,
    /// Hermitian kernel directions, orthonormal under the Frobenius inner
    /// product. Not density matrices (no trace or positivity normalization).
    pub basis: Vec<Mat3>,
    /// All nine singular values, descending.
    pub singular_values: Vec<f64>,
    /// Absolute threshold actually applied (`rank_tol · σ_max`).
    pub threshold: f64,
    /// Singular values within a decade of the threshold — a nonempty list
    /// means the rank decision is ambiguous at this tolerance.
    pub ambiguous: Vec<f64>,
    /// Trace-normalized kernel element when the kernel is one-dimensional
    /// and normalizable to a valid state.
    pub state: Option<DensityMatrix>,
}

/// Singular-value decomposition of the real generator, with kernel
/// extraction at relative tolerance `rank_tol` (values outside `(0, 0.5)`
/// fall back to [`DEFAULT_RANK_TOL`]).
pub fn null_space_steady(params: &SystemParams, rank_tol: f64) -> NullSpaceReport {
    let rank_tol = if rank_tol.is_finite() && rank_tol > 0.0 && rank_tol < 0.5 {
        rank_tol
    } else {
        DEFAULT_RANK_TOL
    };
    let m = build_liouvillian(params).real;
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..9).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .expect("singular values are finite")
    });
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let sigma_max = singular_values[0];
    let threshold = if sigma_max > 0.0 {
        rank_tol * sigma_max
    } else {
        rank_tol
    };
    let ambiguous: Vec<f64> = singular_values
        .iter()
        .copied()
        .filter(|&s| s > threshold / 10.0 && s < threshold * 10.0)
        .collect();

    let kernel_rows: Vec<Mat3> = order
        .iter()
        .filter(|&&i| svd.singular_values[i] <= threshold)
        .map(|&i| coords_to_matrix(v_t.row(i).iter().copied()))
        .collect();
    let dimension = kernel_rows.len();

    let state = if dimension == 1 {
        normalize_to_state(&kernel_rows[0])
    } else {
        None
    };
    let basis = orthonormalize(kernel_rows);

    NullSpaceReport {
        dimension,
        basis,
        singular_values,
        threshold,
        ambiguous,
        state,
    }
}

fn coords_to_matrix(coords: impl Iterator<Item = f64>) -> Mat3 {
    let v: Vec<f64> = coords.collect();
    let mut m = density::zero();
    m[0][0] = Complex64::new(v[0], 0.0);
    m[1][1] = Complex64::new(v[1], 0.0);
    m[2][2] = Complex64::new(v[2], 0.0);
    m[0][1] = Complex64::new(v[3], v[4]);
    m[1][0] = m[0][1].conj();
    m[0][2] = Complex64::new(v[5], v[6]);
    m[2][0] = m[0][2].conj();
    m[1][2] = Complex64::new(v[7], v[8]);
    m[2][1] = m[1][2].conj();
    m
}

fn frobenius(a: &Mat3, b: &Mat3) -> f64 {
    let mut acc = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            acc += (a[i][j].conj() * b[i][j]).re;
        }
    }
    acc
}

/// Modified Gram–Schmidt under the Frobenius inner product; inputs are
/// Hermitian so projection coefficients are real.
fn orthonormalize(mats: Vec<Mat3>) -> Vec<Mat3> {
    let mut basis: Vec<Mat3> = Vec::with_capacity(mats.len());
    for mut w in mats {
        for b in &basis {
            let c = frobenius(b, &w);
            for i in 0..3 {
                for j in 0..3 {
                    w[i][j] -= c * b[i][j];
                }
            }
        }
        let norm = frobenius(&w, &w).sqrt();
        if norm > 1e-10 {
            for row in w.iter_mut() {
                for e in row.iter_mut() {
                    *e /= norm;
                }
            }
            basis.push(w);
        }
    }
    basis
}

fn normalize_to_state(kernel: &Mat3) -> Option<DensityMatrix> {
    let trace = (kernel[0][0] + kernel[1][1] + kernel[2][2]).re;
    let scale = density::max_abs(kernel);
    if trace.abs() < 1e-8 * scale.max(f64::MIN_POSITIVE) {
        return None;
    }
    let mut m = *kernel;
    for row in m.iter_mut() {
        for e in row.iter_mut() {
            *e /= trace;
        }
    }
    density::resymmetrize(&mut m);
    DensityMatrix::new(m, Basis::Bare).ok()
}

/// Closed-form long-time limit of the fully symmetric configuration
/// (`r₁ = r₂ = r`, `γ₁ = γ₂ = γ`, trapping regime), selected by the initial
/// state through the conserved `c0`:
///
/// - `r > 0`: `ρ_aa(∞) = r(c0+1)/(2γ+4r)`, equal lower-level populations,
///   `Re ρ_bc(∞) = (c0 - ρ_aa(∞))/2`, everything else decays to zero.
/// - `r = 0, γ > 0`: the upper level empties symmetrically and the decay
///   interference shifts `Re ρ_bc` by `ρ_aa(0)/2`, carrying the initial
///   population imbalance and `Im ρ_bc` into the limit unchanged.
/// - all rates zero: the initial state is already steady.
pub fn degenerate_steady(
    params: &SystemParams,
    initial: &DensityMatrix,
) -> Result<SteadyStateReport, SteadyError> {
    if !params.is_trapping_regime() {
        return Err(SteadyError::OutsideTrappingRegime {
            p: params.p(),
            delta: params.delta(),
        });
    }
    if !params.is_rate_symmetric() {
        return Err(SteadyError::NotSymmetric {
            r1: params.r1(),
            r2: params.r2(),
            gamma1: params.gamma1(),
            gamma2: params.gamma2(),
        });
    }
    if initial.basis() != Basis::Bare {
        return Err(SteadyError::Model(ModelError::BasisMismatch {
            expected: Basis::Bare,
            found: initial.basis(),
        }));
    }
    let r = params.r1();
    let gamma = params.gamma1();
    let uniq = uniqueness(params);

    let state = if r > 0.0 {
        let c0 = initial.c0();
        let pop_a = r * (c0 + 1.0) / (2.0 * gamma + 4.0 * r);
        let re_bc = 0.5 * (c0 - pop_a);
        let pop_lower = 0.5 * (1.0 - pop_a);
        DensityMatrix::with_bc_coherence(pop_lower, pop_lower, re_bc, 0.0)?
    } else if gamma > 0.0 {
        let half_a = 0.5 * initial.population(crate::Level::A);
        let bc = initial.entry(crate::Level::B, crate::Level::C);
        let mut m = density::zero();
        m[1][1] = Complex64::new(initial.population(crate::Level::B) + half_a, 0.0);
        m[2][2] = Complex64::new(initial.population(crate::Level::C) + half_a, 0.0);
        m[1][2] = bc + half_a;
        m[2][1] = m[1][2].conj();
        DensityMatrix::new(m, Basis::Bare)?
    } else {
        *initial
    };
    Ok(report(state, Provenance::DegenerateClosedForm, uniq))
}

/// Long-time limit obtained by integrating from `initial` until the
/// right-hand side stays below the convergence tolerance (the horizon is an
/// upper bound; the run stops at convergence).
pub fn integrated_steady(
    params: &SystemParams,
    initial: &DensityMatrix,
    config: &IntegratorConfig,
) -> Result<SteadyStateReport, SteadyError> {
    let run = IntegratorConfig {
        stop_at_convergence: true,
        ..*config
    };
    let traj = integrate(params, initial, &run)?;
    let state = *traj.final_state();
    Ok(report(state, Provenance::Integrated, uniqueness(params)))
}

/// Computes the steady state by the cheapest route that applies:
///
/// 1. unique trapping-regime configuration → [`analytic_cpt`];
/// 2. fully symmetric configuration → [`degenerate_steady`] (needs `initial`);
/// 3. one-dimensional numerical kernel → its normalized state;
/// 4. otherwise → integration from `initial` to convergence.
pub fn steady_state(
    params: &SystemParams,
    initial: Option<&DensityMatrix>,
    config: &IntegratorConfig,
) -> Result<SteadyStateReport, SteadyError> {
    let uniq = uniqueness(params);
    if params.is_trapping_regime() {
        if uniq.analytic_unique == Some(true) {
            return analytic_cpt(params);
        }
        if params.is_rate_symmetric() {
            let initial = initial.ok_or(SteadyError::InitialRequired)?;
            return degenerate_steady(params, initial);
        }
    }
    if uniq.null_space_dim == 1 {
        if let Some(state) = null_space_steady(params, DEFAULT_RANK_TOL).state {
            return Ok(report(state, Provenance::NullSpace, uniq));
        }
    }
    let initial = initial.ok_or(SteadyError::InitialRequired)?;
    integrated_steady(params, initial, config)
}

/// Matches a state against the named limits, most specific first:
/// the antisymmetric maximal-coherence state, the symmetric one, then the
/// general trapped form `ρ_aa ≈ 0`, `ρ_bc ≈ -√(ρ_bb ρ_cc)`.
pub fn classify(state: &DensityMatrix) -> Classification {
    if state.max_entry_distance(&DensityMatrix::robust()) <= CLASSIFY_TOL {
        return Classification::Robust;
    }
    if state.max_entry_distance(&DensityMatrix::weak()) <= CLASSIFY_TOL {
        return Classification::Weak;
    }
    let obs = state.observables();
    let trapped_re = -(obs.pop_b * obs.pop_c).max(0.0).sqrt();
    if obs.pop_a.abs() <= CLASSIFY_TOL
        && (obs.coherence_re - trapped_re).abs() <= CLASSIFY_TOL
        && obs.coherence_im.abs() <= CLASSIFY_TOL
    {
        return Classification::CptGeneric;
    }
    Classification::Other
}

fn report(state: DensityMatrix, provenance: Provenance, uniq: UniquenessReport) -> SteadyStateReport {
    SteadyStateReport {
        classification: classify(&state),
        c0: state.c0(),
        state,
        provenance,
        uniqueness: uniq,
    }
}

/// Max-norm of the right-hand side at `state`: how far from stationary it is.
pub fn residual(params: &SystemParams, state: &DensityMatrix) -> f64 {
    density::max_abs(&rhs_raw(params, state.entries()))
}
