//! The dark/bright superposition basis of the lower levels and the
//! transformed equations of motion.
//!
//! For pump rates `r₁`, `r₂` (with `R = r₁ + r₂ > 0`) the pump couples only
//! the bright combination `|B⟩ = (√r₁|b⟩ + √r₂|c⟩)/√R` to the upper level;
//! the orthogonal dark combination `|D⟩ = (√r₂|b⟩ - √r₁|c⟩)/√R` decouples
//! from it. At `p = 1`, `Δ = 0` the five dressed coordinates
//! `(ρ_DD, ρ_BB, ρ_aa, Re ρ_DB, Im ρ_DB)` close on themselves: the dark
//! population only ever grows (fed at the discriminant rate), the bright
//! population and coherence decay at `R` and `R/2`.

use nalgebra::SMatrix;
use num_complex::Complex64;

use crate::density::{self, DensityMatrix, Mat3};
use crate::params::SystemParams;
use crate::steady::discriminant;
use crate::{Basis, ModelError};

/// Errors from the dressed-basis decomposition.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DressedError {
    /// The closed dressed-sector equations hold only at `p = 1`, `Δ = 0`.
    #[error("dressed-rate decomposition requires p = 1 and delta = 0 (got p = {p}, delta = {delta})")]
    OutsideTrappingRegime { p: f64, delta: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The rotation between the bare lower levels and the dark/bright pair.
///
/// Stored as the two weights `c_d = √(r₂/R)`, `c_b = √(r₁/R)`:
/// `|D⟩ = c_d|b⟩ - c_b|c⟩`, `|B⟩ = c_b|b⟩ + c_d|c⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DressedBasis {
    cd: f64,
    cb: f64,
}

impl DressedBasis {
    /// Basis for pump rates `r1`, `r2`; requires `r1 + r2 > 0`.
    pub fn new(r1: f64, r2: f64) -> Result<Self, ModelError> {
        for (name, value) in [("r1", r1), ("r2", r2)] {
            if !value.is_finite() || value < 0.0 {
                return Err(ModelError::InvalidRate { name, value });
            }
        }
        let sum = r1 + r2;
        if sum <= 0.0 {
            return Err(ModelError::UndefinedDressedBasis);
        }
        Ok(Self {
            cd: (r2 / sum).sqrt(),
            cb: (r1 / sum).sqrt(),
        })
    }

    pub fn from_params(params: &SystemParams) -> Result<Self, ModelError> {
        Self::new(params.r1(), params.r2())
    }

    /// The equal-weight basis (`c_d = c_b = 1/√2`): the natural reporting
    /// basis when both pump rates vanish and no pump singles out a direction.
    pub fn symmetric() -> Self {
        Self {
            cd: std::f64::consts::FRAC_1_SQRT_2,
            cb: std::f64::consts::FRAC_1_SQRT_2,
        }
    }

    /// Amplitudes of `|D⟩` on `(|b⟩, |c⟩)`.
    pub fn dark_weights(&self) -> (f64, f64) {
        (self.cd, -self.cb)
    }

    /// Amplitudes of `|B⟩` on `(|b⟩, |c⟩)`.
    pub fn bright_weights(&self) -> (f64, f64) {
        (self.cb, self.cd)
    }

    /// Congruence into the dressed basis. The output inherits the input's
    /// numerical health (the rotation is orthogonal); it is re-symmetrized
    /// but not re-validated.
    pub fn to_dressed(&self, rho: &DensityMatrix) -> Result<DensityMatrix, ModelError> {
        if rho.basis() != Basis::Bare {
            return Err(ModelError::BasisMismatch {
                expected: Basis::Bare,
                found: rho.basis(),
            });
        }
        Ok(DensityMatrix::from_raw_unchecked(
            self.rotate(rho.entries(), self.cd, self.cb),
            Basis::Dressed,
        ))
    }

    /// Inverse congruence back to the bare basis.
    pub fn to_bare(&self, rho: &DensityMatrix) -> Result<DensityMatrix, ModelError> {
        if rho.basis() != Basis::Dressed {
            return Err(ModelError::BasisMismatch {
                expected: Basis::Dressed,
                found: rho.basis(),
            });
        }
        // The inverse rotation swaps the roles: cd ↦ cd, cb ↦ -cb.
        Ok(DensityMatrix::from_raw_unchecked(
            self.rotate(rho.entries(), self.cd, -self.cb),
            Basis::Bare,
        ))
    }

    /// `U ρ U†` for `U = [[1,0,0],[0,cd,-cb],[0,cb,cd]]`, built Hermitian.
    fn rotate(&self, m: &Mat3, cd: f64, cb: f64) -> Mat3 {
        let mut out = density::zero();
        out[0][0] = m[0][0];
        let a1 = cd * m[0][1] - cb * m[0][2];
        let a2 = cb * m[0][1] + cd * m[0][2];
        out[0][1] = a1;
        out[0][2] = a2;
        out[1][0] = a1.conj();
        out[2][0] = a2.conj();
        let cross = cd * cb;
        let coh_sum = m[1][2] + m[2][1];
        out[1][1] = cd * cd * m[1][1] + cb * cb * m[2][2] - cross * coh_sum;
        out[2][2] = cb * cb * m[1][1] + cd * cd * m[2][2] + cross * coh_sum;
        let db = cross * (m[1][1] - m[2][2]) + cd * cd * m[1][2] - cb * cb * m[2][1];
        out[1][2] = db;
        out[2][1] = db.conj();
        density::resymmetrize(&mut out);
        out
    }
}

/// Coefficients and instantaneous derivatives of the closed dressed-sector
/// equations at `p = 1`, `Δ = 0`:
///
/// - `ρ̇_DD = dark_feed · ρ_aa`
/// - `ρ̇_BB = bright_feed · ρ_aa - bright_decay · ρ_BB`
/// - `ρ̇_aa = -upper_decay · ρ_aa + bright_decay · ρ_BB`
/// - `ρ̇_DB = cross_feed · ρ_aa - cross_decay · ρ_DB`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DressedRateSet {
    /// `(√(r₂γ₁) - √(r₁γ₂))²/R` — the discriminant over `R`; zero exactly
    /// when the steady state stops being unique.
    pub dark_feed: f64,
    /// `((√(r₁γ₁) + √(r₂γ₂))² + R²)/R`.
    pub bright_feed: f64,
    /// `((γ₁-γ₂)√(r₁r₂) - (r₁-r₂)√(γ₁γ₂))/R`.
    pub cross_feed: f64,
    /// `R = r₁ + r₂`.
    pub bright_decay: f64,
    /// `Γ = r₁ + γ₁ + r₂ + γ₂`.
    pub upper_decay: f64,
    /// `R/2`.
    pub cross_decay: f64,
    pub deriv_dark: f64,
    pub deriv_bright: f64,
    pub deriv_upper: f64,
    pub deriv_cross: Complex64,
}

/// Evaluates the dressed-sector coefficients and the derivatives at `rho`
/// (a bare-basis state; it is rotated internally).
pub fn dressed_rates(
    params: &SystemParams,
    rho: &DensityMatrix,
) -> Result<DressedRateSet, DressedError> {
    if !params.is_trapping_regime() {
        return Err(DressedError::OutsideTrappingRegime {
            p: params.p(),
            delta: params.delta(),
        });
    }
    let basis = DressedBasis::from_params(params)?;
    let dressed = basis.to_dressed(rho)?;
    let c = dressed_coefficients(params);
    let pop_a = dressed.population(crate::Level::A);
    let pop_bright = dressed.bright_population();
    let db = dressed.dark_bright_coherence();
    Ok(DressedRateSet {
        deriv_dark: c.dark_feed * pop_a,
        deriv_bright: c.bright_feed * pop_a - c.bright_decay * pop_bright,
        deriv_upper: -c.upper_decay * pop_a + c.bright_decay * pop_bright,
        deriv_cross: c.cross_feed * pop_a - c.cross_decay * db,
        ..c
    })
}

fn dressed_coefficients(params: &SystemParams) -> DressedRateSet {
    let (r1, r2) = (params.r1(), params.r2());
    let (g1, g2) = (params.gamma1(), params.gamma2());
    let r_sum = params.pump_sum();
    let bright_amp = (r1 * g1).sqrt() + (r2 * g2).sqrt();
    DressedRateSet {
        dark_feed: discriminant(params) / r_sum,
        bright_feed: (bright_amp * bright_amp + r_sum * r_sum) / r_sum,
        cross_feed: ((g1 - g2) * (r1 * r2).sqrt() - (r1 - r2) * (g1 * g2).sqrt()) / r_sum,
        bright_decay: r_sum,
        upper_decay: params.upper_depletion(),
        cross_decay: 0.5 * r_sum,
        deriv_dark: 0.0,
        deriv_bright: 0.0,
        deriv_upper: 0.0,
        deriv_cross: Complex64::ZERO,
    }
}

/// Coordinate labels of the dressed-sector generator.
pub const DRESSED_COORDS: [&str; 5] = ["rho_DD", "rho_BB", "rho_aa", "re_DB", "im_DB"];

/// The closed dressed-sector generator on
/// `(ρ_DD, ρ_BB, ρ_aa, Re ρ_DB, Im ρ_DB)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DressedGenerator {
    full: SMatrix<f64, 5, 5>,
    relaxation: SMatrix<f64, 5, 5>,
    rates: DressedRateSet,
}

impl DressedGenerator {
    /// The full sector generator, feeds included.
    pub fn matrix(&self) -> &SMatrix<f64, 5, 5> {
        &self.full
    }

    /// The generator with the `ρ_aa`-sourced feed terms removed: the pure
    /// relaxation skeleton. Lower triangular, so its eigenvalues are exactly
    /// the decay rates `{0, R, Γ, R/2, R/2}` — the feeds shift the coupled
    /// bright/upper eigenvalues of the full matrix away from `R` and `Γ`
    /// (their product becomes the discriminant).
    pub fn relaxation_matrix(&self) -> &SMatrix<f64, 5, 5> {
        &self.relaxation
    }

    /// The coefficient set (derivative fields zero).
    pub fn rates(&self) -> &DressedRateSet {
        &self.rates
    }

    /// Decay-rate magnitudes of the relaxation skeleton, in coordinate
    /// order: `[0, R, Γ, R/2, R/2]`.
    pub fn relaxation_rates(&self) -> [f64; 5] {
        let r = &self.rates;
        [
            0.0,
            r.bright_decay,
            r.upper_decay,
            r.cross_decay,
            r.cross_decay,
        ]
    }

    /// Eigenvalues of the full sector generator.
    pub fn spectrum(&self) -> Vec<Complex64> {
        self.full.complex_eigenvalues().iter().copied().collect()
    }
}

/// Builds the dressed-sector generator; requires `p = 1`, `Δ = 0` and
/// `r₁ + r₂ > 0`.
pub fn dressed_generator(params: &SystemParams) -> Result<DressedGenerator, DressedError> {
    if !params.is_trapping_regime() {
        return Err(DressedError::OutsideTrappingRegime {
            p: params.p(),
            delta: params.delta(),
        });
    }
    if params.pump_sum() <= 0.0 {
        return Err(ModelError::UndefinedDressedBasis.into());
    }
    let c = dressed_coefficients(params);
    let mut full = SMatrix::<f64, 5, 5>::zeros();
    full[(0, 2)] = c.dark_feed;
    full[(1, 1)] = -c.bright_decay;
    full[(1, 2)] = c.bright_feed;
    full[(2, 1)] = c.bright_decay;
    full[(2, 2)] = -c.upper_decay;
    full[(3, 2)] = c.cross_feed;
    full[(3, 3)] = -c.cross_decay;
    full[(4, 4)] = -c.cross_decay;
    let mut relaxation = full;
    relaxation[(0, 2)] = 0.0;
    relaxation[(1, 2)] = 0.0;
    relaxation[(3, 2)] = 0.0;
    Ok(DressedGenerator {
        full,
        relaxation,
        rates: c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steady::analytic_cpt;
    use crate::{DensityMatrix, Level};
    use approx::assert_relative_eq;

    #[test]
    fn weights_follow_the_pump_ratio() {
        let basis = DressedBasis::new(1.0, 3.0).unwrap();
        let (db, dc) = basis.dark_weights();
        assert_relative_eq!(db, 0.75f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(dc, -0.5, epsilon = 1e-15);
        let (bb, bc) = basis.bright_weights();
        assert_relative_eq!(bb, 0.5, epsilon = 1e-15);
        assert_relative_eq!(bc, 0.75f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn rejects_zero_pump_sum() {
        assert_eq!(
            DressedBasis::new(0.0, 0.0).unwrap_err(),
            ModelError::UndefinedDressedBasis
        );
        assert!(matches!(
            DressedBasis::new(-1.0, 2.0).unwrap_err(),
            ModelError::InvalidRate { .. }
        ));
    }

    #[test]
    fn trapped_state_is_the_pure_dark_state() {
        for (r1, r2) in [(1.0, 3.0), (0.2, 0.7), (5.0, 0.1)] {
            let params = SystemParams::new(r1, r2, 1.3, 0.4, 1.0, 0.0).unwrap();
            let cpt = analytic_cpt(&params).unwrap().state;
            let dressed = DressedBasis::from_params(&params)
                .unwrap()
                .to_dressed(&cpt)
                .unwrap();
            assert_relative_eq!(dressed.dark_population(), 1.0, epsilon = 1e-14);
            assert!(dressed.bright_population().abs() < 1e-14);
            assert!(dressed.dark_bright_coherence().norm() < 1e-14);
        }
    }

    #[test]
    fn antisymmetric_state_is_dark_for_equal_pumping() {
        let basis = DressedBasis::new(2.5, 2.5).unwrap();
        let dressed = basis.to_dressed(&DensityMatrix::robust()).unwrap();
        assert_relative_eq!(dressed.dark_population(), 1.0, epsilon = 1e-15);
        // The symmetric maximal-coherence state is the bright state instead.
        let weak = basis.to_dressed(&DensityMatrix::weak()).unwrap();
        assert_relative_eq!(weak.bright_population(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn round_trip_is_identity() {
        let basis = DressedBasis::new(0.7, 2.2).unwrap();
        let rho = DensityMatrix::with_bc_coherence(0.35, 0.4, -0.1, 0.22).unwrap();
        let back = basis.to_bare(&basis.to_dressed(&rho).unwrap()).unwrap();
        assert!(back.max_entry_distance(&rho) < 1e-15);
        assert_eq!(back.basis(), Basis::Bare);
    }

    #[test]
    fn transform_rejects_wrong_basis() {
        let basis = DressedBasis::new(1.0, 1.0).unwrap();
        let rho = DensityMatrix::maximally_mixed();
        let dressed = basis.to_dressed(&rho).unwrap();
        assert!(matches!(
            basis.to_dressed(&dressed),
            Err(ModelError::BasisMismatch { .. })
        ));
        assert!(matches!(
            basis.to_bare(&rho),
            Err(ModelError::BasisMismatch { .. })
        ));
    }

    #[test]
    fn dark_feed_value_for_uneven_decay() {
        // r = (1, 4), γ = (1, 1): dark_feed = (√4 - √1)²/5 = 1/5, so a fifth
        // of the upper population leaks into the dark state per unit time.
        let params = SystemParams::new(1.0, 4.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        let rho = DensityMatrix::from_diagonal(0.2, 0.5, 0.3).unwrap();
        let rates = dressed_rates(&params, &rho).unwrap();
        assert_relative_eq!(rates.dark_feed, 0.2, epsilon = 1e-14);
        assert_relative_eq!(rates.deriv_dark, 0.04, epsilon = 1e-14);
        assert_relative_eq!(rates.bright_decay, 5.0, epsilon = 1e-15);
        assert_relative_eq!(rates.upper_decay, 7.0, epsilon = 1e-15);
    }

    #[test]
    fn dressed_rates_match_the_rotated_derivative() {
        let params = SystemParams::new(1.0, 2.0, 0.5, 1.5, 1.0, 0.0).unwrap();
        let basis = DressedBasis::from_params(&params).unwrap();
        let rho = DensityMatrix::with_bc_coherence(0.3, 0.25, 0.12, -0.17).unwrap();
        let rates = dressed_rates(&params, &rho).unwrap();
        // Rotate the bare derivative into the dressed basis and compare.
        let d = crate::master::rhs(&params, &rho).unwrap();
        let rotated = basis.rotate(d.entries(), basis.cd, basis.cb);
        assert_relative_eq!(rates.deriv_dark, rotated[1][1].re, epsilon = 1e-13);
        assert_relative_eq!(rates.deriv_bright, rotated[2][2].re, epsilon = 1e-13);
        assert_relative_eq!(rates.deriv_upper, rotated[0][0].re, epsilon = 1e-13);
        assert_relative_eq!(rates.deriv_cross.re, rotated[1][2].re, epsilon = 1e-13);
        assert_relative_eq!(rates.deriv_cross.im, rotated[1][2].im, epsilon = 1e-13);
    }

    #[test]
    fn dressed_rates_reject_regime_violations() {
        let rho = DensityMatrix::maximally_mixed();
        let misaligned = SystemParams::new(1.0, 1.0, 1.0, 1.0, 0.5, 0.0).unwrap();
        assert!(matches!(
            dressed_rates(&misaligned, &rho),
            Err(DressedError::OutsideTrappingRegime { .. })
        ));
        let detuned = SystemParams::new(1.0, 1.0, 1.0, 1.0, 1.0, 0.1).unwrap();
        assert!(matches!(
            dressed_rates(&detuned, &rho),
            Err(DressedError::OutsideTrappingRegime { .. })
        ));
        let unpumped = SystemParams::new(0.0, 0.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        assert!(matches!(
            dressed_rates(&unpumped, &rho),
            Err(DressedError::Model(ModelError::UndefinedDressedBasis))
        ));
    }

    #[test]
    fn relaxation_skeleton_is_triangular_with_plain_decay_rates() {
        let params = SystemParams::new(1.0, 3.0, 4.0, 0.25, 1.0, 0.0).unwrap();
        let gen = dressed_generator(&params).unwrap();
        let relax = gen.relaxation_matrix();
        for i in 0..5 {
            for j in (i + 1)..5 {
                assert_eq!(relax[(i, j)], 0.0, "({i},{j}) above diagonal");
            }
        }
        let mut mags: Vec<f64> = gen
            .relaxation_matrix()
            .complex_eigenvalues()
            .iter()
            .map(|ev| ev.norm())
            .collect();
        mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let r_sum = params.pump_sum();
        let expected = [0.0, 0.5 * r_sum, 0.5 * r_sum, r_sum, params.upper_depletion()];
        for (got, want) in mags.iter().zip(expected) {
            assert_relative_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn full_generator_matches_instantaneous_rates() {
        let params = SystemParams::new(0.8, 1.7, 0.6, 2.1, 1.0, 0.0).unwrap();
        let gen = dressed_generator(&params).unwrap();
        let basis = DressedBasis::from_params(&params).unwrap();
        let rho = DensityMatrix::with_bc_coherence(0.28, 0.33, -0.05, 0.11).unwrap();
        let dressed = basis.to_dressed(&rho).unwrap();
        let coords = nalgebra::SVector::<f64, 5>::from([
            dressed.dark_population(),
            dressed.bright_population(),
            dressed.population(Level::A),
            dressed.dark_bright_coherence().re,
            dressed.dark_bright_coherence().im,
        ]);
        let deriv = gen.matrix() * coords;
        let rates = dressed_rates(&params, &rho).unwrap();
        assert_relative_eq!(deriv[0], rates.deriv_dark, epsilon = 1e-13);
        assert_relative_eq!(deriv[1], rates.deriv_bright, epsilon = 1e-13);
        assert_relative_eq!(deriv[2], rates.deriv_upper, epsilon = 1e-13);
        assert_relative_eq!(deriv[3], rates.deriv_cross.re, epsilon = 1e-13);
        assert_relative_eq!(deriv[4], rates.deriv_cross.im, epsilon = 1e-13);
    }

    #[test]
    fn equal_branching_freezes_the_dark_state() {
        // r1γ2 = r2γ1 makes the discriminant vanish: nothing feeds the dark
        // population and the steady state stops being unique.
        let params = SystemParams::new(1.0, 2.0, 0.5, 1.0, 1.0, 0.0).unwrap();
        let gen = dressed_generator(&params).unwrap();
        assert!(gen.rates().dark_feed.abs() < 1e-15);
        assert_eq!(crate::steady::uniqueness(&params).analytic_unique, Some(false));
    }
}
