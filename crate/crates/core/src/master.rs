//! Equations of motion for the incoherently pumped Λ system.
//!
//! Rate-equation form with two interference cross terms: `K = p √(r₁ r₂)`
//! couples the lower-level coherence to the populations through the pump,
//! `G = p √(γ₁ γ₂)` feeds it through spontaneous decay. At `p = 1`, `Δ = 0`
//! these cross terms let the dark superposition of `b` and `c` decouple.

use num_complex::Complex64;

use crate::density::{self, DensityMatrix, DerivativeMatrix, Mat3};
use crate::params::SystemParams;
use crate::{Basis, ModelError};

/// Time derivative of `rho` under pumping, decay, and detuning.
///
/// `rho` must be in the bare basis with finite entries. The derivative is
/// trace-free and Hermitian (each to roundoff) for every Hermitian input —
/// including unphysical ones — so trace and Hermiticity errors are never
/// amplified by propagation.
pub fn rhs(params: &SystemParams, rho: &DensityMatrix) -> Result<DerivativeMatrix, ModelError> {
    if rho.basis() != Basis::Bare {
        return Err(ModelError::BasisMismatch {
            expected: Basis::Bare,
            found: rho.basis(),
        });
    }
    if !density::is_finite(rho.entries()) {
        // Unchecked states out of the integrator can carry non-finite entries.
        for row in crate::Level::ALL {
            for col in crate::Level::ALL {
                let e = rho.entry(row, col);
                if !e.re.is_finite() || !e.im.is_finite() {
                    return Err(ModelError::NonFinite { row, col });
                }
            }
        }
    }
    Ok(DerivativeMatrix::from_raw(rhs_raw(params, rho.entries())))
}

/// The same right-hand side on raw storage, one formula per entry.
///
/// Deliberately does not assume Hermiticity of the input: `ρ_cb` evolves by
/// the conjugate equation of `ρ_bc` (likewise `ba`/`ca`), which makes the map
/// exactly complex-linear. The integrator and the generator-matrix builders
/// both route through here.
pub(crate) fn rhs_raw(params: &SystemParams, m: &Mat3) -> Mat3 {
    let (r1, r2) = (params.r1(), params.r2());
    let (g1, g2) = (params.gamma1(), params.gamma2());
    let k = params.pump_cross();
    let g = params.decay_cross();
    let total = g1 + g2 + r1 + r2;
    // Coherence damping rates: ab sees both decays plus pumping out of b
    // twice (amplitude on a and on b), ac the mirror image; bc sees only the
    // total pump rate.
    let d_ab = 0.5 * (g1 + g2 + 2.0 * r1 + r2);
    let d_ac = 0.5 * (g1 + g2 + r1 + 2.0 * r2);
    let half_r = 0.5 * (r1 + r2);
    let i_delta = Complex64::new(0.0, params.delta());

    let aa = m[0][0];
    let bb = m[1][1];
    let cc = m[2][2];
    let coh_sum = m[1][2] + m[2][1];
    // Source feeding both bc and cb: decay interference plus pump interference
    // acting on the population imbalance with the coherence already removed.
    let source = g * aa + 0.5 * k * (2.0 * aa - bb - cc);

    let mut d = density::zero();
    d[0][0] = -total * aa + r1 * bb + r2 * cc + k * coh_sum;
    d[1][1] = (g1 + r1) * aa - r1 * bb - 0.5 * k * coh_sum;
    d[2][2] = (g2 + r2) * aa - r2 * cc - 0.5 * k * coh_sum;
    d[0][1] = -d_ab * m[0][1] - 0.5 * k * m[0][2];
    d[0][2] = -d_ac * m[0][2] - 0.5 * k * m[0][1];
    d[1][0] = -d_ab * m[1][0] - 0.5 * k * m[2][0];
    d[2][0] = -d_ac * m[2][0] - 0.5 * k * m[1][0];
    d[1][2] = -half_r * m[1][2] + source + i_delta * m[1][2];
    d[2][1] = -half_r * m[2][1] + source - i_delta * m[2][1];
    d
}
