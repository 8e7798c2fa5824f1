//! System parameters: decay rates, pump rates, pump alignment, detuning.

use serde::{Deserialize, Serialize};

use crate::ModelError;

/// Rates and couplings of the incoherently pumped Λ system.
///
/// `gamma1`, `gamma2` are the spontaneous decay rates `a → b`, `a → c`;
/// `r1`, `r2` the incoherent pump rates `b → a`, `c → a`. The alignment
/// `p ∈ [-1, 1]` scales the pump and decay interference cross terms
/// `p √(r₁ r₂)` and `p √(γ₁ γ₂)`; `delta` is the two-photon (Raman)
/// detuning between the lower levels.
///
/// All rates and `delta` are in the same (arbitrary) inverse-time unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    r1: f64,
    r2: f64,
    gamma1: f64,
    gamma2: f64,
    p: f64,
    delta: f64,
}

impl SystemParams {
    /// Validates and builds a parameter set.
    ///
    /// Rates must be finite and non-negative, `p` must lie in `[-1, 1]`,
    /// `delta` must be finite.
    pub fn new(
        r1: f64,
        r2: f64,
        gamma1: f64,
        gamma2: f64,
        p: f64,
        delta: f64,
    ) -> Result<Self, ModelError> {
        for (name, value) in [
            ("r1", r1),
            ("r2", r2),
            ("gamma1", gamma1),
            ("gamma2", gamma2),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(ModelError::InvalidRate { name, value });
            }
        }
        if !p.is_finite() || !(-1.0..=1.0).contains(&p) {
            return Err(ModelError::InvalidAlignment { value: p });
        }
        if !delta.is_finite() {
            return Err(ModelError::InvalidDetuning { value: delta });
        }
        Ok(Self {
            r1,
            r2,
            gamma1,
            gamma2,
            p,
            delta,
        })
    }

    /// Fully symmetric configuration: `r1 = r2 = r`, `gamma1 = gamma2 = gamma`,
    /// perfect alignment, zero detuning.
    pub fn symmetric(r: f64, gamma: f64) -> Result<Self, ModelError> {
        Self::new(r, r, gamma, gamma, 1.0, 0.0)
    }

    pub fn r1(&self) -> f64 {
        self.r1
    }

    pub fn r2(&self) -> f64 {
        self.r2
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    pub fn gamma2(&self) -> f64 {
        self.gamma2
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Total pump rate `R = r₁ + r₂`: the decay rate of the lower-level
    /// coherence and (at p = 1) of the bright superposition.
    pub fn pump_sum(&self) -> f64 {
        self.r1 + self.r2
    }

    /// Total depletion rate of the upper level, `Γ = r₁ + γ₁ + r₂ + γ₂`.
    pub fn upper_depletion(&self) -> f64 {
        self.r1 + self.gamma1 + self.r2 + self.gamma2
    }

    /// Pump interference cross term `K = p √(r₁ r₂)`.
    pub fn pump_cross(&self) -> f64 {
        self.p * (self.r1 * self.r2).sqrt()
    }

    /// Decay interference cross term `G = p √(γ₁ γ₂)`.
    pub fn decay_cross(&self) -> f64 {
        self.p * (self.gamma1 * self.gamma2).sqrt()
    }

    /// Whether rates are pairwise equal (`r1 = r2` and `gamma1 = gamma2`).
    pub fn is_rate_symmetric(&self) -> bool {
        self.r1 == self.r2 && self.gamma1 == self.gamma2
    }

    /// Whether the trapping regime holds exactly: `p = 1` and `delta = 0`.
    pub fn is_trapping_regime(&self) -> bool {
        self.p == 1.0 && self.delta == 0.0
    }

    /// Natural time unit for reporting: `1/γ₁` when `γ₁ > 0`, otherwise the
    /// inverse of the largest rate, or 1 if every rate vanishes.
    pub fn time_unit(&self) -> f64 {
        if self.gamma1 > 0.0 {
            1.0 / self.gamma1
        } else {
            let max = self
                .r1
                .max(self.r2)
                .max(self.gamma1)
                .max(self.gamma2)
                .max(self.delta.abs());
            if max > 0.0 {
                1.0 / max
            } else {
                1.0
            }
        }
    }

    /// Largest rate scale in the set (at least `1` if all rates vanish);
    /// used to convert nominal step sizes into integration steps.
    pub fn rate_scale(&self) -> f64 {
        self.r1
            .max(self.r2)
            .max(self.gamma1)
            .max(self.gamma2)
            .max(self.delta.abs())
            .max(1.0)
    }

    /// The same physical system with every rate (and the detuning) multiplied
    /// by `factor`; equivalent to measuring time in units of `1/factor`.
    pub fn scaled_by(&self, factor: f64) -> Self {
        Self {
            r1: self.r1 * factor,
            r2: self.r2 * factor,
            gamma1: self.gamma1 * factor,
            gamma2: self.gamma2 * factor,
            p: self.p,
            delta: self.delta * factor,
        }
    }
}
