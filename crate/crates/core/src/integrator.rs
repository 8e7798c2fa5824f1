//! Time propagation: classic fixed-step RK4 and an embedded adaptive RK45
//! (Dormand–Prince) pair, with per-sample health diagnostics and
//! steady-state detection.
//!
//! [`integrate`] works in natural time units: rates are rescaled by
//! [`SystemParams::time_unit`] so reported times are multiples of that unit
//! (`1/γ₁` when `γ₁ > 0`). The single-step functions [`step_rk4`] and
//! [`step_rk45`] do no rescaling — `h` is in the same units as the rates.
//!
//! Every accepted state is replaced by its Hermitian part before recording;
//! because the right-hand side is exactly trace-free and Hermiticity-
//! preserving, trace and the symmetric-regime invariant `c0` drift only at
//! roundoff level. Positivity is monitored per sample, never enforced.

use serde::{Deserialize, Serialize};

use crate::density::{
    self, add_scaled, is_finite, max_abs, resymmetrize, DensityMatrix, Mat3, ObservableSet,
};
use crate::master::rhs_raw;
use crate::params::SystemParams;
use crate::{Basis, ModelError};

/// Propagation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Classic fourth-order Runge–Kutta with a fixed step; bit-reproducible.
    FixedRk4,
    /// Dormand–Prince 5(4) embedded pair with step-size control.
    AdaptiveRk45,
}

/// Accepted steps whose right-hand side stays below the convergence norm
/// tolerance before the trajectory is declared converged.
pub const STEADY_RUN_LENGTH: usize = 10;

/// Hard cap on integration steps (guards against absurd step/horizon ratios).
pub const STEP_LIMIT: u64 = 200_000_000;

/// Integration settings.
///
/// `step` is a nominal step in natural time units at unit rate scale: the
/// fixed RK4 step (and the initial RK45 step) is `step / rate_scale` of the
/// rescaled system, so stiffer parameter sets automatically step finer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Nominal step size; default `1e-3`.
    pub step: f64,
    /// Absolute tolerance per entry for RK45 error control; default `1e-10`.
    pub abs_tol: f64,
    /// Relative tolerance per entry for RK45 error control; default `1e-8`.
    pub rel_tol: f64,
    /// Integration horizon in natural time units; default `20`.
    pub horizon: f64,
    /// Right-hand-side max-entry norm below which a state counts as steady;
    /// default `1e-10`.
    pub convergence_norm_tol: f64,
    /// Record every n-th accepted step (the initial and final states are
    /// always recorded); default `1`.
    pub sample_stride: usize,
    /// Stop as soon as convergence is detected instead of running out the
    /// horizon; default `false`.
    pub stop_at_convergence: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::AdaptiveRk45,
            step: 1e-3,
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            horizon: 20.0,
            convergence_norm_tol: 1e-10,
            sample_stride: 1,
            stop_at_convergence: false,
        }
    }
}

impl IntegratorConfig {
    fn validate(&self) -> Result<(), IntegrateError> {
        let positive = [
            ("step", self.step),
            ("abs_tol", self.abs_tol),
            ("horizon", self.horizon),
            ("convergence_norm_tol", self.convergence_norm_tol),
        ];
        for (name, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(IntegrateError::InvalidConfig(format!(
                    "{name} must be positive and finite (got {value})"
                )));
            }
        }
        if !self.rel_tol.is_finite() || self.rel_tol < 0.0 {
            return Err(IntegrateError::InvalidConfig(format!(
                "rel_tol must be non-negative and finite (got {})",
                self.rel_tol
            )));
        }
        if self.sample_stride == 0 {
            return Err(IntegrateError::InvalidConfig(
                "sample_stride must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Errors during time propagation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IntegrateError {
    /// The adaptive controller shrank the step below its floor.
    #[error("step size underflow at t = {time:.6e} (h = {step:.3e})")]
    StepUnderflow { time: f64, step: f64 },
    /// A state entry became NaN or infinite.
    #[error("state became non-finite at t = {time:.6e}")]
    NonFinite { time: f64 },
    /// The configured step/horizon combination exceeds [`STEP_LIMIT`] steps.
    #[error("step limit of {limit} steps exceeded; increase step or shrink horizon")]
    StepLimitExceeded { limit: u64 },
    /// A configuration field is out of range.
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Numerical health of one recorded state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleDiagnostics {
    /// `|trace - 1|`.
    pub trace_error: f64,
    /// Max `|m[i][j] - conj(m[j][i])|` (zero after re-symmetrization).
    pub hermiticity_error: f64,
    /// Smallest eigenvalue of the Hermitian part.
    pub min_eigenvalue: f64,
    /// The combination `ρ_aa + 2 Re ρ_bc`.
    pub c0: f64,
}

/// One recorded point of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Time in natural units ([`Trajectory::time_unit`]).
    pub time: f64,
    pub state: DensityMatrix,
    pub observables: ObservableSet,
    pub diagnostics: SampleDiagnostics,
}

/// Result of a propagation run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    params: SystemParams,
    method: Method,
    time_unit: f64,
    samples: Vec<Sample>,
    converged_at: Option<f64>,
}

impl Trajectory {
    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    /// The last recorded sample; a trajectory always contains at least the
    /// initial state.
    pub fn final_sample(&self) -> &Sample {
        self.samples.last().expect("trajectory is never empty")
    }

    pub fn final_state(&self) -> &DensityMatrix {
        &self.final_sample().state
    }

    /// Time (in natural units) at which the right-hand side first dropped
    /// below the convergence tolerance and stayed there for
    /// [`STEADY_RUN_LENGTH`] accepted steps; `None` if never.
    pub fn converged_at(&self) -> Option<f64> {
        self.converged_at
    }

    /// Seconds (in the rates' inverse unit) per reported time unit.
    pub fn time_unit(&self) -> f64 {
        self.time_unit
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn max_trace_error(&self) -> f64 {
        self.samples
            .iter()
            .fold(0.0, |acc, s| acc.max(s.diagnostics.trace_error))
    }

    pub fn max_hermiticity_error(&self) -> f64 {
        self.samples
            .iter()
            .fold(0.0, |acc, s| acc.max(s.diagnostics.hermiticity_error))
    }

    /// The most negative recorded eigenvalue.
    pub fn min_eigenvalue_floor(&self) -> f64 {
        self.samples
            .iter()
            .fold(f64::INFINITY, |acc, s| acc.min(s.diagnostics.min_eigenvalue))
    }

    /// Largest drift of `c0` relative to the initial sample.
    pub fn max_c0_drift(&self) -> f64 {
        let c0 = self.samples[0].diagnostics.c0;
        self.samples
            .iter()
            .fold(0.0, |acc, s| acc.max((s.diagnostics.c0 - c0).abs()))
    }
}

/// Time at which every observable settles to within `epsilon` of its final
/// value and stays there.
///
/// Scans the recorded samples for the last one deviating from the final
/// observables by more than `epsilon` (max over populations, inversions, and
/// both coherence components) and returns the time of the next sample.
/// Returns `Some(t0)` when even the first sample is settled. Returns `None`
/// when the trajectory was still moving at the horizon — the final sample
/// matches itself by construction, so a settled verdict requires at least one
/// earlier sample inside the band — or when `epsilon` is not a positive
/// number.
pub fn convergence_time(traj: &Trajectory, epsilon: f64) -> Option<f64> {
    // Negated form rejects NaN along with non-positive values.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(epsilon > 0.0) {
        return None;
    }
    let samples = traj.samples();
    let target = &samples.last()?.observables;
    let mut last_bad = None;
    for (i, s) in samples.iter().enumerate() {
        if observable_deviation(&s.observables, target) > epsilon {
            last_bad = Some(i);
        }
    }
    match last_bad {
        None => Some(samples[0].time),
        Some(i) if i + 2 >= samples.len() => None,
        Some(i) => Some(samples[i + 1].time),
    }
}

fn observable_deviation(a: &ObservableSet, b: &ObservableSet) -> f64 {
    [
        a.pop_a - b.pop_a,
        a.pop_b - b.pop_b,
        a.pop_c - b.pop_c,
        a.inversion_ab - b.inversion_ab,
        a.inversion_ac - b.inversion_ac,
        a.coherence_re - b.coherence_re,
        a.coherence_im - b.coherence_im,
    ]
    .into_iter()
    .fold(0.0, |acc, d| acc.max(d.abs()))
}

/// Propagates `initial` under `params` for `config.horizon` natural time
/// units (or until convergence, if `stop_at_convergence` is set).
pub fn integrate(
    params: &SystemParams,
    initial: &DensityMatrix,
    config: &IntegratorConfig,
) -> Result<Trajectory, IntegrateError> {
    config.validate()?;
    if initial.basis() != Basis::Bare {
        return Err(ModelError::BasisMismatch {
            expected: Basis::Bare,
            found: initial.basis(),
        }
        .into());
    }
    let time_unit = params.time_unit();
    let scaled = params.scaled_by(time_unit);
    let mut rec = Recorder::new(scaled, config);
    let mut y = *initial.entries();
    rec.on_initial(&y);

    let (end_time, y_final) = match config.method {
        Method::FixedRk4 => run_fixed(&scaled, config, &mut rec, &mut y)?,
        Method::AdaptiveRk45 => run_adaptive(&scaled, config, &mut rec, &mut y)?,
    };
    let mut samples = rec.samples;
    if rec.last_push != rec.accepted {
        samples.push(make_sample(end_time, &y_final));
    }
    Ok(Trajectory {
        params: *params,
        method: config.method,
        time_unit,
        samples,
        converged_at: rec.converged_at,
    })
}

fn run_fixed(
    scaled: &SystemParams,
    config: &IntegratorConfig,
    rec: &mut Recorder,
    y: &mut Mat3,
) -> Result<(f64, Mat3), IntegrateError> {
    let dt = config.step / scaled.rate_scale();
    let steps = (config.horizon / dt).ceil() as u64;
    if steps > STEP_LIMIT {
        return Err(IntegrateError::StepLimitExceeded { limit: STEP_LIMIT });
    }
    let mut t = 0.0;
    for i in 0..steps {
        let h = dt.min(config.horizon - t);
        if h <= 0.0 {
            break;
        }
        *y = rk4_raw(scaled, y, h);
        t = if i + 1 == steps {
            config.horizon
        } else {
            t + h
        };
        if rec.on_state(t, y)? {
            break;
        }
    }
    Ok((t, *y))
}

fn run_adaptive(
    scaled: &SystemParams,
    config: &IntegratorConfig,
    rec: &mut Recorder,
    y: &mut Mat3,
) -> Result<(f64, Mat3), IntegrateError> {
    let h_max = (config.horizon / 10.0).min(0.5);
    let h_min = (config.horizon * 1e-12).min(h_max);
    let mut h = (config.step / scaled.rate_scale()).clamp(h_min, h_max);
    let mut t = 0.0;
    let mut attempts: u64 = 0;
    while config.horizon - t > config.horizon * 1e-12 {
        attempts += 1;
        if attempts > STEP_LIMIT {
            return Err(IntegrateError::StepLimitExceeded { limit: STEP_LIMIT });
        }
        let h_try = h.min(config.horizon - t);
        let (y_new, err_norm) = rk45_attempt(scaled, y, h_try, config.abs_tol, config.rel_tol);
        if err_norm.is_finite() && err_norm <= 1.0 {
            *y = y_new;
            t += h_try;
            if rec.on_state(t, y)? {
                break;
            }
            h = (h_try * step_factor(err_norm)).clamp(h_min, h_max);
        } else {
            h = h_try * step_factor(err_norm);
            if h < h_min {
                return Err(IntegrateError::StepUnderflow { time: t, step: h });
            }
        }
    }
    Ok((t, *y))
}

/// One classic RK4 step of size `h`, in the same time units as the rates.
///
/// The result is re-symmetrized but otherwise unchecked: positivity drift is
/// reported by the trajectory diagnostics, not rejected here.
pub fn step_rk4(
    params: &SystemParams,
    rho: &DensityMatrix,
    h: f64,
) -> Result<DensityMatrix, IntegrateError> {
    check_step_inputs(rho, h)?;
    let mut y = rk4_raw(params, rho.entries(), h);
    resymmetrize(&mut y);
    if !is_finite(&y) {
        return Err(IntegrateError::NonFinite { time: h });
    }
    Ok(DensityMatrix::from_raw_unchecked(y, Basis::Bare))
}

/// Outcome of one attempted adaptive step.
#[derive(Debug, Clone, PartialEq)]
pub struct Rk45Step {
    /// The advanced state if `accepted`, otherwise the unchanged input.
    pub state: DensityMatrix,
    /// Scaled error-norm estimate; accepted means `<= 1`.
    pub error_estimate: f64,
    /// Suggested next step; smaller than `h` signals rejection.
    pub h_next: f64,
    pub accepted: bool,
}

/// One embedded RK45 attempt of size `h` with the given per-entry error
/// tolerances; rejection is signaled by `h_next < h` with no state advance.
pub fn step_rk45(
    params: &SystemParams,
    rho: &DensityMatrix,
    h: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Rk45Step, IntegrateError> {
    check_step_inputs(rho, h)?;
    // Negated form rejects NaN tolerances along with out-of-range ones.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(abs_tol > 0.0) || !(rel_tol >= 0.0) {
        return Err(IntegrateError::InvalidConfig(format!(
            "tolerances must satisfy abs_tol > 0, rel_tol >= 0 (got {abs_tol}, {rel_tol})"
        )));
    }
    let (mut y_new, err_norm) = rk45_attempt(params, rho.entries(), h, abs_tol, rel_tol);
    let accepted = err_norm.is_finite() && err_norm <= 1.0;
    let state = if accepted {
        resymmetrize(&mut y_new);
        if !is_finite(&y_new) {
            return Err(IntegrateError::NonFinite { time: h });
        }
        DensityMatrix::from_raw_unchecked(y_new, Basis::Bare)
    } else {
        *rho
    };
    Ok(Rk45Step {
        state,
        error_estimate: err_norm,
        h_next: h * step_factor(err_norm),
        accepted,
    })
}

fn check_step_inputs(rho: &DensityMatrix, h: f64) -> Result<(), IntegrateError> {
    if rho.basis() != Basis::Bare {
        return Err(ModelError::BasisMismatch {
            expected: Basis::Bare,
            found: rho.basis(),
        }
        .into());
    }
    if !h.is_finite() || h <= 0.0 {
        return Err(IntegrateError::InvalidConfig(format!(
            "step size must be positive and finite (got {h})"
        )));
    }
    Ok(())
}

// --- recording and convergence detection ---

struct Recorder {
    scaled: SystemParams,
    norm_tol: f64,
    stride: usize,
    stop_at_convergence: bool,
    samples: Vec<Sample>,
    accepted: usize,
    last_push: usize,
    run_len: usize,
    run_start: f64,
    converged_at: Option<f64>,
}

impl Recorder {
    fn new(scaled: SystemParams, config: &IntegratorConfig) -> Self {
        Self {
            scaled,
            norm_tol: config.convergence_norm_tol,
            stride: config.sample_stride,
            stop_at_convergence: config.stop_at_convergence,
            samples: Vec::new(),
            accepted: 0,
            last_push: 0,
            run_len: 0,
            run_start: 0.0,
            converged_at: None,
        }
    }

    fn on_initial(&mut self, y: &Mat3) {
        self.track_steady(0.0, y);
        self.samples.push(make_sample(0.0, y));
    }

    /// Records an accepted state; returns `true` when integration may stop.
    fn on_state(&mut self, t: f64, y: &mut Mat3) -> Result<bool, IntegrateError> {
        resymmetrize(y);
        if !is_finite(y) {
            return Err(IntegrateError::NonFinite { time: t });
        }
        self.track_steady(t, y);
        self.accepted += 1;
        if self.accepted % self.stride == 0 {
            self.samples.push(make_sample(t, y));
            self.last_push = self.accepted;
        }
        Ok(self.stop_at_convergence && self.converged_at.is_some())
    }

    fn track_steady(&mut self, t: f64, y: &Mat3) {
        if max_abs(&rhs_raw(&self.scaled, y)) < self.norm_tol {
            if self.run_len == 0 {
                self.run_start = t;
            }
            self.run_len += 1;
            if self.run_len >= STEADY_RUN_LENGTH && self.converged_at.is_none() {
                self.converged_at = Some(self.run_start);
            }
        } else {
            self.run_len = 0;
        }
    }
}

fn make_sample(t: f64, y: &Mat3) -> Sample {
    let state = DensityMatrix::from_raw_unchecked(*y, Basis::Bare);
    let diagnostics = SampleDiagnostics {
        trace_error: state.trace_error(),
        hermiticity_error: state.hermiticity_error(),
        min_eigenvalue: state.min_eigenvalue(),
        c0: state.c0(),
    };
    Sample {
        time: t,
        observables: state.observables(),
        diagnostics,
        state,
    }
}

// --- stepping kernels ---

fn rk4_raw(params: &SystemParams, y: &Mat3, h: f64) -> Mat3 {
    let k1 = rhs_raw(params, y);
    let mut y2 = *y;
    add_scaled(&mut y2, &k1, 0.5 * h);
    let k2 = rhs_raw(params, &y2);
    let mut y3 = *y;
    add_scaled(&mut y3, &k2, 0.5 * h);
    let k3 = rhs_raw(params, &y3);
    let mut y4 = *y;
    add_scaled(&mut y4, &k3, h);
    let k4 = rhs_raw(params, &y4);
    let mut out = *y;
    add_scaled(&mut out, &k1, h / 6.0);
    add_scaled(&mut out, &k2, h / 3.0);
    add_scaled(&mut out, &k3, h / 3.0);
    add_scaled(&mut out, &k4, h / 6.0);
    out
}

// Dormand–Prince 5(4) tableau.
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
/// Fifth-order weights; also the seventh-stage coefficients (FSAL form).
const B5: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
/// Difference between the fifth- and embedded fourth-order weights.
const ERR: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// One RK45 attempt; returns the fifth-order state and the scaled error norm
/// (max over entries of `|err| / (abs_tol + rel_tol·max(|y|, |y_new|))`).
fn rk45_attempt(
    params: &SystemParams,
    y: &Mat3,
    h: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> (Mat3, f64) {
    let mut k: [Mat3; 7] = [density::zero(); 7];
    k[0] = rhs_raw(params, y);
    let stages: [&[f64]; 5] = [&A2, &A3, &A4, &A5, &A6];
    for (s, coeffs) in stages.iter().enumerate() {
        let mut ys = *y;
        for (j, &a) in coeffs.iter().enumerate() {
            if a != 0.0 {
                add_scaled(&mut ys, &k[j], h * a);
            }
        }
        k[s + 1] = rhs_raw(params, &ys);
    }
    let mut y_new = *y;
    for (j, &b) in B5.iter().enumerate() {
        if b != 0.0 {
            add_scaled(&mut y_new, &k[j], h * b);
        }
    }
    k[6] = rhs_raw(params, &y_new);

    let mut err = density::zero();
    for (j, &e) in ERR.iter().enumerate() {
        if e != 0.0 {
            add_scaled(&mut err, &k[j], h * e);
        }
    }
    let mut norm = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            let scale = abs_tol + rel_tol * y[i][j].norm().max(y_new[i][j].norm());
            norm = norm.max(err[i][j].norm() / scale);
        }
    }
    (y_new, norm)
}

/// Step-size multiplier from a scaled error norm: `0.9·norm^(-1/5)` clamped
/// to `[0.2, 5]`; non-finite norms shrink maximally.
fn step_factor(err_norm: f64) -> f64 {
    if !err_norm.is_finite() {
        return 0.2;
    }
    if err_norm <= 0.0 {
        return 5.0;
    }
    (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Level;
    use approx::assert_relative_eq;

    fn decay_only() -> SystemParams {
        SystemParams::new(0.0, 0.0, 1.0, 1.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn defaults_match_documented_values() {
        let c = IntegratorConfig::default();
        assert_eq!(c.method, Method::AdaptiveRk45);
        assert_eq!(c.step, 1e-3);
        assert_eq!(c.abs_tol, 1e-10);
        assert_eq!(c.rel_tol, 1e-8);
        assert_eq!(c.horizon, 20.0);
        assert_eq!(c.convergence_norm_tol, 1e-10);
        assert_eq!(c.sample_stride, 1);
        assert!(!c.stop_at_convergence);
    }

    #[test]
    fn fixed_step_matches_exponential_decay() {
        // Pure decay: ρ_aa(t) = exp(-2t).
        let config = IntegratorConfig {
            method: Method::FixedRk4,
            horizon: 1.0,
            sample_stride: 100,
            ..IntegratorConfig::default()
        };
        let traj = integrate(&decay_only(), &DensityMatrix::pure(Level::A), &config).unwrap();
        let final_aa = traj.final_state().population(Level::A);
        assert_relative_eq!(final_aa, (-2.0f64).exp(), epsilon = 1e-11);
        assert_eq!(traj.final_sample().time, 1.0);
    }

    #[test]
    fn adaptive_agrees_with_fixed() {
        let params = SystemParams::new(1.0, 2.0, 0.5, 1.5, 1.0, 0.0).unwrap();
        let initial = DensityMatrix::maximally_mixed();
        let fixed = integrate(
            &params,
            &initial,
            &IntegratorConfig {
                method: Method::FixedRk4,
                horizon: 5.0,
                sample_stride: 1000,
                ..IntegratorConfig::default()
            },
        )
        .unwrap();
        let adaptive = integrate(
            &params,
            &initial,
            &IntegratorConfig {
                horizon: 5.0,
                ..IntegratorConfig::default()
            },
        )
        .unwrap();
        let gap = fixed
            .final_state()
            .max_entry_distance(adaptive.final_state());
        assert!(gap < 1e-7, "fixed vs adaptive gap {gap:.3e}");
    }

    #[test]
    fn invariant_state_is_flagged_converged_immediately() {
        let params = SystemParams::symmetric(1.0, 1.0).unwrap();
        let traj = integrate(
            &params,
            &DensityMatrix::robust(),
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert_eq!(traj.converged_at(), Some(0.0));
        let initial = DensityMatrix::robust();
        for s in traj.samples() {
            assert!(s.state.max_entry_distance(&initial) < 1e-12);
        }
    }

    #[test]
    fn trace_and_c0_drift_stay_at_roundoff() {
        let params = SystemParams::symmetric(2.5, 1.0).unwrap();
        let initial = DensityMatrix::pure(Level::B);
        let traj = integrate(&params, &initial, &IntegratorConfig::default()).unwrap();
        assert!(traj.max_trace_error() < 1e-13);
        assert!(traj.max_c0_drift() < 1e-13);
        assert!(traj.max_hermiticity_error() == 0.0);
    }

    #[test]
    fn stop_at_convergence_ends_early() {
        let params = SystemParams::new(1.0, 3.0, 4.0, 0.25, 1.0, 0.0).unwrap();
        let config = IntegratorConfig {
            horizon: 200.0,
            stop_at_convergence: true,
            ..IntegratorConfig::default()
        };
        let traj = integrate(&params, &DensityMatrix::maximally_mixed(), &config).unwrap();
        assert!(traj.converged_at().is_some());
        assert!(traj.final_sample().time < 200.0);
    }

    #[test]
    fn absurd_step_is_rejected_before_running() {
        let config = IntegratorConfig {
            method: Method::FixedRk4,
            step: 1e-12,
            ..IntegratorConfig::default()
        };
        let err = integrate(
            &decay_only(),
            &DensityMatrix::pure(Level::A),
            &config,
        )
        .unwrap_err();
        assert!(matches!(err, IntegrateError::StepLimitExceeded { .. }));
    }

    #[test]
    fn config_validation_rejects_bad_fields() {
        for config in [
            IntegratorConfig {
                step: 0.0,
                ..IntegratorConfig::default()
            },
            IntegratorConfig {
                horizon: -1.0,
                ..IntegratorConfig::default()
            },
            IntegratorConfig {
                rel_tol: -1e-9,
                ..IntegratorConfig::default()
            },
            IntegratorConfig {
                sample_stride: 0,
                ..IntegratorConfig::default()
            },
        ] {
            let err = integrate(&decay_only(), &DensityMatrix::pure(Level::A), &config);
            assert!(matches!(err, Err(IntegrateError::InvalidConfig(_))));
        }
    }

    #[test]
    fn single_rk4_step_is_fourth_order_accurate() {
        let params = decay_only();
        let rho = DensityMatrix::pure(Level::A);
        let h = 1e-2;
        let stepped = step_rk4(&params, &rho, h).unwrap();
        // exp(-2h) vs its 4th-order Taylor truncation: error ~ (2h)^5/5!.
        assert_relative_eq!(
            stepped.population(Level::A),
            (-2.0 * h).exp(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn rk45_rejects_oversized_steps_without_advancing() {
        let params = SystemParams::new(3.0, 2.0, 1.0, 2.0, 1.0, 0.0).unwrap();
        let rho = DensityMatrix::pure(Level::A);
        let step = step_rk45(&params, &rho, 50.0, 1e-12, 1e-12).unwrap();
        assert!(!step.accepted);
        assert!(step.h_next < 50.0);
        assert_eq!(step.state, rho);
    }

    #[test]
    fn rk45_accepts_small_steps_and_suggests_growth() {
        let params = decay_only();
        let rho = DensityMatrix::pure(Level::A);
        let step = step_rk45(&params, &rho, 1e-4, 1e-10, 1e-8).unwrap();
        assert!(step.accepted);
        assert!(step.h_next > 1e-4);
        assert!(step.error_estimate <= 1.0);
    }

    #[test]
    fn small_step_limit_is_state_advance_of_order_h() {
        // step(ρ) - ρ - h·rhs(ρ) shrinks like O(h²).
        let params = SystemParams::new(1.0, 2.0, 0.5, 1.5, 1.0, 0.3).unwrap();
        let rho = DensityMatrix::maximally_mixed();
        let d = crate::master::rhs(&params, &rho).unwrap();
        for h in [1e-3, 1e-4] {
            let stepped = step_rk4(&params, &rho, h).unwrap();
            let mut linear = *rho.entries();
            add_scaled(&mut linear, d.entries(), h);
            let gap = crate::density::max_abs_diff(stepped.entries(), &linear);
            assert!(gap < 10.0 * h * h, "h = {h}: gap {gap:.3e}");
        }
    }

    #[test]
    fn convergence_time_of_settled_trajectory_is_zero() {
        let params = SystemParams::symmetric(1.0, 1.0).unwrap();
        let traj = integrate(
            &params,
            &DensityMatrix::robust(),
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert_eq!(convergence_time(&traj, 0.01), Some(0.0));
        assert_eq!(convergence_time(&traj, -1.0), None);
    }

    #[test]
    fn convergence_time_tracks_the_slowest_observable() {
        // Pure decay from A: the largest observable deviation from the final
        // values is the a–b inversion, 1.5·exp(-2t), which last exceeds ε at
        // t = ln(1.5/ε)/2.
        let config = IntegratorConfig {
            method: Method::FixedRk4,
            step: 1e-2,
            horizon: 12.0,
            ..IntegratorConfig::default()
        };
        let traj = integrate(&decay_only(), &DensityMatrix::pure(Level::A), &config).unwrap();
        let t = convergence_time(&traj, 0.01).unwrap();
        let expected = 0.5 * (1.5f64 / 0.01).ln();
        assert!((t - expected).abs() < 0.05, "t = {t}, expected ≈ {expected}");
    }

    #[test]
    fn convergence_time_is_none_when_still_moving() {
        let config = IntegratorConfig {
            horizon: 0.5,
            ..IntegratorConfig::default()
        };
        let traj = integrate(&decay_only(), &DensityMatrix::pure(Level::A), &config).unwrap();
        assert_eq!(convergence_time(&traj, 1e-3), None);
    }
}
