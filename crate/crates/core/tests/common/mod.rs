//! Shared helpers for the integration suites: seeded random draws and a
//! matrix-exponential propagation oracle assembled through the public API.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use lambda_cpt::{rhs, Basis, DensityMatrix, SystemParams};

pub type Raw3 = [[Complex64; 3]; 3];

/// Trace-zero Hermitian directions spanning the physical slice: two diagonal
/// imbalances plus the real and imaginary parts of each off-diagonal pair.
fn direction(k: usize) -> Raw3 {
    let mut m = [[Complex64::ZERO; 3]; 3];
    let one = Complex64::ONE;
    let i = Complex64::I;
    match k {
        0 => {
            m[0][0] = one;
            m[1][1] = -one;
        }
        1 => {
            m[1][1] = one;
            m[2][2] = -one;
        }
        2 => {
            m[0][1] = one;
            m[1][0] = one;
        }
        3 => {
            m[0][1] = i;
            m[1][0] = -i;
        }
        4 => {
            m[0][2] = one;
            m[2][0] = one;
        }
        5 => {
            m[0][2] = i;
            m[2][0] = -i;
        }
        6 => {
            m[1][2] = one;
            m[2][1] = one;
        }
        7 => {
            m[1][2] = i;
            m[2][1] = -i;
        }
        _ => unreachable!("eight trace-zero directions"),
    }
    m
}

/// Coordinates of a trace-zero Hermitian matrix in the `direction` basis.
fn coordinates(x: &Raw3) -> [f64; 8] {
    [
        x[0][0].re,
        -x[2][2].re,
        x[0][1].re,
        x[0][1].im,
        x[0][2].re,
        x[0][2].im,
        x[1][2].re,
        x[1][2].im,
    ]
}

fn add_direction(m: &mut Raw3, k: usize, weight: f64) {
    let d = direction(k);
    for (row, drow) in m.iter_mut().zip(&d) {
        for (entry, dentry) in row.iter_mut().zip(drow) {
            *entry += dentry * weight;
        }
    }
}

fn mixed_third() -> Raw3 {
    let third = Complex64::new(1.0 / 3.0, 0.0);
    let mut m = [[Complex64::ZERO; 3]; 3];
    m[0][0] = third;
    m[1][1] = third;
    m[2][2] = third;
    m
}

fn derivative_of(params: &SystemParams, raw: Raw3) -> Raw3 {
    let state = DensityMatrix::new(raw, Basis::Bare).expect("probe state is physical");
    *rhs(params, &state).expect("probe derivative").entries()
}

/// Propagates `initial` for `t` absolute time via the matrix exponential of
/// the generator, reconstructed by probing the equations of motion with
/// physical states only: the flow of the trace-one slice is affine in the
/// eight trace-zero coordinates, so the probe offsets `I/3 ± δ·direction`
/// stay valid density matrices, and the constant part rides along as a ninth
/// homogeneous coordinate.
pub fn propagate_oracle(params: &SystemParams, initial: &DensityMatrix, t: f64) -> Raw3 {
    let delta = 0.125;
    let base = derivative_of(params, mixed_third());
    let b = coordinates(&base);

    // Augmented affine generator: d/dt [x; 1] = [[M, b], [0, 0]] [x; 1].
    let mut a = DMatrix::<f64>::zeros(9, 9);
    for k in 0..8 {
        let mut probe = mixed_third();
        add_direction(&mut probe, k, delta);
        let shifted = derivative_of(params, probe);
        for (i, (s, base_i)) in coordinates(&shifted).iter().zip(&b).enumerate() {
            a[(i, k)] = (s - base_i) / delta;
        }
    }
    for (i, bi) in b.iter().enumerate() {
        a[(i, 8)] = *bi;
    }

    let flow = (a * t).exp();

    let x0 = {
        let mut trace_zero = *initial.entries();
        let third = Complex64::new(1.0 / 3.0, 0.0);
        trace_zero[0][0] -= third;
        trace_zero[1][1] -= third;
        trace_zero[2][2] -= third;
        coordinates(&trace_zero)
    };
    let mut v = DMatrix::<f64>::zeros(9, 1);
    for (i, xi) in x0.iter().enumerate() {
        v[(i, 0)] = *xi;
    }
    v[(8, 0)] = 1.0;
    let xt = flow * v;

    let mut result = mixed_third();
    for k in 0..8 {
        add_direction(&mut result, k, xt[(k, 0)]);
    }
    result
}

/// Largest entry-wise distance between a raw matrix and a state.
pub fn gap_to(raw: &Raw3, state: &DensityMatrix) -> f64 {
    let m = state.entries();
    let mut max = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            max = max.max((raw[i][j] - m[i][j]).norm());
        }
    }
    max
}

/// Log-uniform draw.
pub fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// Random rates in `[0.2, 4]` with full pump alignment and zero detuning.
pub fn random_trapping_params(rng: &mut impl Rng) -> SystemParams {
    SystemParams::new(
        log_uniform(rng, 0.2, 4.0),
        log_uniform(rng, 0.2, 4.0),
        log_uniform(rng, 0.2, 4.0),
        log_uniform(rng, 0.2, 4.0),
        1.0,
        0.0,
    )
    .expect("draw within the valid range")
}

/// A trapping-regime draw with a unique steady state approached at a usable
/// rate: near-degenerate branching ratios make the slowest relaxation mode
/// arbitrarily slow, so draws below a floor (in natural units) are rejected.
pub fn well_conditioned_trapping_params(rng: &mut impl Rng) -> SystemParams {
    loop {
        let params = random_trapping_params(rng);
        let slow = lambda_cpt::steady::slowest_relaxation_rate(&params)
            .expect("positive rates have a relaxation spectrum");
        if slow * params.time_unit() >= 0.1 {
            return params;
        }
    }
}

/// Random rates, alignment, and detuning across the whole parameter space.
pub fn random_params(rng: &mut impl Rng) -> SystemParams {
    SystemParams::new(
        log_uniform(rng, 0.2, 4.0),
        log_uniform(rng, 0.2, 4.0),
        log_uniform(rng, 0.2, 4.0),
        log_uniform(rng, 0.2, 4.0),
        rng.random_range(-1.0..=1.0),
        rng.random_range(-2.0..2.0),
    )
    .expect("draw within the valid range")
}

/// Random mixture of three random pure states: always a valid density matrix.
pub fn random_state(rng: &mut impl Rng) -> DensityMatrix {
    let mut m = [[Complex64::ZERO; 3]; 3];
    let mut weights = [0.0f64; 3];
    for w in &mut weights {
        *w = rng.random_range(0.05..1.0);
    }
    let total: f64 = weights.iter().sum();
    for &w in &weights {
        let mut v = [Complex64::ZERO; 3];
        for entry in &mut v {
            *entry = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += (w / total) * v[i] * v[j].conj() / (norm * norm);
            }
        }
    }
    DensityMatrix::new(m, Basis::Bare).expect("mixture of projectors is physical")
}
