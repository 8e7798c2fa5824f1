//! Integrator correctness against an independent matrix-exponential oracle,
//! plus structural health of recorded trajectories.

mod common;

use approx::assert_relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lambda_cpt::integrator::{convergence_time, step_rk4};
use lambda_cpt::steady::residual;
use lambda_cpt::{integrate, DensityMatrix, IntegratorConfig, Level, Method, SystemParams};

use common::{gap_to, propagate_oracle, random_params, random_state, random_trapping_params};

/// The oracle itself must reproduce a hand-solvable case before it is allowed
/// to judge the integrator: pure decay from the upper level with equal rates
/// gives `ρ_aa = e^(-2t)`, lower populations `(1 - e^(-2t))/2`, and the same
/// value building up in the real coherence.
#[test]
fn oracle_reproduces_pure_decay() {
    let params = SystemParams::new(0.0, 0.0, 1.0, 1.0, 1.0, 0.0).unwrap();
    let initial = DensityMatrix::pure(Level::A);
    for t in [0.0, 0.3, 0.7, 2.0] {
        let raw = propagate_oracle(&params, &initial, t);
        let decayed = (-2.0 * t).exp();
        let grown = 0.5 * (1.0 - decayed);
        assert_relative_eq!(raw[0][0].re, decayed, epsilon = 1e-12);
        assert_relative_eq!(raw[1][1].re, grown, epsilon = 1e-12);
        assert_relative_eq!(raw[2][2].re, grown, epsilon = 1e-12);
        assert_relative_eq!(raw[1][2].re, grown, epsilon = 1e-12);
        assert_relative_eq!(raw[1][2].im, 0.0, epsilon = 1e-14);
        assert_relative_eq!(raw[0][1].norm(), 0.0, epsilon = 1e-14);
    }
}

#[test]
fn fixed_step_matches_the_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let config = IntegratorConfig {
        method: Method::FixedRk4,
        step: 1e-3,
        sample_stride: 1000,
        ..IntegratorConfig::default()
    };
    for _ in 0..12 {
        let params = random_params(&mut rng);
        let initial = random_state(&mut rng);
        let horizon = rng.random_range(0.5..2.5);
        let config = IntegratorConfig { horizon, ..config };
        let traj = integrate(&params, &initial, &config).unwrap();
        let oracle = propagate_oracle(&params, &initial, horizon * params.time_unit());
        let gap = gap_to(&oracle, traj.final_state());
        assert!(gap < 1e-8, "params {params:?}: gap {gap:.3e}");
    }
}

#[test]
fn adaptive_matches_the_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    for _ in 0..12 {
        let params = random_params(&mut rng);
        let initial = random_state(&mut rng);
        let horizon = rng.random_range(0.5..4.0);
        let config = IntegratorConfig {
            method: Method::AdaptiveRk45,
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            horizon,
            sample_stride: 64,
            ..IntegratorConfig::default()
        };
        let traj = integrate(&params, &initial, &config).unwrap();
        let oracle = propagate_oracle(&params, &initial, horizon * params.time_unit());
        let gap = gap_to(&oracle, traj.final_state());
        assert!(gap < 1e-8, "params {params:?}: gap {gap:.3e}");
    }
}

/// One hand-driven RK4 step from the public stepper agrees with the
/// trajectory produced by `integrate` over the same grid.
#[test]
fn public_stepper_replays_the_fixed_grid() {
    let params = SystemParams::new(1.0, 0.5, 2.0, 0.25, 0.8, 0.4).unwrap();
    let initial = DensityMatrix::maximally_mixed();
    let config = IntegratorConfig {
        method: Method::FixedRk4,
        step: 0.05,
        horizon: 1.0,
        sample_stride: 1,
        ..IntegratorConfig::default()
    };
    let traj = integrate(&params, &initial, &config).unwrap();

    // integrate() rescales rates so steps are taken in units of 1/γ₁ and
    // divides the step by the dominant scaled rate.
    let scaled = params.scaled_by(params.time_unit());
    let dt = 0.05 / scaled.rate_scale();
    let mut state = initial;
    let mut worst = 0.0f64;
    for sample in traj.samples().iter().skip(1) {
        state = step_rk4(&scaled, &state, dt).unwrap();
        worst = worst.max(sample.state.max_entry_distance(&state));
    }
    assert!(worst < 1e-13, "replay gap {worst:.3e}");
}

#[test]
fn trajectories_stay_structurally_healthy() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    for method in [Method::FixedRk4, Method::AdaptiveRk45] {
        for _ in 0..8 {
            let params = random_params(&mut rng);
            let initial = random_state(&mut rng);
            let config = IntegratorConfig {
                method,
                horizon: 8.0,
                sample_stride: 5,
                ..IntegratorConfig::default()
            };
            let traj = integrate(&params, &initial, &config).unwrap();
            assert!(traj.max_trace_error() <= 1e-9);
            assert!(traj.max_hermiticity_error() <= 1e-12);
            assert!(traj.min_eigenvalue_floor() >= -1e-9);
        }
    }
}

#[test]
fn trapping_regime_conserves_the_population_coherence_combination() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    for _ in 0..10 {
        let mut params = random_trapping_params(&mut rng);
        // The combination is conserved only for symmetric rates.
        let r = params.r1();
        let gamma = params.gamma1();
        params = SystemParams::symmetric(r, gamma).unwrap();
        let initial = random_state(&mut rng);
        let traj = integrate(&params, &initial, &IntegratorConfig::default()).unwrap();
        assert!(
            traj.max_c0_drift() <= 1e-9,
            "drift {:.3e} for r = {r}, γ = {gamma}",
            traj.max_c0_drift()
        );
    }
}

#[test]
fn convergence_verdicts_tighten_with_epsilon() {
    let params = SystemParams::symmetric(2.5, 1.0).unwrap();
    let config = IntegratorConfig {
        method: Method::FixedRk4,
        step: 1e-2,
        horizon: 20.0,
        sample_stride: 2,
        ..IntegratorConfig::default()
    };
    let traj = integrate(&params, &DensityMatrix::pure(Level::B), &config).unwrap();
    let loose = convergence_time(&traj, 0.1).unwrap();
    let mid = convergence_time(&traj, 0.01).unwrap();
    let tight = convergence_time(&traj, 1e-4).unwrap();
    assert!(loose <= mid && mid <= tight, "{loose} / {mid} / {tight}");
    assert!(tight < 20.0);
}

#[test]
fn early_stop_lands_on_a_steady_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    for _ in 0..6 {
        let params = common::well_conditioned_trapping_params(&mut rng);
        let initial = random_state(&mut rng);
        let config = IntegratorConfig {
            horizon: 400.0,
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            convergence_norm_tol: 1e-9,
            stop_at_convergence: true,
            sample_stride: 50,
            ..IntegratorConfig::default()
        };
        let traj = integrate(&params, &initial, &config).unwrap();
        let stopped_at = traj.converged_at().expect("trapping dynamics settle");
        assert!(stopped_at < 400.0);
        // The stop threshold is applied to the rescaled equations of motion.
        let scaled = params.scaled_by(params.time_unit());
        let res = residual(&scaled, traj.final_state());
        assert!(res < 1e-8, "residual {res:.3e} for {params:?}");
    }
}
