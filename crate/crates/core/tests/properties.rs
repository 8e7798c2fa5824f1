//! Property-based invariants of the equations of motion and the closed forms.

// Index pairs like (i, j) mirror the matrix notation of the linear-structure
// checks here.
#![allow(clippy::needless_range_loop)]

use num_complex::Complex64;
use proptest::prelude::*;

use lambda_cpt::steady::{analytic_cpt, degenerate_steady};
use lambda_cpt::{
    integrate, rhs, Basis, Classification, DensityMatrix, IntegratorConfig, SystemParams,
};

type Raw3 = [[Complex64; 3]; 3];

fn rate() -> impl Strategy<Value = f64> {
    prop_oneof![1 => Just(0.0), 9 => 0.05..4.0f64]
}

fn params_any() -> impl Strategy<Value = SystemParams> {
    (rate(), rate(), rate(), rate(), -1.0..=1.0f64, -2.0..2.0f64).prop_map(
        |(r1, r2, g1, g2, p, delta)| {
            SystemParams::new(r1, r2, g1, g2, p, delta).expect("draw within the valid range")
        },
    )
}

/// Mixture of two normalized pure states; the offset on the first component
/// keeps both vectors away from zero norm.
fn state_any() -> impl Strategy<Value = DensityMatrix> {
    (
        proptest::array::uniform8(-1.0..1.0f64),
        proptest::array::uniform8(-1.0..1.0f64),
        0.0..=1.0f64,
    )
        .prop_map(|(a, b, w)| {
            let vec3 = |c: [f64; 8]| {
                [
                    Complex64::new(c[0] + 1.5, c[1]),
                    Complex64::new(c[2], c[3]),
                    Complex64::new(c[4], c[5]),
                ]
            };
            let mut m = [[Complex64::ZERO; 3]; 3];
            for (v, weight) in [(vec3(a), w), (vec3(b), 1.0 - w)] {
                let n: f64 = v.iter().map(|z| z.norm_sqr()).sum();
                for i in 0..3 {
                    for j in 0..3 {
                        m[i][j] += weight * v[i] * v[j].conj() / n;
                    }
                }
            }
            DensityMatrix::new(m, Basis::Bare).expect("mixture of projectors is physical")
        })
}

fn entries_gap(a: &Raw3, b: &Raw3) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .fold(0.0f64, |max, (x, y)| max.max((x - y).norm()))
}

proptest! {
    /// The derivative of a physical state is traceless and Hermitian —
    /// population only moves between levels.
    #[test]
    fn derivatives_are_traceless_and_hermitian(
        params in params_any(),
        state in state_any(),
    ) {
        let d = rhs(&params, &state).unwrap();
        prop_assert!(d.trace().norm() < 1e-13 * params.rate_scale());
        prop_assert!(d.hermiticity_error() < 1e-14 * params.rate_scale());
    }

    /// The equations of motion are linear: derivatives of convex mixtures are
    /// mixtures of derivatives.
    #[test]
    fn derivatives_mix_linearly(
        params in params_any(),
        a in state_any(),
        b in state_any(),
        alpha in 0.0..=1.0f64,
    ) {
        let mixed_m = {
            let mut m = [[Complex64::ZERO; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] = alpha * a.entries()[i][j] + (1.0 - alpha) * b.entries()[i][j];
                }
            }
            DensityMatrix::new(m, Basis::Bare).unwrap()
        };
        let dm = rhs(&params, &mixed_m).unwrap();
        let da = rhs(&params, &a).unwrap();
        let db = rhs(&params, &b).unwrap();
        let mut combo = [[Complex64::ZERO; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                combo[i][j] = alpha * da.entries()[i][j] + (1.0 - alpha) * db.entries()[i][j];
            }
        }
        prop_assert!(entries_gap(dm.entries(), &combo) < 1e-13 * params.rate_scale().max(1.0));
    }

    /// Scaling every rate by u scales the derivative by u: the rescaled
    /// system really is the same physics on a different clock.
    #[test]
    fn derivatives_scale_with_the_rates(
        params in params_any(),
        state in state_any(),
        u in 0.1..10.0f64,
    ) {
        let d = rhs(&params, &state).unwrap();
        let d_scaled = rhs(&params.scaled_by(u), &state).unwrap();
        let mut expected = *d.entries();
        for row in &mut expected {
            for entry in row.iter_mut() {
                *entry *= u;
            }
        }
        prop_assert!(
            entries_gap(d_scaled.entries(), &expected) < 1e-12 * u * params.rate_scale()
        );
    }

    /// In the symmetric trapping configuration the population–coherence
    /// combination has exactly zero derivative, whatever the state.
    #[test]
    fn symmetric_trapping_freezes_the_conserved_combination(
        r in 0.0..4.0f64,
        gamma in 0.0..4.0f64,
        state in state_any(),
    ) {
        let params = SystemParams::symmetric(r, gamma).unwrap();
        let d = rhs(&params, &state).unwrap();
        prop_assert!(d.c0_rate().abs() < 1e-13 * params.rate_scale());
    }

    /// The trapped state classifies as the antisymmetric maximal-coherence
    /// state exactly when the pump rates coincide.
    #[test]
    fn trapped_state_classification_follows_pump_symmetry(
        r1 in 0.05..4.0f64,
        r2 in 0.05..4.0f64,
        g1 in 0.05..4.0f64,
        g2 in 0.05..4.0f64,
        same in proptest::bool::ANY,
    ) {
        let r2 = if same { r1 } else { r2 };
        let params = SystemParams::new(r1, r2, g1, g2, 1.0, 0.0).unwrap();
        prop_assume!(lambda_cpt::steady::discriminant(&params) != 0.0);
        let report = analytic_cpt(&params).unwrap();
        if same {
            prop_assert_eq!(report.classification, Classification::Robust);
        } else {
            prop_assert_eq!(report.classification, Classification::CptGeneric);
        }
    }

    /// The symmetric-configuration limit is a projection: applying it to its
    /// own output returns the same state.
    #[test]
    fn degenerate_limit_is_idempotent(
        r in 0.05..4.0f64,
        gamma in 0.0..4.0f64,
        state in state_any(),
    ) {
        let params = SystemParams::symmetric(r, gamma).unwrap();
        let once = degenerate_steady(&params, &state).unwrap();
        let twice = degenerate_steady(&params, &once.state).unwrap();
        prop_assert!(once.state.max_entry_distance(&twice.state) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// The symmetric maximal-coherence state survives only without pumping:
    /// any pump drive pushes the trajectory away quickly.
    #[test]
    fn pumping_destroys_the_symmetric_coherence_state(
        r in 0.05..4.0f64,
        gamma in 0.2..3.0f64,
    ) {
        let params = SystemParams::symmetric(r, gamma).unwrap();
        let config = IntegratorConfig {
            horizon: 5.0,
            sample_stride: 4,
            ..IntegratorConfig::default()
        };
        let weak = DensityMatrix::weak();
        let traj = integrate(&params, &weak, &config).unwrap();
        let departure = traj
            .samples()
            .iter()
            .fold(0.0f64, |acc, s| acc.max(s.state.max_entry_distance(&weak)));
        prop_assert!(departure > 1e-3, "departure {departure:.3e} at r = {r}, γ = {gamma}");
    }
}
