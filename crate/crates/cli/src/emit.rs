//! Output rendering: trajectory and sweep CSV tables, JSON reports.
//!
//! All numeric CSV fields use 12-significant-digit scientific notation with a
//! `.` decimal separator, independent of locale. Times are in the natural
//! units of the run (the inverse of the fastest decay rate when it is
//! nonzero); JSON reports record the unit explicitly.

use lambda_cpt::scenarios::SweepPoint;
use lambda_cpt::steady::residual;
use lambda_cpt::{
    Classification, DensityMatrix, DressedBasis, DressedGenerator, DressedRateSet, Level, Method,
    Provenance, SteadyStateReport, SystemParams, Trajectory, UniquenessReport,
};
use serde_json::{json, Value};

/// Observable band used for the settle-time entry of simulate summaries.
pub const SETTLE_EPSILON: f64 = 0.01;

/// Exactly the column set of trajectory CSV output.
pub const TRAJECTORY_HEADER: &str =
    "t,rho_aa,rho_bb,rho_cc,re_rho_bc,im_rho_bc,inv_ab,inv_ac,rho_DD,rho_BB,c0,trace_err,min_eig";

fn num(v: f64) -> String {
    format!("{v:.11e}")
}

/// The dark/bright rotation of a parameter set, falling back to the balanced
/// rotation when both pump channels are closed and no rotation is singled
/// out.
fn rotation_for(params: &SystemParams) -> DressedBasis {
    DressedBasis::from_params(params).unwrap_or_else(|_| DressedBasis::symmetric())
}

/// Renders a trajectory as CSV, one row per retained sample.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let basis = rotation_for(traj.params());
    let mut out = String::with_capacity(traj.samples().len() * 200);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for sample in traj.samples() {
        let obs = &sample.observables;
        let diag = &sample.diagnostics;
        // The state is validated on construction, so the rotation never
        // fails here.
        let dressed = basis
            .to_dressed(&sample.state)
            .expect("rotating a validated state");
        let row = [
            sample.time,
            obs.pop_a,
            obs.pop_b,
            obs.pop_c,
            obs.coherence_re,
            obs.coherence_im,
            obs.inversion_ab,
            obs.inversion_ac,
            dressed.dark_population(),
            dressed.bright_population(),
            diag.c0,
            diag.trace_error,
            diag.min_eigenvalue,
        ];
        let rendered: Vec<String> = row.iter().map(|v| num(*v)).collect();
        out.push_str(&rendered.join(","));
        out.push('\n');
    }
    out
}

pub fn classification_name(c: Classification) -> &'static str {
    match c {
        Classification::Robust => "robust",
        Classification::Weak => "weak",
        Classification::CptGeneric => "cpt-generic",
        Classification::Other => "other",
    }
}

pub fn provenance_name(p: Provenance) -> &'static str {
    match p {
        Provenance::AnalyticCpt => "analytic-cpt",
        Provenance::NullSpace => "null-space",
        Provenance::DegenerateClosedForm => "degenerate-closed-form",
        Provenance::Integrated => "integrated",
    }
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::FixedRk4 => "rk4",
        Method::AdaptiveRk45 => "rk45",
    }
}

pub fn params_json(params: &SystemParams) -> Value {
    json!({
        "r1": params.r1(),
        "r2": params.r2(),
        "gamma1": params.gamma1(),
        "gamma2": params.gamma2(),
        "p": params.p(),
        "delta": params.delta(),
    })
}

pub fn state_json(state: &DensityMatrix) -> Value {
    let ab = state.coherence(Level::A, Level::B);
    let ac = state.coherence(Level::A, Level::C);
    let bc = state.coherence(Level::B, Level::C);
    json!({
        "rho_aa": state.population(Level::A),
        "rho_bb": state.population(Level::B),
        "rho_cc": state.population(Level::C),
        "re_rho_bc": bc.re,
        "im_rho_bc": bc.im,
        "re_rho_ab": ab.re,
        "im_rho_ab": ab.im,
        "re_rho_ac": ac.re,
        "im_rho_ac": ac.im,
    })
}

fn uniqueness_json(u: &UniquenessReport) -> Value {
    json!({
        "discriminant": u.discriminant,
        "pump_product": u.pump_product,
        "analytic_unique": u.analytic_unique,
        "null_space_dim": u.null_space_dim,
        "consistent": u.consistent,
    })
}

fn steady_report_json(params: &SystemParams, report: &SteadyStateReport) -> Value {
    json!({
        "state": state_json(&report.state),
        "classification": classification_name(report.classification),
        "provenance": provenance_name(report.provenance),
        "c0": report.c0,
        "residual": residual(params, &report.state),
        "uniqueness": uniqueness_json(&report.uniqueness),
    })
}

/// JSON report of the `steady` command. Top-level state keys (`rho_bb`, ...)
/// live under `"state"`.
pub fn steady_json(params: &SystemParams, report: &SteadyStateReport) -> Value {
    let mut value = steady_report_json(params, report);
    let extra = json!({
        "time_unit": params.time_unit(),
        "params": params_json(params),
    });
    merge(&mut value, extra);
    value
}

fn merge(target: &mut Value, extra: Value) {
    if let (Value::Object(t), Value::Object(e)) = (target, extra) {
        t.extend(e);
    }
}

/// JSON summary written next to a trajectory CSV: run metadata, final state,
/// health diagnostics, settle time, and the independently computed
/// steady-state prediction (or the reason none is available).
pub fn simulate_summary(
    traj: &Trajectory,
    steady: &Result<SteadyStateReport, String>,
    settle_time: Option<f64>,
) -> Value {
    let final_sample = traj.final_sample();
    let steady_value = match steady {
        Ok(report) => steady_report_json(traj.params(), report),
        Err(message) => json!({ "error": message }),
    };
    json!({
        "time_unit": traj.time_unit(),
        "params": params_json(traj.params()),
        "method": method_name(traj.method()),
        "samples": traj.samples().len(),
        "final_time": final_sample.time,
        "final_state": state_json(&final_sample.state),
        "final_classification": classification_name(lambda_cpt::steady::classify(&final_sample.state)),
        "converged_at": traj.converged_at(),
        "settle_time": { "epsilon": SETTLE_EPSILON, "time": settle_time },
        "diagnostics": {
            "max_trace_error": traj.max_trace_error(),
            "max_hermiticity_error": traj.max_hermiticity_error(),
            "min_eigenvalue": traj.min_eigenvalue_floor(),
            "max_c0_drift": traj.max_c0_drift(),
        },
        "steady": steady_value,
    })
}

fn complex_json(re: f64, im: f64) -> Value {
    json!({ "re": re, "im": im })
}

fn rates_json(rates: &DressedRateSet) -> Value {
    json!({
        "dark_feed": rates.dark_feed,
        "bright_feed": rates.bright_feed,
        "cross_feed": rates.cross_feed,
        "bright_decay": rates.bright_decay,
        "upper_decay": rates.upper_decay,
        "cross_decay": rates.cross_decay,
    })
}

/// JSON report of the `dressed` command: the rotation, the dressed-sector
/// rate coefficients, the relaxation spectrum, and (when an initial state is
/// given) the instantaneous dressed derivatives at that state.
pub fn dressed_json(
    params: &SystemParams,
    generator: &DressedGenerator,
    at_initial: Option<&DressedRateSet>,
) -> Value {
    let basis = rotation_for(params);
    let (dark_b, dark_c) = basis.dark_weights();
    let (bright_b, bright_c) = basis.bright_weights();
    let spectrum: Vec<Value> = generator
        .spectrum()
        .iter()
        .map(|z| complex_json(z.re, z.im))
        .collect();
    let initial_derivatives = match at_initial {
        Some(r) => json!({
            "dark": r.deriv_dark,
            "bright": r.deriv_bright,
            "upper": r.deriv_upper,
            "dark_bright": complex_json(r.deriv_cross.re, r.deriv_cross.im),
        }),
        None => Value::Null,
    };
    json!({
        "time_unit": params.time_unit(),
        "params": params_json(params),
        "dark_weights": { "b": dark_b, "c": dark_c },
        "bright_weights": { "b": bright_b, "c": bright_c },
        "rates": rates_json(generator.rates()),
        "coords": lambda_cpt::dressed::DRESSED_COORDS,
        "relaxation_rates": generator.relaxation_rates(),
        "spectrum": spectrum,
        "initial_derivatives": initial_derivatives,
    })
}

/// Exactly the column set of sweep CSV output.
pub const SWEEP_HEADER: &str = "index,r1,r2,gamma1,gamma2,p,delta,rho_aa,rho_bb,rho_cc,\
re_rho_bc,im_rho_bc,c0,classification,provenance,null_space_dim,residual";

/// Renders evaluated sweep points as CSV, one row per grid point, in grid
/// order.
pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::with_capacity(points.len() * 260 + SWEEP_HEADER.len() + 1);
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for point in points {
        let p = &point.params;
        let state = &point.report.state;
        let bc = state.coherence(Level::B, Level::C);
        let numbers = [
            p.r1(),
            p.r2(),
            p.gamma1(),
            p.gamma2(),
            p.p(),
            p.delta(),
            state.population(Level::A),
            state.population(Level::B),
            state.population(Level::C),
            bc.re,
            bc.im,
            point.report.c0,
        ];
        out.push_str(&point.index.to_string());
        for v in numbers {
            out.push(',');
            out.push_str(&num(v));
        }
        out.push(',');
        out.push_str(classification_name(point.report.classification));
        out.push(',');
        out.push_str(provenance_name(point.report.provenance));
        out.push(',');
        out.push_str(&point.report.uniqueness.null_space_dim.to_string());
        out.push(',');
        out.push_str(&num(residual(p, state)));
        out.push('\n');
    }
    out
}
