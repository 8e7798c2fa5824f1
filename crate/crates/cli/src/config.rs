//! Flat dotted key-value run configuration.
//!
//! A config file is a sequence of `key = value` lines. Blank lines and lines
//! starting with `#` are skipped. Keys are dotted paths (`params.r1`,
//! `integrator.step`); values are numbers, booleans, names, or comma-separated
//! number lists. Unknown and duplicate keys are rejected with the offending
//! line and column.
//!
//! Parsing resolves everything eagerly: a `scenario` key seeds parameters,
//! initial state, and integrator settings from the named catalog entry, and
//! explicit keys override individual fields. The result is a fully validated
//! [`RunConfig`] with defaults filled in, which [`to_config_string`] can
//! serialize back to an equivalent file.

use std::collections::HashMap;
use std::fmt;

use lambda_cpt::scenarios::{find_scenario, scenario_config};
use lambda_cpt::{Basis, DensityMatrix, IntegratorConfig, Level, Method, SystemParams};
use num_complex::Complex64;

/// Configuration errors: syntax problems carry a location, validation
/// problems name the violated requirement.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    /// Malformed line, unknown key, duplicate key, or unparsable value.
    Syntax {
        /// 1-based line of the problem.
        line: usize,
        /// 1-based column of the problem.
        column: usize,
        message: String,
    },
    /// Structurally fine but semantically invalid configuration.
    Invalid { message: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Syntax {
                line,
                column,
                message,
            } => write!(f, "line {line}, column {column}: {message}"),
            ConfigError::Invalid { message } => write!(f, "invalid config: {message}"),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Which subcommand a config file declares itself for, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Simulate,
    Steady,
    Sweep,
    Dressed,
    Scenarios,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Simulate => "simulate",
            CommandKind::Steady => "steady",
            CommandKind::Sweep => "sweep",
            CommandKind::Dressed => "dressed",
            CommandKind::Scenarios => "scenarios",
        }
    }

    fn parse(text: &str) -> Option<Self> {
        match text {
            "simulate" => Some(CommandKind::Simulate),
            "steady" => Some(CommandKind::Steady),
            "sweep" => Some(CommandKind::Sweep),
            "dressed" => Some(CommandKind::Dressed),
            "scenarios" => Some(CommandKind::Scenarios),
            _ => None,
        }
    }
}

/// Per-rate value lists for a parameter sweep. Absent axes stay at the base
/// parameter value.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepAxes {
    pub r1: Option<Vec<f64>>,
    pub r2: Option<Vec<f64>>,
    pub gamma1: Option<Vec<f64>>,
    pub gamma2: Option<Vec<f64>>,
}

impl SweepAxes {
    /// Cartesian product of the axes over `base`, with `r1` varying slowest
    /// and `gamma2` fastest. Pump alignment and detuning are taken from
    /// `base` everywhere.
    pub fn grid(&self, base: &SystemParams) -> Result<Vec<SystemParams>, ConfigError> {
        let axis = |list: &Option<Vec<f64>>, fixed: f64| -> Vec<f64> {
            list.clone().unwrap_or_else(|| vec![fixed])
        };
        let r1s = axis(&self.r1, base.r1());
        let r2s = axis(&self.r2, base.r2());
        let g1s = axis(&self.gamma1, base.gamma1());
        let g2s = axis(&self.gamma2, base.gamma2());
        let mut grid = Vec::with_capacity(r1s.len() * r2s.len() * g1s.len() * g2s.len());
        for &r1 in &r1s {
            for &r2 in &r2s {
                for &g1 in &g1s {
                    for &g2 in &g2s {
                        let p = SystemParams::new(r1, r2, g1, g2, base.p(), base.delta())
                            .map_err(|e| ConfigError::Invalid {
                                message: format!("sweep point ({r1}, {r2}, {g1}, {g2}): {e}"),
                            })?;
                        grid.push(p);
                    }
                }
            }
        }
        Ok(grid)
    }
}

/// A fully resolved, validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Subcommand the file declares itself for; checked against the invoked
    /// one when present.
    pub command: Option<CommandKind>,
    /// Catalog scenario the file was seeded from, if any.
    pub scenario: Option<String>,
    pub params: SystemParams,
    /// Initial state, when one was given or implied by a scenario. Routes
    /// that need one fail with a config error when it is absent.
    pub initial: Option<DensityMatrix>,
    pub integrator: IntegratorConfig,
    pub sweep: SweepAxes,
    /// Directory trajectory and sweep files are written into.
    pub output_dir: Option<String>,
}

impl RunConfig {
    /// Rejects a config whose `command` key names a different subcommand
    /// than the one actually invoked.
    pub fn expect_command(&self, invoked: CommandKind) -> Result<(), ConfigError> {
        match self.command {
            Some(declared) if declared != invoked => Err(ConfigError::Invalid {
                message: format!(
                    "config declares command `{}` but `{}` was invoked",
                    declared.name(),
                    invoked.name()
                ),
            }),
            _ => Ok(()),
        }
    }
}

/// Every key the format accepts.
const KNOWN_KEYS: [&str; 27] = [
    "command",
    "scenario",
    "params.r1",
    "params.r2",
    "params.gamma1",
    "params.gamma2",
    "params.p",
    "params.delta",
    "initial.preset",
    "initial.rho_aa",
    "initial.rho_bb",
    "initial.rho_cc",
    "initial.re_bc",
    "initial.im_bc",
    "integrator.method",
    "integrator.step",
    "integrator.abs_tol",
    "integrator.rel_tol",
    "integrator.horizon",
    "integrator.convergence_tol",
    "integrator.sample_stride",
    "integrator.stop_at_convergence",
    "sweep.r1",
    "sweep.r2",
    "sweep.gamma1",
    "sweep.gamma2",
    "output.dir",
];

/// One `key = value` line with the positions needed for error reporting.
#[derive(Debug, Clone)]
struct Entry {
    line: usize,
    value_column: usize,
    value: String,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn invalid(message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        message: message.into(),
    }
}

/// Splits the text into entries, rejecting malformed lines, unknown keys,
/// and duplicates.
fn tokenize(text: &str) -> Result<HashMap<String, Entry>, ConfigError> {
    let mut entries: HashMap<String, Entry> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let key_column = raw.len() - trimmed.len() + 1;
        let Some(eq) = raw.find('=') else {
            return Err(syntax(
                line,
                key_column,
                "expected `key = value` (missing `=`)",
            ));
        };
        let key = raw[..eq].trim();
        if key.is_empty() {
            return Err(syntax(line, key_column, "missing key before `=`"));
        }
        if let Some(bad) = key.find(|c: char| !c.is_ascii_lowercase() && !c.is_ascii_digit() && c != '.' && c != '_')
        {
            return Err(syntax(
                line,
                key_column + bad,
                format!("unexpected character in key `{key}`"),
            ));
        }
        if !KNOWN_KEYS.contains(&key) {
            return Err(syntax(line, key_column, format!("unknown key `{key}`")));
        }
        let after = &raw[eq + 1..];
        let value = after.trim();
        let value_column = eq + 2 + (after.len() - after.trim_start().len());
        if value.is_empty() {
            return Err(syntax(line, value_column, format!("empty value for `{key}`")));
        }
        if let Some(first) = entries.get(key) {
            return Err(syntax(
                line,
                key_column,
                format!("duplicate key `{key}` (first set on line {})", first.line),
            ));
        }
        entries.insert(
            key.to_string(),
            Entry {
                line,
                value_column,
                value: value.to_string(),
            },
        );
    }
    Ok(entries)
}

fn take_f64(entries: &mut HashMap<String, Entry>, key: &str) -> Result<Option<f64>, ConfigError> {
    let Some(e) = entries.remove(key) else {
        return Ok(None);
    };
    let v: f64 = e.value.parse().map_err(|_| {
        syntax(
            e.line,
            e.value_column,
            format!("invalid number `{}` for `{key}`", e.value),
        )
    })?;
    if !v.is_finite() {
        return Err(syntax(
            e.line,
            e.value_column,
            format!("non-finite value for `{key}`"),
        ));
    }
    Ok(Some(v))
}

fn take_usize(entries: &mut HashMap<String, Entry>, key: &str) -> Result<Option<usize>, ConfigError> {
    let Some(e) = entries.remove(key) else {
        return Ok(None);
    };
    let v: usize = e.value.parse().map_err(|_| {
        syntax(
            e.line,
            e.value_column,
            format!("invalid integer `{}` for `{key}`", e.value),
        )
    })?;
    Ok(Some(v))
}

fn take_bool(entries: &mut HashMap<String, Entry>, key: &str) -> Result<Option<bool>, ConfigError> {
    let Some(e) = entries.remove(key) else {
        return Ok(None);
    };
    match e.value.as_str() {
        "true" => Ok(Some(true)),
        "false" => Ok(Some(false)),
        other => Err(syntax(
            e.line,
            e.value_column,
            format!("expected `true` or `false` for `{key}`, got `{other}`"),
        )),
    }
}

fn take_list(entries: &mut HashMap<String, Entry>, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
    let Some(e) = entries.remove(key) else {
        return Ok(None);
    };
    let mut out = Vec::new();
    let mut offset = 0usize;
    for piece in e.value.split(',') {
        let trimmed = piece.trim();
        let column = e.value_column + offset + (piece.len() - piece.trim_start().len());
        if trimmed.is_empty() {
            return Err(syntax(e.line, column, format!("empty list element in `{key}`")));
        }
        let v: f64 = trimmed
            .parse()
            .map_err(|_| syntax(e.line, column, format!("invalid number `{trimmed}` in `{key}`")))?;
        if !v.is_finite() {
            return Err(syntax(e.line, column, format!("non-finite value in `{key}`")));
        }
        out.push(v);
        offset += piece.len() + 1;
    }
    Ok(Some(out))
}

fn preset_state(name: &str) -> Option<DensityMatrix> {
    match name {
        "pure-a" => Some(DensityMatrix::pure(Level::A)),
        "pure-b" => Some(DensityMatrix::pure(Level::B)),
        "pure-c" => Some(DensityMatrix::pure(Level::C)),
        "mixed" => Some(DensityMatrix::maximally_mixed()),
        "robust" => Some(DensityMatrix::robust()),
        "weak" => Some(DensityMatrix::weak()),
        _ => None,
    }
}

/// Parses and fully resolves a config file.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut entries = tokenize(text)?;

    let command = match entries.remove("command") {
        Some(e) => Some(CommandKind::parse(&e.value).ok_or_else(|| {
            syntax(
                e.line,
                e.value_column,
                format!(
                    "unknown command `{}` (expected simulate, steady, sweep, dressed, or scenarios)",
                    e.value
                ),
            )
        })?),
        None => None,
    };

    let scenario_entry = entries.remove("scenario");
    let preset = match &scenario_entry {
        Some(e) => Some(
            find_scenario(&e.value)
                .ok_or_else(|| syntax(e.line, e.value_column, format!("unknown scenario `{}`", e.value)))?,
        ),
        None => None,
    };

    let sweep = SweepAxes {
        r1: take_list(&mut entries, "sweep.r1")?,
        r2: take_list(&mut entries, "sweep.r2")?,
        gamma1: take_list(&mut entries, "sweep.gamma1")?,
        gamma2: take_list(&mut entries, "sweep.gamma2")?,
    };

    // A rate can come from an explicit key, the scenario, or (so that a sweep
    // file does not have to repeat its first grid point) the sweep axis.
    let rate = |explicit: Option<f64>, from_preset: fn(&SystemParams) -> f64, axis: &Option<Vec<f64>>, key: &str| {
        explicit
            .or_else(|| preset.as_ref().map(|s| from_preset(&s.params)))
            .or_else(|| axis.as_ref().map(|v| v[0]))
            .ok_or_else(|| invalid(format!("`{key}` is required (set it directly, via `scenario`, or via `sweep.{}`)", &key["params.".len()..])))
    };
    let r1 = rate(take_f64(&mut entries, "params.r1")?, SystemParams::r1, &sweep.r1, "params.r1")?;
    let r2 = rate(take_f64(&mut entries, "params.r2")?, SystemParams::r2, &sweep.r2, "params.r2")?;
    let gamma1 = rate(take_f64(&mut entries, "params.gamma1")?, SystemParams::gamma1, &sweep.gamma1, "params.gamma1")?;
    let gamma2 = rate(take_f64(&mut entries, "params.gamma2")?, SystemParams::gamma2, &sweep.gamma2, "params.gamma2")?;
    let p = take_f64(&mut entries, "params.p")?
        .or_else(|| preset.as_ref().map(|s| s.params.p()))
        .unwrap_or(1.0);
    let delta = take_f64(&mut entries, "params.delta")?
        .or_else(|| preset.as_ref().map(|s| s.params.delta()))
        .unwrap_or(0.0);
    let params = SystemParams::new(r1, r2, gamma1, gamma2, p, delta)
        .map_err(|e| invalid(e.to_string()))?;

    let preset_entry = entries.remove("initial.preset");
    let rho_aa = take_f64(&mut entries, "initial.rho_aa")?;
    let rho_bb = take_f64(&mut entries, "initial.rho_bb")?;
    let rho_cc = take_f64(&mut entries, "initial.rho_cc")?;
    let re_bc = take_f64(&mut entries, "initial.re_bc")?;
    let im_bc = take_f64(&mut entries, "initial.im_bc")?;
    let has_entries = rho_aa.is_some() || rho_bb.is_some() || rho_cc.is_some() || re_bc.is_some() || im_bc.is_some();
    let initial = if let Some(e) = preset_entry {
        if has_entries {
            return Err(invalid(
                "initial.preset conflicts with explicit initial.* entries; give one or the other",
            ));
        }
        Some(preset_state(&e.value).ok_or_else(|| {
            syntax(
                e.line,
                e.value_column,
                format!(
                    "unknown initial preset `{}` (expected pure-a, pure-b, pure-c, mixed, robust, or weak)",
                    e.value
                ),
            )
        })?)
    } else if has_entries {
        let bb = rho_bb.ok_or_else(|| invalid("initial.rho_bb is required with explicit initial entries"))?;
        let cc = rho_cc.ok_or_else(|| invalid("initial.rho_cc is required with explicit initial entries"))?;
        let aa = rho_aa.unwrap_or(1.0 - bb - cc);
        let bc = Complex64::new(re_bc.unwrap_or(0.0), im_bc.unwrap_or(0.0));
        let z = Complex64::new(0.0, 0.0);
        let m = [
            [Complex64::new(aa, 0.0), z, z],
            [z, Complex64::new(bb, 0.0), bc],
            [z, bc.conj(), Complex64::new(cc, 0.0)],
        ];
        Some(DensityMatrix::new(m, Basis::Bare).map_err(|e| invalid(e.to_string()))?)
    } else {
        preset.as_ref().map(|s| s.initial)
    };

    let mut integrator = match &preset {
        Some(spec) => scenario_config(spec.horizon),
        None => IntegratorConfig::default(),
    };
    if let Some(e) = entries.remove("integrator.method") {
        integrator.method = match e.value.as_str() {
            "rk4" => Method::FixedRk4,
            "rk45" => Method::AdaptiveRk45,
            other => {
                return Err(syntax(
                    e.line,
                    e.value_column,
                    format!("unknown method `{other}` (expected rk4 or rk45)"),
                ))
            }
        };
    }
    if let Some(v) = take_f64(&mut entries, "integrator.step")? {
        integrator.step = v;
    }
    if let Some(v) = take_f64(&mut entries, "integrator.abs_tol")? {
        integrator.abs_tol = v;
    }
    if let Some(v) = take_f64(&mut entries, "integrator.rel_tol")? {
        integrator.rel_tol = v;
    }
    if let Some(v) = take_f64(&mut entries, "integrator.horizon")? {
        integrator.horizon = v;
    }
    if let Some(v) = take_f64(&mut entries, "integrator.convergence_tol")? {
        integrator.convergence_norm_tol = v;
    }
    if let Some(v) = take_usize(&mut entries, "integrator.sample_stride")? {
        integrator.sample_stride = v;
    }
    if let Some(v) = take_bool(&mut entries, "integrator.stop_at_convergence")? {
        integrator.stop_at_convergence = v;
    }
    for (key, value) in [
        ("integrator.step", integrator.step),
        ("integrator.abs_tol", integrator.abs_tol),
        ("integrator.rel_tol", integrator.rel_tol),
        ("integrator.horizon", integrator.horizon),
        ("integrator.convergence_tol", integrator.convergence_norm_tol),
    ] {
        // Non-finite values were already rejected during extraction.
        if value <= 0.0 {
            return Err(invalid(format!("`{key}` must be positive (got {value})")));
        }
    }
    if integrator.sample_stride == 0 {
        return Err(invalid("`integrator.sample_stride` must be at least 1"));
    }

    let output_dir = entries.remove("output.dir").map(|e| e.value);

    debug_assert!(entries.is_empty(), "unconsumed keys: {:?}", entries.keys());
    Ok(RunConfig {
        command,
        scenario: scenario_entry.map(|e| e.value),
        params,
        initial,
        integrator,
        sweep,
        output_dir,
    })
}

/// Shortest exact decimal form of `v` (round-trips through `parse`).
fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Serializes a resolved config back to the file format. Re-parsing the
/// result reproduces `cfg` up to the `scenario` seed having been expanded.
/// The initial state is written as explicit entries, which cover every state
/// the format itself can express (diagonal plus the lower-level coherence).
pub fn to_config_string(cfg: &RunConfig) -> String {
    let mut out = String::new();
    if let Some(cmd) = cfg.command {
        out.push_str(&format!("command = {}\n", cmd.name()));
    }
    if let Some(name) = &cfg.scenario {
        out.push_str(&format!("scenario = {name}\n"));
    }
    let p = &cfg.params;
    out.push_str(&format!("params.r1 = {}\n", fmt_f64(p.r1())));
    out.push_str(&format!("params.r2 = {}\n", fmt_f64(p.r2())));
    out.push_str(&format!("params.gamma1 = {}\n", fmt_f64(p.gamma1())));
    out.push_str(&format!("params.gamma2 = {}\n", fmt_f64(p.gamma2())));
    out.push_str(&format!("params.p = {}\n", fmt_f64(p.p())));
    out.push_str(&format!("params.delta = {}\n", fmt_f64(p.delta())));
    if let Some(state) = &cfg.initial {
        let bc = state.coherence(Level::B, Level::C);
        out.push_str(&format!("initial.rho_aa = {}\n", fmt_f64(state.population(Level::A))));
        out.push_str(&format!("initial.rho_bb = {}\n", fmt_f64(state.population(Level::B))));
        out.push_str(&format!("initial.rho_cc = {}\n", fmt_f64(state.population(Level::C))));
        out.push_str(&format!("initial.re_bc = {}\n", fmt_f64(bc.re)));
        out.push_str(&format!("initial.im_bc = {}\n", fmt_f64(bc.im)));
    }
    let ic = &cfg.integrator;
    let method = match ic.method {
        Method::FixedRk4 => "rk4",
        Method::AdaptiveRk45 => "rk45",
    };
    out.push_str(&format!("integrator.method = {method}\n"));
    out.push_str(&format!("integrator.step = {}\n", fmt_f64(ic.step)));
    out.push_str(&format!("integrator.abs_tol = {}\n", fmt_f64(ic.abs_tol)));
    out.push_str(&format!("integrator.rel_tol = {}\n", fmt_f64(ic.rel_tol)));
    out.push_str(&format!("integrator.horizon = {}\n", fmt_f64(ic.horizon)));
    out.push_str(&format!(
        "integrator.convergence_tol = {}\n",
        fmt_f64(ic.convergence_norm_tol)
    ));
    out.push_str(&format!("integrator.sample_stride = {}\n", ic.sample_stride));
    out.push_str(&format!(
        "integrator.stop_at_convergence = {}\n",
        ic.stop_at_convergence
    ));
    let axis = |name: &str, list: &Option<Vec<f64>>| -> String {
        match list {
            Some(values) => format!(
                "sweep.{name} = {}\n",
                values.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(", ")
            ),
            None => String::new(),
        }
    };
    out.push_str(&axis("r1", &cfg.sweep.r1));
    out.push_str(&axis("r2", &cfg.sweep.r2));
    out.push_str(&axis("gamma1", &cfg.sweep.gamma1));
    out.push_str(&axis("gamma2", &cfg.sweep.gamma2));
    if let Some(dir) = &cfg.output_dir {
        out.push_str(&format!("output.dir = {dir}\n"));
    }
    out
}
