//! `lambda-cpt`: command-line front end for the three-level pumped-atom
//! simulator.
//!
//! Subcommands: `simulate` (trajectory CSV + JSON summary), `steady`
//! (steady-state JSON report), `sweep` (parameter-grid CSV), `dressed`
//! (dark/bright rotation report), and `scenarios` (list or run the built-in
//! catalog). All take a flat key-value config file; see `config`.
//!
//! Exit codes: 0 success, 1 failed scenario assertion, 2 configuration or
//! usage error, 3 runtime (numerical or I/O) failure.

mod config;
mod emit;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand};
use lambda_cpt::dressed::{dressed_generator, dressed_rates, DressedError};
use lambda_cpt::scenarios::{builtin_scenarios, find_scenario, run_scenario};
use lambda_cpt::steady::{steady_state, SteadyError};
use lambda_cpt::{integrate, integrator::convergence_time, ScenarioResult};

use config::{parse_config, to_config_string, CommandKind, RunConfig};

#[derive(Parser)]
#[command(
    name = "lambda-cpt",
    version,
    about = "Simulator and steady-state analysis for a pumped three-level atom"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate a trajectory; write trajectory.csv and summary.json
    Simulate {
        /// Run configuration file
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
        /// Output directory (overrides `output.dir`; default `.`)
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Compute the steady state; print a JSON report to stdout
    Steady {
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
    },
    /// Evaluate a parameter grid; CSV to stdout or `output.dir/sweep.csv`
    Sweep {
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
    },
    /// Report the dark/bright rotation and dressed-sector rates as JSON
    Dressed {
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
    },
    /// List or run the built-in scenario catalog
    #[command(group(ArgGroup::new("which").required(true).args(["list", "run"])))]
    Scenarios {
        /// List scenario names and summaries
        #[arg(long)]
        list: bool,
        /// Run one scenario by name, or `all`
        #[arg(long, value_name = "NAME|all")]
        run: Option<String>,
    },
}

/// Failure classes, in exit-code order.
enum CliError {
    /// Unusable configuration or arguments (exit 2).
    Config(String),
    /// A scenario assertion failed (exit 1).
    Assertion(String),
    /// Numerical or I/O failure at runtime (exit 3).
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Assertion(_) => 1,
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Assertion(m) | CliError::Runtime(m) => m,
        }
    }
}

/// Steady-state analysis failures: a missing initial state is a config
/// shortfall, everything else is a runtime failure.
fn steady_error(e: SteadyError) -> CliError {
    match e {
        SteadyError::InitialRequired | SteadyError::NotUnique { .. } => CliError::Config(format!(
            "{e}; set `initial.preset` or the `initial.*` entries in the config"
        )),
        other => CliError::Runtime(other.to_string()),
    }
}

fn dressed_error(e: DressedError) -> CliError {
    match e {
        DressedError::OutsideTrappingRegime { .. } => CliError::Config(e.to_string()),
        DressedError::Model(m) => CliError::Runtime(m.to_string()),
    }
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn load_config(path: &Path, invoked: CommandKind) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let cfg = parse_config(&text).map_err(|e| CliError::Config(e.to_string()))?;
    cfg.expect_command(invoked)
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(cfg)
}

fn require_initial(cfg: &RunConfig, what: &str) -> Result<lambda_cpt::DensityMatrix, CliError> {
    cfg.initial.ok_or_else(|| {
        CliError::Config(format!(
            "{what} requires an initial state: set `initial.preset`, the `initial.*` entries, or a `scenario`"
        ))
    })
}

fn simulate(config: &Path, out: Option<PathBuf>) -> Result<(), CliError> {
    let cfg = load_config(config, CommandKind::Simulate)?;
    let initial = require_initial(&cfg, "simulate")?;
    let traj = integrate(&cfg.params, &initial, &cfg.integrator)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let steady = steady_state(&cfg.params, Some(&initial), &cfg.integrator)
        .map_err(|e| e.to_string());
    let settle = convergence_time(&traj, emit::SETTLE_EPSILON);

    let dir = out
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    let csv_path = dir.join("trajectory.csv");
    let json_path = dir.join("summary.json");
    write_file(&csv_path, &emit::trajectory_csv(&traj))?;
    let summary = emit::simulate_summary(&traj, &steady, settle);
    write_file(&json_path, &format!("{:#}\n", summary))?;
    // The resolved configuration, for reproducing the run without the
    // original file (scenario seeds and defaults expanded).
    write_file(&dir.join("run.config"), &to_config_string(&cfg))?;
    println!(
        "wrote {} ({} samples over {} natural time units) and {}",
        csv_path.display(),
        traj.samples().len(),
        traj.final_sample().time,
        json_path.display()
    );
    Ok(())
}

fn steady(config: &Path) -> Result<(), CliError> {
    let cfg = load_config(config, CommandKind::Steady)?;
    let report =
        steady_state(&cfg.params, cfg.initial.as_ref(), &cfg.integrator).map_err(steady_error)?;
    println!("{:#}", emit::steady_json(&cfg.params, &report));
    Ok(())
}

fn sweep(config: &Path) -> Result<(), CliError> {
    let cfg = load_config(config, CommandKind::Sweep)?;
    let grid = cfg
        .sweep
        .grid(&cfg.params)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let points = lambda_cpt::scenarios::sweep(&grid, cfg.initial.as_ref(), &cfg.integrator)
        .map_err(steady_error)?;
    let csv = emit::sweep_csv(&points);
    match &cfg.output_dir {
        Some(dir) => {
            let dir = PathBuf::from(dir);
            std::fs::create_dir_all(&dir)
                .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
            let path = dir.join("sweep.csv");
            write_file(&path, &csv)?;
            println!("wrote {} ({} grid points)", path.display(), points.len());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn dressed(config: &Path) -> Result<(), CliError> {
    let cfg = load_config(config, CommandKind::Dressed)?;
    let generator = dressed_generator(&cfg.params).map_err(dressed_error)?;
    let at_initial = cfg
        .initial
        .as_ref()
        .map(|state| dressed_rates(&cfg.params, state))
        .transpose()
        .map_err(dressed_error)?;
    println!(
        "{:#}",
        emit::dressed_json(&cfg.params, &generator, at_initial.as_ref())
    );
    Ok(())
}

fn print_scenario(result: &ScenarioResult) {
    println!("scenario {} — {}", result.spec.name, result.spec.summary);
    for outcome in &result.outcomes {
        let tag = if outcome.passed { "PASS" } else { "FAIL" };
        println!("  [{tag}] {} — {}", outcome.label, outcome.detail);
    }
}

fn scenarios(list: bool, run: Option<String>) -> Result<(), CliError> {
    if list {
        for spec in builtin_scenarios() {
            println!("{} — {}", spec.name, spec.summary);
        }
        println!("aliases: fig2a=case1-b-r2.5, fig2b=case1-b-r0.5, fig3=case3-r2.5, fig4=decay-only");
        return Ok(());
    }
    let name = run.expect("clap guarantees one of --list/--run");
    let specs = if name == "all" {
        builtin_scenarios()
    } else {
        vec![find_scenario(&name).ok_or_else(|| {
            CliError::Config(format!(
                "unknown scenario `{name}`; `lambda-cpt scenarios --list` shows the catalog"
            ))
        })?]
    };
    let total = specs.len();
    let mut failed = 0usize;
    for spec in &specs {
        let result = run_scenario(spec).map_err(|e| CliError::Runtime(e.to_string()))?;
        print_scenario(&result);
        if !result.passed() {
            failed += 1;
        }
    }
    if failed > 0 {
        Err(CliError::Assertion(format!(
            "{failed} of {total} scenarios failed their assertions"
        )))
    } else {
        println!("ran {total} scenario(s): all assertions passed");
        Ok(())
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Cmd::Simulate { config, out } => simulate(&config, out),
        Cmd::Steady { config } => steady(&config),
        Cmd::Sweep { config } => sweep(&config),
        Cmd::Dressed { config } => dressed(&config),
        Cmd::Scenarios { list, run } => scenarios(list, run),
    }
}

fn main() -> ExitCode {
    // Clap's own usage errors exit with code 2, matching the config class.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
