use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tangle_core::config::{default_grid, load_config, load_config_str, ConfigError, LoadedConfig};
use tangle_core::report::{echo_config, fpc_csv, sidecar_path, tangle_csv};
use tangle_core::sim::experiment::{run_fpc_summary, run_fpc_sweep, SweepRow};
use tangle_core::sim::scenario::{run_tangle_scenario, ScenarioConfig};

const CONFIG_ERROR: u8 = 1;
const RUNTIME_ERROR: u8 = 2;
const DEFAULT_FPC: &str = r#"{"N": 100, "k": 20, "q": 0.1}"#;

#[derive(Debug, Parser)]
#[command(name = "tangle-sim", about = "Tangle and FPC simulator", disable_version_flag = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// CSV output path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Dotted override, e.g. `pow.gamma=0.5`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Monte-Carlo runs per FPC grid point.
    #[arg(long, global = true, default_value_t = 200)]
    runs: usize,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Runs an FPC parameter sweep (default grid unless the config has one).
    FpcSweep,
    /// Runs one FPC configuration.
    FpcRun,
    /// Runs a tangle scenario and writes metrics plus an event trace.
    TangleRun,
    /// Checks a config file without running anything.
    ValidateConfig,
    /// Prints the version.
    Version,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(CONFIG_ERROR)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("runtime error: {msg}");
            ExitCode::from(RUNTIME_ERROR)
        }
    }
}

fn overrides(cli: &Cli) -> Vec<String> {
    let mut all = cli.set.clone();
    if let Some(seed) = cli.seed {
        all.push(format!("seed={seed}"));
    }
    all
}

fn load(cli: &Cli) -> Result<LoadedConfig, Failure> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Failure::Config("--config is required".into()))?;
    Ok(load_config(path, &overrides(cli))?)
}

fn out_path(cli: &Cli) -> Result<&Path, Failure> {
    cli.out.as_deref().ok_or_else(|| Failure::Config("--out is required".into()))
}

/// FPC commands fall back to N=100, k=20, q=0.1 when no config is given.
fn fpc_config(cli: &Cli) -> Result<LoadedConfig, Failure> {
    let loaded = match &cli.config {
        Some(_) => load(cli)?,
        None => load_config_str(DEFAULT_FPC, &overrides(cli))?,
    };
    match loaded {
        LoadedConfig::Fpc(_) => Ok(loaded),
        LoadedConfig::Scenario(_) => Err(Failure::Config("expected an FPC config (top-level key N)".into())),
    }
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Failure::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    if cli.runs == 0 && matches!(cli.command, Command::FpcSweep | Command::FpcRun) {
        return Err(Failure::Config("--runs must be at least 1".into()));
    }
    match cli.command {
        Command::Version => {
            println!("tangle-sim {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
        Command::ValidateConfig => {
            load(cli)?;
            Ok(())
        }
        Command::FpcSweep => {
            let out = out_path(cli)?;
            let loaded = fpc_config(cli)?;
            let LoadedConfig::Fpc(exp) = &loaded else { unreachable!() };
            let grid = exp.grid.clone().unwrap_or_else(default_grid);
            let rows = run_fpc_sweep(&exp.base, &grid, cli.runs);
            report_row_errors(&rows)?;
            write(out, &fpc_csv(&rows))?;
            echo(out, &loaded)
        }
        Command::FpcRun => {
            let out = out_path(cli)?;
            let loaded = fpc_config(cli)?;
            let LoadedConfig::Fpc(exp) = &loaded else { unreachable!() };
            let result = run_fpc_summary(&exp.base, cli.runs).map_err(|e| Failure::Runtime(e.to_string()))?;
            let row = SweepRow {
                config: exp.base.clone(),
                runs: cli.runs,
                result: Ok(result),
            };
            write(out, &fpc_csv(&[row]))?;
            echo(out, &loaded)
        }
        Command::TangleRun => {
            let out = out_path(cli)?;
            let loaded = load(cli)?;
            let LoadedConfig::Scenario(scenario) = &loaded else {
                return Err(Failure::Config("expected a tangle scenario config".into()));
            };
            run_scenario(scenario, out)?;
            echo(out, &loaded)
        }
    }
}

fn report_row_errors(rows: &[SweepRow]) -> Result<(), Failure> {
    use tangle_core::sim::experiment::ExperimentError;
    for r in rows {
        match &r.result {
            Ok(_) => {}
            Err(e @ ExperimentError::InfeasibleGridPoint { .. }) => eprintln!("skipped: {e}"),
            Err(e) => return Err(Failure::Runtime(e.to_string())),
        }
    }
    Ok(())
}

fn run_scenario(config: &ScenarioConfig, out: &Path) -> Result<(), Failure> {
    let outcome = run_tangle_scenario(config).map_err(|e| Failure::Runtime(e.to_string()))?;
    if let Err(v) = &outcome.audit {
        return Err(Failure::Runtime(format!("ledger audit failed: {v:?}")));
    }
    write(out, &tangle_csv(&outcome.metrics))?;
    write(&sidecar_path(out, "trace"), &outcome.trace)
}

fn echo(out: &Path, loaded: &LoadedConfig) -> Result<(), Failure> {
    echo_config(out, loaded)
        .map(|_| ())
        .map_err(|e| Failure::Runtime(format!("cannot write resolved config: {e}")))
}
