use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use oscnl::coil::{coil_report, CoilParams};
use oscnl::scenarios::{compare_datasets, list_scenarios, run_scenario, Dataset, ScenarioConfig};
use oscnl::Error;

/// Caps the number of worker threads.
const THREADS_ENV: &str = "OSCNL_THREADS";

const EXIT_CONFIG: u8 = 2;
const EXIT_TOLERANCE: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

#[derive(Parser)]
#[command(name = "oscnl", version, about = "Entanglement and non-classicality of quartic anharmonic oscillators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write CSV tables plus metadata.json.
    Run {
        /// Scenario id (see `oscnl list`).
        scenario: String,
        /// TOML config with a [params] table; must name the same scenario if it sets one.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Parameter override, e.g. `--set betas=[0.5] --set grid.t_end=30`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Output directory [default: out/<scenario>].
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compare two dataset directories column by column.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        tol: f64,
        #[arg(long)]
        json: bool,
    },
    /// List the scenarios.
    List {
        #[arg(long)]
        json: bool,
    },
    /// Helmholtz-coil field and nonlinearity estimate.
    Coil {
        /// Coil radius (m).
        #[arg(long = "R", default_value_t = CoilParams::default().radius)]
        radius: f64,
        /// Current (A).
        #[arg(long = "I", default_value_t = CoilParams::default().current)]
        current: f64,
        /// Atoms in the tip magnet.
        #[arg(long = "Nmag", default_value_t = CoilParams::default().n_mag)]
        n_mag: f64,
        /// Zero-point amplitude (m).
        #[arg(long = "a0", default_value_t = CoilParams::default().a0)]
        a0: f64,
        #[arg(long = "turns", default_value_t = 1)]
        n_turns: u32,
        #[arg(long)]
        json: bool,
    },
}

enum Failure {
    Core(Error),
    Tolerance(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn init_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot set up {n} threads: {e}")))?;
    Ok(())
}

fn run(
    scenario: &str,
    config: Option<&Path>,
    overrides: &[String],
    out: Option<PathBuf>,
    seed: Option<u64>,
) -> Result<(), Failure> {
    let mut cfg = match config {
        Some(path) => {
            let cfg = ScenarioConfig::from_file(path)?;
            if cfg.scenario != scenario {
                return Err(Error::Config(format!("{} is for `{}`, not `{scenario}`", path.display(), cfg.scenario)).into());
            }
            cfg
        }
        None => ScenarioConfig::new(scenario),
    };
    for o in overrides {
        cfg.set(o)?;
    }
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if out.is_some() {
        cfg.out = out;
    }
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out").join(scenario));
    let dataset = run_scenario(&cfg)?;
    dataset.write(&dir)?;
    println!("{}: wrote {} table(s) to {}", dataset.metadata.scenario, dataset.tables.len(), dir.display());
    for (key, value) in &dataset.metadata.diagnostics {
        println!("  {key} = {value}");
    }
    Ok(())
}

fn compare(a: &Path, b: &Path, tol: f64, json: bool) -> Result<(), Failure> {
    let report = compare_datasets(&Dataset::read(a)?, &Dataset::read(b)?)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?);
    } else {
        for col in &report.columns {
            println!("{:<40} {:.3e}", col.column, col.max_abs_difference);
        }
        println!("max {:.3e} (tol {tol:.1e})", report.max_difference());
    }
    if report.passes(tol) {
        Ok(())
    } else {
        Err(Failure::Tolerance(format!("max difference {:.3e} exceeds {tol:.1e}", report.max_difference())))
    }
}

fn list(json: bool) -> Result<(), Failure> {
    let scenarios = list_scenarios();
    if json {
        println!("{}", serde_json::to_string_pretty(&scenarios).map_err(Error::from)?);
    } else {
        for s in scenarios {
            println!("{:<7} {}", s.id, s.description);
        }
    }
    Ok(())
}

fn coil(params: CoilParams, json: bool) -> Result<(), Failure> {
    let report = coil_report(&params)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?);
    } else {
        println!("R        {:.4e} m", params.radius);
        println!("I        {:.4e} A", params.current);
        println!("turns    {}", params.n_turns);
        println!("N_mag    {:.4e}", params.n_mag);
        println!("a0       {:.4e} m", params.a0);
        println!("B(0)     {:.6e} T", report.b0);
        println!("quartic  {:.6} (144/125 = {:.6})", report.quartic_coefficient, 144.0 / 125.0);
        println!("beta     {:.4} s^-1", report.beta);
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| match cli.command {
        Command::Run { scenario, config, overrides, out, seed } => run(&scenario, config.as_deref(), &overrides, out, seed),
        Command::Compare { a, b, tol, json } => compare(&a, &b, tol, json),
        Command::List { json } => list(json),
        Command::Coil { radius, current, n_mag, a0, n_turns, json } => {
            coil(CoilParams { radius, current, n_turns, n_mag, a0 }, json)
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Tolerance(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_TOLERANCE)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { EXIT_NUMERIC } else { EXIT_CONFIG })
        }
    }
}
