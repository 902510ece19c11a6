use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use omtopo_cli::catalog::{self, SCENARIOS};
use omtopo_cli::config::{load_config, ConfigFile};
use omtopo_cli::overrides::parse_assignment;
use omtopo_cli::{run_resolved, run_scenario, run_sweep, verify_manifest, CliError, Result};
use omtopo_core::meanfield::steady_residual;
use omtopo_core::model::DEFAULT_PHASE_TOL;
use omtopo_core::{
    classify_phase, effective_chain, find_steady_state_fixed_point, find_steady_state_ode, OdeSteadySettings,
};
use serde_json::json;

#[derive(Parser)]
#[command(name = "omtopo", version, about = "Optomechanical SSH lattice scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a built-in scenario.
    Scenario {
        name: String,
        /// Override a parameter, e.g. `kappa[1]=5` or `settings.t_end=100`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a parameter sweep from a JSON config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Maximum number of points solved concurrently.
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
    },
    /// Solve the steady state of a scenario config with both solvers and print a JSON report.
    Steady {
        #[arg(long)]
        config: PathBuf,
    },
    /// Single-excitation transfer through the zero mode of the three-site chain.
    Transfer {
        #[arg(long)]
        nu: f64,
        #[arg(long, default_value_t = 0.05)]
        dt: f64,
        /// Use the idealized coupling schedule instead of the driven steady state.
        #[arg(long)]
        analytic: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the scenario catalog.
    List,
    /// Re-hash the outputs listed in a manifest directory.
    Verify { dir: PathBuf },
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn out_dir(explicit: Option<PathBuf>, name: &str) -> PathBuf {
    explicit.unwrap_or_else(|| {
        let root = std::env::var_os("OMTOPO_OUT").map_or_else(|| PathBuf::from("out"), PathBuf::from);
        root.join(name)
    })
}

fn report(dir: &Path, manifest: &omtopo_cli::Manifest) {
    println!("{} -> {}", manifest.scenario, dir.display());
    for o in &manifest.outputs {
        println!("  {:<16} {}", o.kind, o.path);
    }
    if !manifest.derived.is_empty() {
        println!("{}", serde_json::to_string_pretty(&manifest.derived).expect("json"));
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Scenario { name, set, out } => {
            let overrides = set.iter().map(|s| parse_assignment(s)).collect::<Result<Vec<_>>>()?;
            let dir = out_dir(out, &name);
            let m = run_scenario(&name, &overrides, &dir)?;
            report(&dir, &m);
        }
        Command::Sweep { config, out, jobs } => {
            let ConfigFile::Sweep(sweep) = load_config(&config)? else {
                return Err(CliError::Config(format!("{}: expected a `sweep` config", config.display())));
            };
            let base = sweep.base_spec()?;
            let dir = out_dir(out, "sweep");
            let m = run_sweep(&sweep, &base, &dir, jobs)?;
            report(&dir, &m);
            for f in &m.failures {
                eprintln!("point failed: {f}");
            }
        }
        Command::Steady { config } => {
            let ConfigFile::Scenario(cfg) = load_config(&config)? else {
                return Err(CliError::Config(format!("{}: expected a `scenario` config", config.display())));
            };
            let spec = cfg.resolve()?.spec;
            let fp = find_steady_state_fixed_point(&spec, &Default::default())
                .map_err(|e| CliError::Solver { context: "fixed point".into(), source: e })?;
            let ode = find_steady_state_ode(&spec, &OdeSteadySettings::default());
            let chain = effective_chain(&spec, &fp.state)
                .map_err(|e| CliError::Solver { context: "effective chain".into(), source: e })?;
            let out = json!({
                "fixed_point": fp,
                "fixed_point_residual": steady_residual(&spec, &fp.state),
                "ode_relaxation": match &ode {
                    Ok(r) => json!(r),
                    Err(e) => json!({"error": e.to_string()}),
                },
                "coupling_abs": chain.magnitudes(),
                "phase_class": classify_phase(&chain, DEFAULT_PHASE_TOL).ok().map(|p| p.to_string()),
            });
            println!("{}", serde_json::to_string_pretty(&out).expect("json"));
        }
        Command::Transfer { nu, dt, analytic, out } => {
            let mut sc = catalog::scenario("transfer")?;
            sc.settings.transfer.nu = Some(nu);
            sc.settings.transfer.dt = dt;
            if analytic {
                sc.settings.transfer.source = catalog::ScheduleKind::Analytic;
            }
            let dir = out_dir(out, "transfer");
            let m = run_resolved(&sc, &dir)?;
            report(&dir, &m);
        }
        Command::List => {
            for name in SCENARIOS {
                println!("{name:<9} {}", catalog::summary(name));
            }
        }
        Command::Verify { dir } => {
            let bad = verify_manifest(&dir)?;
            if !bad.is_empty() {
                for p in &bad {
                    eprintln!("checksum mismatch: {p}");
                }
                return Err(CliError::Config(format!("{} output(s) failed verification", bad.len())));
            }
            println!("all outputs verified");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
