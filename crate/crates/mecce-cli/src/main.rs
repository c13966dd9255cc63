//! `mecce` — command-line front end for the spin-bath decoherence engine.
//!
//! Subcommands: `run <config>`, `verify`, and
//! `sweep <config> --param <name> --values <list>`. Exit codes: 0 success,
//! 1 solver or check failure, 2 invalid configuration or usage.

mod config;
mod runner;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use runner::SummaryRow;

#[derive(Parser)]
#[command(name = "mecce", version, about = "Central-spin decoherence in dissipative spin baths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory, overriding the config's `output.directory`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run a single seed, overriding the config's `solver.seeds`.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the solvers described by a config file.
    Run { config: PathBuf },
    /// Run the built-in acceptance checks and report pass/fail per check.
    Verify,
    /// Re-run a config once per value of a swept parameter.
    Sweep {
        config: PathBuf,
        /// One of: gamma, depth, p, order.
        #[arg(long)]
        param: String,
        /// Comma-separated list of values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot size worker pool: {e}");
            return ExitCode::from(2);
        }
    }
    match cli.command {
        Command::Run { config } => cmd_run(&config, cli.out.as_deref(), cli.seed),
        Command::Verify => cmd_verify(),
        Command::Sweep { config, param, values } => {
            cmd_sweep(&config, &param, &values, cli.out.as_deref(), cli.seed)
        }
    }
}

fn load_config(
    path: &std::path::Path,
    out: Option<&std::path::Path>,
    seed: Option<u64>,
) -> Result<ExperimentConfig, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(dir) = out {
        cfg.output.directory = dir.display().to_string();
    }
    if let Some(s) = seed {
        cfg.solver.seeds = vec![s];
    }
    Ok(cfg)
}

fn cmd_run(path: &std::path::Path, out: Option<&std::path::Path>, seed: Option<u64>) -> ExitCode {
    let cfg = match load_config(path, out, seed) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: invalid config: {e}");
            return ExitCode::from(2);
        }
    };
    let dir = PathBuf::from(&cfg.output.directory);
    let rows = match runner::run_config(&cfg, &dir) {
        Ok(rows) => rows,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = finish_outputs(&cfg, "run", &rows, &dir) {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    println!("wrote {} curve set(s) to {}", rows.len(), dir.display());
    ExitCode::SUCCESS
}

fn cmd_verify() -> ExitCode {
    let results = mecce::acceptance::run_all();
    let mut all = true;
    for r in &results {
        println!("{}", r.line());
        all &= r.passed;
    }
    if all {
        println!("all {} checks passed", results.len());
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn cmd_sweep(
    path: &std::path::Path,
    param: &str,
    values: &[f64],
    out: Option<&std::path::Path>,
    seed: Option<u64>,
) -> ExitCode {
    let base = match load_config(path, out, seed) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: invalid config: {e}");
            return ExitCode::from(2);
        }
    };
    let dir = PathBuf::from(&base.output.directory);
    let mut aggregate = String::from("value,solver,order,seed,t2\n");
    for &value in values {
        let cfg = match runner::apply_sweep_value(&base, param, value) {
            Ok(cfg) => cfg,
            Err(e) => {
                eprintln!("error: invalid sweep: {e:#}");
                return ExitCode::from(2);
            }
        };
        let subdir = dir.join(format!("{param}_{value}"));
        let rows = match runner::run_config(&cfg, &subdir) {
            Ok(rows) => rows,
            Err(e) => {
                eprintln!("error: {param} = {value}: {e:#}");
                return ExitCode::from(1);
            }
        };
        for r in &rows {
            let order = r.order.map(|o| o.to_string()).unwrap_or_default();
            let t2 = r.t2.map(|t| format!("{t:.16e}")).unwrap_or_default();
            aggregate.push_str(&format!("{value},{},{order},{},{t2}\n", r.solver, r.seed));
        }
        if let Err(e) = finish_outputs(&cfg, "sweep", &rows, &subdir) {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
        println!("{param} = {value}: {} curve set(s)", rows.len());
    }
    if let Err(e) = fs::write(dir.join(format!("sweep_{param}.csv")), aggregate) {
        eprintln!("error: writing sweep table: {e}");
        return ExitCode::from(1);
    }
    println!("wrote {}", dir.join(format!("sweep_{param}.csv")).display());
    ExitCode::SUCCESS
}

fn finish_outputs(
    cfg: &ExperimentConfig,
    command: &str,
    rows: &[SummaryRow],
    dir: &std::path::Path,
) -> anyhow::Result<()> {
    runner::write_summary(rows, &dir.join("summary.csv"))?;
    runner::write_manifest(cfg, command, &dir.join("manifest.toml"))?;
    Ok(())
}
