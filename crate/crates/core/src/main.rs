use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use csi_deteq::harness::{
    evaluate_deteq, evaluate_mse, evaluate_pilot_length, recipe, run_experiment, write_atomic, write_csv,
    ExperimentConfig, InstanceConfig, DEFAULT_RECIPE, RECIPES,
};
use csi_deteq::Error;

#[derive(Parser)]
#[command(name = "csi-deteq", version, about = "Covariance-aided channel estimation MSE and its deterministic equivalents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Output file (default: stdout, or the configured path for sweeps).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 2 when any solver fails to converge.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Exact and closed-form MSE of one instance.
    Mse(Common),
    /// Deterministic equivalents and diagnostics of one instance.
    Deteq(Common),
    /// Run an experiment sweep and write CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Built-in recipe, used when no --config is given.
        #[arg(long)]
        recipe: Option<String>,
        /// Overrides the configured trial count.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Minimum pilot length search.
    PilotLength(Common),
    /// List built-in recipes, or print one as JSON.
    Recipes {
        #[arg(long)]
        recipe: Option<String>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Csv(_) => 3,
        Error::Numerical(_) => 2,
        _ => 1,
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => write_atomic(p, text),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn pool(threads: Option<usize>) -> Result<(), Error> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot build a pool of {n} threads: {e}")))?;
    }
    Ok(())
}

fn instance(common: &Common) -> Result<InstanceConfig, Error> {
    let path = common.config.as_deref().ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut cfg = InstanceConfig::load(path).map_err(|e| match e {
        Error::Io(io) => Error::Config(format!("cannot read {}: {io}", path.display())),
        other => other,
    })?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn pretty(v: &serde_json::Value) -> String {
    format!("{}\n", serde_json::to_string_pretty(v).expect("JSON value serializes"))
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Mse(c) => {
            pool(c.threads)?;
            emit(c.out.as_deref(), &pretty(&evaluate_mse(&instance(&c)?)?))
        }
        Command::Deteq(c) => {
            pool(c.threads)?;
            let (v, failures) = evaluate_deteq(&instance(&c)?)?;
            emit(c.out.as_deref(), &pretty(&v))?;
            if failures > 0 {
                warn!("{failures} solver(s) did not converge");
                if c.strict {
                    return Err(Error::Numerical(format!("{failures} solver(s) did not converge")));
                }
            }
            Ok(())
        }
        Command::PilotLength(c) => {
            pool(c.threads)?;
            emit(c.out.as_deref(), &pretty(&evaluate_pilot_length(&instance(&c)?)?))
        }
        Command::Sweep { common: c, recipe: name, trials } => {
            let mut cfg = match (&c.config, &name) {
                (Some(_), Some(_)) => return Err(Error::Config("give either --config or --recipe".into())),
                (Some(p), None) => ExperimentConfig::load(p).map_err(|e| match e {
                    Error::Io(io) => Error::Config(format!("cannot read {}: {io}", p.display())),
                    other => other,
                })?,
                (None, n) => {
                    let n = n.as_deref().unwrap_or(DEFAULT_RECIPE);
                    recipe(n).ok_or_else(|| Error::Config(format!("unknown recipe `{n}`")))?
                }
            };
            if let Some(s) = c.seed {
                cfg.seed = s;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(o) = &c.out {
                cfg.output = Some(o.clone());
            }
            cfg.validate()?;
            let output = run_experiment(&cfg, c.threads)?;
            let path = cfg.output.clone().unwrap_or_else(|| PathBuf::from(format!("{}.csv", cfg.name_or_default())));
            write_csv(&cfg, &output, &path)?;
            info!("wrote {} rows to {}", output.records.len(), path.display());
            if output.nonconverged > 0 {
                warn!("{} solver run(s) did not converge", output.nonconverged);
                if c.strict {
                    return Err(Error::Numerical(format!("{} solver run(s) did not converge", output.nonconverged)));
                }
            }
            Ok(())
        }
        Command::Recipes { recipe: None } => {
            let mut text = String::new();
            for r in RECIPES {
                let mark = if r.name == DEFAULT_RECIPE { " (default)" } else { "" };
                text.push_str(&format!("{:<14}{}{}\n", r.name, r.description, mark));
            }
            emit(None, &text)
        }
        Command::Recipes { recipe: Some(n) } => {
            let cfg = recipe(&n).ok_or_else(|| Error::Config(format!("unknown recipe `{n}`")))?;
            emit(None, &format!("{}\n", cfg.to_json()))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // usage errors are configuration errors; clap's own status 2 would
    // collide with the numerical-failure code
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
