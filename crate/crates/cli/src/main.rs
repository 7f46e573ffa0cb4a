//! `normbranch`: normalized solutions on balls from a JSON config.

mod commands;
mod config;
mod error;
mod store;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use config::{Command, RunConfig};
use error::{CliError, Exit};
use store::{config_hash, write_atomic, Cache, RunRecord};

#[derive(Parser, Debug)]
#[command(version, about = "Normalized solutions of semilinear Dirichlet problems on balls")]
struct Cli {
    #[command(subcommand)]
    sub: Sub,
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the summary JSON here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write the command's CSV table here.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Neither read nor write the result cache.
    #[arg(long, global = true)]
    no_cache: bool,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Ground state at a fixed frequency.
    Solve {
        #[arg(long, allow_hyphen_values = true)]
        omega: Option<f64>,
    },
    /// Mass along the ground-state branch in λ = -ω.
    Branch {
        #[arg(long)]
        points: Option<usize>,
    },
    /// Largest mass on the branch.
    RhoStar,
    /// All branch solutions of a given mass.
    Normalized {
        #[arg(long)]
        rho: Option<f64>,
    },
    /// Local minimizer on the mass sphere by the projected flow.
    Minimize {
        #[arg(long)]
        rho: Option<f64>,
    },
    /// Mountain-pass solution on the mass sphere.
    Pass {
        #[arg(long)]
        rho: Option<f64>,
    },
    /// Certificates for ground states at the given frequencies.
    Verify {
        #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
        omega: Vec<f64>,
    },
    /// Asymptotics of cutoff bubble norms.
    Bubbles,
    /// θ_ε on a grid of fractions of the Sobolev constant.
    Theta,
}

impl Sub {
    fn name(&self) -> &'static str {
        match self {
            Sub::Solve { .. } => "solve",
            Sub::Branch { .. } => "branch",
            Sub::RhoStar => "rho-star",
            Sub::Normalized { .. } => "normalized",
            Sub::Minimize { .. } => "minimize",
            Sub::Pass { .. } => "pass",
            Sub::Verify { .. } => "verify",
            Sub::Bubbles => "bubbles",
            Sub::Theta => "theta",
        }
    }

    /// Flag values take precedence over the config block.
    fn apply(&self, cmd: &mut Command) {
        match (self, cmd) {
            (Sub::Solve { omega: Some(w) }, Command::Solve(a)) => a.omega = Some(*w),
            (Sub::Branch { points: Some(n) }, Command::Branch(w)) => w.points = *n,
            (Sub::Normalized { rho: Some(r) }, Command::Normalized(a)) => a.rho = Some(*r),
            (Sub::Minimize { rho: Some(r) }, Command::Minimize(a)) => a.rho = Some(*r),
            (Sub::Pass { rho: Some(r) }, Command::Pass(a)) => a.rho = Some(*r),
            (Sub::Verify { omega }, Command::Verify(a)) if !omega.is_empty() => a.omegas = omega.clone(),
            _ => {}
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "lowercase")]
enum Status {
    Ok,
    Empty,
    Failed,
}

#[derive(Serialize)]
struct Summary<'a> {
    command: &'a str,
    config_hash: &'a str,
    status: Status,
    results: Vec<Value>,
    verification: Value,
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::config("--config is required"))?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let mut cfg: RunConfig =
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let name = cli.sub.name();
    let mut cmd = match cfg.command.take() {
        Some(c) if c.name() != name => {
            return Err(CliError::config(format!(
                "config command block is for `{}`, not `{name}`",
                c.name()
            )))
        }
        Some(c) => c,
        None => Command::default_for(name).expect("every subcommand has a default block"),
    };
    cli.sub.apply(&mut cmd);
    cfg.command = Some(cmd);
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cfg: &RunConfig, hash: &str) -> (i32, String, Option<String>) {
    let name = cfg.command.as_ref().map_or("", Command::name);
    let outcome = cfg
        .spec()
        .and_then(|spec| commands::run(&spec, cfg.command.as_ref().expect("validated config has a command")));
    let (exit, results, verification, csv) = match outcome {
        Ok(o) => (o.exit, o.results, o.verification, o.csv),
        Err(e) => (e.exit, Vec::new(), json!({ "pass": false, "error": e.message }), None),
    };
    let status = match exit {
        Exit::Ok => Status::Ok,
        Exit::Empty => Status::Empty,
        Exit::Failed | Exit::Config => Status::Failed,
    };
    let summary = Summary {
        command: name,
        config_hash: hash,
        status,
        results,
        verification,
    };
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    (exit as i32, text, csv)
}

fn emit(cli: &Cli, summary: &str, csv: Option<&str>) -> Result<(), CliError> {
    match &cli.out {
        Some(p) => write_atomic(p, summary.as_bytes())?,
        None => print!("{summary}"),
    }
    if let Some(p) = &cli.csv {
        match csv {
            Some(t) => write_atomic(p, t.as_bytes())?,
            None => eprintln!("{}: no table for this command", display(p)),
        }
    }
    Ok(())
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn main_inner(cli: &Cli) -> Result<i32, CliError> {
    let cfg = load_config(cli)?;
    let hash = config_hash(&cfg)?;
    let cache = if cli.no_cache { None } else { Cache::from_env() };
    if let Some(rec) = cache.as_ref().and_then(|c| c.load(&hash)) {
        eprintln!("cache hit {hash}");
        emit(cli, &rec.summary, rec.csv.as_deref())?;
        return Ok(rec.exit_code);
    }
    let (code, summary, csv) = execute(&cfg, &hash);
    if code == Exit::Config as i32 {
        eprintln!("{}", summary);
        return Ok(code);
    }
    if let Some(c) = &cache {
        if code == Exit::Ok as i32 || code == Exit::Empty as i32 {
            if let Err(e) = c.store(&RunRecord::new(&cfg, &hash, code, summary.clone(), csv.clone())) {
                eprintln!("cache write failed: {e}");
            }
        }
    }
    emit(cli, &summary, csv.as_deref())?;
    Ok(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Exit::Config as u8 } else { 0 });
        }
    };
    match main_inner(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit as u8)
        }
    }
}
