mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use commands::{
    BlowupOdeFlags, ExponentsFlags, FitFlags, FunctionalsFlags, Hyp2f1Flags, SimulateFlags, SweepFlags, VerifyFlags,
};

/// Numerical lab for the semilinear wave equation with scale-invariant damping.
#[derive(Parser)]
#[command(name = "dampwave", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// JSON file with defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for report files.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Print results as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Print nothing on success.
    #[arg(long, global = true)]
    quiet: bool,
    /// Worker threads for concurrent integrations.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Critical exponents, admissible set and lifespan exponent.
    Exponents(ExponentsFlags),
    /// Gauss hypergeometric function 2F1(a, b; c; z).
    Hyp2f1(Hyp2f1Flags),
    /// Check the identities of one test-function family.
    VerifyIdentities(VerifyFlags),
    /// Integrate the radial problem on two grids.
    Simulate(SimulateFlags),
    /// Functionals G, H, J and their identities for a simulate run.
    Functionals(FunctionalsFlags),
    /// Blowup time of the comparison ODE as a function of eps.
    BlowupOde(BlowupOdeFlags),
    /// Lifespan sweep over eps with fit and report.
    Sweep(SweepFlags),
    /// Refit the records of a finished sweep.
    Fit(FitFlags),
}

#[derive(Debug)]
pub enum Failure {
    Invalid(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::Numerical(m) | Failure::Io(m) => m,
        }
    }
}

impl From<dampwave::Error> for Failure {
    fn from(e: dampwave::Error) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

/// Resolved global options.
pub struct Ctx {
    pub output: Option<PathBuf>,
    pub json: bool,
    pub quiet: bool,
}

impl Ctx {
    /// Prints `value` as JSON, or the human form, unless quiet.
    pub fn emit<T: Serialize>(&self, value: &T, human: impl FnOnce() -> String) {
        if self.quiet {
            return;
        }
        if self.json {
            println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
        } else {
            print!("{}", human());
        }
    }

    /// Writes `value` to `<output>/<name>` when an output directory is set.
    pub fn save_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), Failure> {
        match &self.output {
            Some(dir) => save_json(&dir.join(name), value),
            None => Ok(()),
        }
    }
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    Ok(dampwave::sweep::write_json(path, value)?)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = match &cli.global.config {
        Some(p) => config::load(p)?,
        None => Default::default(),
    };
    let globals: serde_json::Map<_, _> = config::GLOBAL_KEYS
        .iter()
        .filter_map(|k| cfg.remove(*k).map(|v| (k.to_string(), v)))
        .collect();
    let flag = |key: &str| globals.get(key).and_then(|v| v.as_bool()).unwrap_or(false);
    let ctx = Ctx {
        output: cli
            .global
            .output
            .clone()
            .or_else(|| globals.get("output").and_then(|v| v.as_str()).map(PathBuf::from)),
        json: cli.global.json || flag("json"),
        quiet: cli.global.quiet || flag("quiet"),
    };
    let threads = cli
        .global
        .threads
        .or_else(|| globals.get("threads").and_then(|v| v.as_u64()).map(|n| n as usize));
    if let Some(n) = threads {
        if n == 0 {
            return Err(Failure::Invalid("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Invalid(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Exponents(f) => commands::exponents(&ctx, f, cfg),
        Command::Hyp2f1(f) => commands::hyp2f1(&ctx, f, cfg),
        Command::VerifyIdentities(f) => commands::verify(&ctx, f, cfg),
        Command::Simulate(f) => commands::simulate(&ctx, f, cfg),
        Command::Functionals(f) => commands::functionals(&ctx, f, cfg),
        Command::BlowupOde(f) => commands::blowup_ode(&ctx, f, cfg),
        Command::Sweep(f) => commands::sweep(&ctx, f, cfg),
        Command::Fit(f) => commands::fit(&ctx, f, cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
