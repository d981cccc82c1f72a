use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mobius_lab::cli::{self, Command, ExitStatus, Overrides, RunConfig, SweepKind};
use mobius_lab::{par, Error};

#[derive(Parser)]
#[command(
    name = "mobius-lab",
    version,
    about = "Operators on diagonal reproducing kernel spaces: tables, verdicts, identity checks and sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Coefficient table: n, b_n, ‖zⁿ‖², shift weight.
    Kernel(Common),
    /// JSON verdict bundle for the configured kernel.
    Diagnose(Common),
    /// Exact jet-symbol identity suite plus jet NND checks (exit 1 on failure).
    JetVerify(Common),
    /// CSV sweep: lower-bound, tilde-phi, boundary or calculus-norm.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Sweep kind; overrides the configuration file.
        #[arg(long)]
        kind: Option<SweepKind>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Truncation order N.
    #[arg(long)]
    trunc: Option<usize>,
    /// Seed in hexadecimal, e.g. 0x5EED.
    #[arg(long)]
    seed: Option<String>,
    /// Exact rational backend where supported.
    #[arg(long)]
    exact: bool,
    /// Inject a deliberate perturbation into the jet identity suite.
    #[arg(long)]
    perturb: bool,
}

fn execute(command: Command, common: &Common, kind: Option<SweepKind>) -> Result<ExitStatus, Error> {
    if let Some(t) = common.threads {
        par::configure_threads(t)?;
    }
    let config = match &common.config {
        Some(p) => RunConfig::from_json_str(&std::fs::read_to_string(p)?)?,
        None => RunConfig::default(),
    };
    let overrides = Overrides { trunc: common.trunc, seed: common.seed.clone(), exact: common.exact, perturb: common.perturb, sweep: kind };
    let report = cli::run(command, &config.apply(&overrides))?;
    match &common.out {
        Some(p) => std::fs::write(p, &report.body)?,
        None => print!("{}", report.body),
    }
    Ok(report.status)
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let (command, common, kind) = match &args.command {
        Cmd::Kernel(c) => (Command::Kernel, c, None),
        Cmd::Diagnose(c) => (Command::Diagnose, c, None),
        Cmd::JetVerify(c) => (Command::JetVerify, c, None),
        Cmd::Sweep { common, kind } => (Command::Sweep, common, *kind),
    };
    let status = match execute(command, common, kind) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("mobius-lab: {e}");
            cli::error_status(&e)
        }
    };
    if status == ExitStatus::IdentityFailure {
        eprintln!("mobius-lab: jet-symbol identity verification failed");
    }
    ExitCode::from(status.code() as u8)
}
