use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use neqdeco_cli::commands;
use neqdeco_cli::config::{self, parse_method, Scenario};
use neqdeco_cli::error::CliError;
use neqdeco_cli::output::OutputDir;

#[derive(Parser)]
#[command(name = "neqdeco", version, about = "Cat-state decoherence in nonequilibrium environments")]
struct Cli {
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides `trap.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Effective temperature T_eff(t).
    Efftemp,
    /// Interference contrast with the configured methods.
    Contrast {
        /// Comma-separated method list; overrides `run.methods`.
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,
    },
    /// Contrast from the exact Gaussian propagation.
    Exact,
    /// Phase-space evolution on a grid, with a final Wigner snapshot.
    Wigner,
    /// Synthetic trap heating-rate datasets.
    Heating,
    /// Recover T_eff(t) from heating-rate data.
    Invert {
        #[arg(long, requires = "data")]
        ambient: Option<PathBuf>,
        #[arg(long, requires = "ambient")]
        data: Option<PathBuf>,
    },
    /// Two-field comparison; uses the built-in scenario without --config.
    Fig2,
    /// Pairwise deviation between contrast methods.
    Compare,
    /// Every computation the scenario has blocks for.
    Run,
}

fn scenario(cli: &Cli, builtin: Option<&str>) -> Result<Scenario, CliError> {
    let mut sc = match (&cli.config, builtin) {
        (Some(p), _) => config::load(p)?,
        (None, Some(text)) => config::parse(text, Path::new("."))?,
        (None, None) => return Err(CliError::config("--config", "a scenario file is required")),
    };
    if let (Some(seed), Some(trap)) = (cli.seed, sc.trap.as_mut()) {
        trap.seed = seed;
    }
    Ok(sc)
}

fn execute(cli: &Cli) -> Result<OutputDir, CliError> {
    let builtin = matches!(cli.command, Command::Fig2).then_some(neqdeco_cli::FIG2);
    let sc = scenario(cli, builtin)?;
    let mut out = OutputDir::create(&cli.out)?;
    match &cli.command {
        Command::Efftemp => {
            commands::efftemp(&sc, &mut out)?;
        }
        Command::Contrast { methods } => {
            let parsed = methods
                .iter()
                .enumerate()
                .map(|(i, m)| parse_method(m, &format!("--methods[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            commands::contrast(&sc, &mut out, (!parsed.is_empty()).then_some(&parsed[..]))?;
        }
        Command::Exact => {
            commands::contrast(&sc, &mut out, Some(&[neqdeco::decoherence::Method::ExactGaussian]))?;
        }
        Command::Wigner => {
            commands::wigner(&sc, &mut out)?;
        }
        Command::Heating => commands::heating(&sc, &mut out)?,
        Command::Invert { ambient, data } => commands::invert(&sc, &mut out, ambient.as_deref(), data.as_deref())?,
        Command::Fig2 => commands::fig2(&sc, &mut out)?,
        Command::Compare => commands::compare(&sc, &mut out)?,
        Command::Run => commands::run_all(&sc, &mut out)?,
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(out) => {
            for p in out.written() {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
