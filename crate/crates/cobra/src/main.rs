use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;

use cobra::commands::{execute, Command};
use cobra::config::{parse_config, parse_str, Format, RunConfig};
use cobra::exec::Parallel;
use cobra::output::{emit_plot_data, render, Preamble};

/// Simulators, moment solvers and statistical checks for coordinated
/// branching-coalescing particle systems and their dual frequency processes.
///
/// Exit status: 0 on success or a passed check, 1 when a statistical check
/// fails, 2 on usage or configuration errors.
#[derive(Debug, Parser)]
#[command(name = "cobra", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run config.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// RNG seed (required here or in the config).
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Monte Carlo replicas.
    #[arg(long, global = true, value_name = "N")]
    replicas: Option<u64>,
    /// Time horizon.
    #[arg(long, global = true, value_name = "REAL")]
    t: Option<f64>,
    /// Worker threads for replicas (0 = all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Output file; stdout when absent. Plot data goes to `<PATH>.plot.csv`.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

fn resolve(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => parse_config(path)?,
        None => parse_str("")?,
    };
    cfg.seed = cli.seed.or(cfg.seed);
    cfg.replicas = cli.replicas.or(cfg.replicas);
    cfg.t = cli.t.or(cfg.t);
    cfg.threads = cli.threads.or(cfg.threads);
    cfg.format = cli.format.or(cfg.format);
    // re-validate with the overrides applied
    parse_str(&toml::to_string(&cfg).context("serializing the resolved config")?)?;
    cfg.seed()?;
    Ok(cfg)
}

fn plot_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".plot.csv");
    PathBuf::from(name)
}

fn run(cli: &Cli) -> anyhow::Result<Option<bool>> {
    let cfg = resolve(cli)?;
    let exec = Parallel::new(cfg.threads.unwrap_or(0)).context("starting the thread pool")?;
    let outcome = execute(cli.command, &cfg, &exec)?;
    let preamble = Preamble::new(cli.command.name(), &cfg.echo());
    let bytes = render(
        &preamble,
        &outcome.results,
        &outcome.table,
        cfg.format.unwrap_or_default(),
    )?;
    match &cli.out {
        Some(path) => {
            std::fs::write(path, &bytes).with_context(|| format!("writing {}", path.display()))?;
            if !outcome.plot.is_empty() {
                emit_plot_data(&outcome.plot, &plot_path(path), Some(&preamble))?;
            }
        }
        None => std::io::stdout().write_all(&bytes)?,
    }
    Ok(outcome.verdict)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Some(false)) => {
            eprintln!("cobra {}: check failed", cli.command.name());
            ExitCode::from(1)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
