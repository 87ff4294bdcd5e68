use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pivotwalk_cli::config::ExperimentConfig;
use pivotwalk_cli::replay::replay;
use pivotwalk_cli::report::{to_json, write, write_outcome, Sidecar};
use pivotwalk_cli::schottky::schottky_search;
use pivotwalk_cli::suites::{run_suite, Suite};
use pivotwalk_cli::{CliError, EXIT_FAIL, EXIT_PASS, EXIT_USAGE};

/// Seeded Monte Carlo experiments on pivotal times of random walks.
#[derive(Parser, Debug)]
#[command(name = "pivotwalk", version)]
struct Cli {
    /// Experiment config (TOML, or JSON by extension).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `run.trials`.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Output directory; beats `PIVOTWALK_OUT` and `outputs.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Search and verify a Schottky set; writes `schottky.json`.
    SchottkySearch,
    /// Run one suite; writes `<suite>.csv` and `<suite>.json`.
    Run {
        #[arg(value_enum)]
        suite: Suite,
    },
    /// Same as `run pivot-stats`.
    PivotStats,
    /// Re-derive one trial of a report.
    Replay {
        /// JSON sidecar of a previous run.
        report: PathBuf,
        #[arg(long)]
        trial: u64,
    },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.run.seed = s;
    }
    if let Some(t) = cli.trials {
        cfg.run.trials = t;
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: Option<&ExperimentConfig>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| std::env::var_os("PIVOTWALK_OUT").map(PathBuf::from))
        .or_else(|| cfg.and_then(|c| c.outputs.dir.clone()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn run_and_write(cli: &Cli, suite: Suite) -> Result<i32, CliError> {
    let cfg = load_config(cli)?;
    let outcome = run_suite(&cfg, suite)?;
    let (csv, json) = write_outcome(&out_dir(cli, Some(&cfg)), suite.name(), &cfg, &outcome)?;
    for a in &outcome.assertions {
        let tag = if a.passed { "PASS" } else { "FAIL" };
        let kind = if a.diagnostic { " (diagnostic)" } else { "" };
        println!("{tag} {}{kind}: {}", a.name, a.detail);
    }
    println!("wrote {} and {}", csv.display(), json.display());
    if outcome.passed() {
        Ok(EXIT_PASS)
    } else {
        for a in outcome.failures() {
            eprintln!("violated: {} (seed {}, {} trials): {}", a.name, cfg.run.seed, outcome.trials, a.detail);
        }
        Ok(EXIT_FAIL)
    }
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    match &cli.command {
        Command::SchottkySearch => {
            let cfg = load_config(cli)?;
            let artifact = schottky_search(&cfg)?;
            let dir = out_dir(cli, Some(&cfg));
            std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(dir.display().to_string(), e))?;
            let path = dir.join("schottky.json");
            write(&path, &to_json(&artifact)?)?;
            println!(
                "{} set of {} elements, fresh verification {}; wrote {}",
                if artifact.passed { "PASS" } else { "FAIL" },
                artifact.size,
                if artifact.fresh_verification.passed { "passed" } else { "failed" },
                path.display()
            );
            Ok(if artifact.passed { EXIT_PASS } else { EXIT_FAIL })
        }
        Command::Run { suite } => run_and_write(cli, *suite),
        Command::PivotStats => run_and_write(cli, Suite::PivotStats),
        Command::Replay { report, trial } => {
            let sidecar = Sidecar::load(report)?;
            let cfg = cli.config.as_deref().map(ExperimentConfig::load).transpose()?;
            let dump = replay(&sidecar, *trial, cli.seed, cfg.as_ref())?;
            let text = to_json(&dump)?;
            match &cli.out {
                Some(dir) => {
                    let path = Path::new(dir).join(format!("replay-{}-{trial}.json", sidecar.suite));
                    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.display().to_string(), e))?;
                    write(&path, &text)?;
                    println!("wrote {}", path.display());
                }
                None => print!("{text}"),
            }
            Ok(EXIT_PASS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match execute(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    debug_assert!([EXIT_PASS, EXIT_FAIL, EXIT_USAGE].contains(&code));
    ExitCode::from(code as u8)
}
