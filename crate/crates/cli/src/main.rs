//! `sasnet`: run arrival-planning scenarios, check planning tables and dump
//! net encodings.

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use log::info;

use sasnet::aircraft::{build_arrival_net, plan_safety, SeparationTable};
use sasnet::emulator::EncodedNet;
use sasnet::scenario::{export_trace, load_model, load_plan, run_scenario, RunConfig, Scenario};

#[derive(Parser)]
#[command(
    name = "sasnet",
    version,
    about = "Self-adaptive arrival planning over Petri nets"
)]
struct Cli {
    /// More log output on stderr (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write trace.ndjson and plan.csv.
    ///
    /// Exits 0 when no new separation violation remains, 1 when some do,
    /// 2 on error.
    Run {
        config: PathBuf,
        /// Override the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the configured output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List separation violations in a planning table. Exits 1 if any.
    Check {
        plan: PathBuf,
        /// Take the separation matrix from this run configuration.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Print the emulator encoding of the arrival net as JSON.
    Encode {
        model: PathBuf,
        /// Planning table; without it only the airport is encoded.
        #[arg(long)]
        plan: Option<PathBuf>,
    },
}

fn run(config: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<bool> {
    let cfg = RunConfig::load(config)?;
    let mut s = Scenario::from_config(&cfg)?;
    if let Some(seed) = seed {
        s.seed = seed;
    }
    let dir = out.unwrap_or(cfg.out);
    let report = run_scenario(&s)?;
    let (trace, plan) = export_trace(&report, &dir)?;
    info!("wrote {} and {}", trace.display(), plan.display());
    println!(
        "steps {}  moves {}  cycles {}  adaptations {}",
        report.stats.steps, report.stats.moves, report.stats.cycles, report.stats.adaptations
    );
    for v in &report.unresolved {
        println!("unresolved: {v}");
    }
    println!("trace: {}", trace.display());
    println!("plan:  {}", plan.display());
    Ok(report.is_clean())
}

fn check(plan: &Path, config: Option<&Path>) -> Result<bool> {
    let sep = match config {
        Some(c) => RunConfig::load(c)?.separation,
        None => SeparationTable::default(),
    };
    let rows = load_plan(plan)?;
    let violations = plan_safety(&rows, &sep);
    for v in &violations {
        println!("{v}");
    }
    println!("{} aircraft, {} violation(s)", rows.len(), violations.len());
    Ok(violations.is_empty())
}

fn encode(model: &Path, plan: Option<&Path>) -> Result<()> {
    let mut m = load_model(model)?;
    let rows = match plan {
        Some(p) => load_plan(p)?,
        None => {
            m.phases.clear();
            Vec::new()
        }
    };
    let net = build_arrival_net(&rows, &m)?;
    let text = serde_json::to_string_pretty(&EncodedNet::encode(&net)).context("serializing")?;
    match writeln!(io::stdout().lock(), "{text}") {
        // a reader that stops early (`| head`) is not an error
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        r => r.context("writing to stdout"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let outcome = match cli.command {
        Command::Run { config, seed, out } => run(&config, seed, out),
        Command::Check { plan, config } => check(&plan, config.as_deref()),
        Command::Encode { model, plan } => encode(&model, plan.as_deref()).map(|()| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
