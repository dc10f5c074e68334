use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pgac::experiment::{certify_log, reproduce_fig1, reproduce_fig2, simulate_to_dir, RunLog};
use pgac::scenario::ScenarioConfig;
use pgac::selftest::run_selftest;

#[derive(Parser)]
#[command(name = "pgac", version, about = "Policy gradient adaptive control for switched linear systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of a scenario and write run logs and step CSVs.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute the certificate of a stored run log.
    Certify {
        #[arg(long)]
        log: PathBuf,
    },
    /// Optimality gap and its bound for the reference scenario.
    ReproduceFig1 {
        #[arg(long)]
        out: PathBuf,
    },
    /// State norm and its envelope for the reference scenario.
    ReproduceFig2 {
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the built-in invariant checks.
    Selftest,
}

fn simulate(config: PathBuf, out: PathBuf) -> pgac::Result<bool> {
    let text = std::fs::read_to_string(&config)?;
    let cfg = ScenarioConfig::from_json(&text)?;
    let mut ok = true;
    for written in simulate_to_dir(&cfg, &out)? {
        match (written.aborted, written.verdict) {
            (Some(a), _) => {
                ok = false;
                eprintln!("seed {}: aborted at t = {} (norm {:e}), partial log written", written.seed, a.t, a.norm);
            }
            (None, v) => println!("seed {}: {:?} -> {}", written.seed, v, written.runlog.display()),
        }
    }
    Ok(ok)
}

fn certify(path: PathBuf) -> pgac::Result<bool> {
    let log = RunLog::load(&path)?;
    let outcome = certify_log(&log)?;
    println!("verdict: {:?}", outcome.report.verdict);
    for f in &outcome.failed_checks {
        eprintln!("failed check: {f}");
    }
    Ok(outcome.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config, out } => simulate(config, out),
        Command::Certify { log } => certify(log),
        Command::ReproduceFig1 { out } => reproduce_fig1(&out).map(|p| {
            println!("{}", p.display());
            true
        }),
        Command::ReproduceFig2 { out } => reproduce_fig2(&out).map(|p| {
            println!("{}", p.display());
            true
        }),
        Command::Selftest => {
            let results = run_selftest();
            for r in &results {
                println!("{} {} {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            Ok(results.iter().all(|r| r.passed))
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
