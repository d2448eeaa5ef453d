use std::path::PathBuf;
use std::process::ExitCode;

use anosov::cli::{exit_code, run, Command};
use anosov::scenario::Scenario;
use clap::Parser;

/// Anosov families on flat 2-tori: certificates, schedules and local manifolds.
#[derive(Parser)]
#[command(name = "anosov", version)]
struct Args {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// verify | schedule | manifold | decay | coincidence | probe-expansivity
    #[arg(long)]
    command: String,
    /// Manifold side: u or s.
    #[arg(long)]
    side: Option<String>,
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let fail = |code: i32, msg: String| {
        eprintln!("error: {msg}");
        ExitCode::from(code as u8)
    };
    let text = match std::fs::read_to_string(&args.scenario) {
        Ok(t) => t,
        Err(e) => return fail(2, format!("{}: {e}", args.scenario.display())),
    };
    let outcome = Command::parse(&args.command, args.side.as_deref())
        .and_then(|cmd| Ok((cmd, Scenario::from_toml(&text)?)))
        .and_then(|(cmd, scenario)| run(cmd, &scenario));
    match outcome {
        Ok(artifacts) => {
            if let Err(e) = artifacts.write_to(&args.out) {
                return fail(5, format!("{}: {e}", args.out.display()));
            }
            if !args.quiet {
                println!("{}", artifacts.summary);
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(exit_code(&e), e.to_string()),
    }
}
