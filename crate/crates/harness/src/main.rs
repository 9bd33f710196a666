use clap::{Parser, ValueEnum};
use spiralwave::{run, Command, ExperimentConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Core,
    Greens,
    K,
    Trajectory,
    Orbit,
    Simulate,
    Compare,
    Scan,
}

/// Spiral-wave dynamics in rectangles: asymptotic laws and PDE runs.
#[derive(Debug, Parser)]
#[command(name = "spiralwave", version)]
struct Cli {
    #[arg(value_enum)]
    command: Cmd,
    /// TOML experiment description.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let cmd = match cli.command {
        Cmd::Core => Command::Core,
        Cmd::Greens => Command::Greens,
        Cmd::K => Command::K,
        Cmd::Trajectory => Command::Trajectory,
        Cmd::Orbit => Command::Orbit,
        Cmd::Simulate => Command::Simulate,
        Cmd::Compare => Command::Compare,
        Cmd::Scan => Command::Scan,
    };
    let result = ExperimentConfig::load(&cli.config).and_then(|(cfg, bytes)| run(cmd, &cfg, &bytes, &cli.out));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spiralwave: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
