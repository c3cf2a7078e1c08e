use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lasercond_cli::{commands, CliError, RunConfig, RunOptions};

#[derive(Parser)]
#[command(name = "lasercond", version, about = "Laser-induced condensation of trapped bosons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the ensemble and write observables, events and a summary.
    Simulate(Common),
    /// List the dark levels of the pulse cycle.
    Darkstates(Common),
    /// Evaluate the stationary condensation criterion.
    Criterion(Common),
    /// Run an up/down ramp and extract the transfer points.
    Hysteresis(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Override the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<String, CliError> {
    let (Command::Simulate(c) | Command::Darkstates(c) | Command::Criterion(c) | Command::Hysteresis(c)) = &cli.command;
    let config = RunConfig::load(&c.config)?;
    let opts = RunOptions {
        threads: c.threads,
        seed: c.seed,
        out: c.out.clone(),
    };
    Ok(match cli.command {
        Command::Simulate(_) => {
            let o = commands::simulate(config, &opts)?;
            let s = &o.summary;
            format!(
                "simulate: final {} fraction {:.4}, cycles to 90%: {}, {:.2} s",
                s.watched[0],
                s.final_condensate_fraction,
                s.cycles_to_90.map_or("not reached".into(), |c| c.to_string()),
                s.wall_clock_seconds
            )
        }
        Command::Darkstates(_) => {
            let r = commands::darkstates(config, &opts)?;
            let names: Vec<&str> = r.dark.iter().take(12).map(|d| d.level.as_str()).collect();
            format!("darkstates: {} dark levels: {}", r.dark.len(), names.join(" "))
        }
        Command::Criterion(_) => {
            let (s, _) = commands::criterion(config, &opts)?;
            format!(
                "criterion: target {} {}, {} violating, {} indeterminate",
                s.target,
                if s.condensing { "condensing" } else { "not condensing" },
                s.violating.len(),
                s.indeterminate.len()
            )
        }
        Command::Hysteresis(_) => {
            let o = commands::hysteresis(config, &opts)?;
            let r = &o.summary.report;
            let show = |x: Option<f64>| x.map_or("absent".to_string(), |v| format!("{v:.4}"));
            format!(
                "hysteresis: {} up-transfer {}, down-transfer {}",
                o.summary.channel,
                show(r.up),
                show(r.down)
            )
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
