use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use spinsep_cli::{run, write_outputs, CliError, Command, RunConfig};

/// Spin-1/2 dynamics, separability scans and quantum-jump averages.
#[derive(Parser, Debug)]
#[command(name = "spinsep", version)]
struct Args {
    /// Run configuration (`key = value` lines).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,

    /// Output directory; overrides `out` in the config.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// RNG seed; overrides `seed` in the config.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,

    /// evolve | separability | jumps | oracle; overrides `command` in the config.
    #[arg(long)]
    command: Option<String>,
}

fn execute(args: Args) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", args.config.display())))?;
    let mut cfg = RunConfig::parse(&text)?;
    if let Some(out) = args.out {
        cfg.out = out;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(c) = args.command {
        cfg.command = Some(c.parse()?);
    }
    let command: Command = cfg.command.ok_or_else(|| {
        CliError::Usage("no command given; use --command or `command = ...`".into())
    })?;

    let output = run(&cfg, command)?;
    write_outputs(&cfg.out, &output.files)?;
    print!("{}", output.summary);
    for f in &output.files {
        println!("wrote {}", cfg.out.join(&f.name).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match execute(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spinsep: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
