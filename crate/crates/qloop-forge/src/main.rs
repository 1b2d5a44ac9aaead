use clap::{Parser, ValueEnum};
use qloop_forge::{parse_jobs, render, run_jobs, seed_from_env, ForgeError, Format};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    Qchar,
    Verify,
    HighestT,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OutFormat {
    Tsv,
    Json,
}

/// Batch front-end for qloop. Exit codes: 0 pass, 1 check failure, 2 input error, 3 bound overflow.
#[derive(Parser, Debug)]
#[command(name = "qloop-forge", version)]
struct Cli {
    command: Command,
    /// Job file: one JSON document per line.
    #[arg(long)]
    job: PathBuf,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutFormat>,
    /// Worker threads across jobs.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

fn run(cli: &Cli) -> Result<i32, ForgeError> {
    let text = std::fs::read_to_string(&cli.job)
        .map_err(|e| ForgeError::Input(format!("{}: {}", cli.job.display(), e)))?;
    let jobs = parse_jobs(&text)?;
    let seed = seed_from_env()?;
    let command = match cli.command {
        Command::Qchar => "qchar",
        Command::Verify => "verify",
        Command::HighestT => "highest-t",
    };
    let format = match cli.format {
        Some(OutFormat::Tsv) => Format::Tsv,
        Some(OutFormat::Json) => Format::Json,
        None => jobs[0].format.unwrap_or(Format::Tsv),
    };
    let mut outcomes = Vec::new();
    for r in run_jobs(command, &jobs, seed, cli.threads) {
        outcomes.push(r?);
    }
    let text = render(&outcomes, format);
    match &cli.out {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| ForgeError::Input(format!("{}: {}", p.display(), e)))?,
        None => print!("{}", text),
    }
    Ok(outcomes.iter().map(|o| o.status).max().unwrap_or(0))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("qloop-forge: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
