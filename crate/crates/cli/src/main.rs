use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use suplab::reports::{self, EmbedShape, ExperimentConfig, GenerateParams, InstanceKind, Scale, Verdict};
use suplab::Error;

#[derive(Parser)]
#[command(name = "suplab", version, about = "Numerical checks for chaining, concentration, transport and SK bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the suite described by a config file and write its reports.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = ["small", "full"])]
        scale: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the check plan of a config without running it.
    Describe {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = ["small", "full"])]
        scale: Option<String>,
    },
    /// Write random instance files.
    Generate {
        /// gp-random-embed, gp-random-cov, product-space or sk
        #[arg(long)]
        kind: String,
        /// Points, factors or spins depending on the kind.
        #[arg(long, default_value_t = 16)]
        n: usize,
        /// Embedding dimension, or factor count for covariances.
        #[arg(long, default_value_t = 8)]
        dim: usize,
        #[arg(long, value_parser = ["sphere", "gaussian"], default_value = "sphere")]
        shape: String,
        #[arg(long, default_value_t = 2)]
        q: usize,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        h: f64,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(config: &PathBuf, seed: Option<u64>, scale: Option<String>) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::from_path(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(s) = scale {
        cfg.scale = s.parse::<Scale>()?;
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Run { config, seed, scale, out } => {
            let mut cfg = load(&config, seed, scale)?;
            if let Some(dir) = out {
                cfg.output_dir = dir;
            }
            let report = reports::run(&cfg)?;
            for r in &report.records {
                let tag = match r.verdict {
                    Verdict::Pass => "pass",
                    Verdict::Fail => "FAIL",
                };
                println!("{tag}  {}  value={} bound={}", r.name, r.value, r.bound);
            }
            println!(
                "{} checks, {} failed; reports in {}",
                report.records.len(),
                report.failures(),
                cfg.output_dir.display()
            );
            if report.pass {
                Ok(ExitCode::SUCCESS)
            } else {
                Err(Error::CheckFailure(report.failures()))
            }
        }
        Command::Describe { config, seed, scale } => {
            print!("{}", reports::describe(&load(&config, seed, scale)?)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Generate {
            kind,
            n,
            dim,
            shape,
            q,
            h,
            count,
            seed,
            out,
        } => {
            let kind: InstanceKind = kind.parse()?;
            let shape = if shape == "gaussian" {
                EmbedShape::Gaussian
            } else {
                EmbedShape::Sphere
            };
            let params = GenerateParams {
                n,
                dim,
                shape,
                q,
                h,
                count,
            };
            for path in reports::generate_instances(kind, &params, seed, &out)? {
                println!("{}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
