//! `dymatch`: runs workloads through the simulator and emits JSONL or CSV.
//!
//! Exit codes: 0 success, 1 oracle or algorithm failure, 2 usage or
//! configuration error.

mod bench;
mod config;
mod lbexp;
mod run;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dymatch::adversary::from_jsonl;
use dymatch::driver::Algorithm;

use config::{BenchGrid, RunConfig, Verify, RUN_KEYS_HELP};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("oracle failure: {0}")]
    Oracle(String),
    #[error("algorithm failure: {0}")]
    Algorithm(String),
    #[error("io: {0}")]
    Io(String),
}

impl CliError {
    fn usage(e: impl std::fmt::Display) -> Self {
        Self::Usage(e.to_string())
    }

    fn io(e: impl std::fmt::Display) -> Self {
        Self::Io(e.to_string())
    }

    fn code(&self) -> u8 {
        match self {
            Self::Oracle(_) | Self::Algorithm(_) => 1,
            Self::Usage(_) | Self::Io(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dymatch", version, about = "Dynamic maximal matching in the k-clique model")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Run a configured workload; one JSONL record per update.
    #[command(after_help = RUN_KEYS_HELP)]
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config verify level.
        #[arg(long, value_enum)]
        verify: Option<Verify>,
        /// Output file (default stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Round-count grid; one CSV row per (size, k, beta) cell.
    ///
    /// Size is the edge count m for fullydyn and the batch length ℓ for
    /// batchinc. Flags override keys of the same name in the grid file.
    Bench {
        /// TOML grid with keys algorithm, sizes, k, beta, trials, steps, n, seed.
        #[arg(long)]
        config: Option<PathBuf>,
        /// fullydyn | batchinc [default: fullydyn]
        #[arg(long)]
        algorithm: Option<String>,
        /// Comma-separated sizes [default: none, which prints the header only]
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        /// Comma-separated player counts [default: 4]
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<usize>>,
        /// Comma-separated bandwidths [default: 1]
        #[arg(long, value_delimiter = ',')]
        beta: Option<Vec<usize>>,
        /// Trials per cell [default: 3]
        #[arg(long)]
        trials: Option<usize>,
        /// Measured deletions per fullydyn trial [default: 100]
        #[arg(long)]
        steps: Option<usize>,
        /// Vertices for batchinc cells [default: 400]
        #[arg(long)]
        n: Option<usize>,
        /// [default: 0]
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lower-bound construction; one JSONL record per trial.
    Lbexp {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        ell: usize,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        beta: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run a JSONL update sequence under the config's simulator settings.
    VerifyReplay {
        #[arg(long)]
        config: PathBuf,
        /// JSONL updates, one object per line.
        #[arg(long)]
        updates: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        verify: Option<Verify>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn open(out: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load_run(config: &Path, seed: Option<u64>, verify: Option<Verify>) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(v) = verify {
        cfg.verify = v;
    }
    Ok(cfg)
}

fn dispatch(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Run { config, seed, verify, out } => {
            let cfg = load_run(&config, seed, verify)?;
            run::run(&cfg, None, &mut open(out.as_deref())?)
        }
        Cmd::VerifyReplay {
            config,
            updates,
            seed,
            verify,
            out,
        } => {
            let cfg = load_run(&config, seed, verify)?;
            let text =
                std::fs::read_to_string(&updates).map_err(|e| CliError::Usage(format!("{}: {e}", updates.display())))?;
            let seq = from_jsonl(&text).map_err(CliError::usage)?;
            run::run(&cfg, Some(seq), &mut open(out.as_deref())?)
        }
        Cmd::Bench {
            config,
            algorithm,
            sizes,
            k,
            beta,
            trials,
            steps,
            n,
            seed,
            out,
        } => {
            let file = match config {
                Some(p) => BenchGrid::load(&p)?,
                None => BenchGrid::default(),
            };
            let algorithm: Algorithm = algorithm
                .or(file.algorithm)
                .as_deref()
                .unwrap_or("fullydyn")
                .parse()
                .map_err(CliError::usage)?;
            let or_default = |flag: Option<Vec<usize>>, file: Vec<usize>, d: usize| {
                flag.unwrap_or(if file.is_empty() { vec![d] } else { file })
            };
            let grid = bench::Grid {
                algorithm,
                sizes: sizes.unwrap_or(file.sizes),
                ks: or_default(k, file.k, 4),
                betas: or_default(beta, file.beta, 1),
                trials: trials.or(file.trials).unwrap_or(3),
                steps: steps.or(file.steps).unwrap_or(100),
                n: n.or(file.n).unwrap_or(400),
                seed: seed.or(file.seed).unwrap_or(0),
            };
            if grid.ks.contains(&0) || grid.betas.contains(&0) || grid.trials == 0 || grid.n < 2 {
                return Err(CliError::Usage("k, beta, trials must be positive and n at least 2".into()));
            }
            bench::bench(&grid, &mut open(out.as_deref())?)
        }
        Cmd::Lbexp {
            n,
            k,
            ell,
            trials,
            beta,
            seed,
            out,
        } => {
            if beta == 0 {
                return Err(CliError::Usage("beta must be positive".into()));
            }
            lbexp::lbexp(n, k, ell, beta, trials, seed, &mut open(out.as_deref())?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dymatch: {e}");
            ExitCode::from(e.code())
        }
    }
}
