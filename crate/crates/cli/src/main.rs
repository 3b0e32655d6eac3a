use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dynmis::stats::{bench_forest, render_bench, replay, to_csv, ReplayError, ReplayOptions};
use dynmis::streams::{gen_forest_union, gen_preferential};
use dynmis::UpdateStream;

const EXIT_AUDIT: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "dynmis", version, about = "Dynamic maximal independent set driver")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Kind {
    Forest,
    Preferential,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a generated update stream.
    Gen {
        #[arg(long, value_enum, default_value = "forest")]
        kind: Kind,
        #[arg(long)]
        n: usize,
        /// Number of forests (forest streams).
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Edges per new vertex (preferential streams).
        #[arg(long, default_value_t = 1)]
        m: usize,
        /// Number of updates (forest streams).
        #[arg(long, default_value_t = 10_000)]
        ops: usize,
        /// Probability that an update is a deletion (forest streams).
        #[arg(long, default_value_t = 0.3)]
        churn: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay a stream and print counters.
    Run {
        #[arg(long)]
        stream: PathBuf,
        /// Audit every K updates (0 = never).
        #[arg(long, default_value_t = 0)]
        audit_every: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Updates per CSV row.
        #[arg(long, default_value_t = 1000)]
        window: usize,
        /// Override the stream's arboricity hint.
        #[arg(long)]
        alpha: Option<usize>,
        /// Fail on any broken analytical guarantee.
        #[arg(long)]
        strict: bool,
        /// Record wall time in CSV rows (makes output nondeterministic).
        #[arg(long)]
        timing: bool,
    },
    /// Replay a stream auditing after every update.
    Check {
        #[arg(long)]
        stream: PathBuf,
        #[arg(long)]
        alpha: Option<usize>,
        #[arg(long)]
        strict: bool,
    },
    /// Time forest-union streams at several sizes.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "1000,10000,100000")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 2)]
        alpha: usize,
        #[arg(long, default_value_t = 100_000)]
        ops: usize,
        #[arg(long, default_value_t = 0.3)]
        churn: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load(path: &PathBuf) -> Result<UpdateStream, ExitCode> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::from(EXIT_IO)
    })?;
    let stream = UpdateStream::parse(&text).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::from(EXIT_IO)
    })?;
    stream.validate().map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::from(EXIT_IO)
    })?;
    if !stream.density_ok() {
        eprintln!(
            "warning: edge density {} exceeds alpha={}",
            stream.max_density(),
            stream.alpha_hint
        );
    }
    Ok(stream)
}

fn replay_failure(e: ReplayError) -> ExitCode {
    eprintln!("error: {e}");
    if let ReplayError::Audit { report, .. } = &e {
        print!("{}", report.to_records());
    }
    if e.is_audit() {
        ExitCode::from(EXIT_AUDIT)
    } else {
        ExitCode::from(EXIT_IO)
    }
}

fn run(cli: Cli) -> Result<(), ExitCode> {
    match cli.cmd {
        Cmd::Gen {
            kind,
            n,
            k,
            m,
            ops,
            churn,
            seed,
            out,
        } => {
            if !(0.0..=1.0).contains(&churn) || k == 0 || m == 0 {
                eprintln!("error: need k >= 1, m >= 1 and churn in [0, 1]");
                return Err(ExitCode::from(EXIT_IO));
            }
            let stream = match kind {
                Kind::Forest => gen_forest_union(n, k, ops, churn, seed),
                Kind::Preferential => gen_preferential(n, m, seed),
            };
            let text = stream.serialize();
            match out {
                Some(path) => fs::write(&path, text).map_err(|e| {
                    eprintln!("error: {}: {e}", path.display());
                    ExitCode::from(EXIT_IO)
                })?,
                None => print!("{text}"),
            }
        }
        Cmd::Run {
            stream,
            audit_every,
            csv,
            window,
            alpha,
            strict,
            timing,
        } => {
            let s = load(&stream)?;
            let opts = ReplayOptions {
                audit_every,
                strict,
                window,
                timing,
            };
            let out = replay(&s, alpha, &opts).map_err(replay_failure)?;
            print!("{}", out.stats);
            if let Some(path) = csv {
                fs::write(&path, to_csv(&out.windows)).map_err(|e| {
                    eprintln!("error: {}: {e}", path.display());
                    ExitCode::from(EXIT_IO)
                })?;
            }
        }
        Cmd::Check {
            stream,
            alpha,
            strict,
        } => {
            let s = load(&stream)?;
            let opts = ReplayOptions {
                audit_every: 1,
                strict,
                ..ReplayOptions::default()
            };
            let out = replay(&s, alpha, &opts).map_err(replay_failure)?;
            println!("ok: {} updates, final MIS size {}", out.stats.updates, out.stats.final_mis);
        }
        Cmd::Bench {
            sizes,
            alpha,
            ops,
            churn,
            seed,
        } => {
            if alpha == 0 || !(0.0..=1.0).contains(&churn) {
                eprintln!("error: need alpha >= 1 and churn in [0, 1]");
                return Err(ExitCode::from(EXIT_IO));
            }
            let rows = bench_forest(&sizes, alpha, ops, churn, seed).map_err(replay_failure)?;
            print!("{}", render_bench(&rows));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
