//! `proofgauge` command-line front end.
//!
//! Exit codes: 0 success, 2 invalid input, 3 backend failure, 4 ability did
//! not converge (the report is still written).

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use commands::{Context, Failure, Outcome};
use config::{Export, RunConfig};

const OUT_ENV: &str = "PROOFGAUGE_OUT";

#[derive(Parser, Debug)]
#[command(name = "proofgauge", version, about = "Adaptive evaluation of theorem provers")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; PROOFGAUGE_OUT takes precedence.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for synthetic examinees and banks.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Print nothing on success.
    #[arg(long, short, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Annotate theorems from recorded attempts and grade them.
    Annotate {
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// Comma-separated annotation models.
        #[arg(long, value_delimiter = ',')]
        models: Vec<String>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Regrade an annotated bank.
    Grade {
        #[arg(long)]
        bank: Option<PathBuf>,
    },
    /// Estimate a prover's ability adaptively.
    Evaluate {
        #[arg(long)]
        bank: Option<PathBuf>,
        /// Replay this model from the configured matrix.
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        window: Option<usize>,
    },
    /// Recover known abilities of simulated examinees.
    Simulate,
    /// Write level, category, scatter and rank-agreement tables.
    Analyze {
        /// Restrict to these exports.
        #[arg(long, value_enum)]
        export: Vec<ExportArg>,
    },
    /// Validate recorded attempts and write normalized copies.
    Ingest {
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum ExportArg {
    Levels,
    Categories,
    Scatter,
    Concordance,
}

impl From<ExportArg> for Export {
    fn from(e: ExportArg) -> Self {
        match e {
            ExportArg::Levels => Export::Levels,
            ExportArg::Categories => Export::Categories,
            ExportArg::Scatter => Export::Scatter,
            ExportArg::Concordance => Export::Concordance,
        }
    }
}

fn configure(cli: &Cli) -> Result<Context, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(Failure::Input)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    match &cli.command {
        Command::Annotate { matrix, models, epsilon } => {
            cfg.paths.matrix = matrix.clone().or(cfg.paths.matrix);
            if !models.is_empty() {
                cfg.annotation.models = models.clone();
            }
            cfg.annotation.epsilon = epsilon.or(cfg.annotation.epsilon);
        }
        Command::Grade { bank } => cfg.paths.bank = bank.clone().or(cfg.paths.bank),
        Command::Evaluate { bank, model, window } => {
            cfg.paths.bank = bank.clone().or(cfg.paths.bank);
            if let Some(model) = model {
                cfg.backend = Some(config::BackendSection::Replay { model: model.clone() });
            }
            cfg.eval.window = window.unwrap_or(cfg.eval.window);
        }
        Command::Analyze { export } => {
            if !export.is_empty() {
                cfg.analyze.exports = export.iter().map(|&e| e.into()).collect();
            }
        }
        Command::Ingest { matrix, corpus } => {
            cfg.paths.matrix = matrix.clone().or(cfg.paths.matrix);
            cfg.paths.corpus = corpus.clone().or(cfg.paths.corpus);
        }
        Command::Simulate => {}
    }
    let out = std::env::var_os(OUT_ENV)
        .map(PathBuf::from)
        .or_else(|| cli.out.clone())
        .or_else(|| cfg.paths.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out).map_err(|e| Failure::Input(format!("cannot create {}: {e}", out.display())))?;
    Ok(Context {
        cfg,
        out,
        quiet: cli.quiet,
    })
}

fn run(cli: &Cli, ctx: &Context) -> Outcome {
    match cli.command {
        Command::Annotate { .. } => commands::annotate_cmd(ctx),
        Command::Grade { .. } => commands::grade_cmd(ctx),
        Command::Evaluate { .. } => commands::evaluate_cmd(ctx),
        Command::Simulate => commands::simulate_cmd(ctx),
        Command::Analyze { .. } => commands::analyze_cmd(ctx),
        Command::Ingest { .. } => commands::ingest_cmd(ctx),
    }
}

fn unix_seconds() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Timestamps go here and nowhere else, so every other output stays
/// comparable across runs.
fn log_run(ctx: &Context, started: u64, code: u8) {
    let args: Vec<String> = std::env::args().collect();
    let line = format!("started={started} finished={} exit={code} argv={args:?}\n", unix_seconds());
    let path = ctx.out.join("run.log");
    if let Ok(mut f) = std::fs::OpenOptions::new().create(true).append(true).open(path) {
        let _ = f.write_all(line.as_bytes());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = unix_seconds();
    let ctx = match configure(&cli) {
        Ok(ctx) => ctx,
        Err(e) => {
            eprintln!("proofgauge: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let code = match run(&cli, &ctx) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("proofgauge: {e}");
            e.exit_code()
        }
    };
    log_run(&ctx, started, code);
    ExitCode::from(code)
}
