use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mcls_cli::commands::{self, SynthKind};
use mcls_cli::config::Overrides;
use mcls_cli::CliError;

#[derive(Parser)]
#[command(name = "mcls", version, about = "Single and multiple classifier learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct GridFlags {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, replacing `output` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Base seed, replacing `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Member sets such as `DT+kNN,ANN+LgD+NBC`, or `all`.
    #[arg(long, value_delimiter = ',')]
    members: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    arch: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    resampling: Option<Vec<String>>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
}

impl GridFlags {
    fn split(self) -> (PathBuf, Overrides) {
        (
            self.config,
            Overrides {
                output: self.out,
                workers: self.workers,
                seed: self.seed,
                members: self.members,
                architectures: self.arch,
                resamplings: self.resampling,
                folds: self.folds,
                replications: self.reps,
            },
        )
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthArg {
    Benchmark,
    LabelDetermined,
}

#[derive(Subcommand)]
enum Command {
    /// Check a configuration and the files it names.
    Validate(GridFlags),
    /// Run the experiment grid.
    Grid {
        #[command(flatten)]
        flags: GridFlags,
        /// Also save the best model of every system under `models/`.
        #[arg(long)]
        save_models: bool,
    },
    /// Rank features by single-feature cross-validation error.
    Rank(GridFlags),
    /// Summarise a result table into figure tables, ANOVA and a text summary.
    Report {
        #[arg(long)]
        results: PathBuf,
        /// Ranking CSV from `rank`, rendered as a feature table.
        #[arg(long)]
        ranking: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a CSV with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Schema the data claims to follow; checked against the model.
        #[arg(long)]
        schema: Option<PathBuf>,
        /// Output CSV; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a generated dataset and schema.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "benchmark")]
        kind: SynthArg,
        #[arg(long, default_value_t = mcls_core::synthetic::BENCHMARK_ROWS)]
        rows: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// File stem for `<stem>.csv` and `<stem>.schema.json`.
        #[arg(long, default_value = "synthetic")]
        name: String,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate(flags) => {
            let (path, o) = flags.split();
            println!("{}", commands::cmd_validate(&path, o)?);
        }
        Command::Grid { flags, save_models } => {
            let (path, o) = flags.split();
            let out = commands::cmd_grid(&path, o, save_models)?;
            println!("{} cells written to {}", out.cells.len(), out.results.display());
            println!("manifest: {}", out.manifest.display());
        }
        Command::Rank(flags) => {
            let (path, o) = flags.split();
            let (csv, table) = commands::cmd_rank(&path, o)?;
            print!("{table}");
            println!("ranking: {}", csv.display());
        }
        Command::Report { results, ranking, out } => {
            for f in commands::cmd_report(&results, ranking.as_deref(), &out)? {
                println!("{}", f.display());
            }
        }
        Command::Predict { model, data, schema, out } => {
            let mut sink: Box<dyn Write> = match &out {
                Some(p) => Box::new(
                    std::fs::File::create(p).map_err(|e| CliError::Input(vec![format!("{}: {e}", p.display())]))?,
                ),
                None => Box::new(std::io::stdout().lock()),
            };
            let n = commands::cmd_predict(&model, &data, schema.as_deref(), &mut sink)?;
            log::info!("scored {n} rows");
        }
        Command::Synth { out, kind, rows, seed, name } => {
            let kind = match kind {
                SynthArg::Benchmark => SynthKind::Benchmark,
                SynthArg::LabelDetermined => SynthKind::LabelDetermined,
            };
            let (csv, schema) = commands::cmd_synth(&out, &name, kind, rows, seed)?;
            println!("{}\n{}", csv.display(), schema.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MCLS_LOG_LEVEL", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::from(mcls_cli::EXIT_OK as u8),
        Err(e) => {
            for m in e.messages() {
                eprintln!("error: {m}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
