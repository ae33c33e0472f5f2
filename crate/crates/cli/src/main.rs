//! `rom`: reduced-order modeling from the command line.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 I/O or file
//! format error, 4 numeric failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::CliError;

#[derive(Debug, Parser)]
#[command(name = "rom", version, about = "POD + LSTM reduced-order modeling of unsteady fields")]
struct Cli {
    /// Worker threads for the parallel stages.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Only print errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic snapshot matrix from a config file.
    Synth {
        #[arg(long)]
        config: PathBuf,
        /// Output file; `.csv` selects CSV, anything else the binary format.
        /// Particle data is written to `<stem>_x`, `<stem>_y`, `<stem>_z`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Power spectral density of selected DOFs, as CSV and optional SVG.
    PsdReport {
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated DOF indices.
        #[arg(long, value_delimiter = ',', required = true)]
        dofs: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Draw a horizontal line at this PSD level.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Zero frequency bins with PSD below a threshold.
    Filter {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        threshold: f64,
        /// Allow the mean (zero-frequency bin) to be removed.
        #[arg(long)]
        drop_dc: bool,
    },
    /// Compute a POD basis.
    Pod(PodArgs),
    /// Train an LSTM on the projected coefficients of a snapshot file.
    Train(TrainArgs),
    /// Roll a trained model forward and reconstruct snapshots.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        basis: PathBuf,
        /// Snapshots whose last `s` columns seed the rollout.
        #[arg(long)]
        seed_snapshots: PathBuf,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
        /// Snapshots following the seed window; per-step errors are printed.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Relative L2 error of ROM snapshots against FOM snapshots.
    Evaluate {
        #[arg(long)]
        fom: PathBuf,
        #[arg(long)]
        rom: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Number of leading columns in the training window (default: all).
        #[arg(long)]
        n_train: Option<usize>,
    },
    /// Synthesize or load data, then filter, decompose, train, predict and
    /// evaluate in one go.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Reference for the training-window error.
        #[arg(long, value_enum, default_value_t = Reference::Filtered)]
        reference: Reference,
    },
}

#[derive(Debug, Args)]
#[group(id = "truncation", required = true, multiple = false)]
struct TruncationArgs {
    /// Cumulative energy threshold in (0, 1].
    #[arg(long, group = "truncation")]
    delta: Option<f64>,
    /// Explicit number of modes.
    #[arg(long, group = "truncation")]
    modes: Option<usize>,
}

#[derive(Debug, Args)]
struct PodArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    truncation: TruncationArgs,
    /// Subtract the temporal mean before the decomposition.
    #[arg(long)]
    center: bool,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    basis: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch loss as CSV.
    #[arg(long)]
    loss: Option<PathBuf>,
    /// Config file with training keys; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use only the first N snapshots.
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    hidden_size: Option<usize>,
    #[arg(long)]
    sequence_length: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    append_time: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Reference {
    Filtered,
    Raw,
}

fn run(cli: Cli) -> Result<(), CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.max(1))
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
    let out = commands::Output { quiet: cli.quiet };
    match cli.command {
        Command::Synth { config, out: path } => commands::synth(&out, &config, &path),
        Command::PsdReport { input, dofs, out: path, svg, threshold } => {
            commands::psd_report(&out, &input, &dofs, &path, svg.as_deref(), threshold)
        }
        Command::Filter { input, out: path, threshold, drop_dc } => {
            commands::filter(&out, &input, &path, threshold, !drop_dc)
        }
        Command::Pod(a) => {
            let truncation = match (a.truncation.delta, a.truncation.modes) {
                (Some(d), None) => rom_core::Truncation::Energy(d),
                (None, Some(n)) => rom_core::Truncation::Modes(n),
                _ => return Err(CliError::Usage("give exactly one of --delta and --modes".into())),
            };
            commands::pod(&out, &a.input, &a.out, truncation, a.center)
        }
        Command::Train(a) => {
            let mut training = match &a.config {
                Some(p) => config::training_config(&commands::load_config(p)?)?,
                None => rom_core::TrainingConfig::default(),
            };
            if let Some(v) = a.epochs {
                training.epochs = v;
            }
            if let Some(v) = a.hidden_size {
                training.hidden_size = v;
            }
            if let Some(v) = a.sequence_length {
                training.sequence_length = v;
            }
            if let Some(v) = a.learning_rate {
                training.learning_rate = v;
            }
            if let Some(v) = a.seed {
                training.seed = v;
            }
            training.append_time |= a.append_time;
            commands::train(&out, &a.input, &a.basis, &a.out, a.loss.as_deref(), a.n_train, &training)
        }
        Command::Predict { model, basis, seed_snapshots, steps, out: path, truth } => {
            commands::predict(&out, &model, &basis, &seed_snapshots, steps, &path, truth.as_deref())
        }
        Command::Evaluate { fom, rom, out: path, svg, n_train } => {
            commands::evaluate(&out, &fom, &rom, &path, svg.as_deref(), n_train)
        }
        Command::Pipeline { config, out_dir, reference } => {
            let reference = match reference {
                Reference::Filtered => rom_core::IdentificationReference::Filtered,
                Reference::Raw => rom_core::IdentificationReference::Raw,
            };
            commands::pipeline(&out, &config, &out_dir, reference)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
