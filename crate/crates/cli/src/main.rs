//! `elmsol` command-line interface.
//!
//! Exit codes: 0 on success, 1 for computation errors (solver, degenerate
//! data), 2 for usage and input errors (bad flags, missing files, schema or
//! parse problems).

mod commands;
mod config;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use config::{ConfigFlags, FileConfig, RunConfig};

/// Errors surfaced to the shell with a stable exit-code contract.
#[derive(Debug)]
pub enum CliError {
    /// A library error, file context already attached where relevant.
    Core(elmsol::Error),
    /// Invocation or output problems.
    Usage(String),
    Io(std::io::Error),
}

impl CliError {
    fn usage(message: String) -> Self {
        CliError::Usage(message)
    }

    /// Attaches the offending path to a library error.
    fn for_file(path: &Path, error: elmsol::Error) -> Self {
        match error {
            elmsol::Error::Io(e) => CliError::Usage(format!("{}: {e}", path.display())),
            other => CliError::Usage(format!("{}: {other}", path.display())),
        }
    }

    fn exit_code(&self) -> i32 {
        match self {
            // Computation errors: the inputs were readable but the numbers
            // did not cooperate.
            CliError::Core(
                elmsol::Error::Solver(_)
                | elmsol::Error::Degenerate(_)
                | elmsol::Error::RankDeficient { .. }
                | elmsol::Error::ZeroVariance
                | elmsol::Error::DivisionByZero { .. }
                | elmsol::Error::Sweep(_)
                | elmsol::Error::Shape(_),
            ) => 1,
            // Everything else is a usage or input problem.
            _ => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "elmsol",
    about = "Hydrocarbon gas solubility modeling with extreme learning machines",
    version
)]
struct Cli {
    /// Seed for every stochastic step (splitting, weights, synthesis).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// JSON config file supplying defaults for the tuning flags.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct DataFlags {
    /// Accept gas-phase mole fractions as 0-99.99 percentages.
    #[arg(long)]
    percent: bool,

    /// Accept cation/anion molality and charge columns instead of
    /// `ionic_strength`.
    #[arg(long)]
    ion_columns: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model on a train/test split of a dataset.
    Train {
        /// Input dataset CSV.
        #[arg(long, value_name = "CSV")]
        data: PathBuf,
        /// Output model JSON.
        #[arg(long, value_name = "JSON")]
        model: PathBuf,
        /// Train-split evaluation report (default: <model>.train-report.json).
        #[arg(long, value_name = "JSON")]
        train_report: Option<PathBuf>,
        /// Test-split evaluation report (default: <model>.test-report.json).
        #[arg(long, value_name = "JSON")]
        test_report: Option<PathBuf>,
        /// Fraction of records in the train split.
        #[arg(long)]
        train_fraction: Option<f64>,
        /// Hidden layer width.
        #[arg(long)]
        hidden_nodes: Option<usize>,
        /// Regularization constant C (omit for the pseudoinverse solution).
        #[arg(long, value_name = "C")]
        regularization: Option<f64>,
        #[command(flatten)]
        data_flags: DataFlags,
    },
    /// Predict solubilities for feature-only rows (no solubility column).
    Predict {
        #[arg(long, value_name = "JSON")]
        model: PathBuf,
        #[arg(long, value_name = "CSV")]
        data: PathBuf,
        /// Output CSV of inputs and predictions.
        #[arg(long, value_name = "CSV")]
        out: PathBuf,
        #[command(flatten)]
        data_flags: DataFlags,
    },
    /// Evaluate a model against measured data.
    Evaluate {
        #[arg(long, value_name = "JSON")]
        model: PathBuf,
        #[arg(long, value_name = "CSV")]
        data: PathBuf,
        /// Optional JSON report path.
        #[arg(long, value_name = "JSON")]
        out: Option<PathBuf>,
        #[command(flatten)]
        data_flags: DataFlags,
    },
    /// Sweep hidden-node counts and emit the train/test RMSE curve.
    Sweep {
        #[arg(long, value_name = "CSV")]
        data: PathBuf,
        /// Output CSV: hidden_nodes,repeat,train_rmse,test_rmse.
        #[arg(long, value_name = "CSV")]
        out: PathBuf,
        /// Inclusive node range, e.g. 1..60 or 5..50:5.
        #[arg(long)]
        node_range: Option<String>,
        /// Training repeats per node count.
        #[arg(long)]
        repeats: Option<u32>,
        #[arg(long)]
        train_fraction: Option<f64>,
        /// Regularization constant C for every cell.
        #[arg(long, value_name = "C")]
        regularization: Option<f64>,
        #[command(flatten)]
        data_flags: DataFlags,
    },
    /// Leverage diagnostics (applicability domain) for a model over data.
    Diagnose {
        #[arg(long, value_name = "JSON")]
        model: PathBuf,
        #[arg(long, value_name = "CSV")]
        data: PathBuf,
        /// Output prefix: writes <out>.csv and <out>.json.
        #[arg(long, value_name = "PREFIX")]
        out: PathBuf,
        /// Diagnose only the train split of the data.
        #[arg(long)]
        train_only: bool,
        /// Build the design matrix from raw instead of scaled features.
        #[arg(long)]
        raw_features: bool,
        /// Augment the design matrix with a constant column.
        #[arg(long)]
        intercept: bool,
        #[arg(long)]
        train_fraction: Option<f64>,
        #[command(flatten)]
        data_flags: DataFlags,
    },
    /// Relevancy factor of each input against measured solubility.
    Sensitivity {
        #[arg(long, value_name = "CSV")]
        data: PathBuf,
        /// Output CSV: feature,r.
        #[arg(long, value_name = "CSV")]
        out: PathBuf,
        #[command(flatten)]
        data_flags: DataFlags,
    },
    /// Generate a synthetic dataset in the standard CSV schema.
    GenSynth {
        /// Number of records.
        #[arg(long, default_value_t = 1000)]
        count: usize,
        /// Relative standard deviation of the multiplicative noise.
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long, value_name = "CSV")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file_config = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };

    let mut flags = ConfigFlags {
        seed: cli.seed,
        ..Default::default()
    };

    match cli.command {
        Command::Train {
            data,
            model,
            train_report,
            test_report,
            train_fraction,
            hidden_nodes,
            regularization,
            data_flags,
        } => {
            flags.train_fraction = train_fraction;
            flags.hidden_nodes = hidden_nodes;
            flags.regularization = regularization;
            flags.percent_fractions = data_flags.percent;
            flags.ion_columns = data_flags.ion_columns;
            let config = RunConfig::resolve(&file_config, &flags);
            commands::cmd_train(
                &data,
                &model,
                train_report.as_deref(),
                test_report.as_deref(),
                &config,
            )
        }
        Command::Predict {
            model,
            data,
            out,
            data_flags,
        } => {
            flags.percent_fractions = data_flags.percent;
            flags.ion_columns = data_flags.ion_columns;
            let config = RunConfig::resolve(&file_config, &flags);
            commands::cmd_predict(&model, &data, &out, &config)
        }
        Command::Evaluate {
            model,
            data,
            out,
            data_flags,
        } => {
            flags.percent_fractions = data_flags.percent;
            flags.ion_columns = data_flags.ion_columns;
            let config = RunConfig::resolve(&file_config, &flags);
            commands::cmd_evaluate(&model, &data, out.as_deref(), &config)
        }
        Command::Sweep {
            data,
            out,
            node_range,
            repeats,
            train_fraction,
            regularization,
            data_flags,
        } => {
            flags.node_range = node_range;
            flags.repeats = repeats;
            flags.train_fraction = train_fraction;
            flags.regularization = regularization;
            flags.percent_fractions = data_flags.percent;
            flags.ion_columns = data_flags.ion_columns;
            let config = RunConfig::resolve(&file_config, &flags);
            commands::cmd_sweep(&data, &out, &config)
        }
        Command::Diagnose {
            model,
            data,
            out,
            train_only,
            raw_features,
            intercept,
            train_fraction,
            data_flags,
        } => {
            flags.train_fraction = train_fraction;
            flags.percent_fractions = data_flags.percent;
            flags.ion_columns = data_flags.ion_columns;
            let config = RunConfig::resolve(&file_config, &flags);
            commands::cmd_diagnose(
                &model,
                &data,
                &out,
                train_only,
                raw_features,
                intercept,
                &config,
            )
        }
        Command::Sensitivity {
            data,
            out,
            data_flags,
        } => {
            flags.percent_fractions = data_flags.percent;
            flags.ion_columns = data_flags.ion_columns;
            let config = RunConfig::resolve(&file_config, &flags);
            commands::cmd_sensitivity(&data, &out, &config)
        }
        Command::GenSynth { count, noise, out } => {
            let config = RunConfig::resolve(&file_config, &flags);
            commands::cmd_gen_synth(count, noise, &out, &config)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(error) = run(cli) {
        eprintln!("error: {error}");
        std::process::exit(error.exit_code());
    }
}
