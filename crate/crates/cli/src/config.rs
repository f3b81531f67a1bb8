//! Run configuration: built-in defaults, optional JSON config file, and
//! command-line overrides, in rising precedence.

use std::path::Path;

use serde::Deserialize;

use crate::CliError;

/// Built-in defaults mirroring the model's published operating point.
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.75;
pub const DEFAULT_HIDDEN_NODES: usize = 30;
pub const DEFAULT_NODE_RANGE: &str = "1..60";
pub const DEFAULT_REPEATS: u32 = 5;

/// Optional JSON config file; every field may be omitted.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub train_fraction: Option<f64>,
    pub hidden_nodes: Option<usize>,
    pub regularization: Option<f64>,
    pub node_range: Option<String>,
    pub repeats: Option<u32>,
    pub percent_fractions: Option<bool>,
    pub ion_columns: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("bad config {}: {e}", path.display())))
    }
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub train_fraction: f64,
    pub hidden_nodes: usize,
    pub regularization: Option<f64>,
    pub node_range: String,
    pub repeats: u32,
    pub percent_fractions: bool,
    pub ion_columns: bool,
}

impl RunConfig {
    /// Resolves `flag value > config file > default` per field. `flags` holds
    /// the explicitly passed command-line values.
    pub fn resolve(file: &FileConfig, flags: &ConfigFlags) -> RunConfig {
        RunConfig {
            seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            train_fraction: flags
                .train_fraction
                .or(file.train_fraction)
                .unwrap_or(DEFAULT_TRAIN_FRACTION),
            hidden_nodes: flags
                .hidden_nodes
                .or(file.hidden_nodes)
                .unwrap_or(DEFAULT_HIDDEN_NODES),
            regularization: flags.regularization.or(file.regularization),
            node_range: flags
                .node_range
                .clone()
                .or_else(|| file.node_range.clone())
                .unwrap_or_else(|| DEFAULT_NODE_RANGE.to_string()),
            repeats: flags.repeats.or(file.repeats).unwrap_or(DEFAULT_REPEATS),
            percent_fractions: flags.percent_fractions || file.percent_fractions.unwrap_or(false),
            ion_columns: flags.ion_columns || file.ion_columns.unwrap_or(false),
        }
    }

    pub fn csv_options(&self) -> elmsol::dataset::CsvOptions {
        elmsol::dataset::CsvOptions {
            percent_fractions: self.percent_fractions,
            ion_columns: self.ion_columns,
        }
    }
}

/// Raw command-line values, `None` when the flag was not given.
#[derive(Debug, Clone, Default)]
pub struct ConfigFlags {
    pub seed: Option<u64>,
    pub train_fraction: Option<f64>,
    pub hidden_nodes: Option<usize>,
    pub regularization: Option<f64>,
    pub node_range: Option<String>,
    pub repeats: Option<u32>,
    pub percent_fractions: bool,
    pub ion_columns: bool,
}
