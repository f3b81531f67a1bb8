//! Extreme-learning-machine regression toolkit for hydrocarbon gas
//! solubility in aqueous electrolyte solutions.
//!
//! The pipeline: ingest solubility records ([`dataset`]), train a
//! single-hidden-layer network with random hidden parameters and
//! closed-form output weights ([`elm`]), score it ([`metrics`]), pick the
//! hidden-node count by test-error sweep ([`selection`]), and judge where
//! its predictions can be trusted ([`diagnostics`]). A fixed synthetic
//! generator ([`synth`]) stands in for the non-redistributable experimental
//! databank.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below are the concrete types the CLI uses.
//!
//! ```
//! use elmsol::{elm::ElmConfig, synth::SynthSpec};
//!
//! let data = elmsol::synth::generate::<f64>(&SynthSpec::new(200, 7, 0.05))?;
//! let (train, test) = data.split(0.75, 7)?;
//! let model = elmsol::elm::train_dataset(&ElmConfig::new(30, 7), &train)?;
//! let report = model.evaluate(&test)?;
//! assert!(report.r2 > 0.0);
//! # Ok::<(), elmsol::Error>(())
//! ```

pub mod dataset;
pub mod diagnostics;
pub mod elm;
pub mod error;
pub mod metrics;
pub mod scalar;
pub mod selection;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// `f64` dataset, as produced by the loaders and the generator.
pub type Dataset64 = dataset::Dataset<f64>;
/// `f64` record.
pub type SolubilityRecord64 = dataset::SolubilityRecord<f64>;
/// `f64` input scaler.
pub type Scaler64 = dataset::Scaler<f64>;
/// `f64` network configuration.
pub type ElmConfig64 = elm::ElmConfig<f64>;
/// `f64` trained model.
pub type ElmModel64 = elm::ElmModel<f64>;
/// `f64` evaluation report.
pub type EvalReport64 = metrics::EvalReport<f64>;
/// `f64` sweep report.
pub type SweepReport64 = selection::SweepReport<f64>;
/// `f64` leverage report.
pub type LeverageReport64 = diagnostics::LeverageReport<f64>;
/// `f64` sensitivity report.
pub type SensitivityReport64 = diagnostics::SensitivityReport<f64>;
