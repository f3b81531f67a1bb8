//! Single-hidden-layer network with random hidden parameters and
//! closed-form least-squares output weights.
//!
//! Training draws the input weights and biases once from a seeded uniform
//! distribution, maps the scaled inputs through sigmoid hidden units, and
//! solves for the output weights in closed form:
//!
//! * with a regularization constant `C`, the output weights solve the
//!   regularized normal equations `(H^T H + I/C) beta = H^T t` through a
//!   symmetric positive-definite (Cholesky) factorization;
//! * without one, `beta = pinv(H) t` is the minimum-norm least-squares
//!   solution through a singular value decomposition, with singular values
//!   at or below `eps * max(N, L) * sigma_max` treated as zero (`eps` is the
//!   working-precision machine epsilon).
//!
//! Randomness is a ChaCha20 stream seeded with `seed_from_u64(config.seed)`;
//! draws are 53-bit uniforms mapped affinely onto `weight_range`, filling the
//! weight matrix row by row and then the bias vector.

use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{Dataset, Scaler, FEATURE_COUNT};
use crate::error::{Error, Result};
use crate::metrics;
use crate::scalar::{from_f64, machine_epsilon, Scalar};

/// Hidden-unit nonlinearity. Only the logistic sigmoid is supported; other
/// names are rejected at configuration time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Sigmoid,
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sigmoid" => Ok(Activation::Sigmoid),
            other => Err(Error::Config(format!(
                "unsupported activation `{other}`; supported: sigmoid"
            ))),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::Sigmoid => write!(f, "sigmoid"),
        }
    }
}

/// Network hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElmConfig<T> {
    /// Number of hidden nodes `L`.
    pub hidden_nodes: usize,
    /// Least-squares regularization constant `C`; `None` selects the pure
    /// pseudoinverse solution.
    pub regularization: Option<T>,
    /// Uniform range for the random input weights and biases.
    pub weight_range: (T, T),
    /// Seed of the hidden-parameter generator.
    pub seed: u64,
    pub activation: Activation,
}

impl<T: Scalar> ElmConfig<T> {
    /// A config with the documented defaults: the given node count and seed,
    /// no regularization, weight range `(-1, 1)`, sigmoid activation.
    pub fn new(hidden_nodes: usize, seed: u64) -> Self {
        ElmConfig {
            hidden_nodes,
            regularization: None,
            weight_range: (from_f64(-1.0), from_f64(1.0)),
            seed,
            activation: Activation::Sigmoid,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_nodes == 0 {
            return Err(Error::Config("hidden_nodes must be >= 1".to_string()));
        }
        let (lo, hi) = self.weight_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Config(format!(
                "weight_range ({lo}, {hi}) must be a finite nonempty interval"
            )));
        }
        if let Some(c) = self.regularization {
            if !(c.is_finite() && c > T::zero()) {
                return Err(Error::Config(format!(
                    "regularization C = {c} must be finite and > 0"
                )));
            }
        }
        Ok(())
    }
}

/// Logistic sigmoid `1 / (1 + exp(-z))`.
#[inline]
pub fn sigmoid<T: Scalar>(z: T) -> T {
    T::one() / (T::one() + (-z).exp())
}

/// Draws the random hidden parameters for a config: an `L x n` weight matrix
/// and an `L`-vector of biases, both uniform over `weight_range`.
///
/// Draw order is fixed: weights row by row, then biases. Each draw is a
/// 53-bit uniform in `[0, 1)` mapped to `lo + u * (hi - lo)`.
pub fn init_random<T: Scalar>(config: &ElmConfig<T>) -> Result<(DMatrix<T>, DVector<T>)> {
    config.validate()?;
    let (lo, hi) = config.weight_range;
    let span = hi - lo;
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let mut draw = move || -> T { lo + from_f64::<T>(rng.random::<f64>()) * span };

    let l = config.hidden_nodes;
    let mut weights = DMatrix::zeros(l, FEATURE_COUNT);
    for i in 0..l {
        for j in 0..FEATURE_COUNT {
            weights[(i, j)] = draw();
        }
    }
    let biases = DVector::from_fn(l, |_, _| draw());
    Ok((weights, biases))
}

/// Hidden-layer output matrix over scaled inputs:
/// `H[j][i] = sigmoid(a_i . x_j + b_i)`, shape `N x L`.
pub fn hidden_output<T: Scalar>(
    weights: &DMatrix<T>,
    biases: &DVector<T>,
    x_scaled: &DMatrix<T>,
) -> Result<DMatrix<T>> {
    if x_scaled.ncols() != weights.ncols() {
        return Err(Error::Shape(format!(
            "input has {} columns but weights expect {}",
            x_scaled.ncols(),
            weights.ncols()
        )));
    }
    if biases.len() != weights.nrows() {
        return Err(Error::Shape(format!(
            "{} biases for {} hidden nodes",
            biases.len(),
            weights.nrows()
        )));
    }
    let mut h = x_scaled * weights.transpose();
    for i in 0..h.nrows() {
        for j in 0..h.ncols() {
            h[(i, j)] = sigmoid(h[(i, j)] + biases[j]);
        }
    }
    Ok(h)
}

fn ensure_finite<T: Scalar>(label: &str, iter: impl Iterator<Item = T>) -> Result<()> {
    for (k, v) in iter.enumerate() {
        if !v.is_finite() {
            return Err(Error::InvalidInput(format!(
                "{label} contains a non-finite value at flat index {k}"
            )));
        }
    }
    Ok(())
}

/// Solves `(H^T H + I/C) B = H^T T` by Cholesky. `T` may have several columns.
fn solve_regularized<T: Scalar>(
    h: &DMatrix<T>,
    targets: &DMatrix<T>,
    c: T,
) -> Result<DMatrix<T>> {
    let l = h.ncols();
    let mut gram = h.transpose() * h;
    let ridge = T::one() / c;
    for i in 0..l {
        gram[(i, i)] += ridge;
    }
    let rhs = h.transpose() * targets;
    match gram.clone().cholesky() {
        Some(factor) => Ok(factor.solve(&rhs)),
        None => {
            let svd = gram.svd(false, false);
            let (mut s_max, mut s_min) = (T::zero(), T::max_value().unwrap_or_else(T::one));
            for &s in svd.singular_values.iter() {
                s_max = s_max.max(s);
                s_min = s_min.min(s);
            }
            let cond = if s_min > T::zero() { s_max / s_min } else { T::zero() };
            Err(Error::Solver(format!(
                "regularized normal equations are numerically singular \
                 (condition estimate {:.3e})",
                cond.to_f64().unwrap_or(f64::INFINITY)
            )))
        }
    }
}

/// Minimum-norm least squares `B = pinv(H) T` via SVD with the documented
/// rank cutoff `eps * max(N, L) * sigma_max`.
fn solve_pseudoinverse<T: Scalar>(h: &DMatrix<T>, targets: &DMatrix<T>) -> Result<DMatrix<T>> {
    let (n, l) = (h.nrows(), h.ncols());
    let svd = h.clone().svd(true, true);
    let sigma_max = svd
        .singular_values
        .iter()
        .fold(T::zero(), |m, &s| m.max(s));
    let cutoff = machine_epsilon::<T>() * from_f64::<T>(n.max(l) as f64) * sigma_max;
    svd.solve(targets, cutoff)
        .map_err(|msg| Error::Solver(format!("pseudoinverse solve failed: {msg}")))
}

/// A trained network. Immutable; safe to share across prediction threads.
#[derive(Debug, Clone, PartialEq)]
pub struct ElmModel<T> {
    input_weights: DMatrix<T>,
    biases: DVector<T>,
    output_weights: DMatrix<T>,
    scaler: Scaler<T>,
    config: ElmConfig<T>,
}

impl<T: Scalar> ElmModel<T> {
    /// `L x n` random input weights.
    pub fn input_weights(&self) -> &DMatrix<T> {
        &self.input_weights
    }

    /// `L` hidden biases.
    pub fn biases(&self) -> &DVector<T> {
        &self.biases
    }

    /// `L x m` learned output weights (`m = 1` for scalar targets).
    pub fn output_weights(&self) -> &DMatrix<T> {
        &self.output_weights
    }

    pub fn scaler(&self) -> &Scaler<T> {
        &self.scaler
    }

    pub fn config(&self) -> &ElmConfig<T> {
        &self.config
    }

    /// Predicts targets for raw (unscaled) inputs, one per row.
    pub fn predict(&self, x_raw: &DMatrix<T>) -> Result<DVector<T>> {
        let x_scaled = self.scaler.apply_matrix(x_raw)?;
        let h = hidden_output(&self.input_weights, &self.biases, &x_scaled)?;
        let out = h * &self.output_weights;
        Ok(DVector::from_iterator(
            out.nrows(),
            out.column(0).iter().copied(),
        ))
    }

    /// Predicts over a dataset's records, in record order.
    pub fn predict_dataset(&self, data: &Dataset<T>) -> Result<DVector<T>> {
        self.predict(&data.features_matrix())
    }

    /// Evaluates the model against a dataset's measured solubilities.
    pub fn evaluate(&self, data: &Dataset<T>) -> Result<metrics::EvalReport<T>> {
        let predicted = self.predict_dataset(data)?;
        metrics::evaluate(data.targets().as_slice(), predicted.as_slice())
    }
}

/// Trains a model on raw inputs and targets with a prefitted scaler.
///
/// The scaler must have been fitted on the training inputs (or a superset
/// policy the caller controls); it becomes part of the model.
pub fn train<T: Scalar>(
    config: &ElmConfig<T>,
    x_raw: &DMatrix<T>,
    targets: &DVector<T>,
    scaler: Scaler<T>,
) -> Result<ElmModel<T>> {
    config.validate()?;
    if x_raw.nrows() == 0 {
        return Err(Error::InvalidInput("training set is empty".to_string()));
    }
    if x_raw.nrows() != targets.len() {
        return Err(Error::Shape(format!(
            "{} input rows but {} targets",
            x_raw.nrows(),
            targets.len()
        )));
    }
    ensure_finite("training inputs", x_raw.iter().copied())?;
    ensure_finite("training targets", targets.iter().copied())?;

    let (weights, biases) = init_random(config)?;
    let x_scaled = scaler.apply_matrix(x_raw)?;
    let h = hidden_output(&weights, &biases, &x_scaled)?;
    let t = DMatrix::from_fn(targets.len(), 1, |i, _| targets[i]);
    let beta = match config.regularization {
        Some(c) => solve_regularized(&h, &t, c)?,
        None => solve_pseudoinverse(&h, &t)?,
    };

    Ok(ElmModel {
        input_weights: weights,
        biases,
        output_weights: beta,
        scaler,
        config: *config,
    })
}

/// Convenience: fits a `[-1, 1]` scaler on the dataset and trains on it.
pub fn train_dataset<T: Scalar>(config: &ElmConfig<T>, data: &Dataset<T>) -> Result<ElmModel<T>> {
    let scaler = crate::dataset::fit_scaler(data);
    train(config, &data.features_matrix(), &data.targets(), scaler)
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

/// Current model file schema version.
pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct MatrixFile {
    rows: usize,
    cols: usize,
    /// Row-major entries as shortest-round-trip decimal strings.
    data: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct ConfigFile {
    hidden_nodes: usize,
    regularization: Option<String>,
    weight_range: [String; 2],
    seed: u64,
    activation: String,
}

#[derive(Serialize, Deserialize)]
struct ScalerFile {
    feature_min: Vec<String>,
    feature_max: Vec<String>,
    range: [String; 2],
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    schema_version: u32,
    config: ConfigFile,
    scaler: ScalerFile,
    input_weights: MatrixFile,
    biases: Vec<String>,
    output_weights: MatrixFile,
    /// `sha256:<hex>` over the numeric payload; see [`payload_checksum`].
    checksum: String,
}

fn encode<T: Scalar>(v: T) -> String {
    // f32 widens exactly; the shortest f64 decimal narrows back bit-exactly.
    v.to_f64().expect("scalar converts to f64").to_string()
}

fn decode<T: Scalar>(s: &str, what: &str) -> Result<T> {
    let v: f64 = s
        .parse()
        .map_err(|_| Error::ModelFile(format!("{what}: {s:?} is not a number")))?;
    if !v.is_finite() {
        return Err(Error::ModelFile(format!("{what}: {s:?} is not finite")));
    }
    T::from_f64(v).ok_or_else(|| Error::ModelFile(format!("{what}: {s:?} not representable")))
}

fn encode_matrix<T: Scalar>(m: &DMatrix<T>) -> MatrixFile {
    let mut data = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            data.push(encode(m[(i, j)]));
        }
    }
    MatrixFile {
        rows: m.nrows(),
        cols: m.ncols(),
        data,
    }
}

fn decode_matrix<T: Scalar>(file: &MatrixFile, what: &str) -> Result<DMatrix<T>> {
    if file.data.len() != file.rows * file.cols {
        return Err(Error::ModelFile(format!(
            "{what}: {} entries for a {} x {} matrix",
            file.data.len(),
            file.rows,
            file.cols
        )));
    }
    let mut m = DMatrix::zeros(file.rows, file.cols);
    for i in 0..file.rows {
        for j in 0..file.cols {
            m[(i, j)] = decode(&file.data[i * file.cols + j], what)?;
        }
    }
    Ok(m)
}

/// SHA-256 over the numeric strings joined by `\n`, in file order:
/// input weights, biases, output weights, scaler minima, scaler maxima,
/// scaler range, config weight range, config regularization (or `none`).
fn payload_checksum(file: &ModelFile) -> String {
    let mut hasher = Sha256::new();
    let mut feed = |parts: &[String]| {
        for p in parts {
            hasher.update(p.as_bytes());
            hasher.update(b"\n");
        }
    };
    feed(&file.input_weights.data);
    feed(&file.biases);
    feed(&file.output_weights.data);
    feed(&file.scaler.feature_min);
    feed(&file.scaler.feature_max);
    feed(&file.scaler.range);
    feed(&file.config.weight_range);
    feed(&[file
        .config
        .regularization
        .clone()
        .unwrap_or_else(|| "none".to_string())]);
    format!("sha256:{}", hex::encode(hasher.finalize()))
}

fn to_model_file<T: Scalar>(model: &ElmModel<T>) -> ModelFile {
    let config = &model.config;
    let scaler = &model.scaler;
    let (lo, hi) = scaler.range();
    let mut file = ModelFile {
        schema_version: MODEL_SCHEMA_VERSION,
        config: ConfigFile {
            hidden_nodes: config.hidden_nodes,
            regularization: config.regularization.map(encode),
            weight_range: [encode(config.weight_range.0), encode(config.weight_range.1)],
            seed: config.seed,
            activation: config.activation.to_string(),
        },
        scaler: ScalerFile {
            feature_min: scaler.feature_min().iter().map(|&v| encode(v)).collect(),
            feature_max: scaler.feature_max().iter().map(|&v| encode(v)).collect(),
            range: [encode(lo), encode(hi)],
        },
        input_weights: encode_matrix(&model.input_weights),
        biases: model.biases.iter().map(|&v| encode(v)).collect(),
        output_weights: encode_matrix(&model.output_weights),
        checksum: String::new(),
    };
    file.checksum = payload_checksum(&file);
    file
}

fn from_model_file<T: Scalar>(file: &ModelFile) -> Result<ElmModel<T>> {
    if file.schema_version != MODEL_SCHEMA_VERSION {
        return Err(Error::ModelVersion {
            found: file.schema_version,
            expected: MODEL_SCHEMA_VERSION,
        });
    }
    if payload_checksum(file) != file.checksum {
        return Err(Error::ChecksumMismatch);
    }

    let config = ElmConfig {
        hidden_nodes: file.config.hidden_nodes,
        regularization: file
            .config
            .regularization
            .as_deref()
            .map(|s| decode(s, "config.regularization"))
            .transpose()?,
        weight_range: (
            decode(&file.config.weight_range[0], "config.weight_range")?,
            decode(&file.config.weight_range[1], "config.weight_range")?,
        ),
        seed: file.config.seed,
        activation: file.config.activation.parse()?,
    };
    config.validate()?;

    if file.scaler.feature_min.len() != FEATURE_COUNT
        || file.scaler.feature_max.len() != FEATURE_COUNT
    {
        return Err(Error::ModelFile(format!(
            "scaler must carry {FEATURE_COUNT} feature extrema"
        )));
    }
    let mut min = [T::zero(); FEATURE_COUNT];
    let mut max = [T::zero(); FEATURE_COUNT];
    for j in 0..FEATURE_COUNT {
        min[j] = decode(&file.scaler.feature_min[j], "scaler.feature_min")?;
        max[j] = decode(&file.scaler.feature_max[j], "scaler.feature_max")?;
    }
    let scaler = Scaler::from_parts(
        min,
        max,
        decode(&file.scaler.range[0], "scaler.range")?,
        decode(&file.scaler.range[1], "scaler.range")?,
    )?;

    let input_weights = decode_matrix(&file.input_weights, "input_weights")?;
    let output_weights = decode_matrix(&file.output_weights, "output_weights")?;
    let biases_vec: Vec<T> = file
        .biases
        .iter()
        .map(|s| decode(s, "biases"))
        .collect::<Result<_>>()?;
    let biases = DVector::from_vec(biases_vec);

    let l = config.hidden_nodes;
    if input_weights.nrows() != l
        || input_weights.ncols() != FEATURE_COUNT
        || biases.len() != l
        || output_weights.nrows() != l
    {
        return Err(Error::ModelFile(format!(
            "inconsistent dimensions: {} hidden nodes, {} x {} input weights, \
             {} biases, {} x {} output weights",
            l,
            input_weights.nrows(),
            input_weights.ncols(),
            biases.len(),
            output_weights.nrows(),
            output_weights.ncols()
        )));
    }

    Ok(ElmModel {
        input_weights,
        biases,
        output_weights,
        scaler,
        config,
    })
}

/// Writes a model as versioned JSON.
pub fn write_model<T: Scalar, W: Write>(model: &ElmModel<T>, mut writer: W) -> Result<()> {
    let file = to_model_file(model);
    let text = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::ModelFile(format!("serialize failed: {e}")))?;
    writer.write_all(text.as_bytes())?;
    writer.write_all(b"\n")?;
    Ok(())
}

/// Reads a model from versioned JSON, verifying the schema version and the
/// payload checksum.
pub fn read_model<T: Scalar, R: Read>(mut reader: R) -> Result<ElmModel<T>> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| Error::ModelFile(format!("malformed model file: {e}")))?;
    from_model_file(&file)
}

/// Saves a model to a JSON file.
pub fn save_model<T: Scalar>(model: &ElmModel<T>, path: impl AsRef<Path>) -> Result<()> {
    write_model(model, File::create(path)?)
}

/// Loads a model from a JSON file.
pub fn load_model<T: Scalar>(path: impl AsRef<Path>) -> Result<ElmModel<T>> {
    read_model(File::open(path)?)
}
