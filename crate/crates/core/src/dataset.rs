//! Data ingestion and featurization.
//!
//! A [`SolubilityRecord`] is one experimental point: the gas-phase mole
//! fractions of methane through butane, the ionic strength of the aqueous
//! phase, pressure, temperature, the index of the hydrocarbon whose aqueous
//! solubility is the target, and that solubility. Records are collected into
//! a [`Dataset`], which can be loaded from and written to CSV, split into
//! train/test parts with a seeded shuffle, and turned into feature matrices.
//!
//! The 8-dimensional feature order is a public contract (diagnostics
//! reports index into it): `c1, c2, c3, c4, ionic_strength, pressure_mpa,
//! temperature_c, idx`. See [`FEATURE_NAMES`].

use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::scalar::{from_f64, Scalar};

/// Number of model inputs.
pub const FEATURE_COUNT: usize = 8;

/// Feature names in feature-vector order; also the CSV column names.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "c1",
    "c2",
    "c3",
    "c4",
    "ionic_strength",
    "pressure_mpa",
    "temperature_c",
    "idx",
];

/// CSV header of the full dataset schema, in order.
pub const CSV_HEADER: [&str; 9] = [
    "c1",
    "c2",
    "c3",
    "c4",
    "ionic_strength",
    "pressure_mpa",
    "temperature_c",
    "idx",
    "solubility",
];

/// Documented operating ranges of the experimental databank. Values outside
/// these bounds raise advisory [`RangeWarning`]s, never hard errors; the
/// applicability domain is policed by the diagnostics module instead.
pub const TEMPERATURE_RANGE_C: (f64, f64) = (1.4, 245.15);
/// Documented pressure range in MPa.
pub const PRESSURE_RANGE_MPA: (f64, f64) = (0.3, 100.0);
/// Documented ionic strength range in mol per kg.
pub const IONIC_STRENGTH_RANGE: (f64, f64) = (0.0, 37.35);

/// One dissolved ion species: molality (mol per kg of solvent) and signed
/// integer valence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IonSpec<T> {
    pub molality: T,
    pub charge: i32,
}

impl<T: Scalar> IonSpec<T> {
    /// Builds a validated ion: molality must be finite and nonnegative,
    /// charge nonzero.
    pub fn new(molality: T, charge: i32) -> Result<Self> {
        let ion = IonSpec { molality, charge };
        ion.validate()?;
        Ok(ion)
    }

    fn validate(&self) -> Result<()> {
        if !self.molality.is_finite() || self.molality < T::zero() {
            return Err(Error::InvalidInput(format!(
                "ion molality must be finite and >= 0, got {}",
                self.molality
            )));
        }
        if self.charge == 0 {
            return Err(Error::InvalidInput(
                "ion charge must be nonzero".to_string(),
            ));
        }
        Ok(())
    }
}

/// Ionic strength `I = 1/2 * sum(m_i * z_i^2)` over a list of ions.
///
/// The concentration unit is treated as opaque "mol per kg"; no molarity
/// conversion is attempted. An empty list is pure water and returns zero.
pub fn ionic_strength<T: Scalar>(ions: &[IonSpec<T>]) -> Result<T> {
    let mut total = T::zero();
    for ion in ions {
        ion.validate()?;
        let z = from_f64::<T>(f64::from(ion.charge));
        total += ion.molality * z * z;
    }
    Ok(total * from_f64::<T>(0.5))
}

/// An advisory note that a field lies outside the documented databank range.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeWarning {
    pub field: &'static str,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

impl fmt::Display for RangeWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} = {} outside the documented range [{}, {}]",
            self.field, self.value, self.lo, self.hi
        )
    }
}

/// One experimental solubility point.
///
/// `c1..c4` are gas-phase mole fractions of methane, ethane, propane and
/// butane (each in `[0, 1]`, summing to at most 1; the remainder is
/// non-hydrocarbon vapor). `idx` selects which hydrocarbon's aqueous-phase
/// mole fraction `solubility` reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolubilityRecord<T> {
    pub c1: T,
    pub c2: T,
    pub c3: T,
    pub c4: T,
    pub ionic_strength: T,
    pub pressure_mpa: T,
    pub temperature_c: T,
    pub idx: u8,
    pub solubility: T,
}

impl<T: Scalar> SolubilityRecord<T> {
    /// Checks every hard invariant. Range advisories are separate, see
    /// [`SolubilityRecord::range_warnings`].
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("c1", self.c1),
            ("c2", self.c2),
            ("c3", self.c3),
            ("c4", self.c4),
            ("ionic_strength", self.ionic_strength),
            ("pressure_mpa", self.pressure_mpa),
            ("temperature_c", self.temperature_c),
            ("solubility", self.solubility),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(Error::InvalidInput(format!("{name} must be finite")));
            }
        }
        for (name, value) in [
            ("c1", self.c1),
            ("c2", self.c2),
            ("c3", self.c3),
            ("c4", self.c4),
        ] {
            if value < T::zero() || value > T::one() {
                return Err(Error::InvalidInput(format!(
                    "{name} = {value} must be a mole fraction in [0, 1]"
                )));
            }
        }
        let sum = self.c1 + self.c2 + self.c3 + self.c4;
        if sum > T::one() + from_f64(1e-9) {
            return Err(Error::InvalidInput(format!(
                "gas-phase mole fractions sum to {sum} > 1"
            )));
        }
        if self.ionic_strength < T::zero() {
            return Err(Error::InvalidInput(format!(
                "ionic_strength = {} must be >= 0",
                self.ionic_strength
            )));
        }
        if self.pressure_mpa <= T::zero() {
            return Err(Error::InvalidInput(format!(
                "pressure_mpa = {} must be > 0",
                self.pressure_mpa
            )));
        }
        if !(1..=4).contains(&self.idx) {
            return Err(Error::InvalidInput(format!(
                "idx = {} must be one of 1, 2, 3, 4",
                self.idx
            )));
        }
        if self.gas_fraction(self.idx) == T::zero() {
            return Err(Error::InvalidInput(format!(
                "component c{} selected by idx has zero gas-phase mole fraction",
                self.idx
            )));
        }
        if self.solubility <= T::zero() || self.solubility >= T::one() {
            return Err(Error::InvalidInput(format!(
                "solubility = {} must lie strictly inside (0, 1)",
                self.solubility
            )));
        }
        Ok(())
    }

    /// Advisory warnings for T, P, I outside the documented databank ranges.
    pub fn range_warnings(&self) -> Vec<RangeWarning> {
        let mut warnings = Vec::new();
        let checks = [
            ("temperature_c", self.temperature_c, TEMPERATURE_RANGE_C),
            ("pressure_mpa", self.pressure_mpa, PRESSURE_RANGE_MPA),
            ("ionic_strength", self.ionic_strength, IONIC_STRENGTH_RANGE),
        ];
        for (field, value, (lo, hi)) in checks {
            let v = value.to_f64().unwrap_or(f64::NAN);
            if v < lo || v > hi {
                warnings.push(RangeWarning {
                    field,
                    value: v,
                    lo,
                    hi,
                });
            }
        }
        warnings
    }

    /// Gas-phase mole fraction of component `idx` (1-based).
    pub fn gas_fraction(&self, idx: u8) -> T {
        match idx {
            1 => self.c1,
            2 => self.c2,
            3 => self.c3,
            4 => self.c4,
            _ => T::zero(),
        }
    }

    /// The 8-vector of model inputs, in the fixed order
    /// `[c1, c2, c3, c4, I, P, T, idx]`.
    pub fn feature_vector(&self) -> [T; FEATURE_COUNT] {
        [
            self.c1,
            self.c2,
            self.c3,
            self.c4,
            self.ionic_strength,
            self.pressure_mpa,
            self.temperature_c,
            from_f64(f64::from(self.idx)),
        ]
    }
}

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    /// Loaded from a file at this path.
    File(String),
    /// Produced by the synthetic generator with this seed.
    Generated { seed: u64 },
    /// Built in memory.
    Memory,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::File(path) => write!(f, "file:{path}"),
            Provenance::Generated { seed } => write!(f, "generated:seed={seed}"),
            Provenance::Memory => write!(f, "memory"),
        }
    }
}

/// A nonempty, ordered collection of solubility records.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    records: Vec<SolubilityRecord<T>>,
    provenance: Provenance,
}

impl<T: Scalar> Dataset<T> {
    /// Builds a dataset from validated records. Fails on an empty list or on
    /// any record that violates its invariants.
    pub fn new(records: Vec<SolubilityRecord<T>>, provenance: Provenance) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for (i, record) in records.iter().enumerate() {
            record.validate().map_err(|e| Error::RowValidation {
                row: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(Dataset {
            records,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    /// Always false: emptiness is rejected at construction.
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[SolubilityRecord<T>] {
        &self.records
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// N x 8 matrix of raw (unscaled) feature vectors, one row per record.
    pub fn features_matrix(&self) -> DMatrix<T> {
        let n = self.records.len();
        DMatrix::from_fn(n, FEATURE_COUNT, |i, j| self.records[i].feature_vector()[j])
    }

    /// Targets (measured solubilities) in record order.
    pub fn targets(&self) -> DVector<T> {
        DVector::from_iterator(self.records.len(), self.records.iter().map(|r| r.solubility))
    }

    /// One raw feature column, by feature index (0..8).
    pub fn feature_column(&self, feature: usize) -> DVector<T> {
        assert!(feature < FEATURE_COUNT, "feature index out of range");
        DVector::from_iterator(
            self.records.len(),
            self.records.iter().map(|r| r.feature_vector()[feature]),
        )
    }

    /// All range advisories over the dataset, as `(row, warning)` pairs with
    /// 1-based rows.
    pub fn range_warnings(&self) -> Vec<(usize, RangeWarning)> {
        self.records
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.range_warnings().into_iter().map(move |w| (i + 1, w)))
            .collect()
    }

    /// Deterministic shuffled split into `(train, test)`.
    ///
    /// The permutation is a Fisher-Yates shuffle driven by ChaCha20 seeded
    /// with `seed_from_u64(seed)`; at step `i` (from `n-1` down to 1) the
    /// swap partner is `next_u64() % (i + 1)`. The train part takes the first
    /// `round(train_fraction * n)` shuffled records. Both the generator and
    /// the index rule are fixed so the split is reproducible anywhere.
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<(Dataset<T>, Dataset<T>)> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::InvalidInput(format!(
                "train_fraction = {train_fraction} must lie strictly inside (0, 1)"
            )));
        }
        let n = self.records.len();
        let n_train = (train_fraction * n as f64).round() as usize;
        if n_train == 0 || n_train == n {
            return Err(Error::Split(format!(
                "split of {n} records with train_fraction {train_fraction} \
                 leaves an empty part (train size {n_train})"
            )));
        }

        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        for i in (1..n).rev() {
            let j = (rng.next_u64() % (i as u64 + 1)) as usize;
            order.swap(i, j);
        }

        let train: Vec<_> = order[..n_train].iter().map(|&i| self.records[i]).collect();
        let test: Vec<_> = order[n_train..].iter().map(|&i| self.records[i]).collect();
        Ok((
            Dataset {
                records: train,
                provenance: self.provenance.clone(),
            },
            Dataset {
                records: test,
                provenance: self.provenance.clone(),
            },
        ))
    }
}

// ---------------------------------------------------------------------------
// Min-max input scaling
// ---------------------------------------------------------------------------

/// Affine min-max map of each feature onto a target interval, fitted on the
/// training split only.
///
/// Out-of-range values extrapolate linearly (no clamping), so leverage
/// diagnostics still see how far outside the cloud a point sits. A feature
/// that is constant on the fitting set maps to the midpoint of the target
/// interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler<T> {
    min: [T; FEATURE_COUNT],
    max: [T; FEATURE_COUNT],
    lo: T,
    hi: T,
}

impl<T: Scalar> Scaler<T> {
    /// Fits per-feature extrema over the rows of an N x 8 matrix, mapping
    /// onto `[-1, 1]`.
    pub fn fit(features: &DMatrix<T>) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::EmptyDataset);
        }
        if features.ncols() != FEATURE_COUNT {
            return Err(Error::Shape(format!(
                "scaler expects {FEATURE_COUNT} feature columns, got {}",
                features.ncols()
            )));
        }
        let mut min = [T::zero(); FEATURE_COUNT];
        let mut max = [T::zero(); FEATURE_COUNT];
        for j in 0..FEATURE_COUNT {
            let col = features.column(j);
            let mut lo = col[0];
            let mut hi = col[0];
            for &v in col.iter() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
            min[j] = lo;
            max[j] = hi;
        }
        Ok(Scaler {
            min,
            max,
            lo: from_f64(-1.0),
            hi: from_f64(1.0),
        })
    }

    /// Target interval bounds `(lo, hi)`.
    pub fn range(&self) -> (T, T) {
        (self.lo, self.hi)
    }

    /// Fitted per-feature minima.
    pub fn feature_min(&self) -> &[T; FEATURE_COUNT] {
        &self.min
    }

    /// Fitted per-feature maxima.
    pub fn feature_max(&self) -> &[T; FEATURE_COUNT] {
        &self.max
    }

    /// Rebuilds a scaler from stored state (used by model persistence).
    pub fn from_parts(min: [T; FEATURE_COUNT], max: [T; FEATURE_COUNT], lo: T, hi: T) -> Result<Self> {
        for j in 0..FEATURE_COUNT {
            if max[j] < min[j] {
                return Err(Error::InvalidInput(format!(
                    "scaler feature {j} has max {} < min {}",
                    max[j], min[j]
                )));
            }
        }
        if lo >= hi {
            return Err(Error::InvalidInput(format!(
                "scaler target range ({lo}, {hi}) is empty"
            )));
        }
        Ok(Scaler { min, max, lo, hi })
    }

    fn scale_one(&self, j: usize, x: T) -> T {
        let (lo, hi) = (self.min[j], self.max[j]);
        if hi == lo {
            return (self.lo + self.hi) * from_f64(0.5);
        }
        self.lo + (x - lo) * (self.hi - self.lo) / (hi - lo)
    }

    fn unscale_one(&self, j: usize, y: T) -> T {
        let (lo, hi) = (self.min[j], self.max[j]);
        if hi == lo {
            return lo;
        }
        lo + (y - self.lo) * (hi - lo) / (self.hi - self.lo)
    }

    /// Maps one raw feature vector into scaled coordinates.
    pub fn apply(&self, x: &[T; FEATURE_COUNT]) -> [T; FEATURE_COUNT] {
        std::array::from_fn(|j| self.scale_one(j, x[j]))
    }

    /// Inverse of [`Scaler::apply`]. Constant features recover the fitted value.
    pub fn invert(&self, y: &[T; FEATURE_COUNT]) -> [T; FEATURE_COUNT] {
        std::array::from_fn(|j| self.unscale_one(j, y[j]))
    }

    /// Row-wise [`Scaler::apply`] over an N x 8 matrix.
    pub fn apply_matrix(&self, x: &DMatrix<T>) -> Result<DMatrix<T>> {
        if x.ncols() != FEATURE_COUNT {
            return Err(Error::Shape(format!(
                "scaler expects {FEATURE_COUNT} feature columns, got {}",
                x.ncols()
            )));
        }
        Ok(DMatrix::from_fn(x.nrows(), FEATURE_COUNT, |i, j| {
            self.scale_one(j, x[(i, j)])
        }))
    }
}

/// Fits a `[-1, 1]` min-max scaler on the training dataset's raw features.
pub fn fit_scaler<T: Scalar>(train: &Dataset<T>) -> Scaler<T> {
    Scaler::fit(&train.features_matrix()).expect("dataset is nonempty with 8 features")
}

// ---------------------------------------------------------------------------
// CSV ingestion and emission
// ---------------------------------------------------------------------------

/// Loader behavior switches.
#[derive(Debug, Clone, Copy, Default)]
pub struct CsvOptions {
    /// Accept gas-phase mole fractions in the 0-99.99 percent convention and
    /// divide them by 100 on load. The solubility column is always a fraction.
    pub percent_fractions: bool,
    /// Accept `cation_molality,cation_charge,anion_molality,anion_charge`
    /// columns in place of `ionic_strength`; ionic strength is then computed
    /// at load time.
    pub ion_columns: bool,
}

struct HeaderMap {
    indices: Vec<usize>,
}

impl HeaderMap {
    fn build(header: &csv::StringRecord, columns: &[&str]) -> Result<Self> {
        let mut indices = Vec::with_capacity(columns.len());
        for &name in columns {
            let pos = header
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::MissingColumn {
                    column: name.to_string(),
                })?;
            indices.push(pos);
        }
        Ok(HeaderMap { indices })
    }

    fn get<'r>(&self, record: &'r csv::StringRecord, slot: usize) -> &'r str {
        record.get(self.indices[slot]).unwrap_or("").trim()
    }
}

fn parse_cell<T: Scalar>(cell: &str, row: usize, column: &str) -> Result<T> {
    cell.parse::<T>().map_err(|_| Error::CellParse {
        row,
        column: column.to_string(),
        value: cell.to_string(),
    })
}

fn parse_i32(cell: &str, row: usize, column: &str) -> Result<i32> {
    cell.parse::<i32>().map_err(|_| Error::CellParse {
        row,
        column: column.to_string(),
        value: cell.to_string(),
    })
}

/// Reads the documented CSV schema from any reader. `provenance` labels the
/// resulting dataset.
pub fn read_csv<T: Scalar, R: Read>(
    reader: R,
    options: &CsvOptions,
    provenance: Provenance,
) -> Result<Dataset<T>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers()?.clone();

    let ion_names = [
        "cation_molality",
        "cation_charge",
        "anion_molality",
        "anion_charge",
    ];
    let mut columns: Vec<&str> = vec!["c1", "c2", "c3", "c4"];
    if options.ion_columns {
        columns.extend(ion_names);
    } else {
        columns.push("ionic_strength");
    }
    columns.extend(["pressure_mpa", "temperature_c", "idx", "solubility"]);
    let map = HeaderMap::build(&header, &columns)?;

    let mut records = Vec::new();
    for (line, result) in rdr.records().enumerate() {
        let row = line + 1;
        let raw = result?;
        let mut slot = 0;
        let mut take = |name: &str| -> &str {
            let v = map.get(&raw, slot);
            debug_assert_eq!(columns[slot], name);
            slot += 1;
            v
        };

        let mut c = [T::zero(); 4];
        for (k, item) in c.iter_mut().enumerate() {
            *item = parse_cell(take(FEATURE_NAMES[k]), row, FEATURE_NAMES[k])?;
        }
        if options.percent_fractions {
            let hundred = from_f64::<T>(100.0);
            for item in c.iter_mut() {
                *item /= hundred;
            }
        }

        let ionic = if options.ion_columns {
            let cat_m: T = parse_cell(take("cation_molality"), row, "cation_molality")?;
            let cat_z = parse_i32(take("cation_charge"), row, "cation_charge")?;
            let an_m: T = parse_cell(take("anion_molality"), row, "anion_molality")?;
            let an_z = parse_i32(take("anion_charge"), row, "anion_charge")?;
            let ions = [
                IonSpec::new(cat_m, cat_z),
                IonSpec::new(an_m, an_z),
            ];
            let ions: Vec<_> = ions
                .into_iter()
                .collect::<Result<_>>()
                .map_err(|e| Error::RowValidation {
                    row,
                    message: e.to_string(),
                })?;
            ionic_strength(&ions).map_err(|e| Error::RowValidation {
                row,
                message: e.to_string(),
            })?
        } else {
            parse_cell(take("ionic_strength"), row, "ionic_strength")?
        };

        let pressure: T = parse_cell(take("pressure_mpa"), row, "pressure_mpa")?;
        let temperature: T = parse_cell(take("temperature_c"), row, "temperature_c")?;
        let idx_cell = take("idx");
        let idx_raw = parse_i32(idx_cell, row, "idx")?;
        let solubility: T = parse_cell(take("solubility"), row, "solubility")?;

        if !(1..=4).contains(&idx_raw) {
            return Err(Error::RowValidation {
                row,
                message: format!("idx = {idx_raw} must be one of 1, 2, 3, 4"),
            });
        }

        let record = SolubilityRecord {
            c1: c[0],
            c2: c[1],
            c3: c[2],
            c4: c[3],
            ionic_strength: ionic,
            pressure_mpa: pressure,
            temperature_c: temperature,
            idx: idx_raw as u8,
            solubility,
        };
        record.validate().map_err(|e| Error::RowValidation {
            row,
            message: e.to_string(),
        })?;
        records.push(record);
    }

    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(Dataset {
        records,
        provenance,
    })
}

/// Loads the documented CSV schema from a file with default options.
pub fn load_csv<T: Scalar>(path: impl AsRef<Path>) -> Result<Dataset<T>> {
    load_csv_with(path, &CsvOptions::default())
}

/// Loads the documented CSV schema from a file.
pub fn load_csv_with<T: Scalar>(path: impl AsRef<Path>, options: &CsvOptions) -> Result<Dataset<T>> {
    let path = path.as_ref();
    let file = File::open(path)?;
    read_csv(
        file,
        options,
        Provenance::File(path.display().to_string()),
    )
}

/// Writes a dataset in the documented CSV schema. Numbers use the shortest
/// decimal form that parses back to the identical value, so write-then-load
/// reproduces every record exactly.
pub fn write_csv_to<T: Scalar, W: Write>(dataset: &Dataset<T>, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(CSV_HEADER)?;
    for r in dataset.records() {
        wtr.write_record([
            r.c1.to_string(),
            r.c2.to_string(),
            r.c3.to_string(),
            r.c4.to_string(),
            r.ionic_strength.to_string(),
            r.pressure_mpa.to_string(),
            r.temperature_c.to_string(),
            r.idx.to_string(),
            r.solubility.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes a dataset as CSV to a file.
pub fn write_csv<T: Scalar>(dataset: &Dataset<T>, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path)?;
    write_csv_to(dataset, file)
}

/// Reads a feature-only CSV (the full schema minus `solubility`), returning
/// the N x 8 raw feature matrix in file order. Used by prediction, where no
/// measured target exists. N may be zero (header-only file).
pub fn read_features_csv<T: Scalar, R: Read>(
    reader: R,
    options: &CsvOptions,
) -> Result<DMatrix<T>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers()?.clone();

    let mut columns: Vec<&str> = vec!["c1", "c2", "c3", "c4"];
    if options.ion_columns {
        columns.extend([
            "cation_molality",
            "cation_charge",
            "anion_molality",
            "anion_charge",
        ]);
    } else {
        columns.push("ionic_strength");
    }
    columns.extend(["pressure_mpa", "temperature_c", "idx"]);
    let map = HeaderMap::build(&header, &columns)?;

    let mut rows: Vec<[T; FEATURE_COUNT]> = Vec::new();
    for (line, result) in rdr.records().enumerate() {
        let row = line + 1;
        let raw = result?;
        let mut slot = 0;
        let mut take = || {
            let v = map.get(&raw, slot);
            slot += 1;
            (v, columns[slot - 1])
        };

        let mut c = [T::zero(); 4];
        for item in c.iter_mut() {
            let (cell, name) = take();
            *item = parse_cell(cell, row, name)?;
        }
        if options.percent_fractions {
            let hundred = from_f64::<T>(100.0);
            for item in c.iter_mut() {
                *item /= hundred;
            }
        }
        let ionic = if options.ion_columns {
            let (m1, n1) = take();
            let cat_m: T = parse_cell(m1, row, n1)?;
            let (z1, n2) = take();
            let cat_z = parse_i32(z1, row, n2)?;
            let (m2, n3) = take();
            let an_m: T = parse_cell(m2, row, n3)?;
            let (z2, n4) = take();
            let an_z = parse_i32(z2, row, n4)?;
            let ions = vec![
                IonSpec::new(cat_m, cat_z).map_err(|e| Error::RowValidation {
                    row,
                    message: e.to_string(),
                })?,
                IonSpec::new(an_m, an_z).map_err(|e| Error::RowValidation {
                    row,
                    message: e.to_string(),
                })?,
            ];
            ionic_strength(&ions).map_err(|e| Error::RowValidation {
                row,
                message: e.to_string(),
            })?
        } else {
            let (cell, name) = take();
            parse_cell(cell, row, name)?
        };
        let (p_cell, p_name) = take();
        let pressure: T = parse_cell(p_cell, row, p_name)?;
        let (t_cell, t_name) = take();
        let temperature: T = parse_cell(t_cell, row, t_name)?;
        let (i_cell, i_name) = take();
        let idx_raw = parse_i32(i_cell, row, i_name)?;
        if !(1..=4).contains(&idx_raw) {
            return Err(Error::RowValidation {
                row,
                message: format!("idx = {idx_raw} must be one of 1, 2, 3, 4"),
            });
        }

        rows.push([
            c[0],
            c[1],
            c[2],
            c[3],
            ionic,
            pressure,
            temperature,
            from_f64(f64::from(idx_raw)),
        ]);
    }

    Ok(DMatrix::from_fn(rows.len(), FEATURE_COUNT, |i, j| rows[i][j]))
}
