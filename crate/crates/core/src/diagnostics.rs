//! Applicability-domain and sensitivity diagnostics.
//!
//! The leverage method projects each point onto the column space of the
//! design matrix `U` through the hat matrix `H = U (U^T U)^-1 U^T` and reads
//! each point's influence off the diagonal. Points beyond the critical
//! leverage `H* = 3(p + 1) / n`, or with standardized residuals outside
//! `[-3, 3]`, fall outside the model's reliable zone; the flags of a
//! [`LeverageReport`] are the plot-ready classification behind a Williams
//! plot.
//!
//! Sensitivity uses the relevancy factor (Pearson correlation) between each
//! raw input column and the measured solubility.

use std::fmt;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde_json::json;

use crate::dataset::{Dataset, FEATURE_COUNT, FEATURE_NAMES};
use crate::error::{Error, Result};
use crate::scalar::{from_f64, machine_epsilon, Scalar};

/// Thin-SVD factor of a design matrix with its numerical rank cutoff
/// already applied. Rank-deficient inputs are rejected.
fn orthonormal_basis<T: Scalar>(u: &DMatrix<T>) -> Result<DMatrix<T>> {
    let (n, p) = (u.nrows(), u.ncols());
    if n < p {
        return Err(Error::Shape(format!(
            "design matrix has {n} rows for {p} columns; need n >= p"
        )));
    }
    let svd = u.clone().svd(true, false);
    let sigma_max = svd
        .singular_values
        .iter()
        .fold(T::zero(), |m, &s| m.max(s));
    let cutoff = machine_epsilon::<T>() * from_f64::<T>(n.max(p) as f64) * sigma_max;
    let kept: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > cutoff)
        .collect();
    if kept.len() < p {
        return Err(Error::RankDeficient {
            rank: kept.len(),
            cols: p,
        });
    }
    let q = svd.u.expect("svd computed with u");
    Ok(q.select_columns(&kept))
}

/// Hat matrix `H = U (U^T U)^-1 U^T`, computed from an orthonormal basis of
/// the column space (never by inverting `U^T U` explicitly). Symmetric and
/// idempotent for full-column-rank `U`.
pub fn hat_matrix<T: Scalar>(u: &DMatrix<T>) -> Result<DMatrix<T>> {
    let q = orthonormal_basis(u)?;
    Ok(&q * q.transpose())
}

/// Diagonal of the hat matrix without materializing the N x N projection:
/// the squared row norms of the orthonormal factor. Entries lie in `[0, 1]`
/// and sum to the rank `p`.
pub fn hat_diagonal<T: Scalar>(u: &DMatrix<T>) -> Result<DVector<T>> {
    let q = orthonormal_basis(u)?;
    Ok(DVector::from_fn(q.nrows(), |i, _| {
        q.row(i).iter().fold(T::zero(), |s, &v| s + v * v)
    }))
}

/// Critical leverage limit `H* = 3(p + 1) / n` for `p` model parameters and
/// `n` points.
pub fn critical_leverage<T: Scalar>(p: usize, n: usize) -> Result<T> {
    if p == 0 {
        return Err(Error::InvalidInput(
            "parameter count p must be >= 1".to_string(),
        ));
    }
    if n == 0 {
        return Err(Error::InvalidInput("point count n must be > 0".to_string()));
    }
    Ok(from_f64::<T>(3.0) * from_f64::<T>((p + 1) as f64) / from_f64::<T>(n as f64))
}

/// Residuals centered and scaled to unit sample standard deviation
/// (denominator `N - 1`): `(e_i - mean(e)) / std(e)` with `e = actual - predicted`.
pub fn standardized_residuals<T: Scalar>(actual: &[T], predicted: &[T]) -> Result<DVector<T>> {
    if actual.len() != predicted.len() {
        return Err(Error::Shape(format!(
            "actual has {} entries, predicted has {}",
            actual.len(),
            predicted.len()
        )));
    }
    let n = actual.len();
    if n < 2 {
        return Err(Error::InvalidInput(
            "standardized residuals need at least 2 points".to_string(),
        ));
    }
    let e: Vec<T> = actual.iter().zip(predicted).map(|(&a, &p)| a - p).collect();
    let n_t = from_f64::<T>(n as f64);
    let mean = e.iter().fold(T::zero(), |s, &v| s + v) / n_t;
    let ss = e.iter().fold(T::zero(), |s, &v| {
        let d = v - mean;
        s + d * d
    });
    if ss == T::zero() {
        return Err(Error::Degenerate(
            "residuals are all identical; standardized residuals are undefined \
             (perfect or constant-offset predictions)"
                .to_string(),
        ));
    }
    let std = (ss / from_f64::<T>((n - 1) as f64)).sqrt();
    Ok(DVector::from_iterator(n, e.iter().map(|&v| (v - mean) / std)))
}

/// Classification of one point in the Williams plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointFlag {
    /// Inside the reliable zone: leverage at most `H*` and residual within bounds.
    Valid,
    /// Residual outside the `[-3, 3]` band at acceptable leverage.
    Outlier,
    /// Leverage above `H*`: structurally outside the applicability domain,
    /// whatever its residual.
    HighLeverage,
}

impl fmt::Display for PointFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PointFlag::Valid => "valid",
            PointFlag::Outlier => "outlier",
            PointFlag::HighLeverage => "high_leverage",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for PointFlag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "valid" => Ok(PointFlag::Valid),
            "outlier" => Ok(PointFlag::Outlier),
            "high_leverage" => Ok(PointFlag::HighLeverage),
            other => Err(Error::InvalidInput(format!("unknown point flag `{other}`"))),
        }
    }
}

/// Per-point leverage diagnostics: everything needed to draw a Williams plot.
#[derive(Debug, Clone, PartialEq)]
pub struct LeverageReport<T> {
    pub hat_diagonal: Vec<T>,
    pub std_residuals: Vec<T>,
    pub critical_leverage: T,
    pub residual_bounds: (T, T),
    pub flags: Vec<PointFlag>,
}

impl<T: Scalar> LeverageReport<T> {
    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn count(&self, flag: PointFlag) -> usize {
        self.flags.iter().filter(|&&f| f == flag).count()
    }

    pub fn fraction_valid(&self) -> f64 {
        self.count(PointFlag::Valid) as f64 / self.flags.len() as f64
    }

    /// Plot data rows: `index,hat,std_residual,flag` with 0-based indices.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["index", "hat", "std_residual", "flag"])?;
        for i in 0..self.flags.len() {
            wtr.write_record([
                i.to_string(),
                self.hat_diagonal[i].to_string(),
                self.std_residuals[i].to_string(),
                self.flags[i].to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Plot header: the critical limit, residual bounds and flag counts.
    pub fn metadata_json(&self) -> serde_json::Value {
        json!({
            "n": self.flags.len(),
            "critical_leverage": self.critical_leverage.to_f64(),
            "residual_bounds": [
                self.residual_bounds.0.to_f64(),
                self.residual_bounds.1.to_f64(),
            ],
            "valid": self.count(PointFlag::Valid),
            "outlier": self.count(PointFlag::Outlier),
            "high_leverage": self.count(PointFlag::HighLeverage),
        })
    }
}

/// One parsed row of the leverage CSV emitted by [`LeverageReport::write_csv`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilliamsRow<T> {
    pub index: usize,
    pub hat: T,
    pub std_residual: T,
    pub flag: PointFlag,
}

/// Parses the leverage plot CSV back into rows.
pub fn read_williams_csv<T: Scalar, R: std::io::Read>(reader: R) -> Result<Vec<WilliamsRow<T>>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let row = line + 1;
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or("").trim().to_string();
        let num = |cell: String, what: &str| -> Result<T> {
            cell.parse::<T>().map_err(|_| Error::CellParse {
                row,
                column: what.to_string(),
                value: cell,
            })
        };
        rows.push(WilliamsRow {
            index: field(0).parse().map_err(|_| Error::CellParse {
                row,
                column: "index".to_string(),
                value: field(0),
            })?,
            hat: num(field(1), "hat")?,
            std_residual: num(field(2), "std_residual")?,
            flag: field(3).parse()?,
        });
    }
    Ok(rows)
}

/// Parses the sensitivity CSV emitted by [`SensitivityReport::write_csv`];
/// a `nan` value reads back as an undefined factor.
pub fn read_sensitivity_csv<T: Scalar, R: std::io::Read>(
    reader: R,
) -> Result<Vec<(String, Option<T>)>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let row = line + 1;
        let record = record?;
        let name = record.get(0).unwrap_or("").trim().to_string();
        let cell = record.get(1).unwrap_or("").trim().to_string();
        let value = if cell == "nan" {
            None
        } else {
            Some(cell.parse::<T>().map_err(|_| Error::CellParse {
                row,
                column: "r".to_string(),
                value: cell,
            })?)
        };
        rows.push((name, value));
    }
    Ok(rows)
}

/// Options for [`williams_report_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct WilliamsOptions {
    /// Augment the design matrix with a constant column. Off by default;
    /// changes the leverage values and raises the parameter count by one.
    pub add_intercept: bool,
}

/// Leverage diagnostics over a scaled design matrix and a prediction pair,
/// with default options.
pub fn williams_report<T: Scalar>(
    x_scaled: &DMatrix<T>,
    actual: &[T],
    predicted: &[T],
) -> Result<LeverageReport<T>> {
    williams_report_with(x_scaled, actual, predicted, &WilliamsOptions::default())
}

/// Leverage diagnostics over a scaled design matrix and a prediction pair.
///
/// A point is `valid` exactly when its leverage is at most `H*` and its
/// standardized residual lies in `[-3, 3]`. Points above `H*` are flagged
/// `high_leverage` regardless of residual; the remaining out-of-band points
/// are `outlier`.
pub fn williams_report_with<T: Scalar>(
    x_scaled: &DMatrix<T>,
    actual: &[T],
    predicted: &[T],
    options: &WilliamsOptions,
) -> Result<LeverageReport<T>> {
    let n = x_scaled.nrows();
    if actual.len() != n || predicted.len() != n {
        return Err(Error::Shape(format!(
            "design has {n} rows but actual/predicted have {}/{}",
            actual.len(),
            predicted.len()
        )));
    }

    let design = if options.add_intercept {
        let mut d = DMatrix::from_element(n, x_scaled.ncols() + 1, T::one());
        d.view_mut((0, 1), (n, x_scaled.ncols())).copy_from(x_scaled);
        d
    } else {
        x_scaled.clone()
    };
    let p = design.ncols();

    let hat = hat_diagonal(&design)?;
    let residuals = standardized_residuals(actual, predicted)?;
    let h_star = critical_leverage::<T>(p, n)?;
    let bound = from_f64::<T>(3.0);

    let flags: Vec<PointFlag> = (0..n)
        .map(|i| {
            if hat[i] > h_star {
                PointFlag::HighLeverage
            } else if residuals[i].abs() > bound {
                PointFlag::Outlier
            } else {
                PointFlag::Valid
            }
        })
        .collect();

    Ok(LeverageReport {
        hat_diagonal: hat.iter().copied().collect(),
        std_residuals: residuals.iter().copied().collect(),
        critical_leverage: h_star,
        residual_bounds: (-bound, bound),
        flags,
    })
}

/// Relevancy factor: the Pearson correlation between one input column and
/// the target, in `[-1, 1]`.
pub fn relevancy_factor<T: Scalar>(x: &[T], y: &[T]) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!(
            "x has {} entries, y has {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::InvalidInput(
            "relevancy factor needs at least 2 points".to_string(),
        ));
    }
    // All-equal checks are exact; the mean of a constant vector rounds.
    if x.iter().all(|&v| v == x[0]) {
        return Err(Error::Degenerate("x is constant".to_string()));
    }
    if y.iter().all(|&v| v == y[0]) {
        return Err(Error::Degenerate("y is constant".to_string()));
    }
    let n_t = from_f64::<T>(n as f64);
    let mean_x = x.iter().fold(T::zero(), |s, &v| s + v) / n_t;
    let mean_y = y.iter().fold(T::zero(), |s, &v| s + v) / n_t;
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    let mut syy = T::zero();
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mean_x;
        let dy = yi - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == T::zero() {
        return Err(Error::Degenerate("x is constant".to_string()));
    }
    if syy == T::zero() {
        return Err(Error::Degenerate("y is constant".to_string()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Relevancy factors of all eight raw inputs against the measured
/// solubility, keyed by feature name. A constant input column is reported as
/// `None` (undefined) instead of failing the whole report.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport<T> {
    pub factors: Vec<(&'static str, Option<T>)>,
}

impl<T: Scalar> SensitivityReport<T> {
    /// The factor for a named feature, if defined.
    pub fn factor(&self, feature: &str) -> Option<T> {
        self.factors
            .iter()
            .find(|(name, _)| *name == feature)
            .and_then(|(_, r)| *r)
    }

    /// Plot data rows: `feature,r`; an undefined factor prints `nan`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["feature", "r"])?;
        for (name, r) in &self.factors {
            let value = match r {
                Some(v) => v.to_string(),
                None => "nan".to_string(),
            };
            wtr.write_record([(*name).to_string(), value])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Computes the relevancy factor of each raw feature column against
/// solubility. Fails only if the target itself is constant.
pub fn sensitivity_report<T: Scalar>(data: &Dataset<T>) -> Result<SensitivityReport<T>> {
    if data.len() < 2 {
        return Err(Error::InvalidInput(
            "sensitivity analysis needs at least 2 records".to_string(),
        ));
    }
    let y = data.targets();
    let y_slice = y.as_slice();
    let mut factors = Vec::with_capacity(FEATURE_COUNT);
    for (k, name) in FEATURE_NAMES.iter().enumerate() {
        let col = data.feature_column(k);
        match relevancy_factor(col.as_slice(), y_slice) {
            Ok(r) => factors.push((*name, Some(r))),
            Err(Error::Degenerate(msg)) if msg.starts_with("x is") => {
                factors.push((*name, None));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(SensitivityReport { factors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Provenance, SolubilityRecord};
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn random_matrix(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, p, |_, _| rng.random::<f64>() * 2.0 - 1.0)
    }

    #[test]
    fn hat_of_identity_design_is_identity() {
        let u = DMatrix::<f64>::identity(4, 4);
        let h = hat_matrix(&u).unwrap();
        assert!((h - DMatrix::<f64>::identity(4, 4)).amax() < 1e-14);
    }

    #[test]
    fn hat_of_ones_column_is_uniform() {
        let u = DMatrix::<f64>::from_element(5, 1, 1.0);
        let h = hat_matrix(&u).unwrap();
        for v in h.iter() {
            assert!((v - 0.2).abs() < 1e-14);
        }
    }

    #[test]
    fn hat_is_symmetric_and_idempotent() {
        let u = random_matrix(6, 2, 1);
        let h = hat_matrix(&u).unwrap();
        assert!((&h - h.transpose()).amax() <= 1e-12);
        assert!((&h * &h - &h).amax() <= 1e-10);
    }

    #[test]
    fn hat_rejects_rank_deficient_design() {
        let mut u = random_matrix(6, 3, 2);
        let dup = DVector::from_iterator(6, u.column(0).iter().copied());
        u.set_column(2, &dup); // duplicate column drops the rank to 2
        match hat_matrix(&u) {
            Err(Error::RankDeficient { rank: 2, cols: 3 }) => {}
            other => panic!("expected rank error, got {other:?}"),
        }
    }

    #[test]
    fn hat_diagonal_ones_column() {
        let u = DMatrix::<f64>::from_element(4, 1, 1.0);
        let d = hat_diagonal(&u).unwrap();
        for v in d.iter() {
            assert!((v - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn hat_diagonal_identity_design() {
        let u = DMatrix::<f64>::identity(3, 3);
        let d = hat_diagonal(&u).unwrap();
        assert!(d.iter().all(|&v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn hat_diagonal_sums_to_rank() {
        let u = random_matrix(40, 5, 3);
        let d = hat_diagonal(&u).unwrap();
        let sum: f64 = d.iter().sum();
        assert!((sum - 5.0).abs() <= 1e-8);
        assert!(d.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn critical_leverage_hand_values() {
        let full: f64 = critical_leverage(8, 1175).unwrap();
        assert!((full - 27.0 / 1175.0).abs() < 1e-12);
        let train: f64 = critical_leverage(8, 881).unwrap();
        assert!((train - 27.0 / 881.0).abs() < 1e-12);
        let tiny: f64 = critical_leverage(1, 3).unwrap();
        assert_eq!(tiny, 2.0);
    }

    #[test]
    fn critical_leverage_rejects_zero_parameters() {
        assert!(critical_leverage::<f64>(0, 10).is_err());
        assert!(critical_leverage::<f64>(8, 0).is_err());
    }

    #[test]
    fn standardized_residuals_two_point_case() {
        // residuals [-1, 1]: mean 0, sample std sqrt(2)
        let r = standardized_residuals(&[0.0, 2.0], &[1.0, 1.0]).unwrap();
        assert!((r[0] + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((r[1] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn standardized_residuals_center_and_scale() {
        let actual: Vec<f64> = (0..20).map(|i| (i as f64).sin() + 2.0).collect();
        let predicted: Vec<f64> = (0..20).map(|i| (i as f64 * 0.7).cos()).collect();
        let r = standardized_residuals(&actual, &predicted).unwrap();
        let mean: f64 = r.iter().sum::<f64>() / 20.0;
        let var: f64 = r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 19.0;
        assert!(mean.abs() <= 1e-12);
        assert!((var.sqrt() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn standardized_residuals_reject_zero_variance() {
        assert!(matches!(
            standardized_residuals(&[1.0, 2.0], &[1.0, 2.0]),
            Err(Error::Degenerate(_))
        ));
        // identical nonzero residuals are degenerate too
        assert!(matches!(
            standardized_residuals(&[2.0, 3.0], &[1.0, 2.0]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn williams_flags_match_their_definition() {
        let x = random_matrix(60, 8, 4);
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let actual: Vec<f64> = (0..60).map(|_| rng.random::<f64>()).collect();
        let mut predicted = actual.clone();
        for p in predicted.iter_mut() {
            *p += 0.01 * (rng.random::<f64>() - 0.5);
        }
        predicted[10] += 1.0; // force one residual outlier
        let report = williams_report(&x, &actual, &predicted).unwrap();
        for i in 0..report.len() {
            let expect_valid = report.hat_diagonal[i] <= report.critical_leverage
                && report.std_residuals[i].abs() <= 3.0;
            assert_eq!(report.flags[i] == PointFlag::Valid, expect_valid, "point {i}");
            if report.hat_diagonal[i] > report.critical_leverage {
                assert_eq!(report.flags[i], PointFlag::HighLeverage);
            }
        }
        assert!(report.count(PointFlag::Outlier) >= 1);
    }

    #[test]
    fn williams_far_point_has_high_leverage() {
        let mut x = random_matrix(50, 8, 6);
        for j in 0..8 {
            x[(49, j)] = 10.0; // 10x the feature cloud
        }
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let actual: Vec<f64> = (0..50).map(|_| rng.random::<f64>()).collect();
        let predicted: Vec<f64> = actual.iter().map(|a| a + 0.01 * rng.random::<f64>()).collect();
        let report = williams_report(&x, &actual, &predicted).unwrap();
        assert!(report.hat_diagonal[49] > report.critical_leverage);
        assert_eq!(report.flags[49], PointFlag::HighLeverage);
    }

    #[test]
    fn williams_rejects_perfect_predictions() {
        let x = random_matrix(10, 8, 8);
        let actual: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!(matches!(
            williams_report(&x, &actual, &actual.clone()),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn williams_intercept_option_raises_parameter_count() {
        let x = random_matrix(40, 8, 9);
        let mut rng = ChaCha20Rng::seed_from_u64(10);
        let actual: Vec<f64> = (0..40).map(|_| rng.random::<f64>()).collect();
        let predicted: Vec<f64> = actual.iter().map(|a| a + 0.1 * rng.random::<f64>()).collect();
        let plain = williams_report(&x, &actual, &predicted).unwrap();
        let augmented = williams_report_with(
            &x,
            &actual,
            &predicted,
            &WilliamsOptions { add_intercept: true },
        )
        .unwrap();
        assert!((plain.critical_leverage - 27.0 / 40.0).abs() < 1e-12);
        assert!((augmented.critical_leverage - 30.0 / 40.0).abs() < 1e-12);
        let sum: f64 = augmented.hat_diagonal.iter().sum();
        assert!((sum - 9.0).abs() < 1e-8);
    }

    #[test]
    fn relevancy_factor_exact_cases() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 3.0).collect();
        assert!((relevancy_factor(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((relevancy_factor(&x, &neg).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn relevancy_factor_hand_case() {
        // cov = 1, sxx = 2, syy = 2/3 -> r = sqrt(3)/2
        let r: f64 = relevancy_factor(&[1.0, 2.0, 3.0], &[1.0, 2.0, 2.0]).unwrap();
        assert!((r - 0.8660254037844387).abs() < 1e-12);
    }

    #[test]
    fn relevancy_factor_rejects_constant_input() {
        assert!(matches!(
            relevancy_factor(&[1.0, 1.0], &[1.0, 2.0]),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            relevancy_factor(&[1.0, 2.0], &[5.0, 5.0]),
            Err(Error::Degenerate(_))
        ));
    }

    fn sensitivity_records(constant_c2: bool) -> Dataset<f64> {
        let mut rng = ChaCha20Rng::seed_from_u64(20);
        let records: Vec<SolubilityRecord<f64>> = (0..30)
            .map(|_| {
                let p = 0.35 + 0.6 * rng.random::<f64>();
                SolubilityRecord {
                    c1: 0.3 + 0.4 * rng.random::<f64>(),
                    c2: if constant_c2 { 0.1 } else { 0.05 + 0.1 * rng.random::<f64>() },
                    c3: 0.05 * rng.random::<f64>(),
                    c4: 0.05 * rng.random::<f64>(),
                    ionic_strength: 2.0 * rng.random::<f64>(),
                    pressure_mpa: p,
                    temperature_c: 20.0 + 100.0 * rng.random::<f64>(),
                    idx: 1 + (rng.random::<f64>() * 4.0) as u8,
                    solubility: p, // target equals pressure
                }
            })
            .collect();
        Dataset::new(records, Provenance::Memory).unwrap()
    }

    #[test]
    fn sensitivity_detects_pressure_identity() {
        let report = sensitivity_report(&sensitivity_records(false)).unwrap();
        let r_p = report.factor("pressure_mpa").unwrap();
        assert!((r_p - 1.0).abs() < 1e-12);
        assert_eq!(report.factors.len(), FEATURE_COUNT);
    }

    #[test]
    fn sensitivity_flags_constant_column_as_undefined() {
        let report = sensitivity_report(&sensitivity_records(true)).unwrap();
        let c2 = report
            .factors
            .iter()
            .find(|(name, _)| *name == "c2")
            .unwrap();
        assert!(c2.1.is_none());
        assert!(report.factor("pressure_mpa").is_some());
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("c2,nan"));
        assert_eq!(text.lines().count(), 9);
    }

    #[test]
    fn leverage_report_csv_and_metadata() {
        let x = random_matrix(30, 8, 30);
        let mut rng = ChaCha20Rng::seed_from_u64(31);
        let actual: Vec<f64> = (0..30).map(|_| rng.random::<f64>()).collect();
        let predicted: Vec<f64> = actual.iter().map(|a| a + 0.05 * rng.random::<f64>()).collect();
        let report = williams_report(&x, &actual, &predicted).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("index,hat,std_residual,flag\n"));
        assert_eq!(text.lines().count(), 31);
        let meta = report.metadata_json();
        assert_eq!(meta["n"], 30);
        assert_eq!(
            meta["valid"].as_u64().unwrap()
                + meta["outlier"].as_u64().unwrap()
                + meta["high_leverage"].as_u64().unwrap(),
            30
        );

        // the emitted rows parse back exactly
        let rows: Vec<WilliamsRow<f64>> = read_williams_csv(buf.as_slice()).unwrap();
        assert_eq!(rows.len(), 30);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.index, i);
            assert_eq!(row.hat, report.hat_diagonal[i]);
            assert_eq!(row.std_residual, report.std_residuals[i]);
            assert_eq!(row.flag, report.flags[i]);
        }
    }

    #[test]
    fn sensitivity_csv_round_trips() {
        let report = sensitivity_report(&sensitivity_records(true)).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let rows: Vec<(String, Option<f64>)> = read_sensitivity_csv(buf.as_slice()).unwrap();
        assert_eq!(rows.len(), report.factors.len());
        for ((name, value), (expected_name, expected)) in rows.iter().zip(&report.factors) {
            assert_eq!(name, expected_name);
            assert_eq!(value, expected);
        }
    }
}
