//! Statistical evaluation measures: MRE, MSE, RMSE and R^2.

use serde_json::json;

use crate::error::{Error, Result};
use crate::scalar::{from_f64, Scalar};

fn check_lengths<T>(actual: &[T], predicted: &[T]) -> Result<()> {
    if actual.len() != predicted.len() {
        return Err(Error::Shape(format!(
            "actual has {} entries, predicted has {}",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::InvalidInput("metric over empty vectors".to_string()));
    }
    Ok(())
}

/// Mean relative error in percent, using absolute relative deviations:
/// `100/N * sum(|a_i - p_i| / |a_i|)`.
///
/// The signed variant (no absolute value on the deviation) is
/// [`mre_signed`]; per-point signed deviations for distribution plots are
/// [`relative_deviations`].
pub fn mre<T: Scalar>(actual: &[T], predicted: &[T]) -> Result<T> {
    check_lengths(actual, predicted)?;
    let mut sum = T::zero();
    for (i, (&a, &p)) in actual.iter().zip(predicted).enumerate() {
        if a == T::zero() {
            return Err(Error::DivisionByZero { index: i });
        }
        sum += ((a - p) / a).abs();
    }
    Ok(sum * from_f64::<T>(100.0) / from_f64(actual.len() as f64))
}

/// Signed mean relative error in percent: `100/N * sum((a_i - p_i) / a_i)`.
pub fn mre_signed<T: Scalar>(actual: &[T], predicted: &[T]) -> Result<T> {
    check_lengths(actual, predicted)?;
    let mut sum = T::zero();
    for (i, (&a, &p)) in actual.iter().zip(predicted).enumerate() {
        if a == T::zero() {
            return Err(Error::DivisionByZero { index: i });
        }
        sum += (a - p) / a;
    }
    Ok(sum * from_f64::<T>(100.0) / from_f64(actual.len() as f64))
}

/// Per-point signed relative deviations in percent: `100 * (a_i - p_i) / a_i`.
pub fn relative_deviations<T: Scalar>(actual: &[T], predicted: &[T]) -> Result<Vec<T>> {
    check_lengths(actual, predicted)?;
    let hundred = from_f64::<T>(100.0);
    actual
        .iter()
        .zip(predicted)
        .enumerate()
        .map(|(i, (&a, &p))| {
            if a == T::zero() {
                Err(Error::DivisionByZero { index: i })
            } else {
                Ok(hundred * (a - p) / a)
            }
        })
        .collect()
}

/// Mean squared error `1/N * sum((a_i - p_i)^2)`.
pub fn mse<T: Scalar>(actual: &[T], predicted: &[T]) -> Result<T> {
    check_lengths(actual, predicted)?;
    let mut sum = T::zero();
    for (&a, &p) in actual.iter().zip(predicted) {
        let d = a - p;
        sum += d * d;
    }
    Ok(sum / from_f64(actual.len() as f64))
}

/// Root mean squared error, `sqrt(mse)`.
pub fn rmse<T: Scalar>(actual: &[T], predicted: &[T]) -> Result<T> {
    Ok(mse(actual, predicted)?.sqrt())
}

/// Coefficient of determination `1 - sum((a - p)^2) / sum((a - mean(a))^2)`.
///
/// The denominator is the deviation of the actual values from their own
/// mean (the standard definition); a constant actual vector is rejected.
pub fn r_squared<T: Scalar>(actual: &[T], predicted: &[T]) -> Result<T> {
    check_lengths(actual, predicted)?;
    if actual.len() < 2 {
        return Err(Error::InvalidInput(
            "r_squared needs at least 2 points".to_string(),
        ));
    }
    let n = from_f64::<T>(actual.len() as f64);
    let mean = actual.iter().fold(T::zero(), |s, &a| s + a) / n;
    let mut ss_res = T::zero();
    let mut ss_tot = T::zero();
    for (&a, &p) in actual.iter().zip(predicted) {
        let r = a - p;
        ss_res += r * r;
        let d = a - mean;
        ss_tot += d * d;
    }
    if ss_tot == T::zero() {
        return Err(Error::ZeroVariance);
    }
    Ok(T::one() - ss_res / ss_tot)
}

/// The four headline statistics over one set of predictions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport<T> {
    pub r2: T,
    pub mre_percent: T,
    pub mse: T,
    pub rmse: T,
    pub n: usize,
}

impl<T: Scalar> EvalReport<T> {
    /// JSON form with `f64` numbers, for report files.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "n": self.n,
            "r2": self.r2.to_f64(),
            "mre_percent": self.mre_percent.to_f64(),
            "mse": self.mse.to_f64(),
            "rmse": self.rmse.to_f64(),
        })
    }
}

/// Computes all four measures at once.
pub fn evaluate<T: Scalar>(actual: &[T], predicted: &[T]) -> Result<EvalReport<T>> {
    Ok(EvalReport {
        r2: r_squared(actual, predicted)?,
        mre_percent: mre(actual, predicted)?,
        mse: mse(actual, predicted)?,
        rmse: rmse(actual, predicted)?,
        n: actual.len(),
    })
}

/// Fixed-width table over named reports, one row per dataset.
pub fn report_table<T: Scalar>(rows: &[(&str, &EvalReport<T>)]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<10} {:>10} {:>10} {:>14} {:>12}\n",
        "Dataset", "R2", "MRE (%)", "MSE", "RMSE"
    ));
    for (name, report) in rows {
        out.push_str(&format!(
            "{:<10} {:>10.4} {:>10.3} {:>14.6e} {:>12.6e}\n",
            name,
            report.r2.to_f64().unwrap_or(f64::NAN),
            report.mre_percent.to_f64().unwrap_or(f64::NAN),
            report.mse.to_f64().unwrap_or(f64::NAN),
            report.rmse.to_f64().unwrap_or(f64::NAN),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mre_zero_on_perfect_prediction() {
        assert_eq!(mre(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn mre_hand_case_ten_percent() {
        // (10% + 10%) / 2 = 10
        let v: f64 = mre(&[1.0, 2.0], &[1.1, 1.8]).unwrap();
        assert!((v - 10.0).abs() < 1e-12);
    }

    #[test]
    fn mre_rejects_zero_actual() {
        let err = mre(&[1.0, 0.0], &[1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::DivisionByZero { index: 1 }));
    }

    #[test]
    fn mre_signed_cancels_symmetric_errors() {
        let v: f64 = mre_signed(&[1.0, 2.0], &[1.1, 1.8]).unwrap();
        // (-10% + 10%) / 2 = 0
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn mse_rmse_identical_vectors() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn mse_rmse_unit_errors() {
        assert_eq!(mse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(rmse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn mse_rmse_hand_case_nine() {
        assert_eq!(mse(&[0.0, 0.0], &[3.0, -3.0]).unwrap(), 9.0);
        assert_eq!(rmse(&[0.0, 0.0], &[3.0, -3.0]).unwrap(), 3.0);
    }

    #[test]
    fn mse_rejects_length_mismatch() {
        assert!(matches!(
            mse(&[0.0, 0.0], &[1.0]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn r_squared_perfect_is_one() {
        assert_eq!(r_squared(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
    }

    #[test]
    fn r_squared_mean_prediction_is_zero() {
        assert_eq!(r_squared(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn r_squared_hand_case_half() {
        assert_eq!(r_squared(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap(), 0.5);
    }

    #[test]
    fn r_squared_rejects_constant_actual() {
        assert!(matches!(
            r_squared(&[2.0, 2.0], &[1.0, 3.0]),
            Err(Error::ZeroVariance)
        ));
    }

    #[test]
    fn evaluate_is_internally_consistent() {
        let report: EvalReport<f64> = evaluate(&[1.0, 2.0, 3.0], &[1.1, 1.9, 3.2]).unwrap();
        assert_eq!(report.n, 3);
        let diff = (report.mse - report.rmse * report.rmse).abs();
        assert!(diff <= 1e-12 * report.mse.abs());
    }

    #[test]
    fn report_table_has_all_columns() {
        let report = evaluate(&[1.0, 2.0, 3.0], &[1.1, 1.9, 3.2]).unwrap();
        let table = report_table(&[("train", &report), ("test", &report)]);
        assert!(table.contains("R2"));
        assert!(table.contains("MRE (%)"));
        assert!(table.contains("MSE"));
        assert!(table.contains("RMSE"));
        assert_eq!(table.lines().count(), 3);
    }

    #[test]
    fn metrics_work_in_f32() {
        let v = mre(&[1.0f32, 2.0], &[1.1, 1.8]).unwrap();
        assert!((v - 10.0).abs() < 1e-4);
    }
}
