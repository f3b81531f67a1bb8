//! Hidden-node-count selection by test-error sweep.
//!
//! For each candidate node count the sweep trains several models with
//! independent seeds, records train and test RMSE, and selects the count
//! whose mean test RMSE is lowest (ties break toward the smaller, more
//! parsimonious count). Averaging over repeats removes seed luck from the
//! selection; every cell's seed derives deterministically from the base
//! seed via [`mix_seed`], so the whole report is reproducible.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::elm::{train_dataset, ElmConfig};
use crate::error::{Error, Result};
use crate::metrics::rmse;
use crate::scalar::Scalar;

/// Tag recorded in every report produced by [`sweep`].
pub const SELECTION_RULE: &str = "min-mean-test-rmse";

/// Inclusive integer range with a step, e.g. `1..60` or `5..50:5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeRange {
    pub start: usize,
    pub end: usize,
    pub step: usize,
}

impl NodeRange {
    pub fn new(start: usize, end: usize, step: usize) -> Result<Self> {
        if start == 0 {
            return Err(Error::Config("node range must start at >= 1".to_string()));
        }
        if step == 0 {
            return Err(Error::Config("node range step must be >= 1".to_string()));
        }
        if end < start {
            return Err(Error::Config(format!(
                "node range {start}..{end} is empty"
            )));
        }
        Ok(NodeRange { start, end, step })
    }

    pub fn counts(&self) -> impl Iterator<Item = usize> + '_ {
        (self.start..=self.end).step_by(self.step)
    }

    pub fn len(&self) -> usize {
        (self.end - self.start) / self.step + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Display for NodeRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.step == 1 {
            write!(f, "{}..{}", self.start, self.end)
        } else {
            write!(f, "{}..{}:{}", self.start, self.end, self.step)
        }
    }
}

impl FromStr for NodeRange {
    type Err = Error;

    /// Parses `start..end`, `start..end:step`, or a single count `n`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |s: &str| Error::Config(format!("cannot parse node range `{s}`"));
        let s = s.trim();
        if let Some((range, step)) = s.split_once(':') {
            let step: usize = step.trim().parse().map_err(|_| bad(s))?;
            let (start, end) = range.split_once("..").ok_or_else(|| bad(s))?;
            return NodeRange::new(
                start.trim().parse().map_err(|_| bad(s))?,
                end.trim().parse().map_err(|_| bad(s))?,
                step,
            );
        }
        if let Some((start, end)) = s.split_once("..") {
            return NodeRange::new(
                start.trim().parse().map_err(|_| bad(s))?,
                end.trim().parse().map_err(|_| bad(s))?,
                1,
            );
        }
        let single: usize = s.parse().map_err(|_| bad(s))?;
        NodeRange::new(single, single, 1)
    }
}

/// Derives the training seed of one sweep cell from the base seed, the node
/// count and the repeat index.
///
/// Two rounds of the SplitMix64 finalizer, folding in each coordinate:
/// `mix(mix(base ^ (count * 0x9E3779B97F4A7C15)) ^ (repeat * 0xBF58476D1CE4E5B9))`
/// where `mix(z)` is the standard SplitMix64 avalanche. Documented so a
/// sweep can be reproduced cell by cell.
pub fn mix_seed(base: u64, node_count: u64, repeat: u64) -> u64 {
    fn avalanche(mut z: u64) -> u64 {
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    let a = avalanche(base ^ node_count.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    avalanche(a ^ repeat.wrapping_mul(0xBF58_476D_1CE4_E5B9))
}

/// One successful sweep cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint<T> {
    pub hidden_nodes: usize,
    pub repeat: u32,
    pub train_rmse: T,
    pub test_rmse: T,
}

/// A cell whose training failed; excluded from selection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepFailure {
    pub hidden_nodes: usize,
    pub repeat: u32,
    pub error: String,
}

/// The full sweep record and the selected node count.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport<T> {
    pub points: Vec<SweepPoint<T>>,
    pub failures: Vec<SweepFailure>,
    pub selected_nodes: usize,
    pub selection_rule: &'static str,
}

impl<T: Scalar> SweepReport<T> {
    /// Mean test RMSE over the successful repeats at a node count.
    pub fn mean_test_rmse(&self, hidden_nodes: usize) -> Option<f64> {
        self.mean_of(hidden_nodes, |p| p.test_rmse)
    }

    /// Mean train RMSE over the successful repeats at a node count.
    pub fn mean_train_rmse(&self, hidden_nodes: usize) -> Option<f64> {
        self.mean_of(hidden_nodes, |p| p.train_rmse)
    }

    fn mean_of(&self, hidden_nodes: usize, get: impl Fn(&SweepPoint<T>) -> T) -> Option<f64> {
        let values: Vec<f64> = self
            .points
            .iter()
            .filter(|p| p.hidden_nodes == hidden_nodes)
            .filter_map(|p| get(p).to_f64())
            .collect();
        if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        }
    }

    /// Node counts that produced at least one successful repeat, ascending.
    pub fn swept_counts(&self) -> Vec<usize> {
        let mut counts: Vec<usize> = self.points.iter().map(|p| p.hidden_nodes).collect();
        counts.sort_unstable();
        counts.dedup();
        counts
    }

    /// Plot data rows: `hidden_nodes,repeat,train_rmse,test_rmse`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["hidden_nodes", "repeat", "train_rmse", "test_rmse"])?;
        for p in &self.points {
            wtr.write_record([
                p.hidden_nodes.to_string(),
                p.repeat.to_string(),
                p.train_rmse.to_string(),
                p.test_rmse.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Parses the sweep CSV emitted by [`SweepReport::write_csv`].
pub fn read_sweep_csv<T: Scalar, R: std::io::Read>(reader: R) -> Result<Vec<SweepPoint<T>>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let parse = |cell: &str, row: usize, what: &str| -> Result<T> {
        cell.parse::<T>().map_err(|_| Error::CellParse {
            row,
            column: what.to_string(),
            value: cell.to_string(),
        })
    };
    let mut points = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let row = line + 1;
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or("").trim().to_string();
        points.push(SweepPoint {
            hidden_nodes: field(0).parse().map_err(|_| Error::CellParse {
                row,
                column: "hidden_nodes".to_string(),
                value: field(0),
            })?,
            repeat: field(1).parse().map_err(|_| Error::CellParse {
                row,
                column: "repeat".to_string(),
                value: field(1),
            })?,
            train_rmse: parse(&field(2), row, "train_rmse")?,
            test_rmse: parse(&field(3), row, "test_rmse")?,
        });
    }
    Ok(points)
}

/// Sweeps node counts over a fixed train/test pair.
///
/// Cells are independent and run in parallel; results are assembled in
/// `(count, repeat)` order regardless of completion order, so the report is
/// deterministic. `base_config` supplies everything except the node count
/// and seed, which the sweep sets per cell.
pub fn sweep<T: Scalar>(
    train: &Dataset<T>,
    test: &Dataset<T>,
    node_range: &NodeRange,
    repeats: u32,
    base_config: &ElmConfig<T>,
) -> Result<SweepReport<T>> {
    if repeats == 0 {
        return Err(Error::Config("repeats must be >= 1".to_string()));
    }

    let cells: Vec<(usize, u32)> = node_range
        .counts()
        .flat_map(|count| (0..repeats).map(move |r| (count, r)))
        .collect();

    let test_targets = test.targets();
    let train_targets = train.targets();

    let outcomes: Vec<std::result::Result<SweepPoint<T>, SweepFailure>> = cells
        .par_iter()
        .map(|&(count, repeat)| {
            let mut config = *base_config;
            config.hidden_nodes = count;
            config.seed = mix_seed(base_config.seed, count as u64, u64::from(repeat));
            let run = || -> Result<SweepPoint<T>> {
                let model = train_dataset(&config, train)?;
                let train_pred = model.predict_dataset(train)?;
                let test_pred = model.predict_dataset(test)?;
                Ok(SweepPoint {
                    hidden_nodes: count,
                    repeat,
                    train_rmse: rmse(train_targets.as_slice(), train_pred.as_slice())?,
                    test_rmse: rmse(test_targets.as_slice(), test_pred.as_slice())?,
                })
            };
            run().map_err(|e| SweepFailure {
                hidden_nodes: count,
                repeat,
                error: e.to_string(),
            })
        })
        .collect();

    let mut points = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(p) => points.push(p),
            Err(f) => failures.push(f),
        }
    }
    if points.is_empty() {
        return Err(Error::Sweep(format!(
            "all {} cells failed; first error: {}",
            cells.len(),
            failures.first().map(|f| f.error.as_str()).unwrap_or("none")
        )));
    }

    let mut report = SweepReport {
        points,
        failures,
        selected_nodes: 0,
        selection_rule: SELECTION_RULE,
    };
    // Minimum mean test RMSE; ascending scan makes ties resolve to the
    // smallest count.
    let mut best = f64::INFINITY;
    let mut selected = 0;
    for count in report.swept_counts() {
        let mean = report.mean_test_rmse(count).expect("count has points");
        if mean < best {
            best = mean;
            selected = count;
        }
    }
    report.selected_nodes = selected;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Provenance, SolubilityRecord};
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn toy_dataset(n: usize, seed: u64) -> Dataset<f64> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let records: Vec<SolubilityRecord<f64>> = (0..n)
            .map(|_| {
                let p = 1.0 + 50.0 * rng.random::<f64>();
                let t = 10.0 + 100.0 * rng.random::<f64>();
                SolubilityRecord {
                    c1: 0.5 + 0.4 * rng.random::<f64>(),
                    c2: 0.05 * rng.random::<f64>(),
                    c3: 0.02 * rng.random::<f64>(),
                    c4: 0.01 * rng.random::<f64>(),
                    ionic_strength: 3.0 * rng.random::<f64>(),
                    pressure_mpa: p,
                    temperature_c: t,
                    idx: 1,
                    solubility: (1e-4 * p / (p + 40.0) * (0.5 + t / 300.0)).max(1e-9),
                }
            })
            .collect();
        Dataset::new(records, Provenance::Memory).unwrap()
    }

    #[test]
    fn node_range_parsing() {
        assert_eq!("1..60".parse::<NodeRange>().unwrap(), NodeRange::new(1, 60, 1).unwrap());
        assert_eq!(
            "5..50:5".parse::<NodeRange>().unwrap(),
            NodeRange::new(5, 50, 5).unwrap()
        );
        assert_eq!("30".parse::<NodeRange>().unwrap(), NodeRange::new(30, 30, 1).unwrap());
        assert!("60..1".parse::<NodeRange>().is_err());
        assert!("0..5".parse::<NodeRange>().is_err());
        assert!("x..5".parse::<NodeRange>().is_err());
        assert_eq!("1..60".parse::<NodeRange>().unwrap().len(), 60);
        assert_eq!("5..50:5".parse::<NodeRange>().unwrap().len(), 10);
    }

    #[test]
    fn node_range_display_round_trips() {
        for s in ["1..60", "5..50:5", "7..7"] {
            let r: NodeRange = s.parse().unwrap();
            assert_eq!(r.to_string().parse::<NodeRange>().unwrap(), r);
        }
    }

    #[test]
    fn mix_seed_separates_cells() {
        let a = mix_seed(42, 10, 0);
        let b = mix_seed(42, 10, 1);
        let c = mix_seed(42, 11, 0);
        let d = mix_seed(43, 10, 0);
        assert!(a != b && a != c && a != d && b != c);
        assert_eq!(a, mix_seed(42, 10, 0));
    }

    #[test]
    fn single_candidate_is_selected() {
        let data = toy_dataset(60, 1);
        let (train, test) = data.split(0.7, 2).unwrap();
        let range = NodeRange::new(5, 5, 1).unwrap();
        let report = sweep(&train, &test, &range, 1, &ElmConfig::new(5, 3)).unwrap();
        assert_eq!(report.selected_nodes, 5);
        assert_eq!(report.points.len(), 1);
        assert_eq!(report.selection_rule, SELECTION_RULE);
    }

    #[test]
    fn sweep_is_deterministic() {
        let data = toy_dataset(80, 4);
        let (train, test) = data.split(0.75, 5).unwrap();
        let range = NodeRange::new(1, 6, 1).unwrap();
        let config = ElmConfig::new(1, 7);
        let a = sweep(&train, &test, &range, 3, &config).unwrap();
        let b = sweep(&train, &test, &range, 3, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn selection_minimizes_mean_test_rmse() {
        let data = toy_dataset(100, 8);
        let (train, test) = data.split(0.75, 9).unwrap();
        let range = NodeRange::new(1, 10, 1).unwrap();
        let report = sweep(&train, &test, &range, 2, &ElmConfig::new(1, 10)).unwrap();
        let best = report.mean_test_rmse(report.selected_nodes).unwrap();
        for count in report.swept_counts() {
            assert!(best <= report.mean_test_rmse(count).unwrap() + 1e-15);
        }
    }

    #[test]
    fn repeats_with_different_seeds_differ() {
        let data = toy_dataset(70, 11);
        let (train, test) = data.split(0.7, 12).unwrap();
        let range = NodeRange::new(4, 4, 1).unwrap();
        let report = sweep(&train, &test, &range, 3, &ElmConfig::new(4, 13)).unwrap();
        let rmses: Vec<f64> = report.points.iter().map(|p| p.test_rmse).collect();
        assert!(rmses.windows(2).any(|w| w[0] != w[1]));
    }

    #[test]
    fn richer_basis_fits_train_at_least_as_well() {
        let data = toy_dataset(120, 14);
        let (train, test) = data.split(0.75, 15).unwrap();
        let range = NodeRange::new(2, 20, 6).unwrap();
        let report = sweep(&train, &test, &range, 3, &ElmConfig::new(2, 16)).unwrap();
        let counts = report.swept_counts();
        let smallest = report.mean_train_rmse(counts[0]).unwrap();
        let largest = report.mean_train_rmse(*counts.last().unwrap()).unwrap();
        assert!(largest <= smallest + 1e-9);
    }

    #[test]
    fn sweep_reports_error_when_all_cells_fail() {
        let data = toy_dataset(40, 27);
        let (train, test) = data.split(0.7, 28).unwrap();
        let range = NodeRange::new(1, 3, 1).unwrap();
        let mut config = ElmConfig::new(1, 29);
        config.regularization = Some(-1.0); // every cell rejects the config
        match sweep(&train, &test, &range, 2, &config) {
            Err(Error::Sweep(msg)) => assert!(msg.contains("failed")),
            other => panic!("expected sweep error, got {other:?}"),
        }
    }

    #[test]
    fn csv_has_one_row_per_cell_and_reingests() {
        let data = toy_dataset(50, 17);
        let (train, test) = data.split(0.7, 18).unwrap();
        let range = NodeRange::new(1, 4, 1).unwrap();
        let report = sweep(&train, &test, &range, 2, &ElmConfig::new(1, 19)).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("hidden_nodes,repeat,train_rmse,test_rmse\n"));
        assert_eq!(text.lines().count(), 1 + 4 * 2);

        let back: Vec<SweepPoint<f64>> = read_sweep_csv(buf.as_slice()).unwrap();
        assert_eq!(back, report.points);
    }
}
