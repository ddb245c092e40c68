//! Reference trajectory of the linear-system instance from `(1,1,1,1,1)`
//! and the digit-level comparison against it.

use std::fmt;

use sfp_core::solver::CompositionMode;
use sfp_core::{Error, Vector};

use crate::config::ProblemConfig;
use crate::experiment::{execute, HarnessError};

/// Half a unit in the sixth decimal.
pub const MATCH_TOL: f64 = 5e-7;

/// Rows as printed, six decimals except for the constant last coordinate.
pub const TABLE1: [(usize, [&str; 5]); 19] = [
    (0, ["1", "1", "1", "1", "1"]),
    (1, ["0.766667", "0.766667", "0.766667", "0.766667", "1"]),
    (2, ["0.587778", "0.587778", "0.587778", "0.642222", "1"]),
    (3, ["0.450630", "0.450630", "0.463333", "0.575852", "1"]),
    (4, ["0.345483", "0.348447", "0.381477", "0.540454", "1"]),
    (5, ["0.265562", "0.274850", "0.329560", "0.521576", "1"]),
    (6, ["0.205764", "0.223484", "0.297466", "0.511507", "1"]),
    (7, ["0.161887", "0.188600", "0.278000", "0.506137", "1"]),
    (8, ["0.130347", "0.165454", "0.266366", "0.503273", "1"]),
    (9, ["0.108124", "0.150394", "0.259492", "0.501746", "1"]),
    (10, ["0.092758", "0.140758", "0.255470", "0.500931", "1"]),
    (11, ["0.082315", "0.134681", "0.253134", "0.500497", "1"]),
    (12, ["0.075327", "0.130894", "0.251788", "0.500265", "1"]),
    (13, ["0.070716", "0.128561", "0.251015", "0.500141", "1"]),
    (14, ["0.067713", "0.127136", "0.250574", "0.500075", "1"]),
    (15, ["0.065779", "0.126273", "0.250324", "0.500040", "1"]),
    (20, ["0.062790", "0.125089", "0.250018", "0.500002", "1"]),
    (32, ["0.062501", "0.125000", "0.250000", "0.500000", "1"]),
    (33, ["0.062500", "0.125000", "0.250000", "0.500000", "1"]),
];

pub fn table1_row(index: usize) -> (usize, [f64; 5]) {
    let (n, cells) = TABLE1[index];
    (n, cells.map(|c| c.parse().expect("table literal is numeric")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowComparison {
    pub n: usize,
    pub target: [f64; 5],
    /// `None` when the trajectory ends before row `n`.
    pub actual: Option<Vec<f64>>,
    /// Max absolute componentwise deviation.
    pub max_dev: Option<f64>,
}

impl RowComparison {
    pub fn matches(&self) -> bool {
        self.max_dev.is_some_and(|d| d <= MATCH_TOL)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table1Report {
    pub label: String,
    pub rows: Vec<RowComparison>,
}

impl Table1Report {
    pub fn row(&self, n: usize) -> Option<&RowComparison> {
        self.rows.iter().find(|r| r.n == n)
    }

    /// Whether every row `n ≥ 1` present in the trajectory matched.
    pub fn later_rows_match(&self) -> bool {
        let compared: Vec<_> = self
            .rows
            .iter()
            .filter(|r| r.n >= 1 && r.actual.is_some())
            .collect();
        !compared.is_empty() && compared.iter().all(|r| r.matches())
    }

    pub fn matched_count(&self) -> usize {
        self.rows.iter().filter(|r| r.matches()).count()
    }
}

impl fmt::Display for Table1Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "table 1 comparison [{}]: {}/{} rows within {MATCH_TOL:e}",
            self.label,
            self.matched_count(),
            self.rows.len()
        )?;
        for r in &self.rows {
            match (&r.actual, r.max_dev) {
                (Some(x), Some(d)) => {
                    let xs: Vec<String> = x.iter().map(|v| format!("{v:.6}")).collect();
                    writeln!(
                        f,
                        "  n={:>2}  max_dev={d:.3e}  {}  [{}]",
                        r.n,
                        if r.matches() { "match" } else { "differ" },
                        xs.join(", ")
                    )?;
                }
                _ => writeln!(f, "  n={:>2}  absent", r.n)?,
            }
        }
        Ok(())
    }
}

/// Compares `trajectory[n]` with each reference row `n`.
pub fn compare_to_table1(label: &str, trajectory: &[Vector]) -> Result<Table1Report, Error> {
    let raw: Vec<Vec<f64>> = trajectory.iter().map(|v| v.as_slice().to_vec()).collect();
    compare_rows(label, &raw.iter().cloned().enumerate().collect::<Vec<_>>())
}

/// As [`compare_to_table1`], for rows keyed by `n` (e.g. read from a CSV).
pub fn compare_rows(label: &str, rows: &[(usize, Vec<f64>)]) -> Result<Table1Report, Error> {
    if rows.is_empty() {
        return Err(Error::InvalidInput("empty trajectory".into()));
    }
    if let Some((_, x)) = rows.iter().find(|(_, x)| x.len() != 5) {
        return Err(Error::DimensionMismatch {
            context: "table 1 row",
            expected: 5,
            found: x.len(),
        });
    }
    let mut seen = std::collections::BTreeSet::new();
    if let Some((n, _)) = rows.iter().find(|(n, _)| !seen.insert(*n)) {
        return Err(Error::InvalidInput(format!("row n = {n} appears twice")));
    }
    let report_rows = (0..TABLE1.len())
        .map(|i| {
            let (n, target) = table1_row(i);
            let actual = rows.iter().find(|(m, _)| *m == n).map(|(_, x)| x.clone());
            let max_dev = actual.as_ref().map(|x| {
                x.iter()
                    .zip(target)
                    .map(|(a, t)| (a - t).abs())
                    .fold(0.0, f64::max)
            });
            RowComparison {
                n,
                target,
                actual,
                max_dev,
            }
        })
        .collect();
    Ok(Table1Report {
        label: label.into(),
        rows: report_rows,
    })
}

/// The comparison for each composition mode under a preset, run from
/// `(1,1,1,1,1)` for the 33 steps the table covers.
pub fn mode_sweep(preset: &str) -> Result<Vec<(CompositionMode, Table1Report)>, HarnessError> {
    CompositionMode::ALL
        .into_iter()
        .map(|mode| {
            let mut cfg = ProblemConfig::example_s4(preset, mode);
            cfg.stepper.max_iter = 33;
            let result = execute(&cfg)?;
            let report = compare_to_table1(&format!("{preset}/{}", mode.name()), result.trajectory())?;
            Ok((mode, report))
        })
        .collect()
}
