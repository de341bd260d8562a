//! Configuration-driven experiment runners.
//!
//! Each mode turns an [`ExperimentConfig`] into a typed result and a
//! [`RunReport`] table. Every random draw comes from a ChaCha8 stream
//! derived from `(master seed, mode tag, N, trial)` (see [`crate::seed`]),
//! and per-trial results are collected in index order, so the output does
//! not depend on how many threads ran the trials.

mod config;
mod output;
mod runs;

pub use config::{BaselineConfig, ExperimentConfig, Mode, OracleConfig, LOSS_SWEEP_ETA};
pub use output::{format_float, write_report, OutputPaths, RunManifest, SEED_DERIVATION};
pub use runs::{
    run, run_baseline, run_fig3, run_fig4, run_fig5, run_loss_sweep, run_oracle_check,
    BaselineResult, BaselineRow, Fig3Result, Fig3Row, Fig4Result, Fig4Row, Fig5Result, Fig5Row,
    Fig5Variant, LossRow, LossSweepResult, OracleResult, OracleRow,
};

use std::collections::BTreeMap;

use serde::Serialize;

use crate::estimation::FitResult;

/// One table cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(i64::from(v))
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Mode-independent view of a finished run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub mode: Mode,
    pub table: Table,
    pub fits: BTreeMap<String, FitResult>,
    /// Scalar summaries (bounds, maxima, pass flags).
    pub summary: BTreeMap<String, f64>,
    /// `false` only when a mode with a built-in threshold missed it.
    pub passed: bool,
}

/// Map `f` over `0..count`, in parallel when the `parallel` feature is on;
/// results keep index order.
pub(crate) fn par_map<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(f).collect()
    }
}
