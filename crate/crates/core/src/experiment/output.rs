use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use super::{Cell, RunReport};
use crate::error::{Error, Result};

pub const SEED_DERIVATION: &str = "ChaCha8(splitmix64 fold of [master, mode tag, N, trial]); \
     hardware realization uses [master, 0x5EA1] (per trial: [master, 0x5EA1, 1 + trial])";

/// Fixed-width scientific notation with 17 significant digits, so every
/// `f64` round-trips and two runs agree byte for byte.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

fn format_cell(c: &Cell) -> String {
    match c {
        Cell::Int(i) => i.to_string(),
        Cell::Float(f) => format_float(*f),
        Cell::Bool(b) => b.to_string(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputPaths {
    pub csv: PathBuf,
    pub manifest: PathBuf,
}

impl OutputPaths {
    pub fn new(dir: &Path, report: &RunReport) -> Self {
        let stem = report.mode.as_str();
        OutputPaths {
            csv: dir.join(format!("{stem}.csv")),
            manifest: dir.join(format!("{stem}.manifest.json")),
        }
    }
}

/// Everything needed to rerun a result. Only this file carries wall-clock
/// data; the CSV stays reproducible.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest<'a> {
    pub version: &'static str,
    pub mode: &'static str,
    pub config: &'a ExperimentConfig,
    pub seed_derivation: &'static str,
    pub fits: &'a std::collections::BTreeMap<String, crate::estimation::FitResult>,
    pub summary: &'a std::collections::BTreeMap<String, f64>,
    pub passed: bool,
    pub started_unix_secs: u64,
    pub elapsed_secs: f64,
    pub csv: &'a Path,
}

/// Config as recorded in the CSV header; the output directory is left out
/// so moving the results does not change their bytes.
fn header_config(config: &ExperimentConfig) -> String {
    let mut value = serde_json::to_value(config).expect("config serializes");
    if let Some(map) = value.as_object_mut() {
        map.remove("out");
    }
    value.to_string()
}

fn render_csv(report: &RunReport, config: &ExperimentConfig) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    writeln!(buf, "# switchmet {}", env!("CARGO_PKG_VERSION")).ok();
    writeln!(buf, "# mode: {}", report.mode).ok();
    writeln!(buf, "# config: {}", header_config(config)).ok();
    writeln!(buf, "# seeds: {SEED_DERIVATION}").ok();
    for (name, fit) in &report.fits {
        let params: Vec<String> = fit
            .parameters
            .iter()
            .map(|p| match p.std_error {
                Some(se) => format!(
                    "{}={} (se {})",
                    p.name,
                    format_float(p.value),
                    format_float(se)
                ),
                None => format!("{}={}", p.name, format_float(p.value)),
            })
            .collect();
        writeln!(buf, "# fit {name}: {}", params.join(", ")).ok();
    }
    for (name, v) in &report.summary {
        writeln!(buf, "# {name}: {}", format_float(*v)).ok();
    }
    let mut w = csv::Writer::from_writer(buf);
    let fail = |e: csv::Error| Error::Config(format!("csv encoding: {e}"));
    w.write_record(&report.table.columns).map_err(fail)?;
    for row in &report.table.rows {
        w.write_record(row.iter().map(format_cell)).map_err(fail)?;
    }
    w.into_inner()
        .map_err(|e| Error::Config(format!("csv encoding: {e}")))
}

/// Write `<dir>/<mode>.csv` and `<dir>/<mode>.manifest.json`.
pub fn write_report(
    report: &RunReport,
    config: &ExperimentConfig,
    dir: &Path,
    started_unix_secs: u64,
    elapsed_secs: f64,
) -> Result<OutputPaths> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = OutputPaths::new(dir, report);
    fs::write(&paths.csv, render_csv(report, config)?).map_err(|e| Error::io(&paths.csv, e))?;
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION"),
        mode: report.mode.as_str(),
        config,
        seed_derivation: SEED_DERIVATION,
        fits: &report.fits,
        summary: &report.summary,
        passed: report.passed,
        started_unix_secs,
        elapsed_secs,
        csv: &paths.csv,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&paths.manifest, json + "\n").map_err(|e| Error::io(&paths.manifest, e))?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{Mode, Table};
    use std::collections::BTreeMap;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, -3.0e-7, 1.0 / 3.0, 0.042] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_float(f64::NAN), "NaN");
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut table = Table::new(&["n", "x"]);
        table.push(vec![1u32.into(), 0.5.into()]);
        let report = RunReport {
            mode: Mode::Fig4,
            table,
            fits: BTreeMap::new(),
            summary: BTreeMap::from([("k".to_string(), 1.0)]),
            passed: true,
        };
        let cfg = ExperimentConfig::for_mode(Mode::Fig4);
        let text = String::from_utf8(render_csv(&report, &cfg).unwrap()).unwrap();
        assert!(text.contains("# mode: fig4\n"));
        assert!(!text.contains("\"out\""));
        assert!(text.ends_with("n,x\n1,5.0000000000000000e-1\n"));
    }
}
