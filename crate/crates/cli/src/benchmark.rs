//! Benchmark execution and reporting.

use crate::spec::{load, BenchmarkSpec};
use pileup_core::harness::{run_replicates, summarize, MiseReport};
use pileup_core::{CoreError, Result};
use serde::Serialize;
use std::path::Path;

#[derive(Serialize)]
struct BenchmarkReport<'a> {
    name: &'a str,
    cells: Vec<CellReport<'a>>,
}

#[derive(Serialize)]
struct CellReport<'a> {
    label: &'a str,
    band: Option<(f64, f64)>,
    band_ok: Option<bool>,
    report: MiseReport,
}

/// Runs every cell of the spec, writes `<name>.csv` and `<name>.json` to
/// `out`, prints the table, and returns exit code 1 when a declared band
/// fails.
pub fn run(spec_name: &str, out: &Path) -> Result<i32> {
    let spec: BenchmarkSpec = load(spec_name)?;
    std::fs::create_dir_all(out)
        .map_err(|e| CoreError::input(format!("cannot create {}: {e}", out.display())))?;

    let mut reports = Vec::with_capacity(spec.configs.len());
    for cell in &spec.configs {
        eprintln!("running {} ...", cell.label);
        reports.push(run_replicates(&cell.config)?);
    }

    let labels: Vec<String> = spec.configs.iter().map(|c| c.label.clone()).collect();
    let table = summarize(&reports, &labels)?;
    print!("{}", table.to_text());

    let mut any_band_failed = false;
    let cells: Vec<CellReport> = spec
        .configs
        .iter()
        .zip(reports)
        .map(|(cell, report)| {
            let band_ok = cell.band.map(|(lo, hi)| {
                let ok = report.mean_mise >= lo && report.mean_mise <= hi;
                if !ok {
                    any_band_failed = true;
                    eprintln!(
                        "band failure: {} mean MISE {} outside [{lo}, {hi}]",
                        cell.label, report.mean_mise
                    );
                }
                ok
            });
            CellReport {
                label: &cell.label,
                band: cell.band,
                band_ok,
                report,
            }
        })
        .collect();

    let csv_path = out.join(format!("{}.csv", spec.name));
    std::fs::write(&csv_path, table.to_csv())
        .map_err(|e| CoreError::input(format!("cannot write {}: {e}", csv_path.display())))?;
    let json_path = out.join(format!("{}.json", spec.name));
    let full = BenchmarkReport {
        name: &spec.name,
        cells,
    };
    let text = serde_json::to_string_pretty(&full)
        .map_err(|e| CoreError::input(format!("serialization failure: {e}")))?;
    std::fs::write(&json_path, text)
        .map_err(|e| CoreError::input(format!("cannot write {}: {e}", json_path.display())))?;

    Ok(if any_band_failed { 1 } else { 0 })
}
