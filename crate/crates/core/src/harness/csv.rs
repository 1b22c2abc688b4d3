//! `results.csv`, `manifest.json` and per-run trace files.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::{ExperimentResult, ResultRow};

pub const RESULTS_HEADER: [&str; 8] = [
    "scheme",
    "sweep_value",
    "seed",
    "eta_bits_per_joule",
    "sum_rate_bps",
    "total_power_w",
    "outer_iters",
    "wall_time_s",
];

/// Scientific notation with 17 significant digits, so values round-trip
/// exactly.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, e: ::csv::Error) -> Error {
    let source = match e.into_kind() {
        ::csv::ErrorKind::Io(io) => io,
        other => std::io::Error::other(format!("{other:?}")),
    };
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = ::csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn trace_file_name(row: &ResultRow) -> String {
    format!("trace_{}_{}_{}.csv", row.scheme, row.sweep_value, row.seed)
}

/// Writes `results.csv`, `manifest.json` and one trace file per row that
/// has a trace into directory `dir`, creating it if needed. Returns the
/// path of `results.csv`.
pub fn emit_csv(result: &ExperimentResult, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(io_err(dir))?;

    let results = dir.join("results.csv");
    write_table(
        &results,
        &RESULTS_HEADER,
        result.rows.iter().map(|r| {
            vec![
                r.scheme.clone(),
                r.sweep_value.to_string(),
                r.seed.to_string(),
                format_float(r.eta),
                format_float(r.sum_rate),
                format_float(r.total_power),
                r.outer_iters.to_string(),
                format_float(r.wall_time_s),
            ]
        }),
    )?;

    for r in result.rows.iter().filter(|r| !r.eta_trace.is_empty()) {
        let path = dir.join(trace_file_name(r));
        write_table(
            &path,
            &["outer_iter", "eta"],
            r.eta_trace
                .iter()
                .enumerate()
                .map(|(i, &e)| vec![i.to_string(), format_float(e)]),
        )?;
    }

    let manifest = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&result.manifest).map_err(|e| Error::Numeric(e.to_string()))?;
    text.push('\n');
    fs::write(&manifest, text).map_err(io_err(&manifest))?;
    Ok(results)
}
