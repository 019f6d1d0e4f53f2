use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentSpec;
use super::run::{ChainRecord, Diagnostics, Oracles, SummaryRow};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 15] = [
    "algorithm",
    "gamma",
    "start",
    "coordinate",
    "moment_order",
    "reference",
    "n_included",
    "n_excluded",
    "n_diverged",
    "min",
    "q1",
    "median",
    "q3",
    "max",
    "mean",
];

/// Full JSON report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub spec: ExperimentSpec,
    pub rows: Vec<SummaryRow>,
    pub diagnostics: Diagnostics,
    pub oracles: Oracles,
    pub version: String,
}

impl Report {
    pub fn new(spec: ExperimentSpec, rows: Vec<SummaryRow>, diagnostics: Diagnostics, oracles: Oracles) -> Self {
        Self {
            spec,
            rows,
            diagnostics,
            oracles,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::NumericalFailure(format!("{}: csv error: {other:?}", path.display())),
    }
}

/// Formats one summary row as the 15 CSV fields. Empty cells have blank statistics.
pub fn csv_record(row: &SummaryRow) -> Vec<String> {
    let mut rec = vec![
        row.algorithm.name().to_string(),
        num(row.gamma),
        row.start.clone(),
        row.coordinate.to_string(),
        row.moment_order.to_string(),
        row.reference.map(num).unwrap_or_default(),
        row.summary.n_included.to_string(),
        row.n_excluded.to_string(),
        row.n_diverged.to_string(),
    ];
    match &row.summary.stats {
        Some(s) => rec.extend([s.min, s.q1, s.median, s.q3, s.max, s.mean].map(num)),
        None => rec.extend(std::iter::repeat_n(String::new(), 6)),
    }
    rec
}

pub fn write_csv<W: Write>(rows: &[SummaryRow], w: W) -> Result<(), csv::Error> {
    let mut wtr = csv_writer(w);
    wtr.write_record(CSV_HEADER)?;
    for row in rows {
        wtr.write_record(csv_record(row))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn emit_csv(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(rows, BufWriter::new(file)).map_err(|e| csv_error(path, e))
}

pub fn emit_json(report: &Report, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, report).map_err(|e| {
        if e.is_io() {
            Error::io(path, e.into())
        } else {
            Error::NumericalFailure(format!("{}: {e}", path.display()))
        }
    })?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_json_report(path: &Path) -> Result<Report> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn read_json_rows(path: &Path) -> Result<Vec<SummaryRow>> {
    Ok(read_json_report(path)?.rows)
}

/// One line per (chain, tracked coordinate). Wall-clock time is left out so
/// the file is reproducible.
pub fn emit_chains_csv(chains: &[ChainRecord], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut wtr = csv_writer(BufWriter::new(file));
    let write = |wtr: &mut csv::Writer<_>| -> Result<(), csv::Error> {
        wtr.write_record([
            "algorithm",
            "gamma",
            "start",
            "replicate",
            "seed",
            "diverged",
            "diverged_at",
            "excluded",
            "acceptance_rate",
            "steps_completed",
            "coordinate",
            "count",
            "mean",
            "mean_sq",
            "mean_mcse",
            "mean_sq_mcse",
        ])?;
        for c in chains {
            let r = &c.result;
            for e in &r.estimates {
                wtr.write_record([
                    c.algorithm.name().to_string(),
                    num(c.gamma),
                    c.start.clone(),
                    c.replicate.to_string(),
                    r.seed.to_string(),
                    r.diverged.to_string(),
                    r.diverged_at.map(|k| k.to_string()).unwrap_or_default(),
                    r.excluded.to_string(),
                    r.acceptance_rate.map(num).unwrap_or_default(),
                    r.steps_completed.to_string(),
                    e.coordinate.to_string(),
                    e.count.to_string(),
                    num(e.mean),
                    num(e.mean_sq),
                    e.mean_mcse.map(num).unwrap_or_default(),
                    e.mean_sq_mcse.map(num).unwrap_or_default(),
                ])?;
            }
        }
        wtr.flush()?;
        Ok(())
    };
    write(&mut wtr).map_err(|e| csv_error(path, e))
}
