//! Error tables: order estimation, CSV/markdown emission and CSV parsing.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Refinement axis of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    K,
    #[serde(rename = "dt")]
    Dt,
    #[serde(rename = "theta")]
    Theta,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::K => "K",
            SweepAxis::Dt => "dt",
            SweepAxis::Theta => "theta",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "K" | "k" => Ok(SweepAxis::K),
            "dt" | "DT" | "Dt" => Ok(SweepAxis::Dt),
            "theta" | "THETA" | "Theta" => Ok(SweepAxis::Theta),
            other => Err(Error::InvalidSpec(format!("unknown sweep axis '{other}'"))),
        }
    }

    /// Resolution used for orders: K, 1/dt or 1/theta.
    pub fn resolution(&self, value: f64) -> f64 {
        match self {
            SweepAxis::K => value,
            SweepAxis::Dt | SweepAxis::Theta => 1.0 / value,
        }
    }
}

/// Output format of [`emit_table`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Markdown,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "md" | "markdown" => Ok(Format::Markdown),
            other => Err(Error::InvalidSpec(format!("unknown format '{other}'"))),
        }
    }
}

/// One completed sweep row.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub value: f64,
    pub l2_error: f64,
    /// Observed order against the previous row; `None` on the first row.
    pub order: Option<f64>,
    pub dt: f64,
    pub theta: f64,
    pub walltime_s: f64,
}

/// Rows of one reported quantity (e.g. `ex4:u1`) along one sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTable {
    pub case: String,
    pub sweep: SweepAxis,
    pub beta: f64,
    pub degree: usize,
    pub t_final: f64,
    pub rows: Vec<ErrorRow>,
}

/// `order_i = ln(e_{i-1}/e_i) / ln(res_i/res_{i-1})`; the first entry is `None`.
pub fn estimate_order(errors: &[f64], resolutions: &[f64]) -> Result<Vec<Option<f64>>> {
    if errors.len() != resolutions.len() {
        return Err(Error::InvalidData(format!("{} errors for {} resolutions", errors.len(), resolutions.len())));
    }
    if let Some(e) = errors.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
        return Err(Error::InvalidData(format!("errors must be positive and finite, got {e}")));
    }
    if let Some(r) = resolutions.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
        return Err(Error::InvalidData(format!("resolutions must be positive, got {r}")));
    }
    let mut out = Vec::with_capacity(errors.len());
    for i in 0..errors.len() {
        if i == 0 {
            out.push(None);
            continue;
        }
        let ratio = resolutions[i] / resolutions[i - 1];
        if ratio == 1.0 {
            return Err(Error::InvalidData("repeated resolution in sweep".into()));
        }
        out.push(Some((errors[i - 1] / errors[i]).ln() / ratio.ln()));
    }
    Ok(out)
}

pub const CSV_HEADER: [&str; 11] =
    ["sweep_param", "value", "l2_error", "order", "case", "beta", "N", "dt", "theta", "T", "walltime_s"];

// Shortest representation that parses back to the same f64.
fn num(v: f64) -> String {
    format!("{v:e}")
}

/// Tables as CSV text (header only when there are no rows).
pub fn to_csv(tables: &[ErrorTable]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for t in tables {
        for r in &t.rows {
            w.write_record([
                t.sweep.name().to_string(),
                num(r.value),
                num(r.l2_error),
                r.order.map(num).unwrap_or_default(),
                t.case.clone(),
                num(t.beta),
                t.degree.to_string(),
                num(r.dt),
                num(r.theta),
                num(t.t_final),
                num(r.walltime_s),
            ])
            .map_err(csv_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidData(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidData(e.to_string()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidData(format!("csv: {e}"))
}

fn short(v: f64) -> String {
    format!("{v:.2e}")
}

fn sweep_label(axis: SweepAxis, v: f64, t_final: f64) -> String {
    match axis {
        SweepAxis::K => format!("{v}"),
        SweepAxis::Dt => {
            let m = t_final / v;
            if (m - m.round()).abs() < 1e-9 * m {
                format!("T/{}", m.round())
            } else {
                short(v)
            }
        }
        SweepAxis::Theta => {
            let s = 1.0 / v;
            if (s - s.round()).abs() < 1e-9 * s {
                format!("1/{}", s.round())
            } else {
                short(v)
            }
        }
    }
}

/// Tables in a markdown layout: one block per table with the sweep value,
/// L2 error and order columns.
pub fn to_markdown(tables: &[ErrorTable]) -> String {
    let mut out = String::new();
    for (i, t) in tables.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "### {} (beta = {}, N = {}, T = {})\n", t.case, t.beta, t.degree, t.t_final);
        let _ = writeln!(out, "| {} | L2-Error | order |", t.sweep.name());
        let _ = writeln!(out, "|---|---|---|");
        for r in &t.rows {
            let order = r.order.map(|o| format!("{o:.2}")).unwrap_or_else(|| "-".into());
            let _ =
                writeln!(out, "| {} | {} | {} |", sweep_label(t.sweep, r.value, t.t_final), short(r.l2_error), order);
        }
    }
    out
}

/// Write tables to `path` (or stdout when `None`).
pub fn emit_table(tables: &[ErrorTable], format: Format, path: Option<&Path>) -> Result<()> {
    let text = match format {
        Format::Csv => to_csv(tables)?,
        Format::Markdown => to_markdown(tables),
    };
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| Error::Io { path: p.to_path_buf(), source }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|source| Error::Io { path: "<stdout>".into(), source })
        }
    }
}

fn field(rec: &csv::StringRecord, i: usize) -> Result<&str> {
    rec.get(i).ok_or_else(|| Error::InvalidData(format!("missing column {}", CSV_HEADER[i])))
}

fn float(rec: &csv::StringRecord, i: usize) -> Result<f64> {
    let s = field(rec, i)?;
    s.trim().parse::<f64>().map_err(|_| Error::InvalidData(format!("column {}: '{s}' is not a number", CSV_HEADER[i])))
}

/// Parse CSV produced by [`to_csv`]; consecutive rows with the same case,
/// axis, beta, N and T form one table.
pub fn parse_csv(text: &str) -> Result<Vec<ErrorTable>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(Error::InvalidData("unexpected CSV header".into()));
    }
    let mut tables: Vec<ErrorTable> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != CSV_HEADER.len() {
            return Err(Error::InvalidData(format!("row has {} columns", rec.len())));
        }
        let sweep = SweepAxis::parse(field(&rec, 0)?).map_err(|e| Error::InvalidData(e.to_string()))?;
        let order_s = field(&rec, 3)?.trim();
        let order = if order_s.is_empty() { None } else { Some(float(&rec, 3)?) };
        let case = field(&rec, 4)?.to_string();
        let beta = float(&rec, 5)?;
        let degree = field(&rec, 6)?
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::InvalidData("column N is not an integer".into()))?;
        let t_final = float(&rec, 9)?;
        let row = ErrorRow {
            value: float(&rec, 1)?,
            l2_error: float(&rec, 2)?,
            order,
            dt: float(&rec, 7)?,
            theta: float(&rec, 8)?,
            walltime_s: float(&rec, 10)?,
        };
        let same = |t: &ErrorTable| {
            t.case == case
                && t.sweep == sweep
                && t.beta.to_bits() == beta.to_bits()
                && t.degree == degree
                && t.t_final.to_bits() == t_final.to_bits()
        };
        match tables.last_mut() {
            Some(t) if same(t) => t.rows.push(row),
            _ => tables.push(ErrorTable { case, sweep, beta, degree, t_final, rows: vec![row] }),
        }
    }
    Ok(tables)
}
