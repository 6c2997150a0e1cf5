//! CSV input and output for points, labels and generated data.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use swards::format_f64;

use crate::CliError;

/// Feature rows read from a points CSV, plus the `label` column if present.
#[derive(Debug)]
pub struct PointsFile {
    pub points: Vec<Vec<f64>>,
    pub labels: Option<Vec<i64>>,
}

fn parse_error(path: &Path, msg: impl Into<String>) -> CliError {
    CliError::Input { path: path.to_path_buf(), msg: msg.into() }
}

fn read_records(path: &Path) -> Result<Vec<csv::StringRecord>, CliError> {
    let file = File::open(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(file);
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| parse_error(path, e.to_string()))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        records.push(rec);
    }
    Ok(records)
}

fn is_header(rec: &csv::StringRecord) -> bool {
    rec.iter().any(|f| f.parse::<f64>().is_err())
}

/// Reads a points CSV. The first row is a header when any of its fields is
/// not a number; a header column named `label` is kept apart from the
/// features.
pub fn read_points(path: &Path) -> Result<PointsFile, CliError> {
    let records = read_records(path)?;
    let (header, body) = match records.split_first() {
        Some((first, rest)) if is_header(first) => (Some(first), rest),
        _ => (None, records.as_slice()),
    };
    let label_col = header.and_then(|h| h.iter().position(|f| f.eq_ignore_ascii_case("label")));
    let mut points = Vec::with_capacity(body.len());
    let mut labels = label_col.map(|_| Vec::with_capacity(body.len()));
    let line_offset = if header.is_some() { 2 } else { 1 };
    for (i, rec) in body.iter().enumerate() {
        let line = i + line_offset;
        let mut row = Vec::with_capacity(rec.len());
        for (c, field) in rec.iter().enumerate() {
            if Some(c) == label_col {
                let label =
                    parse_label(field).ok_or_else(|| parse_error(path, format!("line {line}: bad label {field:?}")))?;
                labels.as_mut().expect("label column present").push(label);
                continue;
            }
            let v: f64 = field
                .parse()
                .map_err(|_| parse_error(path, format!("line {line}: cannot parse {field:?} as a number")))?;
            if !v.is_finite() {
                return Err(parse_error(path, format!("line {line}: non-finite value {field:?}")));
            }
            row.push(v);
        }
        if row.is_empty() {
            return Err(parse_error(path, format!("line {line}: no feature columns")));
        }
        points.push(row);
    }
    if points.is_empty() {
        return Err(parse_error(path, "no data rows"));
    }
    Ok(PointsFile { points, labels })
}

/// Integer label; accepts `3` and `3.0`.
fn parse_label(field: &str) -> Option<i64> {
    field.parse::<i64>().ok().or_else(|| {
        let v: f64 = field.parse().ok()?;
        (v.fract() == 0.0 && v.abs() < 9.0e15).then_some(v as i64)
    })
}

/// Reads a labelling. Accepts `index,label` files as written by `cluster`,
/// points files with a `label` column, and single-column files.
pub fn read_labels(path: &Path) -> Result<Vec<i64>, CliError> {
    let records = read_records(path)?;
    let (header, body) = match records.split_first() {
        Some((first, rest)) if is_header(first) => (Some(first), rest),
        _ => (None, records.as_slice()),
    };
    let col = match header.and_then(|h| h.iter().position(|f| f.eq_ignore_ascii_case("label"))) {
        Some(c) => c,
        None => match body.first() {
            Some(rec) if rec.len() == 2 && header.is_none() => 1,
            Some(rec) if rec.len() == 1 => 0,
            Some(_) => {
                return Err(parse_error(path, "cannot tell which column holds the labels; add a `label` header"))
            }
            None => return Err(parse_error(path, "no data rows")),
        },
    };
    let line_offset = if header.is_some() { 2 } else { 1 };
    body.iter()
        .enumerate()
        .map(|(i, rec)| {
            let field = rec.get(col).unwrap_or("");
            parse_label(field)
                .ok_or_else(|| parse_error(path, format!("line {}: bad label {field:?}", i + line_offset)))
        })
        .collect()
}

pub fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<(), CliError> {
    let mut w = create(path)?;
    let err = io_err(path);
    writeln!(w, "index,label").map_err(&err)?;
    for (i, l) in labels.iter().enumerate() {
        writeln!(w, "{i},{l}").map_err(&err)?;
    }
    w.flush().map_err(&err)
}

/// Writes `x,y,...,label` rows; columns beyond two are named `x3`, `x4`, ...
pub fn write_labeled_points(path: &Path, points: &[Vec<f64>], labels: &[usize]) -> Result<(), CliError> {
    let mut w = create(path)?;
    let err = io_err(path);
    let dim = points.first().map_or(2, Vec::len);
    let mut header: Vec<String> = ["x", "y"].iter().take(dim).map(|s| s.to_string()).collect();
    header.extend((3..=dim).map(|i| format!("x{i}")));
    header.push("label".into());
    writeln!(w, "{}", header.join(",")).map_err(&err)?;
    for (p, l) in points.iter().zip(labels) {
        let mut fields: Vec<String> = p.iter().map(|&v| format_f64(v)).collect();
        fields.push(l.to_string());
        writeln!(w, "{}", fields.join(",")).map_err(&err)?;
    }
    w.flush().map_err(&err)
}

pub fn path_string(p: &Path) -> String {
    p.display().to_string()
}
