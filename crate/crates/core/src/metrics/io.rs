use std::path::{Path, PathBuf};

use nalgebra::Point2;
use serde::{Deserialize, Serialize};

use super::{InventoryReport, ReferenceTree};
use crate::trunk::{Coverage, DbhEstimate, DbhMethod};

pub const REFERENCE_HEADER: [&str; 4] = ["tree_id", "east_m", "north_m", "dbh_cm"];
pub const REPORT_HEADER: [&str; 11] = [
    "tree_id",
    "x_m",
    "y_m",
    "dbh_hull_cm",
    "dbh_cyl_cm",
    "dbh_ell_cm",
    "dbh_final_cm",
    "method",
    "ref_id",
    "ref_dbh_cm",
    "error_cm",
];

#[derive(Debug, thiserror::Error)]
pub enum MetricsIoError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Csv { path: PathBuf, message: String },
}

#[derive(Debug, Serialize, Deserialize)]
struct ReferenceRow {
    tree_id: String,
    east_m: f64,
    north_m: f64,
    dbh_cm: f64,
}

/// Reads a `tree_id,east_m,north_m,dbh_cm` reference table; rows with a
/// non-positive or non-finite diameter are rejected.
pub fn read_reference_csv(path: &Path) -> Result<Vec<ReferenceTree>, MetricsIoError> {
    let csv_err = |message: String| MetricsIoError::Csv { path: path.to_path_buf(), message };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => MetricsIoError::Io { path: path.to_path_buf(), source },
        other => csv_err(format!("{other:?}")),
    })?;
    let headers = rdr.headers().map_err(|e| csv_err(e.to_string()))?.clone();
    if headers.iter().map(str::trim).ne(REFERENCE_HEADER) {
        return Err(csv_err(format!(
            "expected header '{}', found '{}'",
            REFERENCE_HEADER.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for row in rdr.deserialize::<ReferenceRow>() {
        let row = row.map_err(|e| csv_err(e.to_string()))?;
        if !(row.dbh_cm > 0.0 && row.dbh_cm.is_finite()) {
            return Err(csv_err(format!("tree {}: dbh_cm must be positive, got {}", row.tree_id, row.dbh_cm)));
        }
        if !(row.east_m.is_finite() && row.north_m.is_finite()) {
            return Err(csv_err(format!("tree {}: non-finite location", row.tree_id)));
        }
        out.push(ReferenceTree {
            tree_id: row.tree_id,
            location: Point2::new(row.east_m, row.north_m),
            dbh: row.dbh_cm,
        });
    }
    Ok(out)
}

pub fn write_reference_csv(path: &Path, trees: &[ReferenceTree]) -> Result<(), MetricsIoError> {
    let mut w = writer(path)?;
    for t in trees {
        w.serialize(ReferenceRow {
            tree_id: t.tree_id.clone(),
            east_m: t.location.x,
            north_m: t.location.y,
            dbh_cm: t.dbh,
        })
        .map_err(|e| MetricsIoError::Csv { path: path.to_path_buf(), message: e.to_string() })?;
    }
    w.flush().map_err(|source| MetricsIoError::Io { path: path.to_path_buf(), source })
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>, MetricsIoError> {
    let file = std::fs::File::create(path).map_err(|source| MetricsIoError::Io { path: path.to_path_buf(), source })?;
    Ok(csv::Writer::from_writer(file))
}

fn fmt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.3}")).unwrap_or_default()
}

fn estimate_fields(e: &DbhEstimate) -> Vec<String> {
    vec![
        e.tree_id.to_string(),
        format!("{:.3}", e.stem_location.x),
        format!("{:.3}", e.stem_location.y),
        fmt(e.dbh_hull),
        fmt(e.dbh_cylinder),
        fmt(e.dbh_ellipse),
        fmt(Some(e.dbh_final)),
        e.method_used.to_string(),
    ]
}

/// One row per estimated tree in ascending tree id. Matched rows carry the
/// reference id, reference diameter and final-diameter error; unmatched
/// rows leave those columns empty.
pub fn write_report_csv(path: &Path, report: &InventoryReport) -> Result<(), MetricsIoError> {
    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
    for p in &report.pairs {
        let mut f = estimate_fields(&p.estimate);
        f.push(p.reference.tree_id.clone());
        f.push(fmt(Some(p.reference.dbh)));
        f.push(fmt(Some(p.estimate.dbh_final - p.reference.dbh)));
        rows.push((p.estimate.tree_id, f));
    }
    for e in &report.unmatched_estimates {
        let mut f = estimate_fields(e);
        f.extend([String::new(), String::new(), String::new()]);
        rows.push((e.tree_id, f));
    }
    rows.sort_by_key(|(id, _)| *id);
    let mut w = writer(path)?;
    let csv_err = |e: csv::Error| MetricsIoError::Csv { path: path.to_path_buf(), message: e.to_string() };
    w.write_record(REPORT_HEADER).map_err(csv_err)?;
    for (_, f) in rows {
        w.write_record(&f).map_err(csv_err)?;
    }
    w.flush().map_err(|source| MetricsIoError::Io { path: path.to_path_buf(), source })
}

fn parse_opt(field: &str, column: &str, line: u64) -> Result<Option<f64>, String> {
    let f = field.trim();
    if f.is_empty() {
        return Ok(None);
    }
    f.parse::<f64>()
        .map(Some)
        .map_err(|_| format!("line {line}: column '{column}': invalid number '{f}'"))
}

/// Reads estimates back from a report table. Only the estimate columns are
/// used; coverage is not stored in the table and reads as full.
pub fn read_estimates_csv(path: &Path) -> Result<Vec<DbhEstimate>, MetricsIoError> {
    let csv_err = |message: String| MetricsIoError::Csv { path: path.to_path_buf(), message };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => MetricsIoError::Io { path: path.to_path_buf(), source },
        other => csv_err(format!("{other:?}")),
    })?;
    let headers = rdr.headers().map_err(|e| csv_err(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| csv_err(format!("missing column '{name}'")))
    };
    let idx: Vec<usize> = REPORT_HEADER[..8].iter().map(|c| col(c)).collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for (row_no, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(e.to_string()))?;
        let line = row_no as u64 + 2;
        let get = |k: usize| rec.get(idx[k]).unwrap_or("");
        let need = |k: usize| -> Result<f64, MetricsIoError> {
            parse_opt(get(k), REPORT_HEADER[k], line)
                .map_err(&csv_err)?
                .ok_or_else(|| csv_err(format!("line {line}: column '{}' is empty", REPORT_HEADER[k])))
        };
        let tree_id = get(0)
            .trim()
            .parse::<usize>()
            .map_err(|_| csv_err(format!("line {line}: column 'tree_id': expected an integer, got '{}'", get(0))))?;
        let method = match get(7).trim() {
            "hull" => DbhMethod::Hull,
            "cylinder" => DbhMethod::Cylinder,
            "ellipse" => DbhMethod::Ellipse,
            other => return Err(csv_err(format!("line {line}: column 'method': unknown method '{other}'"))),
        };
        out.push(DbhEstimate {
            tree_id,
            stem_location: Point2::new(need(1)?, need(2)?),
            dbh_hull: parse_opt(get(3), REPORT_HEADER[3], line).map_err(&csv_err)?,
            dbh_cylinder: parse_opt(get(4), REPORT_HEADER[4], line).map_err(&csv_err)?,
            dbh_ellipse: parse_opt(get(5), REPORT_HEADER[5], line).map_err(&csv_err)?,
            dbh_final: need(6)?,
            method_used: method,
            coverage_flag: Coverage::Full,
        });
    }
    Ok(out)
}
