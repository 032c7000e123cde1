//! Plain-text ground model files.
//!
//! ```text
//! origin_x 12.5
//! origin_y -3.0
//! cell_size 0.25
//! ncols 3
//! nrows 2
//! 0.1 0.2 0.3
//! 0.4 0.5 0.6
//! ```
//! Rows are stored bottom-up (row 0 = smallest y), values left to right.

use std::fmt::Write as _;
use std::path::Path;

use super::{GridGeometry, GroundError, GroundModel};

pub fn write_ground_model(model: &GroundModel, path: &Path) -> Result<(), GroundError> {
    let g = &model.geometry;
    let mut out = String::new();
    let _ = writeln!(out, "origin_x {:?}", g.origin.0);
    let _ = writeln!(out, "origin_y {:?}", g.origin.1);
    let _ = writeln!(out, "cell_size {:?}", g.cell_size);
    let _ = writeln!(out, "ncols {}", g.ncols);
    let _ = writeln!(out, "nrows {}", g.nrows);
    for row in model.cells.chunks(g.ncols) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|source| GroundError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_ground_model(path: &Path) -> Result<GroundModel, GroundError> {
    let text = std::fs::read_to_string(path).map_err(|source| GroundError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse(&text).map_err(|message| GroundError::Format {
        path: path.display().to_string(),
        message,
    })
}

fn parse(text: &str) -> Result<GroundModel, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let mut header = |key: &str| -> Result<String, String> {
        let line = lines.next().ok_or(format!("missing '{key}'"))?;
        let mut tok = line.split_whitespace();
        match (tok.next(), tok.next()) {
            (Some(k), Some(v)) if k == key => Ok(v.to_string()),
            _ => Err(format!("expected '{key} <value>', got '{line}'")),
        }
    };
    let num = |s: String| s.parse::<f64>().map_err(|_| format!("invalid number '{s}'"));
    let int = |s: String| s.parse::<usize>().map_err(|_| format!("invalid integer '{s}'"));
    let origin_x = num(header("origin_x")?)?;
    let origin_y = num(header("origin_y")?)?;
    let cell_size = num(header("cell_size")?)?;
    let ncols = int(header("ncols")?)?;
    let nrows = int(header("nrows")?)?;
    if !(cell_size > 0.0) || ncols == 0 || nrows == 0 {
        return Err("grid must have positive cell size and dimensions".into());
    }
    let mut cells = Vec::with_capacity(ncols * nrows);
    for tok in lines.flat_map(str::split_whitespace) {
        cells.push(tok.parse::<f64>().map_err(|_| format!("invalid value '{tok}'"))?);
    }
    if cells.len() != ncols * nrows {
        return Err(format!("expected {} values, found {}", ncols * nrows, cells.len()));
    }
    Ok(GroundModel {
        geometry: GridGeometry {
            origin: (origin_x, origin_y),
            cell_size,
            ncols,
            nrows,
        },
        cells,
    })
}
