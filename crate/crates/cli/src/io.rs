//! File formats: point patterns, covariate rasters, chains and reports.

use std::fs;
use std::path::{Path, PathBuf};

use palm_core::{CovariateField, GridPartition, Point, PointPattern, Window};
use serde::{Deserialize, Serialize};

use crate::config::{resolve, WindowSpec};
use crate::error::{CliError, Result};

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        create_dir(parent)?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.position() {
        Some(pos) => CliError::Data(format!("{} line {}: {e}", path.display(), pos.line())),
        None => CliError::Data(format!("{}: {e}", path.display())),
    }
}

/// Writes rows of serialisable records with a header.
pub fn write_records<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;
    if let Some(parent) = path.parent() {
        create_dir(parent)?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
struct XY {
    x: f64,
    y: f64,
}

/// Reads a pattern CSV with an `x,y` header.
pub fn read_pattern(path: &Path, window: Window) -> Result<PointPattern> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut points = Vec::new();
    for rec in rdr.deserialize::<XY>() {
        let xy = rec.map_err(|e| csv_error(path, e))?;
        if !xy.x.is_finite() || !xy.y.is_finite() {
            return Err(CliError::Data(format!(
                "{} line {}: non-finite coordinate",
                path.display(),
                points.len() + 2
            )));
        }
        let p = Point::new(xy.x, xy.y);
        if !window.contains(p) {
            return Err(CliError::Data(format!(
                "{} line {}: point ({}, {}) lies outside the window",
                path.display(),
                points.len() + 2,
                xy.x,
                xy.y
            )));
        }
        points.push(p);
    }
    PointPattern::new(points, window).map_err(|e| CliError::Data(e.to_string()))
}

pub fn write_pattern(path: &Path, pattern: &PointPattern) -> Result<()> {
    let rows: Vec<XY> = pattern.points().iter().map(|p| XY { x: p.x, y: p.y }).collect();
    if rows.is_empty() {
        return write_text(path, "x,y\n");
    }
    write_records(path, &rows)
}

/// Header of a covariate raster set. Each layer file holds `ny` lines of
/// `nx` comma-separated values; line `k` is the `k`-th row of cells counted
/// upward from `y_min`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RasterHeader {
    pub nx: usize,
    pub ny: usize,
    pub window: WindowSpec,
    pub layers: Vec<RasterLayer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RasterLayer {
    pub name: String,
    pub file: PathBuf,
}

pub fn read_raster_grid(path: &Path, nx: usize, ny: usize) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut values = Vec::with_capacity(nx * ny);
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(rows + 1, |p| p.line() as usize);
        if rec.len() != nx {
            return Err(CliError::Data(format!(
                "{} line {line}: {} values, header declares nx = {nx}",
                path.display(),
                rec.len()
            )));
        }
        for field in rec.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| CliError::Data(format!("{} line {line}: '{field}' is not a number", path.display())))?;
            values.push(v);
        }
        rows += 1;
    }
    if rows != ny {
        return Err(CliError::Data(format!(
            "{}: {rows} rows, header declares ny = {ny}",
            path.display()
        )));
    }
    Ok(values)
}

/// Loads a raster header and its layers.
pub fn read_covariates(header_path: &Path) -> Result<CovariateField> {
    let header: RasterHeader = toml::from_str(&read_text(header_path)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", header_path.display())))?;
    let base = header_path.parent().unwrap_or(Path::new("."));
    let window = header.window.to_window().map_err(|e| CliError::Data(e.to_string()))?;
    let grid = GridPartition::new(window, header.nx, header.ny).map_err(|e| CliError::Data(e.to_string()))?;
    let mut names = Vec::new();
    let mut layers = Vec::new();
    for layer in &header.layers {
        names.push(layer.name.clone());
        layers.push(read_raster_grid(&resolve(base, &layer.file), header.nx, header.ny)?);
    }
    CovariateField::new(grid, names, layers).map_err(|e| CliError::Data(e.to_string()))
}

/// Draws as CSV, one column per parameter.
pub fn write_draws(path: &Path, names: &[String], draws: &[Vec<f64>]) -> Result<()> {
    let mut text = names.join(",");
    text.push('\n');
    for row in draws {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        text.push_str(&line.join(","));
        text.push('\n');
    }
    write_text(path, &text)
}

pub fn read_draws(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let names: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut draws = Vec::new();
    for rec in rdr.deserialize::<Vec<f64>>() {
        let row = rec.map_err(|e| csv_error(path, e))?;
        if row.len() != names.len() {
            return Err(CliError::Data(format!("{}: ragged row {}", path.display(), draws.len() + 2)));
        }
        draws.push(row);
    }
    Ok((names, draws))
}
