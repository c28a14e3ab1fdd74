//! CSV writers.
//!
//! Floats are written with Rust's shortest round-trip formatting, so equal
//! inputs always give byte-identical files. Undefined cells are empty.

use std::fs::File;
use std::path::{Path, PathBuf};

use ammfee_core::{AssetGrid, FeeSchedule, QuadCoeffs, ValueSurface};

use crate::error::CliError;

pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// One CSV file with a fixed header.
pub struct CsvFile {
    path: PathBuf,
    writer: csv::Writer<File>,
    width: usize,
}

impl CsvFile {
    pub fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
        let path = dir.join(name);
        let writer = csv::Writer::from_path(&path).map_err(|source| CliError::Csv { path: path.clone(), source })?;
        let mut file = Self { path, writer, width: header.len() };
        file.row(header.iter().map(|h| h.to_string()).collect())?;
        Ok(file)
    }

    pub fn row(&mut self, cells: Vec<String>) -> Result<(), CliError> {
        debug_assert_eq!(cells.len(), self.width);
        self.writer
            .write_record(&cells)
            .map_err(|source| CliError::Csv { path: self.path.clone(), source })
    }

    pub fn finish(mut self) -> Result<PathBuf, CliError> {
        self.writer
            .flush()
            .map_err(|source| CliError::Io { path: self.path.clone(), source })?;
        Ok(self.path)
    }
}

pub fn write_grid(dir: &Path, name: &str, grid: &AssetGrid) -> Result<PathBuf, CliError> {
    let mut out = CsvFile::create(
        dir,
        name,
        &["i", "y", "phi_y", "z_marginal", "z_sell", "z_buy", "delta_sell", "delta_buy"],
    )?;
    for dense in 0..grid.len() {
        let r = grid.rates_at_dense(dense);
        out.row(vec![
            r.index.to_string(),
            num(grid.points()[dense]),
            num(grid.level_values()[dense]),
            num(r.z_marginal),
            opt(r.sell.map(|s| s.rate)),
            opt(r.buy.map(|s| s.rate)),
            opt(grid.delta_sell(dense)),
            opt(grid.delta_buy(dense)),
        ])?;
    }
    out.finish()
}

/// Fee rows `t, i, y, fee_sell, fee_buy` for every `stride`-th stored time.
pub fn write_fa_fees(
    dir: &Path,
    name: &str,
    grid: &AssetGrid,
    fees: &FeeSchedule,
    stride: usize,
) -> Result<PathBuf, CliError> {
    let mut out = CsvFile::create(dir, name, &["t", "i", "y", "fee_sell", "fee_buy"])?;
    for j in strided(fees.times().len(), stride) {
        for dense in 0..grid.len() {
            out.row(vec![
                num(fees.times()[j]),
                grid.offset(dense).to_string(),
                num(grid.points()[dense]),
                opt(fees.sell(j, dense)),
                opt(fees.buy(j, dense)),
            ])?;
        }
    }
    out.finish()
}

pub fn write_fa_value(
    dir: &Path,
    name: &str,
    grid: &AssetGrid,
    surface: &ValueSurface,
    stride: usize,
) -> Result<PathBuf, CliError> {
    let mut out = CsvFile::create(dir, name, &["t", "i", "y", "w", "g"])?;
    for j in strided(surface.times().len(), stride) {
        for dense in 0..grid.len() {
            out.row(vec![
                num(surface.times()[j]),
                grid.offset(dense).to_string(),
                num(grid.points()[dense]),
                num(surface.w(j, dense)),
                num(surface.g(j, dense)),
            ])?;
        }
    }
    out.finish()
}

pub fn write_sa_coeffs(dir: &Path, name: &str, coeffs: &QuadCoeffs) -> Result<PathBuf, CliError> {
    let mut out = CsvFile::create(dir, name, &["t", "A", "b0", "b1", "c0", "c1", "c2"])?;
    for j in 0..coeffs.len() {
        let mut row = vec![num(coeffs.times[j])];
        row.extend(coeffs.state(j).iter().map(|v| num(*v)));
        out.row(row)?;
    }
    out.finish()
}

/// Indices `0, stride, 2 stride, ...` plus the last index.
pub fn strided(len: usize, stride: usize) -> impl Iterator<Item = usize> {
    let stride = stride.max(1);
    (0..len).filter(move |j| j % stride == 0 || j + 1 == len)
}
