//! Output helpers: significant-figure formatting for human tables and
//! full-precision CSV writing for machine consumption.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};

/// Formats with 4 significant figures for human-readable tables.
pub fn sig4(x: f64) -> String {
    sig_figs(x, 4)
}

/// Formats `x` with the given number of significant figures.
pub fn sig_figs(x: f64, figs: i32) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (figs - 1 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Writes rows of full-precision values under a header line. Rust's float
/// formatting is shortest-round-trip, so re-parsing reproduces the values
/// exactly.
pub fn write_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let mut w = BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    );
    writeln!(w, "{header}")?;
    for row in rows {
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Full-precision float cell.
pub fn cell(x: f64) -> String {
    format!("{x}")
}

/// A plain left-padded text table.
pub struct TextTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl TextTable {
    pub fn new<S: Into<String>>(header: Vec<S>) -> Self {
        TextTable {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let ncols = self.header.len();
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.len()).collect();
        for row in &self.rows {
            for (j, v) in row.iter().enumerate().take(ncols) {
                widths[j] = widths[j].max(v.len());
            }
        }
        let mut out = String::new();
        let fmt_row = |cells: &[String], widths: &[usize]| -> String {
            cells
                .iter()
                .zip(widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect::<Vec<_>>()
                .join("  ")
        };
        out.push_str(&fmt_row(&self.header, &widths));
        out.push('\n');
        out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (ncols - 1)));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&fmt_row(row, &widths));
            out.push('\n');
        }
        out
    }

    pub fn to_csv_rows(&self) -> (String, Vec<Vec<String>>) {
        (self.header.join(","), self.rows.clone())
    }
}
