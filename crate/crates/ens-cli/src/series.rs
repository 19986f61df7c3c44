//! Streaming CSV time-series writer and reader. Floats are printed with 17
//! significant digits so a re-read reproduces the run bit for bit; rows are
//! flushed as they are written so an aborted run leaves a usable partial
//! series.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{CliError, Result};

pub struct SeriesWriter {
    out: BufWriter<File>,
    columns: usize,
}

impl SeriesWriter {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let file = File::create(path)?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{}", header.join(","))?;
        out.flush()?;
        Ok(Self { out, columns: header.len() })
    }

    pub fn write_row(&mut self, row: &[f64]) -> Result<()> {
        debug_assert_eq!(row.len(), self.columns);
        let mut line = String::with_capacity(row.len() * 26);
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&format!("{v:.16e}"));
        }
        writeln!(self.out, "{line}")?;
        self.out.flush()?;
        Ok(())
    }
}

/// A fully loaded series: column names plus column-major values.
#[derive(Clone, Debug)]
pub struct Series {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Series {
    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path)?;
        let mut lines = BufReader::new(file).lines();
        let header = lines
            .next()
            .ok_or_else(|| CliError::Series(format!("{}: empty file", path.display())))??;
        let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
        for (ln, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != names.len() {
                return Err(CliError::Series(format!(
                    "{}: row {} has {} cells, header has {}",
                    path.display(),
                    ln + 2,
                    cells.len(),
                    names.len()
                )));
            }
            for (c, cell) in cells.iter().enumerate() {
                let v: f64 = cell.trim().parse().map_err(|e| {
                    CliError::Series(format!("{}: row {}: {e}", path.display(), ln + 2))
                })?;
                columns[c].push(v);
            }
        }
        Ok(Self { names, columns })
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        let i = self
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| CliError::Series(format!("no column named {name}")))?;
        Ok(&self.columns[i])
    }

    /// Evaluate a column expression: either a plain name or several names
    /// joined with '+', summed pointwise.
    pub fn eval(&self, expr: &str) -> Result<Vec<f64>> {
        let mut acc: Option<Vec<f64>> = None;
        for part in expr.split('+') {
            let col = self.column(part.trim())?;
            match &mut acc {
                None => acc = Some(col.to_vec()),
                Some(v) => {
                    for (a, b) in v.iter_mut().zip(col) {
                        *a += b;
                    }
                }
            }
        }
        acc.ok_or_else(|| CliError::Series(format!("empty expression {expr:?}")))
    }

    pub fn len(&self) -> usize {
        self.columns.first().map(|c| c.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
