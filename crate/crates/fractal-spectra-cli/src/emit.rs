//! Tabular output. Floats are written with 17 significant digits so that
//! identical runs give identical bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::{Map, Value};

use fractal_spectra::spectrum::Spectrum;

use crate::config::Format;
use crate::CliError;

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(usize),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Float(x) => format_float(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Float(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Int(n) => Value::from(*n),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Bool(b) => Value::from(*b),
            Cell::Empty => Value::Null,
        }
    }
}

/// Scientific notation with 16 digits after the point.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Table {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), CliError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Array of objects keyed by the header.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self
                        .header
                        .iter()
                        .cloned()
                        .zip(row.iter().map(Cell::json))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }

    pub fn write_json(&self, path: &Path) -> Result<(), CliError> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, &self.to_json())?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    pub fn write(&self, path: &Path, format: Format) -> Result<(), CliError> {
        match format {
            Format::Csv => self.write_csv(path),
            Format::Json => self.write_json(path),
        }
    }
}

pub const SPECTRUM_HEADER: [&str; 8] = [
    "n",
    "level",
    "graph_eigenvalue",
    "renormalized_eigenvalue",
    "multiplicity",
    "birth_level",
    "seed",
    "branches",
];

/// One row per eigenvalue instance; genealogy columns are empty when absent.
pub fn spectrum_table(spectrum: &Spectrum) -> Table {
    let mut t = Table::new(SPECTRUM_HEADER);
    for (i, pair) in spectrum.pairs.iter().enumerate() {
        let (birth, seed, branches) = match &pair.genealogy {
            Some(g) => (
                Cell::Int(g.birth_level),
                Cell::Text(g.seed.to_string()),
                Cell::Text(g.branch_string()),
            ),
            None => (Cell::Empty, Cell::Empty, Cell::Empty),
        };
        t.push(vec![
            Cell::Int(i + 1),
            Cell::Int(spectrum.level),
            Cell::Float(pair.graph_eigenvalue),
            Cell::Float(pair.eigenvalue),
            Cell::Int(pair.multiplicity),
            birth,
            seed,
            branches,
        ]);
    }
    t
}

pub fn emit_spectrum_csv(spectrum: &Spectrum, path: &Path) -> Result<(), CliError> {
    spectrum_table(spectrum).write_csv(path)
}
