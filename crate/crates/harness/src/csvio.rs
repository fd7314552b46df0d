//! CSV dialect: comma separated, `.` decimal point, one header row, any
//! number of leading `#` metadata lines.

use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{HarnessError, Result};

/// A table with `#` metadata lines.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub metadata: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self {
            metadata: Vec::new(),
            header,
            rows: Vec::new(),
        }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    /// Columns named `prefix1..prefixN` filled from a matrix.
    pub fn from_matrix(prefix: &str, m: &DMatrix<f64>) -> Self {
        let header = (1..=m.ncols()).map(|j| format!("{prefix}{j}")).collect();
        let mut t = Table::new(header);
        for r in m.row_iter() {
            t.push(r.iter().map(|v| fmt_f64(*v)).collect());
        }
        t
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}: {v}").map_err(|e| HarnessError::io("<output>", e))?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| HarnessError::io("<output>", e))?;
        Ok(())
    }

    pub fn to_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        String::from_utf8(buf).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn write_file(&self, path: &std::path::Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| HarnessError::io(path.display().to_string(), e))?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut metadata = Vec::new();
        for line in text.lines() {
            let Some(rest) = line.strip_prefix('#') else {
                continue;
            };
            if let Some((k, v)) = rest.split_once(':') {
                metadata.push((k.trim().to_string(), v.trim().to_string()));
            }
        }
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        let header = rdr.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            rows.push(rec?.iter().map(str::to_string).collect());
        }
        Ok(Self {
            metadata,
            header,
            rows,
        })
    }

    pub fn read_file(path: &std::path::Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| HarnessError::io(path.display().to_string(), e))?;
        Self::parse(&text)
    }

    /// All cells as numbers, one matrix row per table row.
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        let cols = self.header.len();
        let mut vals = Vec::with_capacity(self.rows.len() * cols);
        for (i, r) in self.rows.iter().enumerate() {
            if r.len() != cols {
                return Err(HarnessError::Config(format!(
                    "row {} has {} fields, header has {cols}",
                    i + 1,
                    r.len()
                )));
            }
            for cell in r {
                vals.push(cell.parse::<f64>().map_err(|_| {
                    HarnessError::Config(format!("row {}: `{cell}` is not a number", i + 1))
                })?);
            }
        }
        Ok(DMatrix::from_row_slice(self.rows.len(), cols, &vals))
    }

    pub fn metadata_value(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// Shortest representation that parses back to the same f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}
