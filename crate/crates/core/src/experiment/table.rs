use std::io::Write;
use std::path::Path;

use crate::dynamics::fmt17;
use crate::{Error, Result};

/// CSV output: `#` metadata lines, a header row and string cells.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub metadata: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Table {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn push_numbers(&mut self, values: &[f64]) {
        self.rows.push(values.iter().map(|v| fmt17(*v)).collect());
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e: std::io::Error| Error::Io {
            path: "<output>".into(),
            source: e,
        };
        for m in &self.metadata {
            writeln!(w, "# {m}").map_err(io)?;
        }
        let mut cw = csv::Writer::from_writer(w);
        cw.write_record(&self.header)?;
        for r in &self.rows {
            cw.write_record(r)?;
        }
        cw.flush().map_err(io)?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8 output")
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        self.write(std::io::BufWriter::new(f))
    }

    /// Reads a table written by [`Table::write`].
    pub fn read(path: &Path) -> Result<Table> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let mut t = Table::default();
        let mut body = String::new();
        for line in text.lines() {
            match line.strip_prefix('#') {
                Some(m) => t.metadata.push(m.trim_start().to_string()),
                None => {
                    body.push_str(line);
                    body.push('\n');
                }
            }
        }
        let mut rd = csv::ReaderBuilder::new().flexible(false).from_reader(body.as_bytes());
        t.header = rd.headers()?.iter().map(String::from).collect();
        for rec in rd.records() {
            t.rows.push(rec?.iter().map(String::from).collect());
        }
        Ok(t)
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::config(name, format!("column not found (have {})", self.header.join(","))))
    }
}
