use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use super::config::Format;
use super::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

/// 17 significant digits: lossless for f64.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Num(v) => format_number(*v),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            // non-finite values become null
            Cell::Num(v) => Value::from(*v),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Bool(b) => Value::Bool(*b),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).map_err(io_error)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::text)).map_err(io_error)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }

    fn to_json(&self) -> Result<Vec<u8>, CliError> {
        let records: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut m = Map::new();
                for (k, v) in self.header.iter().zip(row) {
                    m.insert((*k).to_string(), v.json());
                }
                Value::Object(m)
            })
            .collect();
        let mut bytes = serde_json::to_vec_pretty(&records).map_err(|e| CliError::Io(e.to_string()))?;
        bytes.push(b'\n');
        Ok(bytes)
    }

    /// Write as `dir/stem.{csv,json}` and return the path.
    pub fn write(&self, dir: &Path, stem: &str, format: Format) -> Result<PathBuf, CliError> {
        let bytes = match format {
            Format::Csv => self.to_csv()?,
            Format::Json => self.to_json()?,
        };
        let path = dir.join(format!("{stem}.{}", format.extension()));
        write_file(&path, &bytes)?;
        Ok(path)
    }
}

fn io_error(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// `T` as it appears in file names.
pub fn t_label(t: f64) -> String {
    format!("{t}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> Table {
        let mut t = Table::new(&["T", "name", "ok"]);
        t.push(vec![0.1.into(), "a".into(), true.into()]);
        t.push(vec![f64::NAN.into(), "b,c".into(), false.into()]);
        t
    }

    #[test]
    fn csv_is_lossless_and_quoted() {
        let s = String::from_utf8(table().to_csv().unwrap()).unwrap();
        assert_eq!(s, "T,name,ok\n1.0000000000000001e-1,a,true\nnan,\"b,c\",false\n");
        let back: f64 = "1.0000000000000001e-1".parse().unwrap();
        assert_eq!(back, 0.1);
    }

    #[test]
    fn json_uses_same_fields() {
        let v: Value = serde_json::from_slice(&table().to_json().unwrap()).unwrap();
        assert_eq!(v[0]["T"], Value::from(0.1));
        assert_eq!(v[1]["T"], Value::Null);
        assert_eq!(v[1]["name"], "b,c");
    }

    #[test]
    fn number_format_round_trips() {
        for x in [std::f64::consts::PI, 1e-300, -2.5, 0.0, 123456789.123] {
            assert_eq!(format_number(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_number(f64::INFINITY), "inf");
    }
}
