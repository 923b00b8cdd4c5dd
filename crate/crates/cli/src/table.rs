use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::config::{ConfigError, Format};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Int(v) => (*v).into(),
            Cell::Float(v) => serde_json::Number::from_f64(*v).map_or(serde_json::Value::Null, Into::into),
            Cell::Text(s) => s.clone().into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

/// One flagged grid point, written as a JSON line.
#[derive(Debug, Clone, Serialize)]
pub struct Warning {
    pub command: &'static str,
    pub point: serde_json::Map<String, serde_json::Value>,
    pub message: String,
}

impl Table {
    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    pub fn to_json(&self) -> Vec<u8> {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|r| {
                let obj: serde_json::Map<_, _> =
                    self.header.iter().zip(r).map(|(k, c)| (k.to_string(), c.json())).collect();
                obj.into()
            })
            .collect();
        let mut out = serde_json::to_vec_pretty(&rows).expect("json values serialise");
        out.push(b'\n');
        out
    }

    pub fn to_gnuplot(&self) -> Vec<u8> {
        let mut out = format!("# {}\n", self.header.join(" ")).into_bytes();
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::render).collect();
            out.extend_from_slice(line.join(" ").as_bytes());
            out.push(b'\n');
        }
        out
    }

    pub fn render(&self, format: Format) -> Vec<u8> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), ConfigError> {
    std::fs::write(path, bytes).map_err(|source| ConfigError::Io { path: path.to_owned(), source })
}

fn sibling(path: &Path, suffix: &str) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    s.into()
}

/// Writes the table (stdout without a path), the optional .dat layout and the warning log.
pub fn emit_plotdata(
    table: &Table,
    warnings: &[Warning],
    path: Option<&Path>,
    format: Format,
    gnuplot: bool,
) -> Result<(), ConfigError> {
    let body = table.render(format);
    let mut log = Vec::new();
    for w in warnings {
        serde_json::to_writer(&mut log, w).expect("warning serialises");
        log.push(b'\n');
    }
    match path {
        Some(p) => {
            write_file(p, &body)?;
            if gnuplot {
                write_file(&p.with_extension("dat"), &table.to_gnuplot())?;
            }
            if !warnings.is_empty() {
                write_file(&sibling(p, ".warnings.jsonl"), &log)?;
            }
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(&body)
                .and_then(|_| lock.flush())
                .map_err(|source| ConfigError::Io { path: "<stdout>".into(), source })?;
            if !warnings.is_empty() {
                std::io::stderr().write_all(&log).ok();
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        Table {
            header: vec!["m", "x", "flag"],
            rows: vec![vec![Cell::Int(10), Cell::Float(0.1), Cell::Text("interior".into())]],
        }
    }

    #[test]
    fn csv_layout() {
        let s = String::from_utf8(sample().to_csv()).unwrap();
        assert_eq!(s, "m,x,flag\n10,1.0000000000000001e-1,interior\n");
    }

    #[test]
    fn json_layout() {
        let v: serde_json::Value = serde_json::from_slice(&sample().to_json()).unwrap();
        assert_eq!(v[0]["m"], 10);
        assert_eq!(v[0]["flag"], "interior");
    }

    #[test]
    fn gnuplot_layout() {
        let s = String::from_utf8(sample().to_gnuplot()).unwrap();
        assert!(s.starts_with("# m x flag\n10 "));
    }
}
