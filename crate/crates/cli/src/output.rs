//! Tables and where they go.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use kstep::verify::format_float;
use serde_json::{json, Map, Value};

/// Directory used for outputs when `--output` is absent.
pub const OUTPUT_DIR_ENV: &str = "KSTEP_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }

    pub fn name(self) -> &'static str {
        self.extension()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    UInt(u64),
    Float(f64),
    Bool(bool),
    Text(String),
    Empty,
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::UInt(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::UInt(v) => v.to_string(),
            Cell::Float(v) => format_float(*v),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(v) => v.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::UInt(v) => json!(v),
            Cell::Float(v) => json!(v),
            Cell::Bool(v) => json!(v),
            Cell::Text(v) => json!(v),
            Cell::Empty => Value::Null,
        }
    }
}

/// A result table together with the resolved configuration that produced
/// it.
#[derive(Debug, Clone)]
pub struct Table {
    pub config: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(config: Vec<(String, String)>, columns: Vec<&'static str>) -> Self {
        Self {
            config,
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn config_line(&self) -> String {
        self.config
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.columns).expect("in-memory write");
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::text)).expect("in-memory write");
                }
                let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells");
                format!("# config: {}\n{body}", self.config_line())
            }
            Format::Json => {
                let config: Map<String, Value> =
                    self.config.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let record: Map<String, Value> = self
                            .columns
                            .iter()
                            .zip(row)
                            .map(|(c, v)| (c.to_string(), v.json()))
                            .collect();
                        Value::Object(record)
                    })
                    .collect();
                let mut text = serde_json::to_string_pretty(&json!({ "config": config, "rows": rows }))
                    .expect("tables always serialize");
                text.push('\n');
                text
            }
        }
    }
}

/// Where a rendered table is written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Destination {
    Stdout,
    File(PathBuf),
}

impl Destination {
    /// `--output` if given, else `$KSTEP_OUTPUT_DIR/<default_name>`, else
    /// standard output.
    pub fn resolve(output: Option<&Path>, default_name: &str) -> Self {
        match output {
            Some(p) if p == Path::new("-") => Destination::Stdout,
            Some(p) => Destination::File(p.to_path_buf()),
            None => match std::env::var_os(OUTPUT_DIR_ENV) {
                Some(dir) if !dir.is_empty() => Destination::File(PathBuf::from(dir).join(default_name)),
                _ => Destination::Stdout,
            },
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Destination::Stdout => "-".to_owned(),
            Destination::File(p) => p.display().to_string(),
        }
    }

    pub fn write(&self, text: &str) -> std::io::Result<()> {
        match self {
            Destination::Stdout => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes())?;
                out.flush()
            }
            Destination::File(p) => {
                if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir)?;
                }
                std::fs::write(p, text)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new(vec![("command".into(), "bound".into()), ("N".into(), "4".into())], vec!["a", "b", "c"]);
        t.push(vec![Cell::from(1usize), Cell::from(0.5), Cell::Empty]);
        t.push(vec![Cell::from(true), Cell::from("x,y"), Cell::from(Some(2.0))]);
        t.push(vec![Cell::from(u64::MAX), Cell::from(6.1e-264), Cell::from(1e-5)]);
        t
    }

    #[test]
    fn csv_has_config_comment_and_header() {
        let text = sample().render(Format::Csv);
        assert_eq!(text, "# config: command=bound N=4\na,b,c\n1,0.5,\ntrue,\"x,y\",2\n18446744073709551615,6.1e-264,0.00001\n");
    }

    #[test]
    fn json_keeps_types() {
        let v: Value = serde_json::from_str(&sample().render(Format::Json)).unwrap();
        assert_eq!(v["config"]["N"], "4");
        assert_eq!(v["rows"][0]["b"], 0.5);
        assert!(v["rows"][0]["c"].is_null());
        assert_eq!(v["rows"][1]["a"], true);
    }

    #[test]
    fn explicit_output_wins() {
        assert_eq!(
            Destination::resolve(Some(Path::new("out.csv")), "x.csv"),
            Destination::File(PathBuf::from("out.csv"))
        );
        assert_eq!(Destination::resolve(Some(Path::new("-")), "x.csv"), Destination::Stdout);
    }
}
