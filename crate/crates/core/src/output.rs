//! Tabular output in CSV or JSON with a provenance header.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
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
}

/// Numeric table; every value is written with 17 significant digits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, config_hash: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# {TOOL_NAME} {TOOL_VERSION} config_hash={config_hash} table={}",
            self.name
        );
        let _ = writeln!(s, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format_f64(*v)).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }

    pub fn to_json(&self, config_hash: &str) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            tool: &'a str,
            version: &'a str,
            config_hash: &'a str,
            table: &'a str,
            columns: &'a [String],
            rows: Vec<Vec<serde_json::Value>>,
        }
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().map(|v| json_number(*v)).collect())
            .collect();
        let doc = Doc {
            tool: TOOL_NAME,
            version: TOOL_VERSION,
            config_hash,
            table: &self.name,
            columns: &self.columns,
            rows,
        };
        serde_json::to_string_pretty(&doc).expect("table serializes")
    }

    pub fn render(&self, format: Format, config_hash: &str) -> String {
        match format {
            Format::Csv => self.to_csv(config_hash),
            Format::Json => self.to_json(config_hash),
        }
    }

    /// Writes `<dir>/<name>.<ext>` and returns the path.
    pub fn write_to(
        &self,
        dir: &Path,
        format: Format,
        config_hash: &str,
    ) -> Result<std::path::PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.{}", self.name, format.extension()));
        let mut f = std::fs::File::create(&path)?;
        f.write_all(self.render(format, config_hash).as_bytes())?;
        Ok(path)
    }
}

/// Scientific notation, round-trip exact.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

// JSON has no NaN or infinity; those go out as strings
fn json_number(v: f64) -> serde_json::Value {
    serde_json::Number::from_f64(v)
        .map(serde_json::Value::Number)
        .unwrap_or_else(|| serde_json::Value::String(v.to_string()))
}
