//! Report assembly and rendering.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::config::{Config, Format};

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub config: Config,
    pub input_hash: String,
    pub results: Value,
    pub failures: Vec<Value>,
    /// Work counters only; wall-clock time would break byte-identical reruns.
    pub timing: BTreeMap<String, u64>,
    pub csv_header: String,
    pub csv_rows: Vec<String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_json(&self) -> String {
        let doc = json!({
            "config": {
                "command": self.config.command.name(),
                "values": self.config.values(),
                "input_hash": self.input_hash,
            },
            "results": self.results,
            "failures": self.failures,
            "timing": self.timing,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("report is valid JSON");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# command={} input_hash={} failures={}\n{}\n",
            self.config.command,
            self.input_hash,
            self.failures.len(),
            self.csv_header
        );
        for row in &self.csv_rows {
            out.push_str(row);
            out.push('\n');
        }
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }
}

/// `{:e}` for finite values, empty otherwise.
pub fn sci(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:e}"),
        _ => String::new(),
    }
}
