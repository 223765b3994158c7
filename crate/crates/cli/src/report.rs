use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use focktrace::{rel_err, C64};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format `{other}` (expected json or csv)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub check: String,
    pub inputs_digest: String,
    pub value: C64,
    pub reference: C64,
    pub rel_err: f64,
    pub pass: bool,
}

/// First 16 hex digits of the SHA-256 of `parts` joined by `|`.
pub fn digest(parts: &[&str]) -> String {
    let hash = Sha256::digest(parts.join("|").as_bytes());
    hash.iter().take(8).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl Row {
    /// Passes when `rel_err ≤ tol`.
    pub fn compare(check: impl Into<String>, digest: String, value: C64, reference: C64, tol: f64) -> Self {
        let rel = rel_err(value, reference);
        Self {
            check: check.into(),
            inputs_digest: digest,
            value,
            reference,
            rel_err: rel,
            pass: rel <= tol,
        }
    }

    pub fn with_pass(mut self, pass: bool) -> Self {
        self.pass = pass;
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub seed: u64,
    pub rows: Vec<Row>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
}

impl Report {
    pub fn new(seed: u64, mut rows: Vec<Row>) -> Self {
        rows.sort_by(|a, b| a.check.cmp(&b.check));
        Self {
            seed,
            rows,
            details: None,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("report serializes");
                s.push('\n');
                s
            }
            Format::Csv => {
                let mut s =
                    String::from("seed,check,inputs_digest,value_re,value_im,reference_re,reference_im,rel_err,pass\n");
                for r in &self.rows {
                    let _ = writeln!(
                        s,
                        "{},{},{},{:e},{:e},{:e},{:e},{:e},{}",
                        self.seed,
                        csv_field(&r.check),
                        r.inputs_digest,
                        r.value.re,
                        r.value.im,
                        r.reference.re,
                        r.reference.im,
                        r.rel_err,
                        r.pass
                    );
                }
                s
            }
        }
    }

    pub fn emit(&self, format: Format, out: Option<&Path>) -> io::Result<()> {
        let text = self.render(format);
        match out {
            Some(path) => std::fs::write(path, text),
            None => io::stdout().lock().write_all(text.as_bytes()),
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
