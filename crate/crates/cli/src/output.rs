use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::CliError;

/// A named table of rows in column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: impl Into<String>, headers: &[&'static str]) -> Self {
        Table { name: name.into(), headers: headers.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    /// CSV without header comments. Strings are written verbatim, other
    /// values in their JSON spelling.
    pub fn csv_body(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers)?;
        for row in &self.rows {
            w.write_record(row.iter().map(cell))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Value {
        let rows = self
            .rows
            .iter()
            .map(|r| Value::Object(self.headers.iter().map(|h| h.to_string()).zip(r.iter().cloned()).collect::<Map<_, _>>()))
            .collect();
        Value::Array(rows)
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// Outcome of one asserted bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    /// Instances the bound was checked on.
    pub checked: usize,
    pub detail: String,
    /// The first offending instance, complete enough to replay.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Value>,
}

impl Assertion {
    pub fn pass(name: &str, checked: usize, detail: impl Into<String>) -> Self {
        Assertion { name: name.into(), passed: true, checked, detail: detail.into(), counterexample: None }
    }

    pub fn fail(name: &str, checked: usize, detail: impl Into<String>, counterexample: Value) -> Self {
        Assertion { name: name.into(), passed: false, checked, detail: detail.into(), counterexample: Some(counterexample) }
    }

    /// Passes when `first_failure` is `None`.
    pub fn check(name: &str, checked: usize, ok_detail: impl Into<String>, first_failure: Option<(String, Value)>) -> Self {
        match first_failure {
            None => Assertion::pass(name, checked, ok_detail),
            Some((detail, cx)) => Assertion::fail(name, checked, detail, cx),
        }
    }

    pub fn summary_line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let mut line = format!("{verdict} {} [{} checked]: {}", self.name, self.checked, self.detail);
        if let Some(cx) = &self.counterexample {
            line.push_str(&format!("; counterexample {cx}"));
        }
        line
    }
}

/// Everything one subcommand produced. The first table is the primary one.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub tables: Vec<Table>,
    pub assertions: Vec<Assertion>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

fn header_comment(command: &str, config: &Value) -> String {
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    format!("# gapscope {} {command}\n# generated_unix {stamp}\n# config {config}\n", env!("CARGO_PKG_VERSION"))
}

fn json_document(command: &str, config: &Value, report: &Report) -> Value {
    let tables: Map<String, Value> = report.tables.iter().map(|t| (t.name.clone(), t.to_json())).collect();
    json!({ "command": command, "config": config, "tables": tables, "assertions": report.assertions })
}

/// Writes the primary output to `out`, or every table plus the resolved
/// config to `dir`. Returns the summary lines.
pub fn emit(
    command: &str,
    config: &Value,
    report: &Report,
    format: Format,
    dir: Option<&Path>,
    out: &mut dyn Write,
) -> Result<Vec<String>, CliError> {
    match (dir, format) {
        (None, Format::Csv) => {
            let main = report.tables.first().expect("every command emits a table");
            write!(out, "{}{}", header_comment(command, config), main.csv_body()?)?;
        }
        (None, Format::Json) => {
            writeln!(out, "{}", serde_json::to_string_pretty(&json_document(command, config, report))?)?;
        }
        (Some(dir), format) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(format!("{command}.config.json")), serde_json::to_string_pretty(config)? + "\n")?;
            match format {
                Format::Csv => {
                    for (i, t) in report.tables.iter().enumerate() {
                        let file = if i == 0 { format!("{command}.csv") } else { format!("{command}.{}.csv", t.name) };
                        fs::write(dir.join(file), header_comment(command, config) + &t.csv_body()?)?;
                    }
                }
                Format::Json => {
                    let doc = json_document(command, config, report);
                    fs::write(dir.join(format!("{command}.json")), serde_json::to_string_pretty(&doc)? + "\n")?;
                }
            }
            let failures: Vec<&Assertion> = report.assertions.iter().filter(|a| !a.passed).collect();
            if !failures.is_empty() {
                fs::write(dir.join(format!("{command}.counterexamples.json")), serde_json::to_string_pretty(&failures)? + "\n")?;
            }
        }
    }
    Ok(report.assertions.iter().map(Assertion::summary_line).collect())
}

/// The CSV text with `#` comment lines removed.
pub fn csv_body_of(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect()
}
