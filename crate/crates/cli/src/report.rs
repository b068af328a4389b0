use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

/// Bumped whenever the JSON layout changes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    NotConverged,
    InvariantFailed,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::NotConverged => 1,
            Status::InvariantFailed => 3,
        }
    }
}

pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str], rows: Vec<Vec<String>>) -> Self {
        Table {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows,
        }
    }
}

pub struct Outcome {
    pub results: Value,
    pub table: Table,
    pub status: Status,
}

pub fn json_report(args: &[String], outcome: &Outcome, timing: Option<f64>, seed: u64) -> Result<String, String> {
    let report = json!({
        "schema": SCHEMA_VERSION,
        "invocation": args,
        "results": outcome.results,
        "timing": timing.map(|s| json!({ "seconds": s })),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
    });
    serde_json::to_string_pretty(&report)
        .map(|s| s + "\n")
        .map_err(|e| e.to_string())
}

pub fn csv_report(table: &Table) -> Result<String, String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.header).map_err(|e| e.to_string())?;
    for row in &table.rows {
        w.write_record(row).map_err(|e| e.to_string())?;
    }
    let bytes = w.into_inner().map_err(|e| e.to_string())?;
    String::from_utf8(bytes).map_err(|e| e.to_string())
}

pub fn emit(path: Option<&Path>, body: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, body),
        None => std::io::stdout().lock().write_all(body.as_bytes()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_codes() {
        assert_eq!(Status::Ok.code(), 0);
        assert_eq!(Status::NotConverged.code(), 1);
        assert_eq!(Status::InvariantFailed.code(), 3);
    }

    #[test]
    fn csv_quotes_awkward_fields() {
        let t = Table::new(&["label", "value"], vec![vec!["1,0".into(), "0.5".into()]]);
        assert_eq!(csv_report(&t).unwrap(), "label,value\n\"1,0\",0.5\n");
    }

    #[test]
    fn json_layout() {
        let outcome = Outcome {
            results: json!({ "value": 1.5 }),
            table: Table::new(&[], Vec::new()),
            status: Status::Ok,
        };
        let text = json_report(&["scale".into()], &outcome, None, 7).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["schema"], SCHEMA_VERSION);
        assert_eq!(v["seed"], 7);
        assert!(v["timing"].is_null());
        assert!(text.ends_with("}\n"));
    }
}
