//! Command reports: a list of JSON records and an overall verdict, written
//! as one JSON document or as a flattened CSV table.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub pass: bool,
    pub records: Vec<Value>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report { command: command.to_string(), pass: true, records: Vec::new() }
    }

    /// Append a record; its `pass` field, when present, feeds the verdict.
    pub fn push<T: Serialize>(&mut self, kind: &str, record: &T) -> Result<(), serde_json::Error> {
        let mut v = serde_json::to_value(record)?;
        if let Value::Object(m) = &mut v {
            if let Some(Value::Bool(p)) = m.get("pass") {
                self.pass &= *p;
            }
            m.insert("record".to_string(), Value::String(kind.to_string()));
        }
        self.records.push(v);
        Ok(())
    }

    pub fn fail(&mut self) {
        self.pass = false;
    }

    /// One CSV row per record with nested keys joined by `.`.
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let rows: Vec<Map<String, Value>> = self
            .records
            .iter()
            .map(|r| {
                let mut m = Map::new();
                flatten("", r, &mut m);
                m
            })
            .collect();
        let mut seen = BTreeSet::new();
        let mut cols = vec!["record".to_string()];
        seen.insert("record".to_string());
        for r in &rows {
            for k in r.keys() {
                if seen.insert(k.clone()) {
                    cols.push(k.clone());
                }
            }
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&cols)?;
        for r in &rows {
            w.write_record(cols.iter().map(|c| r.get(c).map(cell).unwrap_or_default()))?;
        }
        let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Write `<dir>/<command>.json` or `.csv` and return the path.
    pub fn write(&self, dir: &Path, format: Format) -> anyhow::Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let (ext, body) = match format {
            Format::Json => ("json", serde_json::to_string_pretty(self)?),
            Format::Csv => ("csv", self.to_csv()?),
        };
        let path = dir.join(format!("{}.{ext}", self.command));
        fs::write(&path, body)?;
        Ok(path)
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Map<String, Value>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&key(k), x, out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&key(&i.to_string()), x, out);
            }
        }
        _ => {
            out.insert(prefix.to_string(), v.clone());
        }
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        v => v.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn verdict_and_flattening() {
        let mut r = Report::new("demo");
        r.push("cell", &json!({"s": 3.0, "pass": true, "pair": [1, 2]})).unwrap();
        assert!(r.pass);
        r.push("cell", &json!({"s": 4.0, "pass": false, "extra": {"a": "x"}})).unwrap();
        assert!(!r.pass);
        let csv = r.to_csv().unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "record,pair.0,pair.1,pass,s,extra.a");
        assert_eq!(lines.next().unwrap(), "cell,1,2,true,3.0,");
        assert_eq!(lines.next().unwrap(), "cell,,,false,4.0,x");
    }
}
