//! Report documents: JSON with sorted keys and every numeric field
//! rendered as a decimal string, so identical runs emit identical bytes.

use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub threads: usize,
    pub format: OutputFormat,
}

pub fn int(v: impl Into<i128>) -> Value {
    Value::String(v.into().to_string())
}

pub fn uint(v: u64) -> Value {
    Value::String(v.to_string())
}

/// Shortest decimal string that round-trips the value.
pub fn real(v: f64) -> Value {
    Value::String(format!("{v}"))
}

pub fn text(v: impl Into<String>) -> Value {
    Value::String(v.into())
}

pub fn flag(v: bool) -> Value {
    Value::Bool(v)
}

/// Assembles the standard report envelope: command, config echo, result.
pub fn envelope(command: &str, config: &RunConfig, extra: &[(&str, Value)], result: Value) -> Value {
    let mut cfg = Map::new();
    cfg.insert("seed".into(), uint(config.seed));
    cfg.insert("threads".into(), int(config.threads as i128));
    cfg.insert(
        "format".into(),
        text(match config.format {
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
        }),
    );
    for (key, value) in extra {
        cfg.insert((*key).into(), value.clone());
    }
    let mut root = Map::new();
    root.insert("command".into(), text(command));
    root.insert("config".into(), Value::Object(cfg));
    root.insert("result".into(), result);
    Value::Object(root)
}

pub fn render(report: &Value) -> String {
    let mut out = serde_json::to_string_pretty(report).expect("report is valid JSON");
    out.push('\n');
    out
}

pub fn obj(fields: Vec<(&str, Value)>) -> Value {
    let mut map = Map::new();
    for (key, value) in fields {
        map.insert(key.into(), value);
    }
    Value::Object(map)
}

/// Structural check every emitted report must pass: the envelope fields
/// exist, the config echoes seed/threads/format, and every number is a
/// decimal string (raw JSON numbers are not allowed anywhere).
pub fn validate_report(report: &Value) -> Result<(), String> {
    let root = report.as_object().ok_or("report root must be an object")?;
    let command = root.get("command").ok_or("missing 'command'")?;
    if !command.is_string() {
        return Err("'command' must be a string".into());
    }
    let config = root
        .get("config")
        .and_then(Value::as_object)
        .ok_or("missing 'config' object")?;
    for key in ["seed", "threads", "format"] {
        if !config.get(key).is_some_and(Value::is_string) {
            return Err(format!("config must echo '{key}' as a string"));
        }
    }
    if !root.contains_key("result") {
        return Err("missing 'result'".into());
    }
    check_no_raw_numbers(report)
}

fn check_no_raw_numbers(value: &Value) -> Result<(), String> {
    match value {
        Value::Number(n) => Err(format!("raw number {n} in report; numbers must be strings")),
        Value::Array(items) => items.iter().try_for_each(check_no_raw_numbers),
        Value::Object(map) => map.values().try_for_each(check_no_raw_numbers),
        _ => Ok(()),
    }
}

/// Renders rows of (header, records) as CSV.
pub fn render_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let escaped: Vec<String> = row
            .iter()
            .map(|cell| {
                if cell.contains(',') || cell.contains('"') {
                    format!("\"{}\"", cell.replace('"', "\"\""))
                } else {
                    cell.clone()
                }
            })
            .collect();
        out.push_str(&escaped.join(","));
        out.push('\n');
    }
    out
}
