//! Byte-stable JSON and CSV rendering of scenario reports.

use std::fmt::Write;

use serde_json::Value;

/// Floats are written as `{:.16e}` (17 significant digits); integers as integers;
/// object keys in sorted order.
pub fn to_json(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value, 0);
    out.push('\n');
    out
}

fn number(n: &serde_json::Number) -> String {
    if let Some(i) = n.as_i64() {
        i.to_string()
    } else if let Some(u) = n.as_u64() {
        u.to_string()
    } else {
        format!("{:.16e}", n.as_f64().unwrap_or(f64::NAN))
    }
}

fn write_value(out: &mut String, value: &Value, depth: usize) {
    let pad = |out: &mut String, d: usize| out.push_str(&"  ".repeat(d));
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => out.push_str(&number(n)),
        Value::String(s) => out.push_str(&serde_json::to_string(s).unwrap_or_default()),
        Value::Array(items) if items.iter().all(|v| !v.is_object() && !v.is_array()) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(out, item, depth);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(out, depth + 1);
                write_value(out, item, depth + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            for (i, key) in keys.iter().enumerate() {
                pad(out, depth + 1);
                let _ = write!(out, "{}: ", serde_json::to_string(key).unwrap_or_default());
                write_value(out, &map[*key], depth + 1);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push('}');
        }
    }
}

fn cell(value: &Value) -> String {
    match value {
        Value::Null => String::new(),
        Value::Number(n) => number(n),
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(cell).collect::<Vec<_>>().join(";"),
        other => other.to_string(),
    }
}

/// One line per entry of `result.rows` when present, otherwise a single line of
/// the scalar result fields; `pass` is always the last column.
pub fn to_csv(report: &Value) -> Result<String, csv::Error> {
    let result = report.get("result").cloned().unwrap_or(Value::Null);
    let pass = report.get("pass").cloned().unwrap_or(Value::Null);
    let rows: Vec<serde_json::Map<String, Value>> = match result.get("rows") {
        Some(Value::Array(rows)) => rows.iter().filter_map(|r| r.as_object().cloned()).collect(),
        _ => result
            .as_object()
            .map(|m| {
                let scalars = m.iter().filter(|(_, v)| !v.is_object()).map(|(k, v)| (k.clone(), v.clone())).collect();
                vec![scalars]
            })
            .unwrap_or_default(),
    };
    let mut writer = csv::Writer::from_writer(Vec::new());
    if let Some(first) = rows.first() {
        let mut header: Vec<&String> = first.keys().filter(|k| k.as_str() != "pass").collect();
        header.sort();
        let mut names: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
        names.push("pass");
        writer.write_record(&names)?;
        for row in &rows {
            let mut record: Vec<String> = header.iter().map(|k| row.get(*k).map(cell).unwrap_or_default()).collect();
            record.push(cell(&pass));
            writer.write_record(&record)?;
        }
    }
    let bytes = writer.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}
