//! Line-oriented trace and fire-log formats.
//!
//! ```text
//! # comment
//! arrive Motion room="bathroom" status=true value=12
//! fire 0 [1,2,3]
//! ```

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{TagTable, Value};
use crate::oracle::Fire;
use crate::record::Record;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {reason}")]
pub struct TraceError {
    pub line: usize,
    pub reason: String,
}

fn err(line: usize, reason: impl Into<String>) -> TraceError {
    TraceError {
        line,
        reason: reason.into(),
    }
}

/// Parses `arrive` lines, interning tag names into `tags`.
pub fn parse_trace(text: &str, tags: &mut TagTable) -> Result<Vec<Record>, TraceError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens = tokenize(line).map_err(|r| err(n + 1, r))?;
        let mut it = tokens.into_iter();
        match it.next().as_deref() {
            Some("arrive") => {}
            Some(other) => return Err(err(n + 1, format!("expected `arrive`, found `{other}`"))),
            None => unreachable!(),
        }
        let tag = it.next().ok_or_else(|| err(n + 1, "missing tag"))?;
        let mut rec = Record::new(tags.intern(&tag));
        for tok in it {
            let (name, value) = tok
                .split_once('=')
                .ok_or_else(|| err(n + 1, format!("field `{tok}` lacks `=`")))?;
            rec = rec.with(name, parse_value(value));
        }
        out.push(rec);
    }
    Ok(out)
}

fn tokenize(line: &str) -> Result<Vec<String>, String> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    let mut chars = line.chars();
    let mut quoted = false;
    while let Some(c) = chars.next() {
        match c {
            '"' => {
                quoted = !quoted;
                cur.push(c);
            }
            '\\' if quoted => {
                cur.push(c);
                cur.push(chars.next().ok_or("dangling escape")?);
            }
            c if c.is_whitespace() && !quoted => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if quoted {
        return Err("unterminated string".into());
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    Ok(tokens)
}

fn parse_value(text: &str) -> Value {
    if let Some(inner) = text.strip_prefix('"').and_then(|t| t.strip_suffix('"')) {
        let mut s = String::with_capacity(inner.len());
        let mut chars = inner.chars();
        while let Some(c) = chars.next() {
            if c == '\\' {
                s.extend(chars.next());
            } else {
                s.push(c);
            }
        }
        return Value::Str(s.into());
    }
    match text {
        "true" => Value::Bool(true),
        "false" => Value::Bool(false),
        "()" => Value::Unit,
        _ => text
            .parse::<i64>()
            .map(Value::Int)
            .unwrap_or_else(|_| Value::Str(text.into())),
    }
}

/// Renders records as `arrive` lines. Fields holding opaque values are skipped.
pub fn write_trace(records: &[Record], tags: &TagTable) -> String {
    let mut out = String::new();
    for r in records {
        match tags.name(r.tag) {
            Some(name) => out.push_str(&format!("arrive {name}")),
            None => out.push_str(&format!("arrive tag{}", r.tag.0)),
        }
        for (name, value) in &r.fields {
            match value {
                Value::Int(v) => write!(out, " {name}={v}"),
                Value::Bool(v) => write!(out, " {name}={v}"),
                Value::Unit => write!(out, " {name}=()"),
                Value::Str(s) => {
                    let escaped = s.replace('\\', "\\\\").replace('"', "\\\"");
                    write!(out, " {name}=\"{escaped}\"")
                }
                Value::Any(_) => Ok(()),
            }
            .expect("writing to a String cannot fail");
        }
        out.push('\n');
    }
    out
}

pub fn write_fires(fires: &[Fire]) -> String {
    fires.iter().map(|f| format!("{f}\n")).collect()
}

pub fn parse_fires(text: &str) -> Result<Vec<Fire>, TraceError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(line.parse::<Fire>().map_err(|r| err(n + 1, r))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_round_trips() {
        let text = "# fig 1\narrive A\narrive C id=2\narrive B name=\"x y\" ok=true\narrive D room=hall\n";
        let mut tags = TagTable::new();
        let recs = parse_trace(text, &mut tags).unwrap();
        assert_eq!(recs.len(), 4);
        assert_eq!(tags.name(recs[1].tag), Some("C"));
        assert_eq!(recs[1].int("id"), Some(2));
        assert_eq!(recs[2].get("name"), Some(&Value::from("x y")));
        assert_eq!(recs[3].get("room"), Some(&Value::from("hall")));
        let again = parse_trace(&write_trace(&recs, &tags), &mut tags).unwrap();
        assert_eq!(again, recs);
    }

    #[test]
    fn bad_lines_report_their_number() {
        let mut tags = TagTable::new();
        let e = parse_trace("arrive A\nsend B\n", &mut tags).unwrap_err();
        assert_eq!(e.line, 2);
        assert!(parse_trace("arrive A x=\"open\n", &mut tags).is_err());
        assert!(parse_trace("arrive A novalue\n", &mut tags).is_err());
    }

    #[test]
    fn fire_logs_round_trip() {
        let fires = vec![
            Fire { pattern_index: 0, key: [1, 2, 3].into_iter().collect() },
            Fire { pattern_index: 2, key: [7].into_iter().collect() },
        ];
        let text = write_fires(&fires);
        assert_eq!(text, "fire 0 [1,2,3]\nfire 2 [7]\n");
        assert_eq!(parse_fires(&text).unwrap(), fires);
        assert!(parse_fires("fire x [1]").is_err());
    }
}
