//! Serialization of result records.
//!
//! Floats are always written with 17 significant digits so that records are
//! byte-stable and round-trip exactly.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::Formatter;
use serde_json::Value;

/// Schema version shared by every payload.
pub const SCHEMA_VERSION: u32 = 1;

/// Compact JSON with fixed-width scientific floats.
pub struct PreciseFormatter;

impl Formatter for PreciseFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            // Not representable in JSON.
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> io::Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, PreciseFormatter);
    value.serialize(&mut ser)?;
    Ok(out)
}

#[must_use]
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        String::new()
    }
}

/// Everything a command produces. `wall_time_s` is the only field that
/// varies between identical runs, and it is written last.
#[derive(Debug, Serialize)]
pub struct Record {
    pub command: &'static str,
    pub schema: String,
    pub config: Value,
    pub resolved: Value,
    pub payload: Value,
    pub diagnostics: Value,
    pub wall_time_s: f64,
}

impl Record {
    pub fn schema_id(command: &str) -> String {
        format!("fockspec/{command}/v{SCHEMA_VERSION}")
    }
}

/// A flat table for CSV output.
#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| (*s).to_owned()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    /// Key/value listing of a JSON object, with nested keys joined by dots.
    pub fn from_object(value: &Value) -> Self {
        let mut t = Self::new(&["key", "value"]);
        flatten("", value, &mut t);
        t
    }

    pub fn write<W: Write>(&self, w: W) -> io::Result<()> {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(&self.header)?;
        for r in &self.rows {
            csv.write_record(r)?;
        }
        csv.flush()
    }
}

fn flatten(prefix: &str, value: &Value, t: &mut Table) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_owned()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&key(k), v, t);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&key(&i.to_string()), v, t);
            }
        }
        other => t.push(vec![prefix.to_owned(), scalar(other)]),
    }
}

/// CSV rendering of a JSON scalar, floats with 17 significant digits.
#[must_use]
pub fn scalar(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => u.to_string(),
            (None, Some(i)) => i.to_string(),
            _ => format_float(n.as_f64().unwrap_or(f64::NAN)),
        },
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
