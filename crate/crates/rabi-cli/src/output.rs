//! Deterministic emission. CSV carries a '#'-commented header block with the
//! resolved configuration; JSON is a single compact object. Floats render as
//! `{:.16e}` (17 significant digits) in both, so every value re-parses to the
//! exact same bits and two identical runs produce identical bytes.

use std::io::{self, Write};

use serde::Serialize;

use crate::config::ConfigEcho;
use crate::CliError;

/// 17 significant digits; enough to reconstruct any finite f64 exactly.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Float(f64),
    Int(i64),
    UInt(u64),
    Str(String),
}

impl Field {
    fn render(&self) -> String {
        match self {
            Field::Float(v) => fmt_float(*v),
            Field::Int(v) => v.to_string(),
            Field::UInt(v) => v.to_string(),
            Field::Str(s) => escape_csv(s),
        }
    }
}

/// Quotes a string cell when it holds a comma, quote or newline; embedded
/// quotes double per the usual CSV convention.
fn escape_csv(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        let mut out = String::with_capacity(s.len() + 2);
        out.push('"');
        for ch in s.chars() {
            if ch == '"' {
                out.push('"');
            }
            out.push(ch);
        }
        out.push('"');
        out
    } else {
        s.to_string()
    }
}

/// Rows plus their frozen column names, and optional extra comment lines
/// placed after the configuration block.
pub struct Table {
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Field>>,
    pub notes: Vec<String>,
}

pub fn render_csv(echo: &ConfigEcho, table: &Table) -> String {
    let mut out = String::new();
    for (key, value) in echo.comment_lines() {
        out.push_str("# ");
        out.push_str(key);
        out.push_str(": ");
        out.push_str(&value);
        out.push('\n');
    }
    for note in &table.notes {
        out.push_str("# ");
        out.push_str(note);
        out.push('\n');
    }
    out.push_str(&table.columns.join(","));
    out.push('\n');
    for row in &table.rows {
        debug_assert_eq!(row.len(), table.columns.len());
        let cells: Vec<String> = row.iter().map(Field::render).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// The one JSON shape every command emits.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct Document<R, D> {
    pub config: ConfigEcho,
    pub results: R,
    pub diagnostics: D,
}

struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{value:e}")
    }
}

pub fn render_json<T: Serialize>(doc: &T) -> Result<String, CliError> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter);
    doc.serialize(&mut ser)
        .map_err(|e| CliError::Compute(format!("serialization: {e}")))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| CliError::Compute(format!("serialization: {e}")))
}
