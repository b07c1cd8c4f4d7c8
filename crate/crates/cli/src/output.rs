//! CSV and JSON emission with round-trip float formatting.

use serde_json::ser::Formatter;
use serde_json::Value;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn name(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Compact JSON with every float written as `{:.16e}`. Non-finite floats
/// become `null` before they reach the formatter.
struct FloatFormatter;

impl Formatter for FloatFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn json_string(v: &Value) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FloatFormatter);
    serde::Serialize::serialize(v, &mut ser).expect("JSON values always serialize");
    let mut s = String::from_utf8(buf).expect("serde_json emits UTF-8");
    s.push('\n');
    s
}

/// Builds a CSV document: header plus rows, LF line endings.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut c = Self { text: String::new() };
        c.row(header.iter().map(|s| s.as_ref().to_string()));
        c
    }

    pub fn row(&mut self, cells: impl IntoIterator<Item = String>) {
        let mut first = true;
        for cell in cells {
            if !first {
                self.text.push(',');
            }
            first = false;
            self.text.push_str(&cell);
        }
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Where a command writes its primary document.
#[derive(Debug, Clone)]
pub struct Sink {
    pub out: Option<PathBuf>,
}

impl Sink {
    pub fn write(&self, text: &str) -> io::Result<()> {
        match &self.out {
            Some(p) => fs::write(p, text),
            None => {
                let mut so = io::stdout().lock();
                so.write_all(text.as_bytes())?;
                so.flush()
            }
        }
    }

    /// `<dir>/<stem>.<suffix>.csv` next to the main output, if there is one.
    pub fn sibling(&self, suffix: &str) -> Option<PathBuf> {
        let p = self.out.as_deref()?;
        let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let dir = p.parent().unwrap_or(Path::new(""));
        Some(dir.join(format!("{stem}.{suffix}.csv")))
    }
}

/// A record on stderr, one JSON object per line.
pub fn diagnostic(v: &Value) {
    let mut e = io::stderr().lock();
    let _ = e.write_all(json_string(v).as_bytes());
}
