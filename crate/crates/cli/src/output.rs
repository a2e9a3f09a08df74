use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use symlab_core::verify::Check;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Config,
    Computation,
    Verification,
    Io,
}

impl ErrorKind {
    pub fn exit_code(self) -> u8 {
        match self {
            ErrorKind::Config => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Failure {
    pub kind: ErrorKind,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failed: Vec<Check>,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure { kind: ErrorKind::Config, message: message.into(), failed: vec![] }
    }

    pub fn computation(e: symlab_core::Error) -> Self {
        Failure { kind: ErrorKind::Computation, message: e.to_string(), failed: vec![] }
    }
}

/// Top-level JSON object; `body` fields are flattened after the header.
#[derive(Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub schema_version: u32,
    pub command: &'a str,
    pub coeffs: &'a [f64],
    #[serde(flatten)]
    pub body: T,
}

#[derive(Serialize)]
struct ErrorEnvelope<'a> {
    schema_version: u32,
    error: &'a Failure,
}

pub fn emit_error(f: &Failure) {
    let doc = ErrorEnvelope { schema_version: SCHEMA_VERSION, error: f };
    let text = serde_json::to_string(&doc).unwrap_or_else(|_| format!("{{\"error\":{:?}}}", f.message));
    eprintln!("{text}");
}

/// A CSV table. Floats use Rust's shortest round-trip formatting.
pub struct Table {
    text: String,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { text: header.join(",") + "\n" }
    }

    pub fn row(&mut self, cells: &[String]) {
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            if c.contains([',', '"', '\n']) {
                let _ = write!(self.text, "\"{}\"", c.replace('"', "\"\""));
            } else {
                self.text.push_str(c);
            }
        }
        self.text.push('\n');
    }
}

pub fn json_text<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Failure { kind: ErrorKind::Io, message: e.to_string(), failed: vec![] })?;
    s.push('\n');
    Ok(s)
}

pub fn write_out(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure { kind: ErrorKind::Io, message: e.to_string(), failed: vec![] };
    match out {
        Some(path) => std::fs::write(path, text).map_err(io),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).and_then(|()| stdout.flush()).map_err(io)
        }
    }
}

pub fn csv_text(t: Table) -> String {
    t.text
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_only_when_needed() {
        let mut t = Table::new(&["a", "b"]);
        t.row(&["1".into(), "x,y".into()]);
        assert_eq!(csv_text(t), "a,b\n1,\"x,y\"\n");
    }

    #[test]
    fn config_errors_exit_with_two() {
        assert_eq!(ErrorKind::Config.exit_code(), 2);
        assert_eq!(ErrorKind::Verification.exit_code(), 1);
    }
}
