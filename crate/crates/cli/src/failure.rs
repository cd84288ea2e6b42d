use std::path::Path;

use ordmech::Rational;

#[derive(Debug)]
pub enum Failure {
    Violation,
    Io(String),
    Invalid(String),
    /// The exact maxrank oracle was skipped; output was still written.
    Oracle(String),
    Resource(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Violation => 1,
            Failure::Io(_) => 3,
            Failure::Invalid(_) => 4,
            Failure::Oracle(_) => 5,
            Failure::Resource(_) => 6,
        }
    }

    pub fn message(&self) -> Option<&str> {
        match self {
            Failure::Violation => None,
            Failure::Io(m) | Failure::Invalid(m) | Failure::Oracle(m) | Failure::Resource(m) => Some(m),
        }
    }
}

impl From<ordmech::Error> for Failure {
    fn from(e: ordmech::Error) -> Self {
        match e {
            ordmech::Error::Resource { .. } => Failure::Resource(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

pub fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

/// Writes `text` to `out`, or stdout.
pub fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    let mut body = text.to_string();
    if !body.ends_with('\n') {
        body.push('\n');
    }
    match out {
        Some(p) => std::fs::write(p, body).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

pub fn rational_arg(s: &str) -> Result<Rational, Failure> {
    ordmech::rational::parse(s).ok_or_else(|| Failure::Invalid(format!("not a rational: {s}")))
}

pub fn rational_value(v: &serde_json::Value) -> Result<Rational, Failure> {
    match v {
        serde_json::Value::String(s) => rational_arg(s),
        serde_json::Value::Number(n) => rational_arg(&n.to_string()),
        _ => Err(Failure::Invalid(format!("not a rational: {v}"))),
    }
}
