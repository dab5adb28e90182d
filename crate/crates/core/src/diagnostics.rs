//! Structured warnings and row-level errors, emitted as JSON lines.

use serde::{Deserialize, Serialize};
use std::io::{self, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Debug,
    Info,
    Warn,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Code {
    MissingColumn,
    ParseError,
    DuplicateKey,
    EmptyPanel,
    NonConsecutiveYears,
    SingleYearFirm,
    MissingPriorYear,
    IdentityViolation,
    NonpositiveBase,
    TrimmedInv,
    TrimmedCf,
    DegenerateDummy,
    ZeroDenominator,
    Usage,
    Io,
    DataError,
}

impl Code {
    pub fn severity(self) -> Severity {
        match self {
            Code::TrimmedInv | Code::TrimmedCf => Severity::Debug,
            Code::MissingPriorYear | Code::SingleYearFirm => Severity::Info,
            Code::NonConsecutiveYears
            | Code::IdentityViolation
            | Code::NonpositiveBase
            | Code::DegenerateDummy
            | Code::ZeroDenominator => Severity::Warn,
            Code::MissingColumn
            | Code::ParseError
            | Code::DuplicateKey
            | Code::EmptyPanel
            | Code::Usage
            | Code::Io
            | Code::DataError => Severity::Error,
        }
    }
}

/// One line of the diagnostics stream:
/// `{"code":…,"row":…,"firm_id":…,"year":…,"message":…}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: Code,
    pub row: Option<u64>,
    pub firm_id: Option<String>,
    pub year: Option<i32>,
    pub message: String,
}

impl Diagnostic {
    pub fn new(code: Code, message: impl Into<String>) -> Self {
        Self {
            code,
            row: None,
            firm_id: None,
            year: None,
            message: message.into(),
        }
    }

    pub fn at_record(code: Code, firm_id: &str, year: Option<i32>, message: impl Into<String>) -> Self {
        Self {
            code,
            row: None,
            firm_id: Some(firm_id.to_string()),
            year,
            message: message.into(),
        }
    }

    pub fn with_row(mut self, row: u64) -> Self {
        self.row = Some(row);
        self
    }

    pub fn severity(&self) -> Severity {
        self.code.severity()
    }
}

pub fn write_json_lines<'a, W, I>(mut out: W, items: I) -> io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a Diagnostic>,
{
    for d in items {
        serde_json::to_writer(&mut out, d)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_line_shape() {
        let d = Diagnostic::at_record(Code::NonConsecutiveYears, "F1", Some(2003), "gap").with_row(4);
        let mut buf = Vec::new();
        write_json_lines(&mut buf, [&d]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "{\"code\":\"non_consecutive_years\",\"row\":4,\"firm_id\":\"F1\",\"year\":2003,\"message\":\"gap\"}\n"
        );
    }
}
