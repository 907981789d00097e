use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    Usage,
    Config,
    Space,
    Objective,
    Mismatch,
    Run,
    Io,
}

/// One problem, located in a file when possible.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<u64>,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.file, self.line) {
            (Some(file), Some(line)) => write!(f, "{}:{line}: {}", file.display(), self.message),
            (Some(file), None) => write!(f, "{}: {}", file.display(), self.message),
            _ => f.write_str(&self.message),
        }
    }
}

/// Failure of a command, printed to stderr as one JSON record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub findings: Vec<Finding>,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        CliError {
            kind,
            message: message.into(),
            findings: Vec::new(),
        }
    }

    /// An error located in `file`; the line is taken from `line` or, failing
    /// that, from a "line N" mention in the message.
    pub fn in_file(kind: ErrorKind, file: &Path, line: Option<u64>, message: impl Into<String>) -> Self {
        let message = message.into();
        let finding = Finding {
            file: Some(file.to_path_buf()),
            line: line.or_else(|| line_hint(&message)),
            message,
        };
        CliError {
            kind,
            message: finding.to_string(),
            findings: vec![finding],
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::in_file(ErrorKind::Io, path, None, err.to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

/// Extracts N from "... line N ..." as written by the TOML and table parsers.
fn line_hint(message: &str) -> Option<u64> {
    let rest = &message[message.find("line ")? + 5..];
    let digits: String = rest.chars().take_while(char::is_ascii_digit).collect();
    digits.parse().ok()
}

/// 1-based line of the first occurrence of `needle` in `text`.
pub fn line_of(text: &str, needle: &str) -> Option<u64> {
    let at = text.find(needle)?;
    Some(text[..at].matches('\n').count() as u64 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_hints() {
        assert_eq!(line_hint("TOML parse error at line 3, column 1"), Some(3));
        assert_eq!(line_hint("objective table line 12: bad"), Some(12));
        assert_eq!(line_hint("no location"), None);
        assert_eq!(line_of("a\nb\nc", "c"), Some(3));
    }

    #[test]
    fn json_record_is_one_line() {
        let e = CliError::in_file(ErrorKind::Objective, Path::new("t.csv"), Some(4), "bad row");
        let text = e.to_json();
        assert!(!text.contains('\n'));
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["error"]["kind"], "objective");
        assert_eq!(v["error"]["findings"][0]["line"], 4);
    }
}
