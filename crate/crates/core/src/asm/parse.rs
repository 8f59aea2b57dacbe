//! Source lines and operand expressions.

use std::fmt;

use super::{AsmError, AsmErrorKind};
use crate::cpu::Mnemonic;

/// Directive names; matched case-insensitively like mnemonics.
pub const DIRECTIVES: [&str; 9] = [
    "ERASE", "ERASLOC", "=", "SETLOC", "BANK", "OCT", "DEC", "ADRES", "FCADR",
];

/// Names accepted as NOOP.
pub const NOOP_ALIASES: [&str; 2] = ["INHINT", "RELINT"];

/// True if `token` names an instruction, alias or directive.
pub fn is_operation(token: &str) -> bool {
    Mnemonic::from_name(token).is_some()
        || NOOP_ALIASES.iter().any(|a| a.eq_ignore_ascii_case(token))
        || DIRECTIVES.iter().any(|d| d.eq_ignore_ascii_case(token))
}

pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

/// One source line split into fields.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SourceLine {
    pub label: Option<String>,
    pub operation: Option<String>,
    pub args: Vec<String>,
    pub comment: Option<String>,
}

impl SourceLine {
    pub fn instruction(operation: &str, args: &[&str]) -> SourceLine {
        SourceLine {
            operation: Some(operation.to_string()),
            args: args.iter().map(|a| a.to_string()).collect(),
            ..SourceLine::default()
        }
    }

    pub fn with_label(mut self, label: &str) -> SourceLine {
        self.label = Some(label.to_string());
        self
    }

    pub fn is_blank(&self) -> bool {
        self.label.is_none() && self.operation.is_none() && self.comment.is_none()
    }

    /// Splits a raw line. A token starting in column 0 is a label unless it
    /// names an operation.
    pub fn parse(raw: &str) -> SourceLine {
        let (code, comment) = match raw.find(';') {
            Some(i) => (&raw[..i], Some(raw[i + 1..].trim().to_string())),
            None => (raw, None),
        };
        let mut tokens = code.split_whitespace().map(str::to_string).peekable();
        let label = match tokens.peek() {
            Some(first) if !code.starts_with(char::is_whitespace) && !is_operation(first) => {
                tokens.next()
            }
            _ => None,
        };
        let operation = tokens.next();
        SourceLine {
            label,
            operation,
            args: tokens.collect(),
            comment,
        }
    }
}

/// Pads `text` to `column`, always leaving at least one space.
fn pad_to(text: &mut String, column: usize) {
    text.push(' ');
    while text.len() < column {
        text.push(' ');
    }
}

impl fmt::Display for SourceLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut text = String::new();
        if let Some(op) = &self.operation {
            if let Some(label) = &self.label {
                text.push_str(label);
            }
            pad_to(&mut text, 8);
            text.push_str(op);
            if !self.args.is_empty() {
                pad_to(&mut text, 16);
                text.push_str(&self.args.join(" "));
            }
        } else if let Some(label) = &self.label {
            text = label.clone();
        }
        if let Some(comment) = &self.comment {
            if text.is_empty() {
                text = format!("; {comment}");
            } else {
                pad_to(&mut text, 24);
                text.push_str("; ");
                text.push_str(comment);
            }
        }
        f.write_str(text.trim_end())
    }
}

/// A whole program, one entry per source line.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SourceProgram {
    pub lines: Vec<SourceLine>,
}

impl SourceProgram {
    pub fn parse(text: &str) -> SourceProgram {
        SourceProgram {
            lines: text.lines().map(SourceLine::parse).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.lines.iter().all(SourceLine::is_blank)
    }
}

impl fmt::Display for SourceProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in &self.lines {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Number(i64),
    Symbol(String),
}

/// Signed sum of terms, e.g. `TIME2+1` or `-5`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub terms: Vec<(i64, Term)>,
}

impl Expr {
    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().filter_map(|(_, t)| match t {
            Term::Symbol(s) => Some(s.as_str()),
            Term::Number(_) => None,
        })
    }
}

/// Parses a literal: octal by default, decimal with a trailing `D`.
pub fn parse_number(token: &str, line: usize) -> Result<i64, AsmError> {
    let bad = || AsmError::new(line, AsmErrorKind::Syntax(format!("bad number {token:?}")));
    let (digits, radix) = match token.strip_suffix(['D', 'd']) {
        Some(d) => (d, 10),
        None => (token, 8),
    };
    if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    i64::from_str_radix(digits, radix).map_err(|_| bad())
}

pub fn parse_expr(text: &str, line: usize) -> Result<Expr, AsmError> {
    let syntax = |msg: String| AsmError::new(line, AsmErrorKind::Syntax(msg));
    let mut terms = Vec::new();
    let mut rest = text.trim();
    let mut sign = 1;
    if let Some(r) = rest.strip_prefix('-') {
        sign = -1;
        rest = r;
    } else if let Some(r) = rest.strip_prefix('+') {
        rest = r;
    }
    loop {
        let end = rest.find(['+', '-']).unwrap_or(rest.len());
        let token = rest[..end].trim();
        if token.is_empty() {
            return Err(syntax(format!("bad expression {text:?}")));
        }
        let term = if token.starts_with(|c: char| c.is_ascii_digit()) {
            Term::Number(parse_number(token, line)?)
        } else if is_identifier(token) {
            Term::Symbol(token.to_string())
        } else {
            return Err(syntax(format!("bad operand {token:?}")));
        };
        terms.push((sign, term));
        if end == rest.len() {
            break;
        }
        sign = if rest.as_bytes()[end] == b'-' { -1 } else { 1 };
        rest = &rest[end + 1..];
    }
    Ok(Expr { terms })
}
