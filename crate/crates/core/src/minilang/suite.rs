//! The `.tests` format: `name | arg literals | expected output`.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use super::ast::{Program, Type};
use super::error::SuiteError;
use super::lexer::{Lexer, Tok};
use super::printer::float_literal;
use crate::value::Value;

#[derive(Debug, Clone, PartialEq)]
pub struct TestCase {
    pub name: String,
    pub args: Vec<Value>,
    pub expected_output: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TestSuite {
    pub tests: Vec<TestCase>,
}

impl TestSuite {
    pub fn new(tests: Vec<TestCase>) -> Self {
        Self { tests }
    }

    pub fn len(&self) -> usize {
        self.tests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tests.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&TestCase> {
        self.tests.iter().find(|t| t.name == name)
    }
}

/// Output normalization used for verdicts: trailing whitespace is dropped on
/// every line, and trailing blank lines are ignored.
pub fn normalize_output(text: &str) -> String {
    let mut lines: Vec<&str> = text.split('\n').map(str::trim_end).collect();
    while lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    lines.join("\n")
}

pub fn outputs_match(actual: &str, expected: &str) -> bool {
    normalize_output(actual) == normalize_output(expected)
}

pub fn parse_test_suite(text: &str, program: &Program) -> Result<TestSuite, SuiteError> {
    let params: Vec<Type> = program.entry().params.iter().map(|p| p.ty.clone()).collect();
    let mut seen = BTreeSet::new();
    let mut tests = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (name, args_text, expected) = split_fields(raw).ok_or_else(|| SuiteError::Malformed {
            line,
            message: "expected `name | args | expected output`".into(),
        })?;
        let name = name.trim().to_string();
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(SuiteError::Malformed {
                line,
                message: format!("invalid test name `{name}`"),
            });
        }
        let args = parse_args(args_text).map_err(|message| SuiteError::Malformed { line, message })?;
        if args.len() != params.len() {
            return Err(SuiteError::Arity {
                line,
                name,
                expected: params.len(),
                found: args.len(),
            });
        }
        let mut typed = Vec::with_capacity(args.len());
        for (index, (arg, ty)) in args.into_iter().zip(&params).enumerate() {
            let found = arg.type_name();
            match coerce(arg, ty) {
                Some(v) => typed.push(v),
                None => {
                    return Err(SuiteError::ArgType {
                        line,
                        name,
                        index: index + 1,
                        expected: ty.to_string(),
                        found,
                    })
                }
            }
        }
        if !seen.insert(name.clone()) {
            return Err(SuiteError::Duplicate { line, name });
        }
        tests.push(TestCase {
            name,
            args: typed,
            expected_output: unescape_expected(expected.trim()),
        });
    }
    Ok(TestSuite { tests })
}

/// Splits on the first two unquoted, unescaped pipes.
fn split_fields(line: &str) -> Option<(&str, &str, &str)> {
    let first = line.find('|')?;
    let rest = &line[first + 1..];
    let mut quote: Option<char> = None;
    let mut escaped = false;
    for (i, c) in rest.char_indices() {
        if escaped {
            escaped = false;
            continue;
        }
        match (quote, c) {
            (Some(_), '\\') => escaped = true,
            (Some(q), c) if c == q => quote = None,
            (None, '"' | '\'') => quote = Some(c),
            (None, '|') => return Some((&line[..first], &rest[..i], &rest[i + 1..])),
            _ => {}
        }
    }
    None
}

fn parse_args(text: &str) -> Result<Vec<Value>, String> {
    let toks = Lexer::new(text).tokenize().map_err(|e| e.message)?;
    let mut pos = 0;
    let mut out = Vec::new();
    while toks[pos].0 != Tok::Eof {
        out.push(parse_literal(&toks, &mut pos)?);
    }
    Ok(out)
}

fn parse_literal(toks: &[(Tok, super::ast::Span)], pos: &mut usize) -> Result<Value, String> {
    let tok = toks[*pos].0.clone();
    *pos += 1;
    Ok(match tok {
        Tok::Int(v) => Value::Int(v),
        Tok::Float(v) => Value::Float(v),
        Tok::Char(c) => Value::Char(c),
        Tok::Str(s) => Value::str(&s),
        Tok::True => Value::Bool(true),
        Tok::False => Value::Bool(false),
        Tok::Minus => match toks[*pos].0 {
            Tok::Int(v) => {
                *pos += 1;
                Value::Int(v.wrapping_neg())
            }
            Tok::Float(v) => {
                *pos += 1;
                Value::Float(-v)
            }
            ref other => return Err(format!("expected number after `-`, found {}", other.describe())),
        },
        Tok::LBracket => {
            let mut items = Vec::new();
            if toks[*pos].0 == Tok::RBracket {
                *pos += 1;
            } else {
                loop {
                    items.push(parse_literal(toks, pos)?);
                    match toks[*pos].0 {
                        Tok::Comma => *pos += 1,
                        Tok::RBracket => {
                            *pos += 1;
                            break;
                        }
                        ref other => {
                            return Err(format!("expected `,` or `]`, found {}", other.describe()))
                        }
                    }
                }
            }
            Value::array(items)
        }
        Tok::Eof => {
            *pos -= 1;
            return Err("unexpected end of arguments".into());
        }
        other => return Err(format!("expected a literal, found {}", other.describe())),
    })
}

/// Checks a literal against a formal type, widening ints to floats.
fn coerce(v: Value, ty: &Type) -> Option<Value> {
    match (v, ty) {
        (Value::Int(i), Type::Float) => Some(Value::Float(i as f64)),
        (Value::Array(items), Type::Array(elem)) => {
            let items: Option<Vec<Value>> = items.iter().cloned().map(|x| coerce(x, elem)).collect();
            items.map(Value::array)
        }
        (v, ty) if v.has_type(ty) => Some(v),
        _ => None,
    }
}

fn unescape_expected(text: &str) -> String {
    let mut out = String::new();
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('n') => out.push('\n'),
                Some(other) => out.push(other),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

fn escape_expected(text: &str) -> String {
    let mut out = String::new();
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '|' => out.push_str("\\|"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out
}

/// Argument literal as it appears in a `.tests` file.
pub fn format_arg(v: &Value) -> String {
    use super::ast::Literal;
    match v {
        Value::Int(i) => format!("{i}"),
        Value::Float(f) => float_literal(*f),
        Value::Bool(b) => format!("{b}"),
        Value::Char(c) => super::printer::emit_expr(&super::ast::Expr::synth(
            super::ast::ExprKind::Lit(Literal::Char(*c)),
        )),
        Value::Str(s) => super::printer::emit_expr(&super::ast::Expr::synth(
            super::ast::ExprKind::Lit(Literal::Str(s.to_string())),
        )),
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(format_arg).collect();
            format!("[{}]", parts.join(", "))
        }
    }
}

pub fn format_test_suite(suite: &TestSuite) -> String {
    let mut out = String::new();
    for t in &suite.tests {
        let args: Vec<String> = t.args.iter().map(format_arg).collect();
        let _ = writeln!(
            out,
            "{} | {} | {}",
            t.name,
            args.join(" "),
            escape_expected(&normalize_output(&t.expected_output))
        );
    }
    out
}
