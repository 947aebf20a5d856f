//! MiniImp: the subject language.
//!
//! A small C-like imperative language with `int`, `float`, `char`, `string`,
//! `bool` and array values, globals, functions, `if`/`else`, `while`,
//! `return` and `print`/`println`. Programs are read with [`parse_program`],
//! printed back with [`emit_source`] and prepared for execution with
//! [`lower_predicates`].

mod ast;
mod error;
mod lexer;
mod lower;
mod parser;
mod printer;
mod suite;

pub use ast::*;
pub use error::{LangError, SuiteError, SyntaxError};
pub use lower::{
    ArithOp, Binding, CaptureSource, Cond, Construct, Hoist, LExpr, LFunction, LGlobal, LStmt,
    LoweredProgram, Place, PredicateSite, SiteId, SitePlan,
};
pub use printer::{emit_expr, float_literal};
pub use suite::{
    format_arg, format_test_suite, normalize_output, outputs_match, parse_test_suite, TestCase,
    TestSuite,
};

/// Parses and checks a program: names resolve, types agree, `main` exists.
pub fn parse_program(source: &str) -> Result<Program, LangError> {
    let program = parser::Parser::new(source)?.parse_program()?;
    lower::lower_program(&program)?;
    Ok(program)
}

/// Parses a single expression (no name resolution).
pub fn parse_expr(source: &str) -> Result<Expr, SyntaxError> {
    let mut parser = parser::Parser::new(source)?;
    parser.expr()
}

/// Lowers a checked program so every condition is a chain of single-clause sites.
pub fn lower_predicates(p: &Program) -> LoweredProgram {
    lower::lower_program(p).expect("parse_program only returns checked programs")
}

/// Like [`lower_predicates`] for programs that did not come from [`parse_program`].
pub fn try_lower(p: &Program) -> Result<LoweredProgram, LangError> {
    lower::lower_program(p)
}

/// Parses and lowers in one step.
pub fn compile(source: &str) -> Result<LoweredProgram, LangError> {
    let program = parser::Parser::new(source)?.parse_program()?;
    lower::lower_program(&program)
}

/// Canonical source text of a program.
pub fn emit_source(p: &Program) -> alloc::string::String {
    printer::emit_program(p)
}

/// Number of comparison operators sitting in condition position across the
/// program (through `&&`, `||`, `!` and parentheses).
pub fn count_condition_comparisons(p: &Program) -> usize {
    fn cond(e: &Expr) -> usize {
        match &e.kind {
            ExprKind::Paren(inner) | ExprKind::Unary(UnOp::Not, inner) => cond(inner),
            ExprKind::Binary(BinOp::And | BinOp::Or, l, r) => cond(l) + cond(r),
            ExprKind::Binary(BinOp::Cmp(_), _, _) => 1,
            _ => 0,
        }
    }
    fn body(stmts: &[Stmt]) -> usize {
        stmts
            .iter()
            .map(|s| match &s.kind {
                StmtKind::If {
                    cond: c,
                    then_body,
                    else_body,
                } => cond(c) + body(then_body) + else_body.as_deref().map_or(0, body),
                StmtKind::While { cond: c, body: b } => cond(c) + body(b),
                _ => 0,
            })
            .sum()
    }
    p.functions().map(|f| body(&f.body)).sum()
}
