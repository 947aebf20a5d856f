//! Canonical pretty-printer. `parse(emit(p))` reproduces `p` up to spans.

use alloc::format;
use alloc::string::String;
use core::fmt::Write;

use super::ast::*;

const INDENT: &str = "    ";

pub fn emit_program(p: &Program) -> String {
    let mut out = String::new();
    let mut prev_was_fn = false;
    for (i, item) in p.items.iter().enumerate() {
        match item {
            Item::Global(g) => {
                if prev_was_fn {
                    out.push('\n');
                }
                out.push_str(&format!("{} {}", g.ty, g.name));
                if let Some(init) = &g.init {
                    out.push_str(" = ");
                    out.push_str(&emit_expr(init));
                }
                out.push_str(";\n");
                prev_was_fn = false;
            }
            Item::Function(f) => {
                if i > 0 {
                    out.push('\n');
                }
                emit_function(&mut out, f);
                prev_was_fn = true;
            }
        }
    }
    out
}

fn emit_function(out: &mut String, f: &FunctionDecl) {
    let _ = write!(out, "{} {}(", f.ret, f.name);
    for (i, p) in f.params.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{} {}", p.ty, p.name);
    }
    out.push_str(") ");
    emit_block(out, &f.body, 0);
    out.push('\n');
}

fn emit_block(out: &mut String, body: &[Stmt], depth: usize) {
    if body.is_empty() {
        out.push_str("{ }");
        return;
    }
    out.push_str("{\n");
    for s in body {
        emit_stmt(out, s, depth + 1);
    }
    indent(out, depth);
    out.push('}');
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str(INDENT);
    }
}

fn emit_stmt(out: &mut String, s: &Stmt, depth: usize) {
    indent(out, depth);
    emit_stmt_inline(out, s, depth);
    out.push('\n');
}

fn emit_stmt_inline(out: &mut String, s: &Stmt, depth: usize) {
    match &s.kind {
        StmtKind::Decl { ty, name, init } => {
            let _ = write!(out, "{ty} {name}");
            if let Some(init) = init {
                let _ = write!(out, " = {}", emit_expr(init));
            }
            out.push(';');
        }
        StmtKind::Assign { target, value } => {
            let _ = write!(out, "{} = {};", emit_lvalue(target), emit_expr(value));
        }
        StmtKind::If {
            cond,
            then_body,
            else_body,
        } => {
            let _ = write!(out, "if ({}) ", emit_expr(cond));
            emit_block(out, then_body, depth);
            if let Some(else_body) = else_body {
                out.push_str(" else ");
                match else_body.as_slice() {
                    [only] if matches!(only.kind, StmtKind::If { .. }) => {
                        emit_stmt_inline(out, only, depth)
                    }
                    _ => emit_block(out, else_body, depth),
                }
            }
        }
        StmtKind::While { cond, body } => {
            let _ = write!(out, "while ({}) ", emit_expr(cond));
            emit_block(out, body, depth);
        }
        StmtKind::Return(None) => out.push_str("return;"),
        StmtKind::Return(Some(e)) => {
            let _ = write!(out, "return {};", emit_expr(e));
        }
        StmtKind::Print { value, newline } => {
            let kw = if *newline { "println" } else { "print" };
            match value {
                Some(v) => {
                    let _ = write!(out, "{kw}({});", emit_expr(v));
                }
                None => {
                    let _ = write!(out, "{kw}();");
                }
            }
        }
        StmtKind::Expr(e) => {
            let _ = write!(out, "{};", emit_expr(e));
        }
    }
}

fn emit_lvalue(lv: &LValue) -> String {
    match lv {
        LValue::Var(name) => name.clone(),
        LValue::Index(base, idx) => format!("{}[{}]", emit_lvalue(base), emit_expr(idx)),
    }
}

pub fn emit_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e);
    out
}

// Precedence of the node as seen by its parent; primaries bind tightest.
fn expr_prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Binary(op, _, _) => op.precedence(),
        ExprKind::Unary(..) => 8,
        _ => 9,
    }
}

fn write_wrapped(out: &mut String, e: &Expr, wrap: bool) {
    if wrap {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match &e.kind {
        ExprKind::Lit(lit) => write_literal(out, lit),
        ExprKind::Var(name) => out.push_str(name),
        ExprKind::Index(base, idx) => {
            write_wrapped(out, base, expr_prec(base) < 9);
            out.push('[');
            write_expr(out, idx);
            out.push(']');
        }
        ExprKind::Call(name, args) => write_call(out, name, args),
        ExprKind::Intrinsic(intr, args) => write_call(out, intr.name(), args),
        ExprKind::Unary(op, inner) => {
            out.push(match op {
                UnOp::Neg => '-',
                UnOp::Not => '!',
            });
            write_wrapped(out, inner, expr_prec(inner) < 8);
        }
        ExprKind::Binary(op, l, r) => {
            let prec = op.precedence();
            write_wrapped(out, l, expr_prec(l) < prec);
            let _ = write!(out, " {} ", op.symbol());
            write_wrapped(out, r, expr_prec(r) <= prec);
        }
        ExprKind::Paren(inner) => {
            out.push('(');
            write_expr(out, inner);
            out.push(')');
        }
        ExprKind::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, item);
            }
            out.push(']');
        }
    }
}

fn write_call(out: &mut String, name: &str, args: &[Expr]) {
    out.push_str(name);
    out.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(out, a);
    }
    out.push(')');
}

fn write_literal(out: &mut String, lit: &Literal) {
    match lit {
        Literal::Int(v) => {
            let _ = write!(out, "{v}");
        }
        Literal::Float(v) => out.push_str(&float_literal(*v)),
        Literal::Char(c) => {
            out.push('\'');
            push_escaped(out, *c, '\'');
            out.push('\'');
        }
        Literal::Str(s) => {
            out.push('"');
            for c in s.chars() {
                push_escaped(out, c, '"');
            }
            out.push('"');
        }
        Literal::Bool(b) => {
            let _ = write!(out, "{b}");
        }
    }
}

/// Float text that lexes back to the identical `f64`.
pub fn float_literal(v: f64) -> String {
    if v.is_nan() {
        // Only reachable for hand-built trees; there is no NaN literal.
        return "(0.0 / 0.0)".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "1.0e999".into() } else { "-1.0e999".into() };
    }
    let mut s = format!("{v}");
    if !s.contains('.') {
        s.push_str(".0");
    }
    s
}

fn push_escaped(out: &mut String, c: char, quote: char) {
    match c {
        '\n' => out.push_str("\\n"),
        '\t' => out.push_str("\\t"),
        '\r' => out.push_str("\\r"),
        '\0' => out.push_str("\\0"),
        '\\' => out.push_str("\\\\"),
        c if c == quote => {
            out.push('\\');
            out.push(c);
        }
        c if c.is_control() => {
            let _ = write!(out, "\\u{{{:x}}}", c as u32);
        }
        c => out.push(c),
    }
}
