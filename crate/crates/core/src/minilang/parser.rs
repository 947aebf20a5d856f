//! Recursive descent parser for MiniImp.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::ast::*;
use super::error::SyntaxError;
use super::lexer::{Lexer, Tok};

type PResult<T> = Result<T, SyntaxError>;

pub struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

impl Parser {
    pub fn new(src: &str) -> PResult<Self> {
        Ok(Self {
            toks: Lexer::new(src).tokenize()?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn advance(&mut self) -> Tok {
        let tok = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        tok
    }

    fn check(&self, tok: &Tok) -> bool {
        self.peek() == tok
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.check(tok) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<()> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.unexpected(what))
        }
    }

    fn unexpected(&self, what: &str) -> SyntaxError {
        SyntaxError::new(
            self.span(),
            format!("expected {what}, found {}", self.peek().describe()),
        )
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.advance();
                Ok(name)
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn at_type(&self) -> bool {
        matches!(
            self.peek(),
            Tok::KwInt | Tok::KwFloat | Tok::KwChar | Tok::KwString | Tok::KwBool | Tok::KwVoid
        )
    }

    fn parse_type(&mut self) -> PResult<Type> {
        let mut ty = match self.peek() {
            Tok::KwInt => Type::Int,
            Tok::KwFloat => Type::Float,
            Tok::KwChar => Type::Char,
            Tok::KwString => Type::Str,
            Tok::KwBool => Type::Bool,
            Tok::KwVoid => Type::Void,
            _ => return Err(self.unexpected("type")),
        };
        self.advance();
        while self.check(&Tok::LBracket) && self.peek_at(1) == &Tok::RBracket {
            self.advance();
            self.advance();
            ty = Type::Array(Box::new(ty));
        }
        Ok(ty)
    }

    pub fn parse_program(&mut self) -> PResult<Program> {
        let mut items = Vec::new();
        loop {
            if self.check(&Tok::Eof) {
                if items.is_empty() {
                    return Err(SyntaxError::new(self.span(), "expected function declaration"));
                }
                return Ok(Program { items });
            }
            if !self.at_type() {
                return Err(self.unexpected("function declaration"));
            }
            let span = self.span();
            let ty = self.parse_type()?;
            let name = self.ident("declaration name")?;
            if self.check(&Tok::LParen) {
                items.push(Item::Function(self.function_rest(ty, name, span)?));
            } else {
                let init = if self.eat(&Tok::Assign) {
                    Some(self.expr()?)
                } else {
                    None
                };
                self.expect(Tok::Semi, "`;`")?;
                items.push(Item::Global(GlobalDecl {
                    ty,
                    name,
                    init,
                    span,
                }));
            }
        }
    }

    fn function_rest(&mut self, ret: Type, name: String, span: Span) -> PResult<FunctionDecl> {
        self.expect(Tok::LParen, "`(`")?;
        let mut params = Vec::new();
        if !self.check(&Tok::RParen) {
            loop {
                let ty = self.parse_type()?;
                let pname = self.ident("parameter name")?;
                params.push(Param { ty, name: pname });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        let body = self.block()?;
        Ok(FunctionDecl {
            ret,
            name,
            params,
            body,
            span,
        })
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut stmts = Vec::new();
        while !self.check(&Tok::RBrace) {
            if self.check(&Tok::Eof) {
                return Err(self.unexpected("`}`"));
            }
            stmts.push(self.stmt()?);
        }
        self.advance();
        Ok(stmts)
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let span = self.span();
        let kind = match self.peek() {
            _ if self.at_type() => {
                let ty = self.parse_type()?;
                let name = self.ident("variable name")?;
                let init = if self.eat(&Tok::Assign) {
                    Some(self.expr()?)
                } else {
                    None
                };
                self.expect(Tok::Semi, "`;`")?;
                StmtKind::Decl { ty, name, init }
            }
            Tok::If => return self.if_stmt(),
            Tok::While => {
                self.advance();
                self.expect(Tok::LParen, "`(`")?;
                let cond = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                let body = self.block()?;
                StmtKind::While { cond, body }
            }
            Tok::Return => {
                self.advance();
                let value = if self.check(&Tok::Semi) {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect(Tok::Semi, "`;`")?;
                StmtKind::Return(value)
            }
            Tok::Print | Tok::Println => {
                let newline = self.advance() == Tok::Println;
                self.expect(Tok::LParen, "`(`")?;
                let value = if self.check(&Tok::RParen) {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect(Tok::RParen, "`)`")?;
                self.expect(Tok::Semi, "`;`")?;
                if value.is_none() && !newline {
                    return Err(SyntaxError::new(span, "print needs an argument"));
                }
                StmtKind::Print { value, newline }
            }
            _ => {
                let expr = self.expr()?;
                if self.eat(&Tok::Assign) {
                    let target = to_lvalue(expr)?;
                    let value = self.expr()?;
                    self.expect(Tok::Semi, "`;`")?;
                    StmtKind::Assign { target, value }
                } else {
                    self.expect(Tok::Semi, "`;`")?;
                    StmtKind::Expr(expr)
                }
            }
        };
        Ok(Stmt::new(kind, span))
    }

    fn if_stmt(&mut self) -> PResult<Stmt> {
        let span = self.span();
        self.expect(Tok::If, "`if`")?;
        self.expect(Tok::LParen, "`(`")?;
        let cond = self.expr()?;
        self.expect(Tok::RParen, "`)`")?;
        let then_body = self.block()?;
        let else_body = if self.eat(&Tok::Else) {
            if self.check(&Tok::If) {
                Some(alloc::vec![self.if_stmt()?])
            } else {
                Some(self.block()?)
            }
        } else {
            None
        };
        Ok(Stmt::new(
            StmtKind::If {
                cond,
                then_body,
                else_body,
            },
            span,
        ))
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::OrOr => BinOp::Or,
            Tok::AndAnd => BinOp::And,
            Tok::Caret => BinOp::Xor,
            Tok::EqEq => BinOp::Cmp(CmpOp::Eq),
            Tok::NotEq => BinOp::Cmp(CmpOp::Ne),
            Tok::Lt => BinOp::Cmp(CmpOp::Lt),
            Tok::Le => BinOp::Cmp(CmpOp::Le),
            Tok::Gt => BinOp::Cmp(CmpOp::Gt),
            Tok::Ge => BinOp::Cmp(CmpOp::Ge),
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            Tok::Percent => BinOp::Rem,
            _ => return None,
        })
    }

    // Precedence climbing; every level is left-associative.
    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            let span = self.span();
            self.advance();
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let span = self.span();
        let op = match self.peek() {
            Tok::Bang => UnOp::Not,
            Tok::Minus => UnOp::Neg,
            _ => return self.postfix(),
        };
        self.advance();
        let inner = self.unary()?;
        Ok(Expr::new(ExprKind::Unary(op, Box::new(inner)), span))
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        while self.check(&Tok::LBracket) {
            let span = self.span();
            self.advance();
            let idx = self.expr()?;
            self.expect(Tok::RBracket, "`]`")?;
            e = Expr::new(ExprKind::Index(Box::new(e), Box::new(idx)), span);
        }
        Ok(e)
    }

    fn args(&mut self, close: Tok, what: &str) -> PResult<Vec<Expr>> {
        let mut args = Vec::new();
        if !self.check(&close) {
            loop {
                args.push(self.expr()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(close, what)?;
        Ok(args)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let span = self.span();
        let tok = self.peek().clone();
        if matches!(
            tok,
            Tok::Int(_)
                | Tok::Float(_)
                | Tok::Char(_)
                | Tok::Str(_)
                | Tok::True
                | Tok::False
                | Tok::LParen
                | Tok::LBracket
                | Tok::Ident(_)
        ) {
            self.advance();
        } else {
            return Err(self.unexpected("expression"));
        }
        let kind = match tok {
            Tok::Int(v) => ExprKind::Lit(Literal::Int(v)),
            Tok::Float(v) => ExprKind::Lit(Literal::Float(v)),
            Tok::Char(c) => ExprKind::Lit(Literal::Char(c)),
            Tok::Str(s) => ExprKind::Lit(Literal::Str(s)),
            Tok::True => ExprKind::Lit(Literal::Bool(true)),
            Tok::False => ExprKind::Lit(Literal::Bool(false)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                ExprKind::Paren(Box::new(inner))
            }
            Tok::LBracket => ExprKind::Array(self.args(Tok::RBracket, "`]`")?),
            Tok::Ident(name) => {
                if self.eat(&Tok::LParen) {
                    let args = self.args(Tok::RParen, "`)`")?;
                    match Intrinsic::from_name(&name) {
                        Some(intr) => ExprKind::Intrinsic(intr, args),
                        None => ExprKind::Call(name, args),
                    }
                } else {
                    ExprKind::Var(name)
                }
            }
            _ => unreachable!("filtered above"),
        };
        Ok(Expr::new(kind, span))
    }
}

fn to_lvalue(e: Expr) -> PResult<LValue> {
    match e.kind {
        ExprKind::Var(name) => Ok(LValue::Var(name)),
        ExprKind::Index(base, idx) => Ok(LValue::Index(Box::new(to_lvalue(*base)?), *idx)),
        _ => Err(SyntaxError::new(e.span, "invalid assignment target")),
    }
}
