//! Surface syntax tree for MiniImp.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Source position (1-based line and column).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub const fn new(line: u32, col: u32) -> Self {
        Self { line, col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Type {
    Int,
    Float,
    Char,
    Str,
    Bool,
    Array(Box<Type>),
    Void,
}

impl Type {
    pub fn is_numeric(&self) -> bool {
        matches!(self, Type::Int | Type::Float)
    }

    /// Whether a value of type `from` may be stored where `self` is expected.
    pub fn accepts(&self, from: &Type) -> bool {
        self == from || (*self == Type::Float && *from == Type::Int)
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => f.write_str("int"),
            Type::Float => f.write_str("float"),
            Type::Char => f.write_str("char"),
            Type::Str => f.write_str("string"),
            Type::Bool => f.write_str("bool"),
            Type::Array(inner) => write!(f, "{inner}[]"),
            Type::Void => f.write_str("void"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn is_equality(self) -> bool {
        matches!(self, CmpOp::Eq | CmpOp::Ne)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Cmp(CmpOp),
    And,
    Or,
    Xor,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Cmp(op) => op.symbol(),
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Xor => "^",
        }
    }

    /// Binding strength; larger binds tighter. All binary operators are left-associative.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Xor => 3,
            BinOp::Cmp(CmpOp::Eq | CmpOp::Ne) => 4,
            BinOp::Cmp(_) => 5,
            BinOp::Add | BinOp::Sub => 6,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

/// Built-in functions. Their names are reserved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Intrinsic {
    Len,
    Hash,
    ToInt,
    ToFloat,
    ToChar,
}

impl Intrinsic {
    pub const ALL: [Intrinsic; 5] = [
        Intrinsic::Len,
        Intrinsic::Hash,
        Intrinsic::ToInt,
        Intrinsic::ToFloat,
        Intrinsic::ToChar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Intrinsic::Len => "len",
            Intrinsic::Hash => "hash",
            Intrinsic::ToInt => "to_int",
            Intrinsic::ToFloat => "to_float",
            Intrinsic::ToChar => "to_char",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|i| i.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Int(i64),
    Float(f64),
    Char(char),
    Str(String),
    Bool(bool),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Lit(Literal),
    Var(String),
    Index(Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
    Intrinsic(Intrinsic, Vec<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Paren(Box<Expr>),
    Array(Vec<Expr>),
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Self { kind, span }
    }

    /// Builds a node with a default span; used when synthesizing code.
    pub fn synth(kind: ExprKind) -> Self {
        Self::new(kind, Span::default())
    }

    pub fn paren(inner: Expr) -> Self {
        Self::synth(ExprKind::Paren(Box::new(inner)))
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Self::synth(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)))
    }

    pub fn not(inner: Expr) -> Self {
        Self::synth(ExprKind::Unary(UnOp::Not, Box::new(inner)))
    }

    /// Strips any number of enclosing parentheses.
    pub fn unparen(&self) -> &Expr {
        let mut e = self;
        while let ExprKind::Paren(inner) = &e.kind {
            e = inner;
        }
        e
    }

    pub fn as_comparison(&self) -> Option<(CmpOp, &Expr, &Expr)> {
        match &self.kind {
            ExprKind::Binary(BinOp::Cmp(op), l, r) => Some((*op, l, r)),
            _ => None,
        }
    }

    fn clear_spans(&mut self) {
        self.span = Span::default();
        match &mut self.kind {
            ExprKind::Lit(_) | ExprKind::Var(_) => {}
            ExprKind::Index(a, b) | ExprKind::Binary(_, a, b) => {
                a.clear_spans();
                b.clear_spans();
            }
            ExprKind::Call(_, args) | ExprKind::Intrinsic(_, args) | ExprKind::Array(args) => {
                args.iter_mut().for_each(Expr::clear_spans)
            }
            ExprKind::Unary(_, e) | ExprKind::Paren(e) => e.clear_spans(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LValue {
    Var(String),
    Index(Box<LValue>, Expr),
}

impl LValue {
    pub fn root(&self) -> &str {
        match self {
            LValue::Var(name) => name,
            LValue::Index(inner, _) => inner.root(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Decl {
        ty: Type,
        name: String,
        init: Option<Expr>,
    },
    Assign {
        target: LValue,
        value: Expr,
    },
    If {
        cond: Expr,
        then_body: Vec<Stmt>,
        else_body: Option<Vec<Stmt>>,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
    },
    Return(Option<Expr>),
    Print {
        value: Option<Expr>,
        newline: bool,
    },
    Expr(Expr),
}

impl Stmt {
    pub fn new(kind: StmtKind, span: Span) -> Self {
        Self { kind, span }
    }

    fn clear_spans(&mut self) {
        self.span = Span::default();
        match &mut self.kind {
            StmtKind::Decl { init, .. } => init.iter_mut().for_each(Expr::clear_spans),
            StmtKind::Assign { target, value } => {
                clear_lvalue_spans(target);
                value.clear_spans();
            }
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                cond.clear_spans();
                then_body.iter_mut().for_each(Stmt::clear_spans);
                if let Some(body) = else_body {
                    body.iter_mut().for_each(Stmt::clear_spans);
                }
            }
            StmtKind::While { cond, body } => {
                cond.clear_spans();
                body.iter_mut().for_each(Stmt::clear_spans);
            }
            StmtKind::Return(value) => value.iter_mut().for_each(Expr::clear_spans),
            StmtKind::Print { value, .. } => value.iter_mut().for_each(Expr::clear_spans),
            StmtKind::Expr(e) => e.clear_spans(),
        }
    }
}

fn clear_lvalue_spans(lv: &mut LValue) {
    if let LValue::Index(inner, idx) = lv {
        clear_lvalue_spans(inner);
        idx.clear_spans();
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub ty: Type,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDecl {
    pub ret: Type,
    pub name: String,
    pub params: Vec<Param>,
    pub body: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalDecl {
    pub ty: Type,
    pub name: String,
    pub init: Option<Expr>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Global(GlobalDecl),
    Function(FunctionDecl),
}

/// A parsed and checked MiniImp program. Items keep their source order.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub items: Vec<Item>,
}

impl Program {
    pub const ENTRY: &'static str = "main";

    pub fn functions(&self) -> impl Iterator<Item = &FunctionDecl> {
        self.items.iter().filter_map(|item| match item {
            Item::Function(f) => Some(f),
            Item::Global(_) => None,
        })
    }

    pub fn globals(&self) -> impl Iterator<Item = &GlobalDecl> {
        self.items.iter().filter_map(|item| match item {
            Item::Global(g) => Some(g),
            Item::Function(_) => None,
        })
    }

    pub fn function(&self, name: &str) -> Option<&FunctionDecl> {
        self.functions().find(|f| f.name == name)
    }

    pub fn entry(&self) -> &FunctionDecl {
        self.function(Self::ENTRY)
            .expect("checked programs always have a main function")
    }

    /// Copy with every span reset, for comparing shapes across reformatting.
    pub fn without_spans(&self) -> Program {
        let mut p = self.clone();
        for item in &mut p.items {
            match item {
                Item::Global(g) => {
                    g.span = Span::default();
                    g.init.iter_mut().for_each(Expr::clear_spans);
                }
                Item::Function(f) => {
                    f.span = Span::default();
                    f.body.iter_mut().for_each(Stmt::clear_spans);
                }
            }
        }
        p
    }

    /// Structural equality, ignoring source positions.
    pub fn same_structure(&self, other: &Program) -> bool {
        self.without_spans() == other.without_spans()
    }
}
