//! Name resolution, type checking and predicate-site lowering.
//!
//! Every `if`/`while` condition is turned into a [`Cond`] chain whose leaves
//! are single-clause comparisons ([`SiteId`]s) or opaque boolean tests.
//! `&&`, `||` and `!` keep their short-circuit meaning through the chain, so
//! each comparison is a distinct branch point that can be negated on its own.
//! User-function calls inside a comparison are hoisted into fresh `_tN`
//! temporaries evaluated right before that comparison.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::ast::*;
use super::error::LangError;
use super::printer::emit_expr;

pub type SiteId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Construct {
    If,
    While,
}

impl Construct {
    pub fn as_str(self) -> &'static str {
        match self {
            Construct::If => "if",
            Construct::While => "while",
        }
    }
}

/// A single-clause comparison inside an `if`/`while` condition.
#[derive(Debug, Clone, PartialEq)]
pub struct PredicateSite {
    pub id: SiteId,
    pub function: String,
    pub span: Span,
    /// The comparison as written in the source.
    pub clause: String,
    pub construct: Construct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

/// Resolved, type-annotated expression. Mixed int/float operands carry an
/// explicit [`LExpr::Promote`], so runtime operators always see matching kinds.
#[derive(Debug, Clone, PartialEq)]
pub enum LExpr {
    Lit(Literal),
    Local(usize),
    Global(usize),
    Index(Box<LExpr>, Box<LExpr>),
    Call(usize, Vec<LExpr>),
    Intrinsic(Intrinsic, Box<LExpr>),
    Neg(Box<LExpr>),
    Not(Box<LExpr>),
    Arith(ArithOp, Box<LExpr>, Box<LExpr>),
    Cmp(CmpOp, Box<LExpr>, Box<LExpr>),
    And(Box<LExpr>, Box<LExpr>),
    Or(Box<LExpr>, Box<LExpr>),
    Xor(Box<LExpr>, Box<LExpr>),
    Promote(Box<LExpr>),
    Array(Vec<LExpr>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cond {
    Site(SiteId),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
    Not(Box<Cond>),
    Test(LExpr),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Place {
    Local(usize),
    Global(usize),
    Index(Box<Place>, LExpr),
}

#[derive(Debug, Clone, PartialEq)]
pub enum LStmt {
    Decl(usize, Option<LExpr>),
    Assign(Place, LExpr),
    If(Cond, Vec<LStmt>, Vec<LStmt>),
    While(Cond, Vec<LStmt>),
    Return(Option<LExpr>),
    Print(Option<LExpr>, bool),
    Expr(LExpr),
}

#[derive(Debug, Clone, PartialEq)]
pub enum CaptureSource {
    Local(usize),
    Global(usize),
    /// An indexed element read by the clause; evaluated without side effects.
    Element(LExpr),
}

/// One variable (or element) recorded in a state snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Binding {
    pub name: String,
    pub ty: Type,
    pub source: CaptureSource,
    /// Whether the name can be written in source at the site.
    pub visible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hoist {
    pub slot: usize,
    pub name: String,
    pub ty: Type,
    pub value: LExpr,
    /// The hoisted call as written in the source.
    pub call: Expr,
}

/// Everything the interpreter needs to execute one site.
#[derive(Debug, Clone, PartialEq)]
pub struct SitePlan {
    pub function: usize,
    pub hoists: Vec<Hoist>,
    pub op: CmpOp,
    pub lhs: LExpr,
    pub rhs: LExpr,
    /// Snapshot schema: Use(p), then formals, then locals/globals touched by the function.
    pub bindings: Vec<Binding>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LFunction {
    pub name: String,
    pub ret: Type,
    pub params: Vec<Type>,
    pub slot_names: Vec<String>,
    pub slot_types: Vec<Type>,
    pub body: Vec<LStmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LGlobal {
    pub name: String,
    pub ty: Type,
    pub init: Option<LExpr>,
}

/// A checked program with its predicate sites made explicit.
#[derive(Debug, Clone, PartialEq)]
pub struct LoweredProgram {
    pub source: Program,
    pub globals: Vec<LGlobal>,
    pub functions: Vec<LFunction>,
    pub main: usize,
    pub sites: Vec<PredicateSite>,
    pub plans: Vec<SitePlan>,
}

impl LoweredProgram {
    pub fn site(&self, id: SiteId) -> Option<&PredicateSite> {
        self.sites.get(id)
    }

    pub fn plan(&self, id: SiteId) -> &SitePlan {
        &self.plans[id]
    }

    pub fn main_params(&self) -> &[Type] {
        &self.functions[self.main].params
    }
}

pub(crate) fn lower_program(p: &Program) -> Result<LoweredProgram, LangError> {
    let mut signatures: BTreeMap<&str, (usize, &FunctionDecl)> = BTreeMap::new();
    for (i, f) in p.functions().enumerate() {
        if Intrinsic::from_name(&f.name).is_some() {
            return Err(decl_err(f.span, format!("`{}` is a reserved name", f.name)));
        }
        if signatures.insert(&f.name, (i, f)).is_some() {
            return Err(decl_err(f.span, format!("duplicate function `{}`", f.name)));
        }
    }
    let main = match signatures.get(Program::ENTRY) {
        Some((i, _)) => *i,
        None => return Err(decl_err(Span::new(1, 1), "missing function `main`".into())),
    };

    let mut cx = Context {
        signatures,
        globals: Vec::new(),
        global_index: BTreeMap::new(),
        sites: Vec::new(),
        plans: Vec::new(),
    };

    let mut globals = Vec::new();
    for g in p.globals() {
        if g.ty == Type::Void {
            return Err(decl_err(g.span, format!("global `{}` cannot be void", g.name)));
        }
        if cx.global_index.contains_key(&g.name) {
            return Err(decl_err(g.span, format!("duplicate global `{}`", g.name)));
        }
        // Initializers see only earlier globals.
        let init = match &g.init {
            Some(e) => {
                let mut fl = FnLowerer::for_globals(&mut cx);
                Some(fl.expr_expect(e, &g.ty)?)
            }
            None => None,
        };
        cx.global_index.insert(g.name.clone(), cx.globals.len());
        cx.globals.push((g.name.clone(), g.ty.clone()));
        globals.push(LGlobal {
            name: g.name.clone(),
            ty: g.ty.clone(),
            init,
        });
    }

    let mut functions = Vec::new();
    for (index, f) in p.functions().enumerate() {
        functions.push(lower_function(&mut cx, index, f)?);
    }

    Ok(LoweredProgram {
        source: p.clone(),
        globals,
        functions,
        main,
        sites: cx.sites,
        plans: cx.plans,
    })
}

fn decl_err(span: Span, message: String) -> LangError {
    LangError::Declaration { span, message }
}

fn type_err(span: Span, message: String) -> LangError {
    LangError::Type { span, message }
}

struct Context<'p> {
    signatures: BTreeMap<&'p str, (usize, &'p FunctionDecl)>,
    globals: Vec<(String, Type)>,
    global_index: BTreeMap<String, usize>,
    sites: Vec<PredicateSite>,
    plans: Vec<SitePlan>,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum VarRef {
    Local(usize),
    Global(usize),
}

struct FnLowerer<'c, 'p> {
    cx: &'c mut Context<'p>,
    function: usize,
    fn_name: String,
    ret: Type,
    slot_names: Vec<String>,
    slot_types: Vec<Type>,
    /// Lexical scopes of local slots.
    scopes: Vec<Vec<(String, usize)>>,
    /// Names declared anywhere in the function so far (locals are unique per function).
    declared: BTreeSet<String>,
    /// Every identifier in the function, so temporaries never collide.
    taken: BTreeSet<String>,
    next_temp: usize,
    /// Locals and globals used or defined, in order of first appearance.
    touched: Vec<VarRef>,
    /// Sites created in this function, completed once the body is lowered.
    pending: Vec<SiteId>,
    pending_visible: Vec<BTreeSet<String>>,
    temps: BTreeSet<String>,
    params: usize,
}

fn lower_function(cx: &mut Context<'_>, index: usize, f: &FunctionDecl) -> Result<LFunction, LangError> {
    let mut taken = BTreeSet::new();
    collect_idents(&f.body, &mut taken);
    for (name, _) in &cx.globals {
        taken.insert(name.clone());
    }
    let mut fl = FnLowerer {
        cx,
        function: index,
        fn_name: f.name.clone(),
        ret: f.ret.clone(),
        slot_names: Vec::new(),
        slot_types: Vec::new(),
        scopes: alloc::vec![Vec::new()],
        declared: BTreeSet::new(),
        taken,
        next_temp: 0,
        touched: Vec::new(),
        pending: Vec::new(),
        pending_visible: Vec::new(),
        temps: BTreeSet::new(),
        params: f.params.len(),
    };
    for p in &f.params {
        if p.ty == Type::Void {
            return Err(decl_err(f.span, format!("parameter `{}` cannot be void", p.name)));
        }
        fl.declare(&p.name, &p.ty, f.span)?;
    }
    let body = fl.block(&f.body)?;
    fl.finish_sites();
    Ok(LFunction {
        name: f.name.clone(),
        ret: f.ret.clone(),
        params: f.params.iter().map(|p| p.ty.clone()).collect(),
        slot_names: fl.slot_names,
        slot_types: fl.slot_types,
        body,
    })
}

fn collect_idents(body: &[Stmt], out: &mut BTreeSet<String>) {
    fn expr(e: &Expr, out: &mut BTreeSet<String>) {
        match &e.kind {
            ExprKind::Lit(_) => {}
            ExprKind::Var(n) => {
                out.insert(n.clone());
            }
            ExprKind::Index(a, b) | ExprKind::Binary(_, a, b) => {
                expr(a, out);
                expr(b, out);
            }
            ExprKind::Call(_, args) | ExprKind::Intrinsic(_, args) | ExprKind::Array(args) => {
                args.iter().for_each(|a| expr(a, out))
            }
            ExprKind::Unary(_, a) | ExprKind::Paren(a) => expr(a, out),
        }
    }
    for s in body {
        match &s.kind {
            StmtKind::Decl { name, init, .. } => {
                out.insert(name.clone());
                init.iter().for_each(|e| expr(e, out));
            }
            StmtKind::Assign { target, value } => {
                out.insert(target.root().to_string());
                expr(value, out);
            }
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                expr(cond, out);
                collect_idents(then_body, out);
                if let Some(b) = else_body {
                    collect_idents(b, out);
                }
            }
            StmtKind::While { cond, body } => {
                expr(cond, out);
                collect_idents(body, out);
            }
            StmtKind::Return(v) => v.iter().for_each(|e| expr(e, out)),
            StmtKind::Print { value, .. } => value.iter().for_each(|e| expr(e, out)),
            StmtKind::Expr(e) => expr(e, out),
        }
    }
}

/// Leftmost source position of an expression.
fn start_span(e: &Expr) -> Span {
    match &e.kind {
        ExprKind::Binary(_, l, _) => start_span(l),
        ExprKind::Index(b, _) => start_span(b),
        _ => e.span,
    }
}

impl<'c, 'p> FnLowerer<'c, 'p> {
    fn for_globals(cx: &'c mut Context<'p>) -> Self {
        FnLowerer {
            cx,
            function: usize::MAX,
            fn_name: String::new(),
            ret: Type::Void,
            slot_names: Vec::new(),
            slot_types: Vec::new(),
            scopes: alloc::vec![Vec::new()],
            declared: BTreeSet::new(),
            taken: BTreeSet::new(),
            next_temp: 0,
            touched: Vec::new(),
            pending: Vec::new(),
            pending_visible: Vec::new(),
            temps: BTreeSet::new(),
            params: 0,
        }
    }

    fn declare(&mut self, name: &str, ty: &Type, span: Span) -> Result<usize, LangError> {
        if Intrinsic::from_name(name).is_some() {
            return Err(decl_err(span, format!("`{name}` is a reserved name")));
        }
        if self.declared.contains(name) {
            return Err(decl_err(span, format!("duplicate declaration of `{name}`")));
        }
        if self.cx.global_index.contains_key(name) {
            return Err(decl_err(span, format!("`{name}` shadows a global")));
        }
        let slot = self.slot_names.len();
        self.slot_names.push(name.to_string());
        self.slot_types.push(ty.clone());
        self.declared.insert(name.to_string());
        self.scopes
            .last_mut()
            .expect("at least one scope")
            .push((name.to_string(), slot));
        Ok(slot)
    }

    fn touch(&mut self, v: VarRef) {
        if !self.touched.contains(&v) {
            self.touched.push(v);
        }
    }

    fn lookup(&self, name: &str) -> Option<(VarRef, Type)> {
        for scope in self.scopes.iter().rev() {
            if let Some((_, slot)) = scope.iter().rev().find(|(n, _)| n == name) {
                return Some((VarRef::Local(*slot), self.slot_types[*slot].clone()));
            }
        }
        self.cx
            .global_index
            .get(name)
            .map(|&i| (VarRef::Global(i), self.cx.globals[i].1.clone()))
    }

    fn resolve(&mut self, name: &str, span: Span) -> Result<(VarRef, Type), LangError> {
        let found = self.lookup(name).ok_or_else(|| LangError::Unresolved {
            name: name.to_string(),
            span,
        })?;
        if self.function != usize::MAX {
            self.touch(found.0);
        }
        Ok(found)
    }

    fn visible_names(&self) -> BTreeSet<String> {
        let mut names: BTreeSet<String> = self.cx.globals.iter().map(|(n, _)| n.clone()).collect();
        for scope in &self.scopes {
            for (n, _) in scope {
                names.insert(n.clone());
            }
        }
        names
    }

    fn block(&mut self, body: &[Stmt]) -> Result<Vec<LStmt>, LangError> {
        self.scopes.push(Vec::new());
        let out = body.iter().map(|s| self.stmt(s)).collect();
        self.scopes.pop();
        out
    }

    fn stmt(&mut self, s: &Stmt) -> Result<LStmt, LangError> {
        Ok(match &s.kind {
            StmtKind::Decl { ty, name, init } => {
                if *ty == Type::Void {
                    return Err(decl_err(s.span, format!("variable `{name}` cannot be void")));
                }
                let init = match init {
                    Some(e) => Some(self.expr_expect(e, ty)?),
                    None => None,
                };
                let slot = self.declare(name, ty, s.span)?;
                self.touch(VarRef::Local(slot));
                LStmt::Decl(slot, init)
            }
            StmtKind::Assign { target, value } => {
                let (place, ty) = self.place(target, s.span)?;
                let value = self.expr_expect(value, &ty)?;
                LStmt::Assign(place, value)
            }
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                let cond = self.cond(cond, Construct::If)?;
                let then_body = self.block(then_body)?;
                let else_body = match else_body {
                    Some(b) => self.block(b)?,
                    None => Vec::new(),
                };
                LStmt::If(cond, then_body, else_body)
            }
            StmtKind::While { cond, body } => {
                let cond = self.cond(cond, Construct::While)?;
                LStmt::While(cond, self.block(body)?)
            }
            StmtKind::Return(value) => match (value, &self.ret) {
                (None, Type::Void) => LStmt::Return(None),
                (None, ret) => {
                    return Err(type_err(s.span, format!("missing return value of type {ret}")))
                }
                (Some(e), Type::Void) => {
                    return Err(type_err(e.span, "void function returns a value".into()))
                }
                (Some(e), ret) => {
                    let ret = ret.clone();
                    LStmt::Return(Some(self.expr_expect(e, &ret)?))
                }
            },
            StmtKind::Print { value, newline } => {
                let value = match value {
                    Some(e) => {
                        let (le, ty) = self.expr(e, None)?;
                        if ty == Type::Void {
                            return Err(type_err(e.span, "cannot print a void value".into()));
                        }
                        Some(le)
                    }
                    None => None,
                };
                LStmt::Print(value, *newline)
            }
            StmtKind::Expr(e) => LStmt::Expr(self.expr(e, None)?.0),
        })
    }

    fn place(&mut self, lv: &LValue, span: Span) -> Result<(Place, Type), LangError> {
        match lv {
            LValue::Var(name) => {
                let (var, ty) = self.resolve(name, span)?;
                Ok(match var {
                    VarRef::Local(slot) => (Place::Local(slot), ty),
                    VarRef::Global(i) => (Place::Global(i), ty),
                })
            }
            LValue::Index(base, idx) => {
                let (base, ty) = self.place(base, span)?;
                let elem = match ty {
                    Type::Array(elem) => *elem,
                    Type::Str => {
                        return Err(type_err(span, "strings are immutable".into()))
                    }
                    other => return Err(type_err(span, format!("cannot index into {other}"))),
                };
                let idx = self.expr_expect(idx, &Type::Int)?;
                Ok((Place::Index(Box::new(base), idx), elem))
            }
        }
    }

    fn cond(&mut self, e: &Expr, construct: Construct) -> Result<Cond, LangError> {
        match &e.kind {
            ExprKind::Paren(inner) => self.cond(inner, construct),
            ExprKind::Binary(BinOp::And, l, r) => Ok(Cond::And(
                Box::new(self.cond(l, construct)?),
                Box::new(self.cond(r, construct)?),
            )),
            ExprKind::Binary(BinOp::Or, l, r) => Ok(Cond::Or(
                Box::new(self.cond(l, construct)?),
                Box::new(self.cond(r, construct)?),
            )),
            ExprKind::Unary(UnOp::Not, inner) => {
                Ok(Cond::Not(Box::new(self.cond(inner, construct)?)))
            }
            ExprKind::Binary(BinOp::Cmp(op), l, r) => self.site(e, *op, l, r, construct),
            _ => {
                let (le, ty) = self.expr(e, None)?;
                if ty != Type::Bool {
                    return Err(type_err(e.span, format!("condition must be bool, found {ty}")));
                }
                Ok(Cond::Test(le))
            }
        }
    }

    fn fresh_temp(&mut self) -> String {
        loop {
            let name = format!("_t{}", self.next_temp);
            self.next_temp += 1;
            if !self.taken.contains(&name) {
                self.taken.insert(name.clone());
                return name;
            }
        }
    }

    /// Replaces outermost user calls with temporaries, left to right.
    fn hoist_calls(&mut self, e: &Expr, hoisted: &mut Vec<(String, Expr)>) -> Expr {
        let kind = match &e.kind {
            ExprKind::Call(..) => {
                let name = self.fresh_temp();
                hoisted.push((name.clone(), e.clone()));
                ExprKind::Var(name)
            }
            ExprKind::Lit(_) | ExprKind::Var(_) => e.kind.clone(),
            ExprKind::Index(a, b) => ExprKind::Index(
                Box::new(self.hoist_calls(a, hoisted)),
                Box::new(self.hoist_calls(b, hoisted)),
            ),
            ExprKind::Binary(op, a, b) => ExprKind::Binary(
                *op,
                Box::new(self.hoist_calls(a, hoisted)),
                Box::new(self.hoist_calls(b, hoisted)),
            ),
            ExprKind::Intrinsic(i, args) => {
                ExprKind::Intrinsic(*i, args.iter().map(|a| self.hoist_calls(a, hoisted)).collect())
            }
            ExprKind::Array(args) => {
                ExprKind::Array(args.iter().map(|a| self.hoist_calls(a, hoisted)).collect())
            }
            ExprKind::Unary(op, a) => ExprKind::Unary(*op, Box::new(self.hoist_calls(a, hoisted))),
            ExprKind::Paren(a) => ExprKind::Paren(Box::new(self.hoist_calls(a, hoisted))),
        };
        Expr::new(kind, e.span)
    }

    fn site(
        &mut self,
        whole: &Expr,
        op: CmpOp,
        l: &Expr,
        r: &Expr,
        construct: Construct,
    ) -> Result<Cond, LangError> {
        let mut hoisted = Vec::new();
        let l_h = self.hoist_calls(l, &mut hoisted);
        let r_h = self.hoist_calls(r, &mut hoisted);

        let mut hoists = Vec::new();
        for (name, call) in hoisted {
            let (value, ty) = self.expr(&call, None)?;
            if ty == Type::Void {
                return Err(type_err(call.span, "void call used in a comparison".into()));
            }
            let slot = self.declare(&name, &ty, call.span)?;
            self.touch(VarRef::Local(slot));
            self.temps.insert(name.clone());
            hoists.push(Hoist {
                slot,
                name,
                ty,
                value,
                call,
            });
        }

        let (lhs, rhs) = self.comparison_operands(op, &l_h, &r_h, whole.span)?;

        let mut bindings = Vec::new();
        self.use_bindings(&l_h, &mut bindings)?;
        self.use_bindings(&r_h, &mut bindings)?;

        let id = self.cx.sites.len();
        self.cx.sites.push(PredicateSite {
            id,
            function: self.fn_name.clone(),
            span: start_span(whole),
            clause: emit_expr(whole),
            construct,
        });
        // A temporary is only written in source at its own site.
        let mut visible: BTreeSet<String> = self
            .visible_names()
            .into_iter()
            .filter(|n| !self.temps.contains(n))
            .collect();
        visible.extend(hoists.iter().map(|h| h.name.clone()));
        for b in &mut bindings {
            b.visible = match &b.source {
                CaptureSource::Element(_) => true,
                _ => visible.contains(&b.name),
            };
        }
        self.cx.plans.push(SitePlan {
            function: self.function,
            hoists,
            op,
            lhs,
            rhs,
            bindings,
        });
        self.pending.push(id);
        self.pending_visible.push(visible);
        Ok(Cond::Site(id))
    }

    fn use_bindings(&mut self, e: &Expr, out: &mut Vec<Binding>) -> Result<(), LangError> {
        match &e.kind {
            ExprKind::Var(name) => {
                let (var, ty) = self.resolve(name, e.span)?;
                push_binding(out, self.binding_for(var, name, ty));
            }
            ExprKind::Index(base, idx) => {
                let (value, ty) = self.expr(e, None)?;
                push_binding(
                    out,
                    Binding {
                        name: emit_expr(e),
                        ty,
                        source: CaptureSource::Element(value),
                        visible: true,
                    },
                );
                self.use_bindings(base, out)?;
                self.use_bindings(idx, out)?;
            }
            ExprKind::Binary(_, a, b) => {
                self.use_bindings(a, out)?;
                self.use_bindings(b, out)?;
            }
            ExprKind::Intrinsic(_, args) | ExprKind::Array(args) | ExprKind::Call(_, args) => {
                for a in args {
                    self.use_bindings(a, out)?;
                }
            }
            ExprKind::Unary(_, a) | ExprKind::Paren(a) => self.use_bindings(a, out)?,
            ExprKind::Lit(_) => {}
        }
        Ok(())
    }

    fn binding_for(&self, var: VarRef, name: &str, ty: Type) -> Binding {
        Binding {
            name: name.to_string(),
            ty,
            source: match var {
                VarRef::Local(s) => CaptureSource::Local(s),
                VarRef::Global(g) => CaptureSource::Global(g),
            },
            visible: true,
        }
    }

    /// Appends formals and touched variables to every site of this function.
    fn finish_sites(&mut self) {
        let pending = core::mem::take(&mut self.pending);
        let visible_sets = core::mem::take(&mut self.pending_visible);
        for (id, visible) in pending.into_iter().zip(visible_sets) {
            let mut bindings = core::mem::take(&mut self.cx.plans[id].bindings);
            for slot in 0..self.params {
                let name = self.slot_names[slot].clone();
                let ty = self.slot_types[slot].clone();
                push_binding(&mut bindings, self.binding_for(VarRef::Local(slot), &name, ty));
            }
            for var in self.touched.clone() {
                let (name, ty) = match var {
                    VarRef::Local(s) => (self.slot_names[s].clone(), self.slot_types[s].clone()),
                    VarRef::Global(g) => self.cx.globals[g].clone(),
                };
                let mut b = self.binding_for(var, &name, ty);
                b.visible = visible.contains(&name);
                push_binding(&mut bindings, b);
            }
            self.cx.plans[id].bindings = bindings;
        }
    }

    fn comparison_operands(
        &mut self,
        op: CmpOp,
        l: &Expr,
        r: &Expr,
        span: Span,
    ) -> Result<(LExpr, LExpr), LangError> {
        let (le, lt) = self.expr(l, None)?;
        let (re, rt) = self.expr(r, None)?;
        let ok = match (&lt, &rt) {
            (a, b) if a.is_numeric() && b.is_numeric() => true,
            (Type::Char, Type::Char) | (Type::Str, Type::Str) => true,
            (Type::Bool, Type::Bool) => op.is_equality(),
            (Type::Array(a), Type::Array(b)) => op.is_equality() && a == b,
            _ => false,
        };
        if !ok {
            return Err(type_err(
                span,
                format!("cannot compare {lt} {} {rt}", op.symbol()),
            ));
        }
        Ok(promote_pair(le, &lt, re, &rt))
    }

    fn expr_expect(&mut self, e: &Expr, want: &Type) -> Result<LExpr, LangError> {
        let (le, ty) = self.expr(e, Some(want))?;
        if ty == *want {
            Ok(le)
        } else if want.accepts(&ty) {
            Ok(LExpr::Promote(Box::new(le)))
        } else {
            Err(type_err(e.span, format!("expected {want}, found {ty}")))
        }
    }

    fn expr(&mut self, e: &Expr, hint: Option<&Type>) -> Result<(LExpr, Type), LangError> {
        Ok(match &e.kind {
            ExprKind::Lit(lit) => (
                LExpr::Lit(lit.clone()),
                match lit {
                    Literal::Int(_) => Type::Int,
                    Literal::Float(_) => Type::Float,
                    Literal::Char(_) => Type::Char,
                    Literal::Str(_) => Type::Str,
                    Literal::Bool(_) => Type::Bool,
                },
            ),
            ExprKind::Var(name) => {
                let (var, ty) = self.resolve(name, e.span)?;
                let le = match var {
                    VarRef::Local(s) => LExpr::Local(s),
                    VarRef::Global(g) => LExpr::Global(g),
                };
                (le, ty)
            }
            ExprKind::Paren(inner) => self.expr(inner, hint)?,
            ExprKind::Index(base, idx) => {
                let (b, bt) = self.expr(base, None)?;
                let i = self.expr_expect(idx, &Type::Int)?;
                let elem = match bt {
                    Type::Array(elem) => *elem,
                    Type::Str => Type::Char,
                    other => return Err(type_err(e.span, format!("cannot index into {other}"))),
                };
                (LExpr::Index(Box::new(b), Box::new(i)), elem)
            }
            ExprKind::Call(name, args) => {
                let (index, decl) = match self.cx.signatures.get(name.as_str()) {
                    Some(&(i, d)) => (i, d),
                    None => {
                        return Err(LangError::Unresolved {
                            name: name.clone(),
                            span: e.span,
                        })
                    }
                };
                if args.len() != decl.params.len() {
                    return Err(type_err(
                        e.span,
                        format!(
                            "`{name}` takes {} arguments, found {}",
                            decl.params.len(),
                            args.len()
                        ),
                    ));
                }
                let params: Vec<Type> = decl.params.iter().map(|p| p.ty.clone()).collect();
                let ret = decl.ret.clone();
                let mut largs = Vec::new();
                for (a, pt) in args.iter().zip(&params) {
                    largs.push(self.expr_expect(a, pt)?);
                }
                (LExpr::Call(index, largs), ret)
            }
            ExprKind::Intrinsic(intr, args) => {
                if args.len() != 1 {
                    return Err(type_err(
                        e.span,
                        format!("`{}` takes 1 argument, found {}", intr.name(), args.len()),
                    ));
                }
                let (a, at) = self.expr(&args[0], None)?;
                let ok = match intr {
                    Intrinsic::Len => matches!(at, Type::Str | Type::Array(_)),
                    Intrinsic::Hash => at != Type::Void,
                    Intrinsic::ToInt => {
                        matches!(at, Type::Int | Type::Float | Type::Char | Type::Bool)
                    }
                    Intrinsic::ToFloat => matches!(at, Type::Int | Type::Float | Type::Char),
                    Intrinsic::ToChar => matches!(at, Type::Int | Type::Char),
                };
                if !ok {
                    return Err(type_err(
                        e.span,
                        format!("`{}` does not accept {at}", intr.name()),
                    ));
                }
                let ty = match intr {
                    Intrinsic::Len | Intrinsic::Hash | Intrinsic::ToInt => Type::Int,
                    Intrinsic::ToFloat => Type::Float,
                    Intrinsic::ToChar => Type::Char,
                };
                (LExpr::Intrinsic(*intr, Box::new(a)), ty)
            }
            ExprKind::Unary(UnOp::Neg, inner) => {
                let (a, at) = self.expr(inner, None)?;
                if !at.is_numeric() {
                    return Err(type_err(e.span, format!("cannot negate {at}")));
                }
                (LExpr::Neg(Box::new(a)), at)
            }
            ExprKind::Unary(UnOp::Not, inner) => {
                let a = self.expr_expect(inner, &Type::Bool)?;
                (LExpr::Not(Box::new(a)), Type::Bool)
            }
            ExprKind::Binary(op, l, r) => self.binary(*op, l, r, e.span)?,
            ExprKind::Array(items) => {
                let elem = match (items.first(), hint) {
                    (None, Some(Type::Array(elem))) => (**elem).clone(),
                    (None, _) => {
                        return Err(type_err(e.span, "cannot infer type of empty array".into()))
                    }
                    (Some(first), _) => {
                        let want = match hint {
                            Some(Type::Array(elem)) => Some((**elem).clone()),
                            _ => None,
                        };
                        match want {
                            Some(t) => t,
                            None => self.expr(first, None)?.1,
                        }
                    }
                };
                let mut out = Vec::new();
                for item in items {
                    out.push(self.expr_expect(item, &elem)?);
                }
                (LExpr::Array(out), Type::Array(Box::new(elem)))
            }
        })
    }

    fn binary(&mut self, op: BinOp, l: &Expr, r: &Expr, span: Span) -> Result<(LExpr, Type), LangError> {
        match op {
            BinOp::And | BinOp::Or | BinOp::Xor => {
                let a = Box::new(self.expr_expect(l, &Type::Bool)?);
                let b = Box::new(self.expr_expect(r, &Type::Bool)?);
                let le = match op {
                    BinOp::And => LExpr::And(a, b),
                    BinOp::Or => LExpr::Or(a, b),
                    _ => LExpr::Xor(a, b),
                };
                Ok((le, Type::Bool))
            }
            BinOp::Cmp(cop) => {
                let (a, b) = self.comparison_operands(cop, l, r, span)?;
                Ok((LExpr::Cmp(cop, Box::new(a), Box::new(b)), Type::Bool))
            }
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem => {
                let (a, at) = self.expr(l, None)?;
                let (b, bt) = self.expr(r, None)?;
                let aop = match op {
                    BinOp::Add => ArithOp::Add,
                    BinOp::Sub => ArithOp::Sub,
                    BinOp::Mul => ArithOp::Mul,
                    BinOp::Div => ArithOp::Div,
                    _ => ArithOp::Rem,
                };
                if at.is_numeric() && bt.is_numeric() {
                    let ty = if at == Type::Float || bt == Type::Float {
                        Type::Float
                    } else {
                        Type::Int
                    };
                    let (a, b) = promote_pair(a, &at, b, &bt);
                    return Ok((LExpr::Arith(aop, Box::new(a), Box::new(b)), ty));
                }
                if aop == ArithOp::Add && at == Type::Str && matches!(bt, Type::Str | Type::Char) {
                    return Ok((LExpr::Arith(aop, Box::new(a), Box::new(b)), Type::Str));
                }
                Err(type_err(
                    span,
                    format!("operator `{}` does not apply to {at} and {bt}", op.symbol()),
                ))
            }
        }
    }
}

fn promote_pair(a: LExpr, at: &Type, b: LExpr, bt: &Type) -> (LExpr, LExpr) {
    match (at, bt) {
        (Type::Int, Type::Float) => (LExpr::Promote(Box::new(a)), b),
        (Type::Float, Type::Int) => (a, LExpr::Promote(Box::new(b))),
        _ => (a, b),
    }
}

fn push_binding(out: &mut Vec<Binding>, b: Binding) {
    if !out.iter().any(|x| x.name == b.name) {
        out.push(b);
    }
}
