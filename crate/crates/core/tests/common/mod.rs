//! Shared fixtures and oracles for the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use flipfix_core::minilang::{
    compile, parse_program, parse_test_suite, BinOp, CmpOp, Expr, ExprKind, FunctionDecl,
    Intrinsic, Item, LValue, Literal, LoweredProgram, Program, Stmt, StmtKind, TestCase,
    TestSuite, Type, UnOp,
};
use flipfix_core::Value;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Defect {
    pub name: String,
    pub buggy_src: String,
    pub reference_src: String,
    pub buggy: LoweredProgram,
    pub reference: LoweredProgram,
    pub training: TestSuite,
}

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn corpus() -> Vec<Defect> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.join("buggy.mimp").is_file())
        .collect();
    dirs.sort();
    dirs.iter()
        .map(|d| {
            let buggy_src = std::fs::read_to_string(d.join("buggy.mimp")).unwrap();
            let reference_src = std::fs::read_to_string(d.join("reference.mimp")).unwrap();
            let buggy = compile(&buggy_src).unwrap();
            let reference = compile(&reference_src).unwrap();
            let tests = std::fs::read_to_string(d.join("train.tests")).unwrap();
            let training = parse_test_suite(&tests, &buggy.source).unwrap();
            Defect {
                name: d.file_name().unwrap().to_string_lossy().into_owned(),
                buggy_src,
                reference_src,
                buggy,
                reference,
                training,
            }
        })
        .collect()
}

pub fn defect(name: &str) -> Defect {
    corpus().into_iter().find(|d| d.name == name).unwrap()
}

pub fn suite(p: &LoweredProgram, text: &str) -> TestSuite {
    parse_test_suite(text, &p.source).unwrap()
}

/// Random inputs for `main`, small enough to keep loops short.
pub fn random_tests(p: &Program, n: usize, seed: u64) -> Vec<TestCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params: Vec<Type> = p.entry().params.iter().map(|x| x.ty.clone()).collect();
    (0..n)
        .map(|i| TestCase {
            name: format!("r{i}"),
            args: params.iter().map(|t| random_value(t, &mut rng)).collect(),
            expected_output: String::new(),
        })
        .collect()
}

fn random_value(t: &Type, rng: &mut ChaCha8Rng) -> Value {
    const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyzAZ 09{";
    match t {
        Type::Int => Value::Int(rng.gen_range(-20..3000)),
        Type::Float => Value::Float((rng.gen_range(0.0..100.0f64) * 10.0).round() / 10.0),
        Type::Char => Value::Char(ALPHABET[rng.gen_range(0..ALPHABET.len())] as char),
        Type::Bool => Value::Bool(rng.gen()),
        Type::Str => {
            let len = rng.gen_range(0..10);
            let s: String = (0..len)
                .map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())] as char)
                .collect();
            Value::str(&s)
        }
        Type::Array(elem) => {
            let len = rng.gen_range(0..7);
            let items = (0..len)
                .map(|_| match **elem {
                    Type::Int => Value::Int(rng.gen_range(0..10)),
                    ref other => random_value(other, rng),
                })
                .collect();
            Value::array(items)
        }
        Type::Void => unreachable!(),
    }
}

/// Literal reading of each pattern: is instance `k` (1-based) of `n` negated?
pub fn pattern_bit(name: &str, k: u32, n: u32) -> bool {
    match name {
        "all" => true,
        "first" => k == 1,
        "last" => k == n,
        "all-first" => k != 1,
        "all-last" => k != n,
        "all-(first+last)" => k != 1 && k != n,
        "first+1" => k == 2,
        "last-1" => n >= 2 && k == n - 1,
        "first+last" => k == 1 || k == n,
        "odd" => k % 2 == 1,
        "even" => k % 2 == 0,
        other => panic!("no such pattern {other}"),
    }
}

pub fn pattern_bits(name: &str, n: u32) -> String {
    (1..=n)
        .map(|k| if pattern_bit(name, k, n) { '1' } else { '0' })
        .collect()
}

/// Polynomial hash `h = 31*h + x` with 32-bit wrapping.
pub fn fold_hash(v: &Value) -> i32 {
    match v {
        Value::Int(i) => *i as i32,
        Value::Char(c) => *c as u32 as i32,
        Value::Bool(b) => i32::from(*b),
        Value::Float(f) => {
            let bits = f.to_bits();
            (bits as u32 ^ (bits >> 32) as u32) as i32
        }
        Value::Str(s) => {
            let mut h: i32 = 0;
            for c in s.chars() {
                h = h.wrapping_mul(31).wrapping_add(c as i32);
            }
            h
        }
        Value::Array(items) => {
            let mut h: i32 = 0;
            for x in items.iter() {
                h = h.wrapping_mul(31).wrapping_add(fold_hash(x));
            }
            h
        }
    }
}

/// Outcome of the reference evaluator: printed text, or the runtime error.
pub type EvalResult = Result<String, String>;

/// Straightforward evaluator over the surface syntax. It never sees the
/// lowered form or the controller.
pub fn reference_eval(p: &Program, args: &[Value]) -> EvalResult {
    let mut e = Evaluator {
        prog: p,
        globals: HashMap::new(),
        out: String::new(),
        steps: 0,
        depth: 0,
    };
    for item in &p.items {
        if let Item::Global(g) = item {
            let v = match &g.init {
                Some(init) => {
                    let mut scopes = Vec::new();
                    Some(coerce(&g.ty, e.expr(init, &mut scopes)?))
                }
                None => None,
            };
            e.globals.insert(g.name.clone(), (g.ty.clone(), v));
        }
    }
    let main = p.entry();
    e.call(main, args.to_vec())?;
    Ok(e.out)
}

struct Evaluator<'a> {
    prog: &'a Program,
    globals: HashMap<String, (Type, Option<Value>)>,
    out: String,
    steps: u64,
    depth: usize,
}

type Scopes = Vec<HashMap<String, (Type, Option<Value>)>>;

enum Ctl {
    Next,
    Ret(Option<Value>),
}

fn coerce(ty: &Type, v: Value) -> Value {
    match (ty, v) {
        (Type::Float, Value::Int(i)) => Value::Float(i as f64),
        (Type::Array(elem), Value::Array(items)) => {
            Value::array(items.iter().map(|x| coerce(elem, x.clone())).collect())
        }
        (_, v) => v,
    }
}

fn render(v: &Value) -> String {
    match v {
        Value::Int(i) => i.to_string(),
        Value::Float(f) => {
            if f.fract() == 0.0 && f.abs() < 1e16 {
                format!("{f:.1}")
            } else {
                format!("{f}")
            }
        }
        Value::Char(c) => c.to_string(),
        Value::Str(s) => s.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(render).collect();
            format!("[{}]", parts.join(", "))
        }
    }
}

impl Evaluator<'_> {
    fn call(&mut self, f: &FunctionDecl, args: Vec<Value>) -> Result<Option<Value>, String> {
        self.depth += 1;
        if self.depth > 200 {
            return Err("too deep".into());
        }
        let mut frame = HashMap::new();
        for (param, v) in f.params.iter().zip(args) {
            frame.insert(param.name.clone(), (param.ty.clone(), Some(coerce(&param.ty, v))));
        }
        let mut scopes = vec![frame];
        let ctl = self.block(&f.body, &mut scopes)?;
        self.depth -= 1;
        match ctl {
            Ctl::Ret(v) => Ok(v.map(|v| coerce(&f.ret, v))),
            Ctl::Next => Ok(None),
        }
    }

    fn block(&mut self, body: &[Stmt], scopes: &mut Scopes) -> Result<Ctl, String> {
        scopes.push(HashMap::new());
        let mut ctl = Ctl::Next;
        for s in body {
            match self.stmt(s, scopes) {
                Ok(Ctl::Next) => {}
                Ok(r) => {
                    ctl = r;
                    break;
                }
                Err(e) => {
                    scopes.pop();
                    return Err(e);
                }
            }
        }
        scopes.pop();
        Ok(ctl)
    }

    fn stmt(&mut self, s: &Stmt, scopes: &mut Scopes) -> Result<Ctl, String> {
        self.steps += 1;
        if self.steps > 5_000_000 {
            return Err("step limit".into());
        }
        match &s.kind {
            StmtKind::Decl { ty, name, init } => {
                let v = match init {
                    Some(e) => Some(coerce(ty, self.expr(e, scopes)?)),
                    None => None,
                };
                scopes
                    .last_mut()
                    .unwrap()
                    .insert(name.clone(), (ty.clone(), v));
            }
            StmtKind::Assign { target, value } => {
                let mut path = Vec::new();
                self.lvalue_path(target, scopes, &mut path)?;
                let v = self.expr(value, scopes)?;
                self.assign(target.root(), &path, v, scopes)?;
            }
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                if self.truth(cond, scopes)? {
                    return self.block(then_body, scopes);
                } else if let Some(body) = else_body {
                    return self.block(body, scopes);
                }
            }
            StmtKind::While { cond, body } => {
                while self.truth(cond, scopes)? {
                    if let Ctl::Ret(v) = self.block(body, scopes)? {
                        return Ok(Ctl::Ret(v));
                    }
                    self.steps += 1;
                }
            }
            StmtKind::Return(v) => {
                let v = match v {
                    Some(e) => Some(self.expr(e, scopes)?),
                    None => None,
                };
                return Ok(Ctl::Ret(v));
            }
            StmtKind::Print { value, newline } => {
                if let Some(e) = value {
                    let v = self.expr(e, scopes)?;
                    self.out.push_str(&render(&v));
                }
                if *newline {
                    self.out.push('\n');
                }
            }
            StmtKind::Expr(e) => {
                self.expr(e, scopes)?;
            }
        }
        Ok(Ctl::Next)
    }

    fn lvalue_path(&mut self, lv: &LValue, scopes: &mut Scopes, out: &mut Vec<i64>) -> Result<(), String> {
        if let LValue::Index(inner, idx) = lv {
            self.lvalue_path(inner, scopes, out)?;
            match self.expr(idx, scopes)? {
                Value::Int(i) => out.push(i),
                _ => return Err("bad index".into()),
            }
        }
        Ok(())
    }

    fn slot<'s>(
        &'s mut self,
        name: &str,
        scopes: &'s mut Scopes,
    ) -> Result<&'s mut (Type, Option<Value>), String> {
        for scope in scopes.iter_mut().rev() {
            if let Some(slot) = scope.get_mut(name) {
                return Ok(slot);
            }
        }
        self.globals.get_mut(name).ok_or_else(|| format!("unknown {name}"))
    }

    fn assign(&mut self, name: &str, path: &[i64], v: Value, scopes: &mut Scopes) -> Result<(), String> {
        let (ty, slot) = self.slot(name, scopes)?;
        let ty = ty.clone();
        if path.is_empty() {
            *slot = Some(coerce(&ty, v));
            return Ok(());
        }
        fn put(target: &mut Value, ty: &Type, path: &[i64], v: Value) -> Result<(), String> {
            let (Value::Array(items), Type::Array(elem)) = (target, ty) else {
                return Err("not an array".into());
            };
            let items = std::sync::Arc::make_mut(items);
            let cell = usize::try_from(path[0])
                .ok()
                .and_then(|i| items.get_mut(i))
                .ok_or("index out of bounds")?;
            if path.len() == 1 {
                *cell = coerce(elem, v);
                Ok(())
            } else {
                put(cell, elem, &path[1..], v)
            }
        }
        let target = slot.as_mut().ok_or("uninitialized array")?;
        put(target, &ty, path, v)
    }

    fn truth(&mut self, e: &Expr, scopes: &mut Scopes) -> Result<bool, String> {
        match self.expr(e, scopes)? {
            Value::Bool(b) => Ok(b),
            _ => Err("not a bool".into()),
        }
    }

    fn expr(&mut self, e: &Expr, scopes: &mut Scopes) -> Result<Value, String> {
        Ok(match &e.kind {
            ExprKind::Lit(l) => match l {
                Literal::Int(i) => Value::Int(*i),
                Literal::Float(f) => Value::Float(*f),
                Literal::Char(c) => Value::Char(*c),
                Literal::Str(s) => Value::str(s),
                Literal::Bool(b) => Value::Bool(*b),
            },
            ExprKind::Var(name) => self
                .slot(name, scopes)?
                .1
                .clone()
                .ok_or_else(|| format!("uninitialized {name}"))?,
            ExprKind::Index(base, idx) => {
                let b = self.expr(base, scopes)?;
                let Value::Int(i) = self.expr(idx, scopes)? else {
                    return Err("bad index".into());
                };
                let i = usize::try_from(i).map_err(|_| "negative index".to_string())?;
                match b {
                    Value::Array(items) => items.get(i).cloned().ok_or("out of bounds")?,
                    Value::Str(s) => Value::Char(s.chars().nth(i).ok_or("out of bounds")?),
                    _ => return Err("not indexable".into()),
                }
            }
            ExprKind::Call(name, args) => {
                let mut vals = Vec::new();
                for a in args {
                    vals.push(self.expr(a, scopes)?);
                }
                let f = self.prog.function(name).ok_or("no function")?;
                self.call(f, vals)?.ok_or("void value")?
            }
            ExprKind::Intrinsic(intr, args) => {
                let v = self.expr(&args[0], scopes)?;
                match (intr, v) {
                    (Intrinsic::Len, Value::Str(s)) => Value::Int(s.chars().count() as i64),
                    (Intrinsic::Len, Value::Array(a)) => Value::Int(a.len() as i64),
                    (Intrinsic::Hash, v) => Value::Int(i64::from(fold_hash(&v))),
                    (Intrinsic::ToInt, Value::Float(f)) => Value::Int(f as i64),
                    (Intrinsic::ToInt, Value::Char(c)) => Value::Int(c as i64),
                    (Intrinsic::ToInt, Value::Bool(b)) => Value::Int(b as i64),
                    (Intrinsic::ToInt, v @ Value::Int(_)) => v,
                    (Intrinsic::ToFloat, Value::Int(i)) => Value::Float(i as f64),
                    (Intrinsic::ToFloat, Value::Char(c)) => Value::Float(c as u32 as f64),
                    (Intrinsic::ToFloat, v @ Value::Float(_)) => v,
                    (Intrinsic::ToChar, Value::Int(i)) => Value::Char(
                        u32::try_from(i).ok().and_then(char::from_u32).ok_or("bad char")?,
                    ),
                    (Intrinsic::ToChar, v @ Value::Char(_)) => v,
                    _ => return Err("bad intrinsic argument".into()),
                }
            }
            ExprKind::Unary(UnOp::Neg, inner) => match self.expr(inner, scopes)? {
                Value::Int(i) => Value::Int(i.wrapping_neg()),
                Value::Float(f) => Value::Float(-f),
                _ => return Err("bad negation".into()),
            },
            ExprKind::Unary(UnOp::Not, inner) => Value::Bool(!self.truth(inner, scopes)?),
            ExprKind::Paren(inner) => self.expr(inner, scopes)?,
            ExprKind::Array(items) => {
                let mut vals = Vec::new();
                for it in items {
                    vals.push(self.expr(it, scopes)?);
                }
                if vals.iter().any(|v| matches!(v, Value::Float(_))) {
                    vals = vals.into_iter().map(|v| coerce(&Type::Float, v)).collect();
                }
                Value::array(vals)
            }
            ExprKind::Binary(BinOp::And, l, r) => {
                Value::Bool(self.truth(l, scopes)? && self.truth(r, scopes)?)
            }
            ExprKind::Binary(BinOp::Or, l, r) => {
                Value::Bool(self.truth(l, scopes)? || self.truth(r, scopes)?)
            }
            ExprKind::Binary(BinOp::Xor, l, r) => {
                let a = self.truth(l, scopes)?;
                Value::Bool(a ^ self.truth(r, scopes)?)
            }
            ExprKind::Binary(BinOp::Cmp(op), l, r) => {
                let a = self.expr(l, scopes)?;
                let b = self.expr(r, scopes)?;
                Value::Bool(cmp(*op, a, b)?)
            }
            ExprKind::Binary(op, l, r) => {
                let a = self.expr(l, scopes)?;
                let b = self.expr(r, scopes)?;
                arith(*op, a, b)?
            }
        })
    }
}

fn promote(a: Value, b: Value) -> (Value, Value) {
    match (a, b) {
        (Value::Int(x), Value::Float(y)) => (Value::Float(x as f64), Value::Float(y)),
        (Value::Float(x), Value::Int(y)) => (Value::Float(x), Value::Float(y as f64)),
        pair => pair,
    }
}

fn arith(op: BinOp, a: Value, b: Value) -> Result<Value, String> {
    Ok(match promote(a, b) {
        (Value::Int(x), Value::Int(y)) => Value::Int(match op {
            BinOp::Add => x.wrapping_add(y),
            BinOp::Sub => x.wrapping_sub(y),
            BinOp::Mul => x.wrapping_mul(y),
            BinOp::Div => x.checked_div(y).ok_or("division by zero")?,
            BinOp::Rem => x.checked_rem(y).ok_or("remainder by zero")?,
            _ => unreachable!(),
        }),
        (Value::Float(x), Value::Float(y)) => Value::Float(match op {
            BinOp::Add => x + y,
            BinOp::Sub => x - y,
            BinOp::Mul => x * y,
            BinOp::Div => x / y,
            BinOp::Rem => x % y,
            _ => unreachable!(),
        }),
        (Value::Str(s), Value::Str(t)) if op == BinOp::Add => Value::str(&format!("{s}{t}")),
        (Value::Str(s), Value::Char(c)) if op == BinOp::Add => Value::str(&format!("{s}{c}")),
        _ => return Err("bad operands".into()),
    })
}

fn cmp(op: CmpOp, a: Value, b: Value) -> Result<bool, String> {
    use std::cmp::Ordering;
    let ord = match promote(a, b) {
        (Value::Int(x), Value::Int(y)) => Some(x.cmp(&y)),
        (Value::Float(x), Value::Float(y)) => x.partial_cmp(&y),
        (Value::Char(x), Value::Char(y)) => Some(x.cmp(&y)),
        (Value::Str(x), Value::Str(y)) => Some(x.cmp(&y)),
        (Value::Bool(x), Value::Bool(y)) => Some(x.cmp(&y)),
        (x @ Value::Array(_), y @ Value::Array(_)) => {
            return Ok((x == y) == (op == CmpOp::Eq));
        }
        _ => return Err("bad comparison".into()),
    };
    Ok(match (op, ord) {
        (CmpOp::Ne, None) => true,
        (_, None) => false,
        (CmpOp::Eq, Some(o)) => o == Ordering::Equal,
        (CmpOp::Ne, Some(o)) => o != Ordering::Equal,
        (CmpOp::Lt, Some(o)) => o == Ordering::Less,
        (CmpOp::Le, Some(o)) => o != Ordering::Greater,
        (CmpOp::Gt, Some(o)) => o == Ordering::Greater,
        (CmpOp::Ge, Some(o)) => o != Ordering::Less,
    })
}

/// Parses, checks and lowers, panicking on errors.
pub fn program(src: &str) -> LoweredProgram {
    let p = parse_program(src).unwrap();
    flipfix_core::minilang::lower_predicates(&p)
}
