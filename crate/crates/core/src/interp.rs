//! Deterministic tree-walking interpreter over lowered programs.
//!
//! Every predicate site is a hook: a [`Controller`] may invert the outcome of
//! one site at chosen executions, either from a fixed instance set or by asking
//! a [`NegationDecider`] about the state captured right before the comparison.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::sync::Arc;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::minilang::{
    outputs_match, ArithOp, CaptureSource, CmpOp, Cond, Intrinsic, LExpr, LStmt, LoweredProgram,
    Place, SiteId, TestCase,
};
use crate::value::Value;

pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000;

/// Nested user calls beyond this depth abort the run.
pub const MAX_CALL_DEPTH: usize = 96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AbortReason {
    StepBudget,
    RuntimeError(String),
}

/// Program state observed right before one execution of a site.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSnapshot {
    pub site: SiteId,
    /// 1-based execution index of the site within the run.
    pub instance: u32,
    /// Values in schema order; `None` marks a variable with no value yet.
    pub values: Vec<Option<Value>>,
}

/// Decides, from a snapshot, whether the controlled site is negated.
pub trait NegationDecider {
    fn negate(&self, snapshot: &StateSnapshot) -> bool;
}

impl<F: Fn(&StateSnapshot) -> bool> NegationDecider for F {
    fn negate(&self, snapshot: &StateSnapshot) -> bool {
        self(snapshot)
    }
}

pub enum Mode<'a> {
    None,
    Pattern(BTreeSet<u32>),
    Classifier(&'a dyn NegationDecider),
}

/// At most one site is controlled per run.
pub struct Controller<'a> {
    pub site: Option<SiteId>,
    pub mode: Mode<'a>,
    pub capture: bool,
}

impl<'a> Controller<'a> {
    pub fn none() -> Self {
        Self {
            site: None,
            mode: Mode::None,
            capture: false,
        }
    }

    /// Records snapshots at `site` without changing the run.
    pub fn observe(site: SiteId) -> Self {
        Self {
            site: Some(site),
            mode: Mode::None,
            capture: true,
        }
    }

    pub fn pattern(site: SiteId, instances: BTreeSet<u32>) -> Self {
        Self {
            site: Some(site),
            mode: Mode::Pattern(instances),
            capture: false,
        }
    }

    pub fn classifier(site: SiteId, decider: &'a dyn NegationDecider) -> Self {
        Self {
            site: Some(site),
            mode: Mode::Classifier(decider),
            capture: false,
        }
    }

    pub fn with_capture(mut self) -> Self {
        self.capture = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub verdict: Verdict,
    pub output: String,
    /// Execution count per site id.
    pub site_counts: Vec<u32>,
    pub snapshots: Vec<StateSnapshot>,
    /// Instances of the controlled site whose outcome was inverted.
    pub negations_fired: Vec<u32>,
    pub abort: Option<AbortReason>,
}

impl RunResult {
    pub fn passed(&self) -> bool {
        self.verdict.is_pass()
    }
}

pub fn run(p: &LoweredProgram, t: &TestCase, c: &Controller<'_>, step_budget: u64) -> RunResult {
    let mut m = Machine {
        prog: p,
        globals: vec![None; p.globals.len()],
        output: String::new(),
        steps: 0,
        budget: step_budget,
        counts: vec![0; p.sites.len()],
        controller: c,
        snapshots: Vec::new(),
        fired: Vec::new(),
        fn_stack: Vec::new(),
    };
    let abort = m.execute(&t.args).err();
    let verdict = if abort.is_none() && outputs_match(&m.output, &t.expected_output) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    RunResult {
        verdict,
        output: m.output,
        site_counts: m.counts,
        snapshots: m.snapshots,
        negations_fired: m.fired,
        abort,
    }
}

/// Per-site execution counts of an unmodified run.
pub fn count_executions(p: &LoweredProgram, t: &TestCase, step_budget: u64) -> Vec<u32> {
    run(p, t, &Controller::none(), step_budget).site_counts
}

/// Snapshot of `site` given the current frame; `None` for unset variables or
/// element reads that would fail.
fn capture_state(m: &mut Machine<'_, '_>, site: SiteId, instance: u32, frame: &mut [Option<Value>]) -> StateSnapshot {
    let plan = m.prog.plan(site);
    let mut values = Vec::with_capacity(plan.bindings.len());
    for b in &plan.bindings {
        let v = match &b.source {
            CaptureSource::Local(slot) => frame[*slot].clone(),
            CaptureSource::Global(g) => m.globals[*g].clone(),
            CaptureSource::Element(e) => m.eval(e, frame).ok(),
        };
        values.push(v);
    }
    StateSnapshot {
        site,
        instance,
        values,
    }
}

type Exec<T> = Result<T, AbortReason>;

enum Flow {
    Normal,
    Return(Option<Value>),
}

struct Machine<'p, 'c> {
    prog: &'p LoweredProgram,
    globals: Vec<Option<Value>>,
    output: String,
    steps: u64,
    budget: u64,
    counts: Vec<u32>,
    controller: &'c Controller<'c>,
    snapshots: Vec<StateSnapshot>,
    fired: Vec<u32>,
    fn_stack: Vec<usize>,
}

fn runtime(msg: impl Into<String>) -> AbortReason {
    AbortReason::RuntimeError(msg.into())
}

impl<'p, 'c> Machine<'p, 'c> {
    fn execute(&mut self, args: &[Value]) -> Exec<()> {
        let mut empty: Vec<Option<Value>> = Vec::new();
        for (i, g) in self.prog.globals.iter().enumerate() {
            if let Some(init) = &g.init {
                let v = self.eval(init, &mut empty[..])?;
                self.globals[i] = Some(v);
            }
        }
        let main = self.prog.main;
        self.call(main, args.to_vec(), true)?;
        Ok(())
    }

    fn tick(&mut self) -> Exec<()> {
        self.steps += 1;
        if self.steps > self.budget {
            Err(AbortReason::StepBudget)
        } else {
            Ok(())
        }
    }

    fn call(&mut self, func: usize, args: Vec<Value>, is_entry: bool) -> Exec<Option<Value>> {
        let f = &self.prog.functions[func];
        if self.fn_stack.len() >= MAX_CALL_DEPTH {
            return Err(runtime(format!("call depth exceeded in `{}`", f.name)));
        }
        self.fn_stack.push(func);
        let mut frame: Vec<Option<Value>> = vec![None; f.slot_names.len()];
        for (slot, v) in args.into_iter().enumerate() {
            frame[slot] = Some(v);
        }
        let flow = self.block(&f.body, &mut frame);
        self.fn_stack.pop();
        match flow? {
            Flow::Return(v) => Ok(v),
            Flow::Normal if f.ret == crate::minilang::Type::Void || is_entry => Ok(None),
            Flow::Normal => Err(runtime(format!("`{}` ended without returning a value", f.name))),
        }
    }

    fn block(&mut self, body: &[LStmt], frame: &mut [Option<Value>]) -> Exec<Flow> {
        for s in body {
            if let Flow::Return(v) = self.stmt(s, frame)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Normal)
    }

    fn stmt(&mut self, s: &LStmt, frame: &mut [Option<Value>]) -> Exec<Flow> {
        self.tick()?;
        match s {
            LStmt::Decl(slot, init) => {
                frame[*slot] = match init {
                    Some(e) => Some(self.eval(e, frame)?),
                    None => None,
                };
            }
            LStmt::Assign(place, value) => {
                let mut indices = Vec::new();
                self.place_indices(place, frame, &mut indices)?;
                let v = self.eval(value, frame)?;
                self.store(place, &indices, frame, v)?;
            }
            LStmt::If(cond, then_body, else_body) => {
                let branch = if self.cond(cond, frame)? {
                    then_body
                } else {
                    else_body
                };
                return self.block(branch, frame);
            }
            LStmt::While(cond, body) => loop {
                if !self.cond(cond, frame)? {
                    break;
                }
                if let Flow::Return(v) = self.block(body, frame)? {
                    return Ok(Flow::Return(v));
                }
                self.tick()?;
            },
            LStmt::Return(value) => {
                let v = match value {
                    Some(e) => Some(self.eval(e, frame)?),
                    None => None,
                };
                return Ok(Flow::Return(v));
            }
            LStmt::Print(value, newline) => {
                if let Some(e) = value {
                    let v = self.eval(e, frame)?;
                    let _ = write!(self.output, "{v}");
                }
                if *newline {
                    self.output.push('\n');
                }
            }
            LStmt::Expr(e) => {
                self.eval(e, frame)?;
            }
        }
        Ok(Flow::Normal)
    }

    fn place_indices(&mut self, place: &Place, frame: &mut [Option<Value>], out: &mut Vec<i64>) -> Exec<()> {
        if let Place::Index(base, idx) = place {
            self.place_indices(base, frame, out)?;
            match self.eval(idx, frame)? {
                Value::Int(i) => out.push(i),
                other => return Err(runtime(format!("index is not an int: {other}"))),
            }
        }
        Ok(())
    }

    fn store(&mut self, place: &Place, indices: &[i64], frame: &mut [Option<Value>], v: Value) -> Exec<()> {
        let mut root = place;
        while let Place::Index(base, _) = root {
            root = base;
        }
        let (slot, name) = match root {
            Place::Local(s) => (&mut frame[*s], "local"),
            Place::Global(g) => (&mut self.globals[*g], "global"),
            Place::Index(..) => unreachable!("root of a place is a variable"),
        };
        if indices.is_empty() {
            *slot = Some(v);
            return Ok(());
        }
        let mut target = slot
            .as_mut()
            .ok_or_else(|| runtime(format!("assignment into uninitialized {name} array")))?;
        for &i in indices {
            let Value::Array(items) = target else {
                return Err(runtime("indexed assignment into a non-array"));
            };
            let items = Arc::make_mut(items);
            let len = items.len();
            target = usize::try_from(i)
                .ok()
                .and_then(|i| items.get_mut(i))
                .ok_or_else(|| runtime(format!("index {i} out of bounds for length {len}")))?;
        }
        *target = v;
        Ok(())
    }

    fn cond(&mut self, c: &Cond, frame: &mut [Option<Value>]) -> Exec<bool> {
        match c {
            Cond::Site(id) => self.site(*id, frame),
            Cond::And(l, r) => Ok(self.cond(l, frame)? && self.cond(r, frame)?),
            Cond::Or(l, r) => Ok(self.cond(l, frame)? || self.cond(r, frame)?),
            Cond::Not(inner) => Ok(!self.cond(inner, frame)?),
            Cond::Test(e) => match self.eval(e, frame)? {
                Value::Bool(b) => Ok(b),
                other => Err(runtime(format!("condition is not a bool: {other}"))),
            },
        }
    }

    fn site(&mut self, id: SiteId, frame: &mut [Option<Value>]) -> Exec<bool> {
        self.tick()?;
        let plan = self.prog.plan(id);
        for h in &plan.hoists {
            let v = self.eval(&h.value, frame)?;
            frame[h.slot] = Some(v);
        }
        self.counts[id] += 1;
        let instance = self.counts[id];

        let mut negate = false;
        if self.controller.site == Some(id) {
            let needs_snapshot =
                self.controller.capture || matches!(self.controller.mode, Mode::Classifier(_));
            let snapshot = if needs_snapshot {
                Some(capture_state(self, id, instance, frame))
            } else {
                None
            };
            negate = match &self.controller.mode {
                Mode::None => false,
                Mode::Pattern(set) => set.contains(&instance),
                Mode::Classifier(decider) => {
                    decider.negate(snapshot.as_ref().expect("classifier mode captures"))
                }
            };
            if self.controller.capture {
                if let Some(s) = snapshot {
                    self.snapshots.push(s);
                }
            }
            if negate {
                self.fired.push(instance);
            }
        }

        let lhs = self.eval(&plan.lhs, frame)?;
        let rhs = self.eval(&plan.rhs, frame)?;
        let outcome = compare(plan.op, &lhs, &rhs)?;
        Ok(outcome != negate)
    }

    fn eval(&mut self, e: &LExpr, frame: &mut [Option<Value>]) -> Exec<Value> {
        Ok(match e {
            LExpr::Lit(lit) => Value::from_literal(lit),
            LExpr::Local(slot) => frame[*slot].clone().ok_or_else(|| {
                let name = self
                    .fn_stack
                    .last()
                    .map(|&f| self.prog.functions[f].slot_names[*slot].as_str())
                    .unwrap_or("?");
                runtime(format!("use of uninitialized variable `{name}`"))
            })?,
            LExpr::Global(g) => self.globals[*g].clone().ok_or_else(|| {
                runtime(format!(
                    "use of uninitialized global `{}`",
                    self.prog.globals[*g].name
                ))
            })?,
            LExpr::Index(base, idx) => {
                let b = self.eval(base, frame)?;
                let i = self.eval(idx, frame)?;
                index_value(&b, &i)?
            }
            LExpr::Call(func, args) => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(a, frame)?);
                }
                self.call(*func, vals, false)?.ok_or_else(|| runtime("void call used as a value"))?
            }
            LExpr::Intrinsic(intr, arg) => {
                let v = self.eval(arg, frame)?;
                intrinsic(*intr, &v)?
            }
            LExpr::Neg(inner) => match self.eval(inner, frame)? {
                Value::Int(i) => Value::Int(i.wrapping_neg()),
                Value::Float(f) => Value::Float(-f),
                other => return Err(runtime(format!("cannot negate {other}"))),
            },
            LExpr::Not(inner) => Value::Bool(!self.bool(inner, frame)?),
            LExpr::Arith(op, l, r) => {
                let a = self.eval(l, frame)?;
                let b = self.eval(r, frame)?;
                arith(*op, a, b)?
            }
            LExpr::Cmp(op, l, r) => {
                let a = self.eval(l, frame)?;
                let b = self.eval(r, frame)?;
                Value::Bool(compare(*op, &a, &b)?)
            }
            LExpr::And(l, r) => Value::Bool(self.bool(l, frame)? && self.bool(r, frame)?),
            LExpr::Or(l, r) => Value::Bool(self.bool(l, frame)? || self.bool(r, frame)?),
            LExpr::Xor(l, r) => {
                let a = self.bool(l, frame)?;
                let b = self.bool(r, frame)?;
                Value::Bool(a ^ b)
            }
            LExpr::Promote(inner) => match self.eval(inner, frame)? {
                Value::Int(i) => Value::Float(i as f64),
                Value::Array(items) => Value::array(
                    items
                        .iter()
                        .map(|v| match v {
                            Value::Int(i) => Value::Float(*i as f64),
                            other => other.clone(),
                        })
                        .collect(),
                ),
                other => other,
            },
            LExpr::Array(items) => {
                let mut vals = Vec::with_capacity(items.len());
                for it in items {
                    vals.push(self.eval(it, frame)?);
                }
                Value::array(vals)
            }
        })
    }

    fn bool(&mut self, e: &LExpr, frame: &mut [Option<Value>]) -> Exec<bool> {
        match self.eval(e, frame)? {
            Value::Bool(b) => Ok(b),
            other => Err(runtime(format!("expected bool, found {other}"))),
        }
    }
}

fn index_value(base: &Value, idx: &Value) -> Exec<Value> {
    let Value::Int(i) = idx else {
        return Err(runtime(format!("index is not an int: {idx}")));
    };
    match base {
        Value::Array(items) => usize::try_from(*i)
            .ok()
            .and_then(|u| items.get(u))
            .cloned()
            .ok_or_else(|| runtime(format!("index {i} out of bounds for length {}", items.len()))),
        Value::Str(s) => usize::try_from(*i)
            .ok()
            .and_then(|u| s.chars().nth(u))
            .map(Value::Char)
            .ok_or_else(|| {
                runtime(format!("index {i} out of bounds for string of length {}", s.chars().count()))
            }),
        other => Err(runtime(format!("cannot index into {other}"))),
    }
}

fn intrinsic(intr: Intrinsic, v: &Value) -> Exec<Value> {
    Ok(match (intr, v) {
        (Intrinsic::Len, Value::Str(s)) => Value::Int(s.chars().count() as i64),
        (Intrinsic::Len, Value::Array(items)) => Value::Int(items.len() as i64),
        (Intrinsic::Hash, v) => Value::Int(i64::from(v.hash32())),
        (Intrinsic::ToInt, Value::Int(i)) => Value::Int(*i),
        (Intrinsic::ToInt, Value::Float(f)) => Value::Int(*f as i64),
        (Intrinsic::ToInt, Value::Char(c)) => Value::Int(*c as i64),
        (Intrinsic::ToInt, Value::Bool(b)) => Value::Int(*b as i64),
        (Intrinsic::ToFloat, Value::Int(i)) => Value::Float(*i as f64),
        (Intrinsic::ToFloat, Value::Float(f)) => Value::Float(*f),
        (Intrinsic::ToFloat, Value::Char(c)) => Value::Float(*c as u32 as f64),
        (Intrinsic::ToChar, Value::Char(c)) => Value::Char(*c),
        (Intrinsic::ToChar, Value::Int(i)) => u32::try_from(*i)
            .ok()
            .and_then(char::from_u32)
            .map(Value::Char)
            .ok_or_else(|| runtime(format!("{i} is not a valid char")))?,
        (intr, v) => return Err(runtime(format!("`{}` does not accept {v}", intr.name()))),
    })
}

fn arith(op: ArithOp, a: Value, b: Value) -> Exec<Value> {
    Ok(match (a, b) {
        (Value::Int(x), Value::Int(y)) => Value::Int(match op {
            ArithOp::Add => x.wrapping_add(y),
            ArithOp::Sub => x.wrapping_sub(y),
            ArithOp::Mul => x.wrapping_mul(y),
            ArithOp::Div if y == 0 => return Err(runtime("division by zero")),
            ArithOp::Div => x.wrapping_div(y),
            ArithOp::Rem if y == 0 => return Err(runtime("remainder by zero")),
            ArithOp::Rem => x.wrapping_rem(y),
        }),
        (Value::Float(x), Value::Float(y)) => Value::Float(match op {
            ArithOp::Add => x + y,
            ArithOp::Sub => x - y,
            ArithOp::Mul => x * y,
            ArithOp::Div => x / y,
            ArithOp::Rem => x % y,
        }),
        (Value::Str(s), Value::Str(t)) if op == ArithOp::Add => {
            let mut out = s.to_string();
            out.push_str(&t);
            Value::str(&out)
        }
        (Value::Str(s), Value::Char(c)) if op == ArithOp::Add => {
            let mut out = s.to_string();
            out.push(c);
            Value::str(&out)
        }
        (a, b) => return Err(runtime(format!("invalid operands {a} and {b}"))),
    })
}

pub(crate) fn compare(op: CmpOp, a: &Value, b: &Value) -> Exec<bool> {
    use core::cmp::Ordering;
    let ord: Option<Ordering> = match (a, b) {
        (Value::Int(x), Value::Int(y)) => Some(x.cmp(y)),
        (Value::Float(x), Value::Float(y)) => x.partial_cmp(y),
        (Value::Char(x), Value::Char(y)) => Some(x.cmp(y)),
        (Value::Str(x), Value::Str(y)) => Some(x.cmp(y)),
        (Value::Bool(x), Value::Bool(y)) if op.is_equality() => Some(x.cmp(y)),
        (Value::Array(_), Value::Array(_)) if op.is_equality() => {
            let eq = a == b;
            return Ok((op == CmpOp::Eq) == eq);
        }
        _ => return Err(runtime(format!("cannot compare {a} {} {b}", op.symbol()))),
    };
    // NaN compares false except under `!=`.
    let Some(ord) = ord else {
        return Ok(op == CmpOp::Ne);
    };
    Ok(match op {
        CmpOp::Eq => ord == Ordering::Equal,
        CmpOp::Ne => ord != Ordering::Equal,
        CmpOp::Lt => ord == Ordering::Less,
        CmpOp::Le => ord != Ordering::Greater,
        CmpOp::Gt => ord == Ordering::Greater,
        CmpOp::Ge => ord != Ordering::Less,
    })
}
