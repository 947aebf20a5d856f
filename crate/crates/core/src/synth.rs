//! From a tree to a source patch: DNF extraction, guard rendering, splicing
//! `cond ^ (guard)` into the program, and patch validation.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::dtree::{guided_run, DecisionTree, Node, SplitTest};
use crate::features::{Category, FeatureKind, FeatureValue, FeatureVector, Label, Schema};
use crate::interp::{run, Controller, Verdict};
use crate::minilang::{
    emit_expr, float_literal, parse_expr, try_lower, BinOp, Expr, ExprKind, Item, LValue, Literal,
    LoweredProgram, Program, SiteId, Span, Stmt, StmtKind, TestSuite, Type, UnOp,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LitOp {
    Le(f64),
    Gt(f64),
    Eq(i64),
    Ne(i64),
}

/// One (in)equality over a schema feature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DnfLiteral {
    pub feature: usize,
    pub op: LitOp,
}

impl DnfLiteral {
    pub fn holds(&self, v: &FeatureVector) -> bool {
        let value = v.values[self.feature];
        match (self.op, value) {
            (LitOp::Le(t), FeatureValue::Num(x)) => x <= t,
            (LitOp::Gt(t), FeatureValue::Num(x)) => !(x <= t),
            (LitOp::Eq(c), FeatureValue::Cat(x)) => x == Category::Val(c),
            (LitOp::Ne(c), FeatureValue::Cat(x)) => x != Category::Val(c),
            _ => false,
        }
    }

    fn from_test(test: &SplitTest, taken: bool) -> Self {
        match (*test, taken) {
            (SplitTest::Scalar { feature, threshold }, true) => Self {
                feature,
                op: LitOp::Le(threshold),
            },
            (SplitTest::Scalar { feature, threshold }, false) => Self {
                feature,
                op: LitOp::Gt(threshold),
            },
            (SplitTest::Categorical { feature, value }, true) => Self {
                feature,
                op: LitOp::Eq(value),
            },
            (SplitTest::Categorical { feature, value }, false) => Self {
                feature,
                op: LitOp::Ne(value),
            },
        }
    }
}

/// Disjunction of conjunctions. No clauses is `false`; a clause without
/// literals is `true`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dnf {
    pub clauses: Vec<Vec<DnfLiteral>>,
}

impl Dnf {
    pub fn constant(value: bool) -> Self {
        Self {
            clauses: if value { alloc::vec![Vec::new()] } else { Vec::new() },
        }
    }

    pub fn is_false(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn is_true(&self) -> bool {
        self.clauses.iter().any(Vec::is_empty)
    }

    pub fn eval(&self, v: &FeatureVector) -> bool {
        self.clauses.iter().any(|c| c.iter().all(|l| l.holds(v)))
    }

    pub fn literal_count(&self) -> usize {
        self.clauses.iter().map(Vec::len).sum()
    }

    /// Drops literals implied by others in the same clause and clauses that
    /// cannot hold. Meaning is unchanged.
    pub fn simplify(&self) -> Dnf {
        let mut clauses = Vec::new();
        for clause in &self.clauses {
            if let Some(c) = simplify_clause(clause) {
                if c.is_empty() {
                    return Dnf::constant(true);
                }
                if !clauses.contains(&c) {
                    clauses.push(c);
                }
            }
        }
        Dnf { clauses }
    }
}

fn simplify_clause(clause: &[DnfLiteral]) -> Option<Vec<DnfLiteral>> {
    let features: BTreeSet<usize> = clause.iter().map(|l| l.feature).collect();
    let mut out = Vec::new();
    for f in features {
        let ops = clause.iter().filter(|l| l.feature == f).map(|l| l.op);
        let (mut le, mut gt): (Option<f64>, Option<f64>) = (None, None);
        let (mut eq, mut ne): (Option<i64>, BTreeSet<i64>) = (None, BTreeSet::new());
        for op in ops {
            match op {
                LitOp::Le(t) => le = Some(le.map_or(t, |x| x.min(t))),
                LitOp::Gt(t) => gt = Some(gt.map_or(t, |x| x.max(t))),
                LitOp::Eq(v) => match eq {
                    Some(e) if e != v => return None,
                    _ => eq = Some(v),
                },
                LitOp::Ne(v) => {
                    ne.insert(v);
                }
            }
        }
        if let (Some(l), Some(g)) = (le, gt) {
            if l <= g {
                return None;
            }
        }
        if let Some(e) = eq {
            if ne.contains(&e) {
                return None;
            }
            out.push(DnfLiteral {
                feature: f,
                op: LitOp::Eq(e),
            });
        } else {
            out.extend(ne.into_iter().map(|v| DnfLiteral {
                feature: f,
                op: LitOp::Ne(v),
            }));
        }
        if let Some(t) = gt {
            out.push(DnfLiteral {
                feature: f,
                op: LitOp::Gt(t),
            });
        }
        if let Some(t) = le {
            out.push(DnfLiteral {
                feature: f,
                op: LitOp::Le(t),
            });
        }
    }
    Some(out)
}

/// One conjunction per negate leaf, literals in root-to-leaf order.
pub fn tree_to_dnf(tree: &DecisionTree) -> Dnf {
    fn walk(node: &Node, path: &mut Vec<DnfLiteral>, out: &mut Vec<Vec<DnfLiteral>>) {
        match node {
            Node::Leaf { label, .. } => {
                if *label == Label::Negate {
                    out.push(path.clone());
                }
            }
            Node::Split { test, yes, no } => {
                path.push(DnfLiteral::from_test(test, true));
                walk(yes, path, out);
                path.pop();
                path.push(DnfLiteral::from_test(test, false));
                walk(no, path, out);
                path.pop();
            }
        }
    }
    let mut clauses = Vec::new();
    walk(&tree.root, &mut Vec::new(), &mut clauses);
    Dnf { clauses }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SynthError {
    #[error("site {0} does not exist")]
    NoSuchSite(SiteId),
    #[error("`{0}` cannot be written at the patched site")]
    OutOfScope(String),
    #[error("feature `{0}` cannot be rendered as source")]
    Unrenderable(String),
    #[error("temporary `{0}` would need hoisting out of a position that is not always evaluated")]
    Unhoistable(String),
    #[error("patched program does not check: {0}")]
    Invalid(String),
}

/// Source text of one literal over the site's variables.
pub fn render_literal(lit: &DnfLiteral, schema: &Schema) -> Result<String, SynthError> {
    let feature = &schema.features[lit.feature];
    let binding = schema.binding_of(lit.feature);
    if !binding.visible {
        return Err(SynthError::OutOfScope(binding.name.clone()));
    }
    let var = binding.name.as_str();
    let char_lit = |code: i64| {
        u32::try_from(code)
            .ok()
            .and_then(char::from_u32)
            .map(|c| emit_expr(&Expr::synth(ExprKind::Lit(Literal::Char(c)))))
    };
    let text = match (feature.kind, &binding.ty, lit.op) {
        (FeatureKind::Num, Type::Bool, LitOp::Le(t)) if (0.0..1.0).contains(&t) => {
            format!("{var} == false")
        }
        (FeatureKind::Num, Type::Bool, LitOp::Gt(t)) if (0.0..1.0).contains(&t) => {
            format!("{var} == true")
        }
        (FeatureKind::Num, Type::Char, LitOp::Le(t) | LitOp::Gt(t))
            if t >= 0.0 && char_lit(libm::floor(t) as i64).is_some() =>
        {
            // Chars are integral, so `c <= t` is `c <= floor(t)`.
            let c = char_lit(libm::floor(t) as i64).expect("checked above");
            let op = if matches!(lit.op, LitOp::Le(_)) { "<=" } else { ">" };
            format!("{var} {op} {c}")
        }
        (FeatureKind::Num, Type::Int | Type::Float, LitOp::Le(t)) => {
            format!("{var} <= {}", float_literal(t))
        }
        (FeatureKind::Num, Type::Int | Type::Float, LitOp::Gt(t)) => {
            format!("{var} > {}", float_literal(t))
        }
        (FeatureKind::Num, Type::Char | Type::Bool, LitOp::Le(t)) => {
            format!("to_int({var}) <= {}", float_literal(t))
        }
        (FeatureKind::Num, Type::Char | Type::Bool, LitOp::Gt(t)) => {
            format!("to_int({var}) > {}", float_literal(t))
        }
        (FeatureKind::Cat, ty, LitOp::Eq(v) | LitOp::Ne(v)) => {
            let op = if matches!(lit.op, LitOp::Eq(_)) { "==" } else { "!=" };
            match ty {
                Type::Int => format!("{var} {op} {v}"),
                Type::Bool => format!("{var} {op} {}", v != 0),
                Type::Char => match char_lit(v) {
                    Some(c) => format!("{var} {op} {c}"),
                    None => format!("to_int({var}) {op} {v}"),
                },
                Type::Str | Type::Array(_) => format!("hash({var}) {op} {v}"),
                _ => return Err(SynthError::Unrenderable(feature.name.clone())),
            }
        }
        _ => return Err(SynthError::Unrenderable(feature.name.clone())),
    };
    Ok(text)
}

/// Guard text, e.g. `(ch != 'y') && (ch == 'i')`; `None` for constants.
pub fn render_guard(d: &Dnf, schema: &Schema) -> Result<Option<String>, SynthError> {
    if d.is_true() || d.is_false() {
        return Ok(None);
    }
    let many = d.clauses.len() > 1;
    let mut parts = Vec::new();
    for clause in &d.clauses {
        let lits: Vec<String> = clause
            .iter()
            .map(|l| render_literal(l, schema))
            .collect::<Result<_, _>>()?;
        parts.push(if lits.len() == 1 {
            lits.into_iter().next().expect("one literal")
        } else {
            let joined = lits.iter().map(|l| format!("({l})")).collect::<Vec<_>>().join(" && ");
            if many {
                format!("({joined})")
            } else {
                joined
            }
        });
    }
    Ok(Some(parts.join(" || ")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub site: SiteId,
    pub guard: Dnf,
    /// The condition that replaces the site's clause.
    pub guard_expr: String,
    /// Hoisted temporaries as `(name, call)`.
    pub hoisted: Vec<(String, String)>,
    pub program: Program,
}

impl Patch {
    pub fn is_identity(&self) -> bool {
        self.guard.is_false()
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Branch {
    Then,
    Else,
    Body,
}

struct Location {
    function: usize,
    path: Vec<(usize, Branch)>,
    stmt: usize,
    /// Index of the comparison among the condition's comparisons.
    local: usize,
    /// Whether the comparison is the first thing the condition evaluates.
    leftmost: bool,
}

fn cond_comparisons<'e>(e: &'e Expr, out: &mut Vec<&'e Expr>) {
    match &e.kind {
        ExprKind::Paren(inner) | ExprKind::Unary(UnOp::Not, inner) => cond_comparisons(inner, out),
        ExprKind::Binary(BinOp::And | BinOp::Or, l, r) => {
            cond_comparisons(l, out);
            cond_comparisons(r, out);
        }
        ExprKind::Binary(BinOp::Cmp(_), _, _) => out.push(e),
        _ => {}
    }
}

fn leftmost_is_comparison(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Paren(inner) | ExprKind::Unary(UnOp::Not, inner) => leftmost_is_comparison(inner),
        ExprKind::Binary(BinOp::And | BinOp::Or, l, _) => leftmost_is_comparison(l),
        ExprKind::Binary(BinOp::Cmp(_), _, _) => true,
        _ => false,
    }
}

fn locate(p: &Program, site: SiteId) -> Option<Location> {
    fn block(
        body: &[Stmt],
        site: SiteId,
        seen: &mut usize,
        path: &mut Vec<(usize, Branch)>,
    ) -> Option<(Vec<(usize, Branch)>, usize, usize, bool)> {
        for (i, s) in body.iter().enumerate() {
            let (cond, children): (&Expr, Vec<(Branch, &[Stmt])>) = match &s.kind {
                StmtKind::If {
                    cond,
                    then_body,
                    else_body,
                } => {
                    let mut ch = alloc::vec![(Branch::Then, then_body.as_slice())];
                    if let Some(e) = else_body {
                        ch.push((Branch::Else, e.as_slice()));
                    }
                    (cond, ch)
                }
                StmtKind::While { cond, body } => (cond, alloc::vec![(Branch::Body, body.as_slice())]),
                _ => continue,
            };
            let mut cmps = Vec::new();
            cond_comparisons(cond, &mut cmps);
            if site < *seen + cmps.len() {
                let local = site - *seen;
                let leftmost = local == 0 && leftmost_is_comparison(cond);
                return Some((path.clone(), i, local, leftmost));
            }
            *seen += cmps.len();
            for (branch, child) in children {
                path.push((i, branch));
                if let Some(found) = block(child, site, seen, path) {
                    return Some(found);
                }
                path.pop();
            }
        }
        None
    }
    let mut seen = 0;
    for (fi, f) in p.functions().enumerate() {
        if let Some((path, stmt, local, leftmost)) = block(&f.body, site, &mut seen, &mut Vec::new()) {
            return Some(Location {
                function: fi,
                path,
                stmt,
                local,
                leftmost,
            });
        }
    }
    None
}

fn block_at<'a>(p: &'a mut Program, loc: &Location) -> &'a mut Vec<Stmt> {
    let f = p
        .items
        .iter_mut()
        .filter_map(|item| match item {
            Item::Function(f) => Some(f),
            Item::Global(_) => None,
        })
        .nth(loc.function)
        .expect("located function exists");
    let mut body = &mut f.body;
    for &(i, branch) in &loc.path {
        body = match (&mut body[i].kind, branch) {
            (StmtKind::If { then_body, .. }, Branch::Then) => then_body,
            (StmtKind::If { else_body: Some(e), .. }, Branch::Else) => e,
            (StmtKind::While { body, .. }, Branch::Body) => body,
            _ => unreachable!("path follows the located statement"),
        };
    }
    body
}

/// Applies `f` to the `n`-th comparison of a condition.
fn with_comparison(e: &mut Expr, n: &mut usize, f: &mut dyn FnMut(&mut Expr)) -> bool {
    match &mut e.kind {
        ExprKind::Paren(inner) | ExprKind::Unary(UnOp::Not, inner) => with_comparison(inner, n, f),
        ExprKind::Binary(BinOp::And | BinOp::Or, l, r) => {
            with_comparison(l, n, f) || with_comparison(r, n, f)
        }
        ExprKind::Binary(BinOp::Cmp(_), _, _) => {
            if *n == 0 {
                f(e);
                true
            } else {
                *n -= 1;
                false
            }
        }
        _ => false,
    }
}

/// Replaces outermost calls with the given names, left to right.
fn replace_calls(e: &mut Expr, names: &mut core::slice::Iter<'_, String>) {
    match &mut e.kind {
        ExprKind::Call(..) => {
            if let Some(name) = names.next() {
                e.kind = ExprKind::Var(name.clone());
            }
        }
        ExprKind::Lit(_) | ExprKind::Var(_) => {}
        ExprKind::Index(a, b) | ExprKind::Binary(_, a, b) => {
            replace_calls(a, names);
            replace_calls(b, names);
        }
        ExprKind::Intrinsic(_, args) | ExprKind::Array(args) => {
            args.iter_mut().for_each(|a| replace_calls(a, names))
        }
        ExprKind::Unary(_, a) | ExprKind::Paren(a) => replace_calls(a, names),
    }
}

fn mentions(e: &Expr, names: &BTreeSet<&str>) -> Option<String> {
    match &e.kind {
        ExprKind::Var(n) if names.contains(n.as_str()) => Some(n.clone()),
        ExprKind::Lit(_) | ExprKind::Var(_) => None,
        ExprKind::Index(a, b) | ExprKind::Binary(_, a, b) => mentions(a, names).or_else(|| mentions(b, names)),
        ExprKind::Call(_, args) | ExprKind::Intrinsic(_, args) | ExprKind::Array(args) => {
            args.iter().find_map(|a| mentions(a, names))
        }
        ExprKind::Unary(_, a) | ExprKind::Paren(a) => mentions(a, names),
    }
}

/// Rewrites the site's clause `c` to `(c) ^ (guard)`, or `!(c)` when the
/// guard is constant true. A constant-false guard leaves the program as is.
///
/// If the guard reads a hoisted call result, the call is hoisted in the
/// source too: declared right before the statement (and re-assigned at the
/// end of a loop body), with the clause reading the temporary.
pub fn synthesize_patch(
    original: &LoweredProgram,
    site: SiteId,
    d: &Dnf,
    schema: &Schema,
) -> Result<Patch, SynthError> {
    let plan = original.plans.get(site).ok_or(SynthError::NoSuchSite(site))?;
    let loc = locate(&original.source, site).ok_or(SynthError::NoSuchSite(site))?;
    let mut program = original.source.clone();
    let guard_text = render_guard(d, schema)?;
    let guard = guard_text
        .as_deref()
        .map(|g| parse_expr(g).map_err(|e| SynthError::Invalid(e.to_string())))
        .transpose()?;

    let temp_names: BTreeSet<&str> = plan.hoists.iter().map(|h| h.name.as_str()).collect();
    let needs_hoist = guard.as_ref().and_then(|g| mentions(g, &temp_names));
    if let Some(temp) = &needs_hoist {
        if !loc.leftmost {
            return Err(SynthError::Unhoistable(temp.clone()));
        }
    }

    let block = block_at(&mut program, &loc);
    let mut new_clause = String::new();
    let mut hoisted = Vec::new();
    {
        let stmt = &mut block[loc.stmt];
        let is_while = matches!(stmt.kind, StmtKind::While { .. });
        let cond = match &mut stmt.kind {
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => cond,
            _ => unreachable!("located statement has a condition"),
        };
        let mut n = loc.local;
        let names: Vec<String> = plan.hoists.iter().map(|h| h.name.clone()).collect();
        with_comparison(cond, &mut n, &mut |cmp: &mut Expr| {
            if needs_hoist.is_some() {
                replace_calls(cmp, &mut names.iter());
            }
            let clause = cmp.clone();
            let replacement = if d.is_false() {
                clause
            } else if d.is_true() {
                Expr::not(Expr::paren(clause))
            } else {
                let g = guard.clone().expect("non-constant guard renders");
                Expr::paren(Expr::binary(BinOp::Xor, Expr::paren(clause), Expr::paren(g)))
            };
            new_clause = emit_expr(&replacement);
            *cmp = replacement;
        });
        // Drop the wrapping parentheses we added when the clause is the
        // whole condition; they only matter inside `&&`/`||` chains.
        if let ExprKind::Paren(inner) = &cond.kind {
            if matches!(inner.kind, ExprKind::Binary(BinOp::Xor, _, _)) {
                let inner = (**inner).clone();
                new_clause = emit_expr(&inner);
                *cond = inner;
            }
        }
        if needs_hoist.is_some() {
            let mut decls = Vec::new();
            for h in &plan.hoists {
                hoisted.push((h.name.clone(), emit_expr(&h.call)));
                decls.push(Stmt::new(
                    StmtKind::Decl {
                        ty: h.ty.clone(),
                        name: h.name.clone(),
                        init: Some(h.call.clone()),
                    },
                    Span::default(),
                ));
            }
            if is_while {
                if let StmtKind::While { body, .. } = &mut stmt.kind {
                    for h in &plan.hoists {
                        body.push(Stmt::new(
                            StmtKind::Assign {
                                target: LValue::Var(h.name.clone()),
                                value: h.call.clone(),
                            },
                            Span::default(),
                        ));
                    }
                }
            }
            for (k, decl) in decls.into_iter().enumerate() {
                block.insert(loc.stmt + k, decl);
            }
        }
    }

    try_lower(&program).map_err(|e| SynthError::Invalid(e.to_string()))?;
    Ok(Patch {
        site,
        guard: d.clone(),
        guard_expr: new_clause,
        hoisted,
        program,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityReport {
    /// Patched program verdicts == classifier-guided verdicts, test by test.
    pub fidelity: bool,
    pub all_pass: bool,
    pub patched: Vec<Verdict>,
    pub guided: Vec<Verdict>,
}

/// Runs the patched program and the classifier-guided original on every
/// training test and compares verdicts.
pub fn validate_patch(
    original: &LoweredProgram,
    patch: &Patch,
    training: &TestSuite,
    tree: &DecisionTree,
    schema: &Schema,
    step_budget: u64,
) -> Result<FidelityReport, SynthError> {
    let patched = try_lower(&patch.program).map_err(|e| SynthError::Invalid(e.to_string()))?;
    let mut out = FidelityReport {
        fidelity: true,
        all_pass: true,
        patched: Vec::new(),
        guided: Vec::new(),
    };
    for t in &training.tests {
        let g = guided_run(original, patch.site, tree, schema, t, step_budget, false).verdict;
        let v = run(&patched, t, &Controller::none(), step_budget).verdict;
        out.fidelity &= g == v;
        out.all_pass &= v.is_pass();
        out.guided.push(g);
        out.patched.push(v);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PatchVerdict {
    CorrectCandidate,
    Overfit,
    Infeasible,
}

impl PatchVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            PatchVerdict::CorrectCandidate => "correct-candidate",
            PatchVerdict::Overfit => "overfit",
            PatchVerdict::Infeasible => "infeasible",
        }
    }

    pub fn decide(plausible: bool, fidelity: bool, validation_failures: usize) -> Self {
        if !(plausible && fidelity) {
            PatchVerdict::Infeasible
        } else if validation_failures > 0 {
            PatchVerdict::Overfit
        } else {
            PatchVerdict::CorrectCandidate
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchReport {
    pub plausible: bool,
    pub fidelity: bool,
    pub pass: usize,
    pub fail: usize,
    pub verdict: PatchVerdict,
    pub warnings: Vec<String>,
}

/// Pass/fail counts of the patched program on a held-out suite.
pub fn evaluate_on_validation(
    patch: &Patch,
    validation: &TestSuite,
    plausible: bool,
    fidelity: bool,
    step_budget: u64,
) -> Result<PatchReport, SynthError> {
    let patched = try_lower(&patch.program).map_err(|e| SynthError::Invalid(e.to_string()))?;
    let mut pass = 0;
    for t in &validation.tests {
        if run(&patched, t, &Controller::none(), step_budget).passed() {
            pass += 1;
        }
    }
    let fail = validation.len() - pass;
    let mut warnings = Vec::new();
    if validation.is_empty() {
        warnings.push("empty validation suite: verdict holds vacuously".into());
    }
    if patch.guard_expr.contains("hash(") {
        warnings.push("guard compares raw hash constants".into());
    }
    Ok(PatchReport {
        plausible,
        fidelity,
        pass,
        fail,
        verdict: PatchVerdict::decide(plausible, fidelity, fail),
        warnings,
    })
}
