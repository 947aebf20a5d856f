//! Greedy Gini decision trees over mixed scalar/categorical features, and
//! classifier-guided execution.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::features::{Category, FeatureKind, FeatureValue, FeatureVector, Label, Schema, TrainingSet};
use crate::interp::{run, Controller, NegationDecider, RunResult, StateSnapshot, Verdict};
use crate::minilang::{LoweredProgram, SiteId, TestSuite};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 8,
            min_samples: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitTest {
    /// `value <= threshold`; NaN (absent) is false.
    Scalar { feature: usize, threshold: f64 },
    /// `value == category`
    Categorical { feature: usize, value: i64 },
}

impl SplitTest {
    pub fn feature(&self) -> usize {
        match *self {
            SplitTest::Scalar { feature, .. } | SplitTest::Categorical { feature, .. } => feature,
        }
    }

    pub fn holds(&self, v: FeatureValue) -> bool {
        match (*self, v) {
            (SplitTest::Scalar { threshold, .. }, FeatureValue::Num(x)) => x <= threshold,
            (SplitTest::Categorical { value, .. }, FeatureValue::Cat(c)) => c == Category::Val(value),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf {
        label: Label,
        negate: usize,
        keep: usize,
    },
    Split {
        test: SplitTest,
        yes: Box<Node>,
        no: Box<Node>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub root: Node,
    pub params: TreeParams,
    /// Feature count of the schema the tree was trained on.
    pub width: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("feature vector has {found} features, tree needs feature {needed}")]
pub struct SchemaError {
    pub needed: usize,
    pub found: usize,
}

impl DecisionTree {
    pub fn leaf(label: Label) -> Self {
        Self {
            root: Node::Leaf {
                label,
                negate: 0,
                keep: 0,
            },
            params: TreeParams::default(),
            width: 0,
        }
    }

    pub fn classify(&self, v: &FeatureVector) -> Result<Label, SchemaError> {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { label, .. } => return Ok(*label),
                Node::Split { test, yes, no } => {
                    let f = test.feature();
                    let value = v.values.get(f).copied().ok_or(SchemaError {
                        needed: f,
                        found: v.values.len(),
                    })?;
                    node = if test.holds(value) { yes } else { no };
                }
            }
        }
    }

    pub fn leaves(&self) -> usize {
        fn go(n: &Node) -> usize {
            match n {
                Node::Leaf { .. } => 1,
                Node::Split { yes, no, .. } => go(yes) + go(no),
            }
        }
        go(&self.root)
    }

    pub fn nodes(&self) -> usize {
        fn go(n: &Node) -> usize {
            match n {
                Node::Leaf { .. } => 1,
                Node::Split { yes, no, .. } => 1 + go(yes) + go(no),
            }
        }
        go(&self.root)
    }

    pub fn depth(&self) -> usize {
        fn go(n: &Node) -> usize {
            match n {
                Node::Leaf { .. } => 0,
                Node::Split { yes, no, .. } => 1 + go(yes).max(go(no)),
            }
        }
        go(&self.root)
    }

    pub fn is_single_leaf(&self, label: Label) -> bool {
        matches!(self.root, Node::Leaf { label: l, .. } if l == label)
    }

    /// Fraction of samples the tree labels correctly.
    pub fn accuracy(&self, ts: &TrainingSet) -> f64 {
        if ts.is_empty() {
            return 1.0;
        }
        let right = ts
            .samples
            .iter()
            .filter(|s| self.classify(&s.vector) == Ok(s.label))
            .count();
        right as f64 / ts.len() as f64
    }

    /// Indented text form, one node per line.
    pub fn render(&self, schema: &Schema) -> String {
        let mut out = String::new();
        render_node(&mut out, &self.root, schema, 0, "");
        out
    }
}

pub fn render_test(test: &SplitTest, schema: &Schema) -> String {
    match *test {
        SplitTest::Scalar { feature, threshold } => {
            format!("{} <= {}", schema.features[feature].name, threshold)
        }
        SplitTest::Categorical { feature, value } => format!(
            "{} == {}",
            schema.features[feature].name,
            schema.render_category(feature, Category::Val(value))
        ),
    }
}

fn render_node(out: &mut String, node: &Node, schema: &Schema, depth: usize, tag: &str) {
    for _ in 0..depth {
        out.push_str("  ");
    }
    out.push_str(tag);
    match node {
        Node::Leaf { label, negate, keep } => {
            let _ = writeln!(out, "{label} (negate {negate}, keep {keep})");
        }
        Node::Split { test, yes, no } => {
            let _ = writeln!(out, "{}", render_test(test, schema));
            render_node(out, yes, schema, depth + 1, "yes: ");
            render_node(out, no, schema, depth + 1, "no: ");
        }
    }
}

fn majority(negate: usize, keep: usize) -> Label {
    if negate > keep {
        Label::Negate
    } else {
        Label::Keep
    }
}

/// Exact split score: sum over children of `(neg^2 + keep^2) / n` as a
/// fraction. Larger is purer; maximizing it minimizes weighted Gini.
#[derive(Clone, Copy)]
struct Score {
    num: u128,
    den: u128,
}

impl Score {
    fn of(l: (usize, usize), r: (usize, usize)) -> Self {
        let sq = |(a, b): (usize, usize)| (a as u128) * (a as u128) + (b as u128) * (b as u128);
        let nl = (l.0 + l.1) as u128;
        let nr = (r.0 + r.1) as u128;
        Score {
            num: sq(l) * nr + sq(r) * nl,
            den: nl * nr,
        }
    }

    fn beats(self, other: Score) -> bool {
        self.num * other.den > other.num * self.den
    }
}

struct Learner<'a> {
    ts: &'a TrainingSet,
    params: TreeParams,
}

/// Greedy top-down induction minimizing Gini impurity.
///
/// Scalar thresholds are midpoints between consecutive distinct values;
/// categorical candidates are the observed values. Ties in impurity go to
/// the earliest feature, then the smallest threshold or value. Features the
/// schema marks as not writable at the site are never split on.
pub fn train(ts: &TrainingSet, params: TreeParams) -> DecisionTree {
    let learner = Learner { ts, params };
    let all: Vec<usize> = (0..ts.len()).collect();
    DecisionTree {
        root: learner.grow(&all, 0),
        params,
        width: ts.schema.len(),
    }
}

impl Learner<'_> {
    fn counts(&self, rows: &[usize]) -> (usize, usize) {
        let negate = rows
            .iter()
            .filter(|&&i| self.ts.samples[i].label == Label::Negate)
            .count();
        (negate, rows.len() - negate)
    }

    fn grow(&self, rows: &[usize], depth: usize) -> Node {
        let (negate, keep) = self.counts(rows);
        let leaf = Node::Leaf {
            label: majority(negate, keep),
            negate,
            keep,
        };
        let min = self.params.min_samples.max(1);
        if negate == 0 || keep == 0 || depth >= self.params.max_depth || rows.len() < 2 * min {
            return leaf;
        }
        let Some(test) = self.best_split(rows) else {
            return leaf;
        };
        let (yes, no): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&i| test.holds(self.ts.samples[i].vector.values[test.feature()]));
        Node::Split {
            test,
            yes: Box::new(self.grow(&yes, depth + 1)),
            no: Box::new(self.grow(&no, depth + 1)),
        }
    }

    pub(crate) fn best_split(&self, rows: &[usize]) -> Option<SplitTest> {
        let min = self.params.min_samples.max(1);
        let total = self.counts(rows);
        let mut best: Option<(Score, SplitTest)> = None;
        let mut consider = |test: SplitTest, yes: (usize, usize)| {
            let no = (total.0 - yes.0, total.1 - yes.1);
            if yes.0 + yes.1 < min || no.0 + no.1 < min {
                return;
            }
            let score = Score::of(yes, no);
            if best.map_or(true, |(b, _)| score.beats(b)) {
                best = Some((score, test));
            }
        };
        for (feature, f) in self.ts.schema.features.iter().enumerate() {
            if !self.ts.schema.splittable(feature) {
                continue;
            }
            match f.kind {
                FeatureKind::Num => {
                    let mut vals: Vec<(f64, bool)> = rows
                        .iter()
                        .filter_map(|&i| {
                            let s = &self.ts.samples[i];
                            let x = s.vector.values[feature].as_num()?;
                            (!x.is_nan()).then_some((x, s.label == Label::Negate))
                        })
                        .collect();
                    vals.sort_by(|a, b| a.0.total_cmp(&b.0));
                    let mut yes = (0usize, 0usize);
                    for k in 0..vals.len() {
                        if vals[k].1 {
                            yes.0 += 1;
                        } else {
                            yes.1 += 1;
                        }
                        let Some(&(next, _)) = vals.get(k + 1) else { break };
                        let here = vals[k].0;
                        if next == here {
                            continue;
                        }
                        let mut threshold = here / 2.0 + next / 2.0;
                        if !(here <= threshold && threshold < next) {
                            threshold = here;
                        }
                        consider(SplitTest::Scalar { feature, threshold }, yes);
                    }
                }
                FeatureKind::Cat => {
                    let mut by_value: BTreeMap<i64, (usize, usize)> = BTreeMap::new();
                    for &i in rows {
                        let s = &self.ts.samples[i];
                        if let Some(Category::Val(v)) = s.vector.values[feature].as_cat() {
                            let e = by_value.entry(v).or_default();
                            if s.label == Label::Negate {
                                e.0 += 1;
                            } else {
                                e.1 += 1;
                            }
                        }
                    }
                    for (value, yes) in by_value {
                        consider(SplitTest::Categorical { feature, value }, yes);
                    }
                }
            }
        }
        best.map(|(_, t)| t)
    }
}

/// The root split `train` would choose, if any.
pub fn root_split(ts: &TrainingSet, params: TreeParams) -> Option<SplitTest> {
    let all: Vec<usize> = (0..ts.len()).collect();
    Learner { ts, params }.best_split(&all)
}

/// Runtime adapter: encodes each snapshot and asks the tree.
pub struct TreeDecider<'a> {
    pub tree: &'a DecisionTree,
    pub schema: &'a Schema,
}

impl NegationDecider for TreeDecider<'_> {
    fn negate(&self, snapshot: &StateSnapshot) -> bool {
        let v = self.schema.encode(snapshot);
        self.tree.classify(&v).expect("snapshot encodes to the tree's schema") == Label::Negate
    }
}

/// One test run with `tree` deciding at `site`.
pub fn guided_run(
    p: &LoweredProgram,
    site: SiteId,
    tree: &DecisionTree,
    schema: &Schema,
    t: &crate::minilang::TestCase,
    step_budget: u64,
    capture: bool,
) -> RunResult {
    let decider = TreeDecider { tree, schema };
    let mut c = Controller::classifier(site, &decider);
    c.capture = capture;
    run(p, t, &c, step_budget)
}

/// Plausible iff every test passes under classifier-guided execution.
pub fn is_plausible(
    p: &LoweredProgram,
    site: SiteId,
    tree: &DecisionTree,
    schema: &Schema,
    suite: &TestSuite,
    step_budget: u64,
) -> (bool, Vec<Verdict>) {
    let verdicts: Vec<Verdict> = suite
        .tests
        .iter()
        .map(|t| guided_run(p, site, tree, schema, t, step_budget, false).verdict)
        .collect();
    (verdicts.iter().all(|v| v.is_pass()), verdicts)
}
