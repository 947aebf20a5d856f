//! Feature encoding of snapshots and training-set collection.
//!
//! A binding `x` expands by type: floats to `x#num`; ints, chars and bools
//! to both `x#num` and `x#cat`; strings and arrays to `x#cat` holding their
//! polynomial hash. A variable without a value yet encodes as NaN (numeric)
//! and the reserved category `⊥`.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::{self, Write};

use crate::interp::{run, Controller, StateSnapshot};
use crate::minilang::{LoweredProgram, SiteId, TestCase, TestSuite, Type};
use crate::patterns::instances_to_negate;
use crate::search::CandidateFix;
use crate::value::Value;

pub const NUM_SUFFIX: &str = "#num";
pub const CAT_SUFFIX: &str = "#cat";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    /// The variable had no value.
    Absent,
    Val(i64),
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Category::Absent => f.write_str("⊥"),
            Category::Val(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureValue {
    Num(f64),
    Cat(Category),
}

impl FeatureValue {
    pub fn as_num(self) -> Option<f64> {
        match self {
            FeatureValue::Num(v) => Some(v),
            FeatureValue::Cat(_) => None,
        }
    }

    pub fn as_cat(self) -> Option<Category> {
        match self {
            FeatureValue::Cat(c) => Some(c),
            FeatureValue::Num(_) => None,
        }
    }

    /// Structural equality (NaN equals NaN), used to detect conflicts.
    fn same(self, other: FeatureValue) -> bool {
        match (self, other) {
            (FeatureValue::Num(a), FeatureValue::Num(b)) => a.to_bits() == b.to_bits() || a == b,
            (FeatureValue::Cat(a), FeatureValue::Cat(b)) => a == b,
            _ => false,
        }
    }
}

impl fmt::Display for FeatureValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureValue::Num(v) => write!(f, "{v}"),
            FeatureValue::Cat(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Num,
    Cat,
}

fn kinds_for(ty: &Type) -> &'static [FeatureKind] {
    match ty {
        Type::Float => &[FeatureKind::Num],
        Type::Int | Type::Char | Type::Bool => &[FeatureKind::Num, FeatureKind::Cat],
        Type::Str | Type::Array(_) => &[FeatureKind::Cat],
        Type::Void => &[],
    }
}

fn category_of(v: &Value) -> Category {
    Category::Val(match v {
        Value::Int(i) => *i,
        Value::Char(c) => *c as i64,
        Value::Bool(b) => *b as i64,
        other => i64::from(other.hash32()),
    })
}

fn numeric_of(v: &Value) -> f64 {
    match v {
        Value::Int(i) => *i as f64,
        Value::Float(f) => *f,
        Value::Char(c) => *c as u32 as f64,
        Value::Bool(b) => *b as u8 as f64,
        _ => f64::NAN,
    }
}

fn feature_value(kind: FeatureKind, v: Option<&Value>) -> FeatureValue {
    match (kind, v) {
        (FeatureKind::Num, Some(v)) => FeatureValue::Num(numeric_of(v)),
        (FeatureKind::Num, None) => FeatureValue::Num(f64::NAN),
        (FeatureKind::Cat, Some(v)) => FeatureValue::Cat(category_of(v)),
        (FeatureKind::Cat, None) => FeatureValue::Cat(Category::Absent),
    }
}

fn feature_name(binding: &str, kind: FeatureKind) -> String {
    let suffix = match kind {
        FeatureKind::Num => NUM_SUFFIX,
        FeatureKind::Cat => CAT_SUFFIX,
    };
    format!("{binding}{suffix}")
}

fn value_type(v: &Value) -> Type {
    match v {
        Value::Int(_) => Type::Int,
        Value::Float(_) => Type::Float,
        Value::Char(_) => Type::Char,
        Value::Str(_) => Type::Str,
        Value::Bool(_) => Type::Bool,
        Value::Array(_) => Type::Array(alloc::boxed::Box::new(Type::Int)),
    }
}

/// Expands one recorded value into named features.
pub fn encode_value(name: &str, v: &Value) -> Vec<(String, FeatureValue)> {
    kinds_for(&value_type(v))
        .iter()
        .map(|&k| (feature_name(name, k), feature_value(k, Some(v))))
        .collect()
}

/// One feature column.
#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub name: String,
    /// Index into [`Schema::bindings`].
    pub binding: usize,
    pub kind: FeatureKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemaBinding {
    pub name: String,
    pub ty: Type,
    /// Whether a guard may mention this binding in source.
    pub visible: bool,
}

/// Feature layout of one site: identical for every snapshot of that site.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    pub site: SiteId,
    pub bindings: Vec<SchemaBinding>,
    pub features: Vec<Feature>,
}

impl Schema {
    pub fn for_site(p: &LoweredProgram, site: SiteId) -> Self {
        let plan = p.plan(site);
        let bindings: Vec<SchemaBinding> = plan
            .bindings
            .iter()
            .map(|b| SchemaBinding {
                name: b.name.clone(),
                ty: b.ty.clone(),
                visible: b.visible,
            })
            .collect();
        let mut features = Vec::new();
        for (i, b) in bindings.iter().enumerate() {
            for &kind in kinds_for(&b.ty) {
                features.push(Feature {
                    name: feature_name(&b.name, kind),
                    binding: i,
                    kind,
                });
            }
        }
        Self {
            site,
            bindings,
            features,
        }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn index_of(&self, feature: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == feature)
    }

    pub fn names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.name.as_str()).collect()
    }

    /// Whether the tree may split on this feature: its binding can be
    /// written in a guard at the site.
    pub fn splittable(&self, feature: usize) -> bool {
        self.bindings[self.features[feature].binding].visible
    }

    pub fn binding_of(&self, feature: usize) -> &SchemaBinding {
        &self.bindings[self.features[feature].binding]
    }

    pub fn encode(&self, snapshot: &StateSnapshot) -> FeatureVector {
        debug_assert_eq!(snapshot.values.len(), self.bindings.len());
        let values = self
            .features
            .iter()
            .map(|f| feature_value(f.kind, snapshot.values[f.binding].as_ref()))
            .collect();
        FeatureVector { values }
    }

    /// Human-readable category: `'i'` for chars, `true` for bools.
    pub fn render_category(&self, feature: usize, c: Category) -> String {
        let Category::Val(v) = c else {
            return "⊥".into();
        };
        match self.binding_of(feature).ty {
            Type::Char => match u32::try_from(v).ok().and_then(char::from_u32) {
                Some(ch) => format!("{ch:?}"),
                None => v.to_string(),
            },
            Type::Bool => (v != 0).to_string(),
            _ => v.to_string(),
        }
    }
}

/// Feature values in schema order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<FeatureValue>,
}

impl FeatureVector {
    pub fn get(&self, schema: &Schema, feature: &str) -> Option<FeatureValue> {
        schema.index_of(feature).and_then(|i| self.values.get(i).copied())
    }

    fn same(&self, other: &FeatureVector) -> bool {
        self.values.len() == other.values.len()
            && self.values.iter().zip(&other.values).all(|(a, b)| a.same(*b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Negate,
    Keep,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Negate => "negate",
            Label::Keep => "keep",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub vector: FeatureVector,
    pub label: Label,
    pub test: String,
    pub instance: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub schema: Schema,
    pub samples: Vec<LabeledSample>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TrainingError {
    #[error("site {0} is never reached by a passing or fixed failing test")]
    Empty(SiteId),
}

impl TrainingSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.samples.iter().filter(|s| s.label == label).count()
    }

    /// Whether two samples share a vector but disagree on the label.
    pub fn has_conflicts(&self) -> bool {
        self.samples.iter().enumerate().any(|(i, a)| {
            self.samples[i + 1..]
                .iter()
                .any(|b| a.label != b.label && a.vector.same(&b.vector))
        })
    }

    /// Tab-separated dump: a header of feature names plus `label`, then one
    /// row per sample.
    pub fn to_columns(&self) -> String {
        let mut out = String::new();
        for name in self.schema.names() {
            out.push_str(name);
            out.push('\t');
        }
        out.push_str("label\n");
        for s in &self.samples {
            for v in &s.vector.values {
                let _ = write!(out, "{v}\t");
            }
            out.push_str(s.label.as_str());
            out.push('\n');
        }
        out
    }
}

/// Collects labeled snapshots for `candidate`.
///
/// Failing tests fixed by the candidate are re-run under its pattern; each
/// instance is labeled negate iff the pattern negated it. Passing tests are
/// run unmodified and every instance is labeled keep. Failing tests the
/// candidate did not fix contribute nothing.
pub fn collect_training_data(
    p: &LoweredProgram,
    candidate: &CandidateFix,
    suite: &TestSuite,
    step_budget: u64,
) -> Result<TrainingSet, TrainingError> {
    let site = candidate.site;
    let schema = Schema::for_site(p, site);
    let fixed: BTreeSet<&str> = candidate.fixed_tests.iter().map(String::as_str).collect();
    let mut samples = Vec::new();
    for t in &suite.tests {
        let observed = run(p, t, &Controller::observe(site), step_budget);
        if observed.passed() {
            push_samples(&mut samples, &schema, t, &observed.snapshots, &[]);
        } else if fixed.contains(t.name.as_str()) {
            let set = instances_to_negate(candidate.pattern, observed.site_counts[site]);
            let negated = run(p, t, &Controller::pattern(site, set).with_capture(), step_budget);
            debug_assert!(negated.passed(), "candidate no longer fixes `{}`", t.name);
            push_samples(&mut samples, &schema, t, &negated.snapshots, &negated.negations_fired);
        }
    }
    if samples.is_empty() {
        return Err(TrainingError::Empty(site));
    }
    Ok(TrainingSet { schema, samples })
}

fn push_samples(
    out: &mut Vec<LabeledSample>,
    schema: &Schema,
    t: &TestCase,
    snapshots: &[StateSnapshot],
    negated: &[u32],
) {
    for s in snapshots {
        out.push(LabeledSample {
            vector: schema.encode(s),
            label: if negated.contains(&s.instance) {
                Label::Negate
            } else {
                Label::Keep
            },
            test: t.name.clone(),
            instance: s.instance,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn int_is_dual() {
        assert_eq!(
            encode_value("x", &Value::Int(5)),
            vec![
                ("x#num".to_string(), FeatureValue::Num(5.0)),
                ("x#cat".to_string(), FeatureValue::Cat(Category::Val(5)))
            ]
        );
    }

    #[test]
    fn empty_string_is_category_zero() {
        assert_eq!(
            encode_value("s", &Value::str("")),
            vec![("s#cat".to_string(), FeatureValue::Cat(Category::Val(0)))]
        );
    }

    #[test]
    fn float_is_scalar_only() {
        assert_eq!(
            encode_value("f", &Value::Float(1.5)),
            vec![("f#num".to_string(), FeatureValue::Num(1.5))]
        );
    }

    #[test]
    fn char_and_bool() {
        let ch = encode_value("c", &Value::Char('i'));
        assert_eq!(ch[0].1, FeatureValue::Num(105.0));
        assert_eq!(ch[1].1, FeatureValue::Cat(Category::Val(105)));
        let b = encode_value("b", &Value::Bool(true));
        assert_eq!(b[0].1, FeatureValue::Num(1.0));
    }
}
