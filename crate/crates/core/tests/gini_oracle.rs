//! Root splits on tiny training sets against exhaustive enumeration.

use flipfix_core::dtree::{root_split, train, SplitTest, TreeParams};
use flipfix_core::features::{
    Category, Feature, FeatureKind, FeatureValue, FeatureVector, Label, LabeledSample, Schema,
    SchemaBinding, TrainingSet,
};
use flipfix_core::minilang::Type;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Bindings: `x: int` (num + cat), `f: float` (num), `h: int` (hidden).
fn schema() -> Schema {
    let binding = |name: &str, ty: Type, visible: bool| SchemaBinding {
        name: name.into(),
        ty,
        visible,
    };
    let feature = |name: &str, binding: usize, kind: FeatureKind| Feature {
        name: name.into(),
        binding,
        kind,
    };
    Schema {
        site: 0,
        bindings: vec![
            binding("x", Type::Int, true),
            binding("f", Type::Float, true),
            binding("h", Type::Int, false),
        ],
        features: vec![
            feature("x#num", 0, FeatureKind::Num),
            feature("x#cat", 0, FeatureKind::Cat),
            feature("f#num", 1, FeatureKind::Num),
            feature("h#num", 2, FeatureKind::Num),
            feature("h#cat", 2, FeatureKind::Cat),
        ],
    }
}

fn random_set(rng: &mut ChaCha8Rng) -> TrainingSet {
    let n = rng.gen_range(2..=6);
    let samples = (0..n)
        .map(|i| {
            let x: Option<i64> = (rng.gen_range(0..6) != 0).then(|| rng.gen_range(0..4));
            let f: f64 = if rng.gen_range(0..6) == 0 {
                f64::NAN
            } else {
                rng.gen_range(0..4) as f64 * 0.5
            };
            let h: i64 = rng.gen_range(0..3);
            let values = vec![
                FeatureValue::Num(x.map_or(f64::NAN, |v| v as f64)),
                FeatureValue::Cat(x.map_or(Category::Absent, Category::Val)),
                FeatureValue::Num(f),
                FeatureValue::Num(h as f64),
                FeatureValue::Cat(Category::Val(h)),
            ];
            LabeledSample {
                vector: FeatureVector { values },
                label: if rng.gen() { Label::Negate } else { Label::Keep },
                test: format!("t{i}"),
                instance: 1,
            }
        })
        .collect();
    TrainingSet {
        schema: schema(),
        samples,
    }
}

fn weighted_gini(groups: &[(f64, f64)]) -> f64 {
    let total: f64 = groups.iter().map(|(a, b)| a + b).sum();
    groups
        .iter()
        .map(|&(a, b)| {
            let n = a + b;
            (n / total) * (1.0 - (a / n).powi(2) - (b / n).powi(2))
        })
        .sum()
}

/// Enumerates every candidate in feature order, thresholds and values
/// ascending, and keeps the first one with the least weighted Gini.
fn oracle(ts: &TrainingSet, min: usize) -> Option<SplitTest> {
    let mut candidates = Vec::new();
    for (feature, f) in ts.schema.features.iter().enumerate() {
        if !ts.schema.bindings[f.binding].visible {
            continue;
        }
        match f.kind {
            FeatureKind::Num => {
                let mut vals: Vec<f64> = ts
                    .samples
                    .iter()
                    .filter_map(|s| s.vector.values[feature].as_num())
                    .filter(|v| !v.is_nan())
                    .collect();
                vals.sort_by(f64::total_cmp);
                vals.dedup();
                for w in vals.windows(2) {
                    candidates.push(SplitTest::Scalar {
                        feature,
                        threshold: (w[0] + w[1]) / 2.0,
                    });
                }
            }
            FeatureKind::Cat => {
                let mut vals: Vec<i64> = ts
                    .samples
                    .iter()
                    .filter_map(|s| match s.vector.values[feature] {
                        FeatureValue::Cat(Category::Val(v)) => Some(v),
                        _ => None,
                    })
                    .collect();
                vals.sort();
                vals.dedup();
                for value in vals {
                    candidates.push(SplitTest::Categorical { feature, value });
                }
            }
        }
    }
    let mut best: Option<(f64, SplitTest)> = None;
    for c in candidates {
        let mut yes = (0.0, 0.0);
        let mut no = (0.0, 0.0);
        for s in &ts.samples {
            let v = s.vector.values[c.feature()];
            let goes_yes = match (c, v) {
                (SplitTest::Scalar { threshold, .. }, FeatureValue::Num(x)) => x <= threshold,
                (SplitTest::Categorical { value, .. }, FeatureValue::Cat(Category::Val(y))) => y == value,
                _ => false,
            };
            let side = if goes_yes { &mut yes } else { &mut no };
            if s.label == Label::Negate {
                side.0 += 1.0;
            } else {
                side.1 += 1.0;
            }
        }
        if ((yes.0 + yes.1) as usize) < min || ((no.0 + no.1) as usize) < min {
            continue;
        }
        let g = weighted_gini(&[yes, no]);
        if best.map_or(true, |(b, _)| g < b - 1e-12) {
            best = Some((g, c));
        }
    }
    best.map(|(_, c)| c)
}

#[test]
fn root_split_matches_exhaustive_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut split = 0;
    for _ in 0..3000 {
        let ts = random_set(&mut rng);
        for min in [1, 2] {
            let params = TreeParams {
                max_depth: 8,
                min_samples: min,
            };
            let expected = oracle(&ts, min);
            assert_eq!(root_split(&ts, params), expected, "{:?}", ts.samples);
            split += expected.is_some() as usize;
        }
    }
    assert!(split > 1000);
}

#[test]
fn hidden_bindings_are_never_split_on() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..500 {
        let ts = random_set(&mut rng);
        if let Some(t) = root_split(&ts, TreeParams::default()) {
            assert!(t.feature() < 3);
        }
    }
}

#[test]
fn perfect_split_by_a_hidden_variable_is_ignored() {
    // Only `h` separates the labels; the tree must not use it.
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut ts = random_set(&mut rng);
    ts.samples.truncate(2);
    for (i, s) in ts.samples.iter_mut().enumerate() {
        s.vector.values = vec![
            FeatureValue::Num(1.0),
            FeatureValue::Cat(Category::Val(1)),
            FeatureValue::Num(0.5),
            FeatureValue::Num(i as f64),
            FeatureValue::Cat(Category::Val(i as i64)),
        ];
        s.label = if i == 0 { Label::Negate } else { Label::Keep };
    }
    assert_eq!(root_split(&ts, TreeParams::default()), None);
    let tree = train(&ts, TreeParams::default());
    assert_eq!(tree.leaves(), 1);
}
