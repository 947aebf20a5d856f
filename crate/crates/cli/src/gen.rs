//! Random validation inputs, labeled by running a reference program.

use std::collections::BTreeMap;

use flipfix_core::interp::{run, Controller};
use flipfix_core::minilang::{normalize_output, LoweredProgram, TestCase, TestSuite, Type};
use flipfix_core::Value;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

/// Attempts per input before giving up on it.
pub const MAX_RETRIES: usize = 50;

const LOWERCASE: &str = "abcdefghijklmnopqrstuvwxyz";

/// Optional overrides for one parameter. Unset fields fall back to
/// per-type defaults.
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub min: Option<f64>,
    pub max: Option<f64>,
    /// Digits after the point for floats.
    pub decimals: Option<u32>,
    /// Alphabet for chars and strings (and char array elements).
    pub chars: Option<String>,
    pub min_len: Option<usize>,
    pub max_len: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
struct Resolved {
    min: f64,
    max: f64,
    decimals: u32,
    chars: Vec<char>,
    min_len: usize,
    max_len: usize,
}

impl Resolved {
    fn new(spec: &RangeSpec) -> Self {
        let chars: Vec<char> = spec.chars.as_deref().unwrap_or(LOWERCASE).chars().collect();
        Self {
            min: spec.min.unwrap_or(-100.0),
            max: spec.max.unwrap_or(100.0),
            decimals: spec.decimals.unwrap_or(1),
            chars: if chars.is_empty() {
                LOWERCASE.chars().collect()
            } else {
                chars
            },
            min_len: spec.min_len.unwrap_or(0),
            max_len: spec.max_len.unwrap_or(10),
        }
    }
}

fn gen_value(ty: &Type, r: &Resolved, rng: &mut ChaCha8Rng) -> Value {
    match ty {
        Type::Int => {
            let (lo, hi) = (r.min.ceil() as i64, r.max.floor() as i64);
            Value::Int(if lo >= hi { lo } else { rng.gen_range(lo..=hi) })
        }
        Type::Float => {
            let x = if r.min >= r.max {
                r.min
            } else {
                rng.gen_range(r.min..=r.max)
            };
            let scale = 10f64.powi(r.decimals as i32);
            Value::Float((x * scale).round() / scale)
        }
        Type::Char => Value::Char(*r.chars.choose(rng).expect("alphabet is non-empty")),
        Type::Bool => Value::Bool(rng.gen()),
        Type::Str => {
            let len = gen_len(r, rng);
            let s: String = (0..len)
                .map(|_| *r.chars.choose(rng).expect("alphabet is non-empty"))
                .collect();
            Value::str(&s)
        }
        Type::Array(elem) => {
            let len = gen_len(r, rng);
            Value::array((0..len).map(|_| gen_value(elem, r, rng)).collect())
        }
        Type::Void => unreachable!("parameters are never void"),
    }
}

fn gen_len(r: &Resolved, rng: &mut ChaCha8Rng) -> usize {
    if r.min_len >= r.max_len {
        r.min_len
    } else {
        rng.gen_range(r.min_len..=r.max_len)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub suite: TestSuite,
    pub warnings: Vec<String>,
}

/// `n` random inputs for `main`, with expected outputs from `reference`.
/// Inputs on which the reference aborts are redrawn.
pub fn gen_validation(
    reference: &LoweredProgram,
    n: usize,
    seed: u64,
    ranges: &BTreeMap<String, RangeSpec>,
    step_budget: u64,
) -> Generated {
    let entry = reference.source.entry();
    let resolved: Vec<(Type, Resolved)> = entry
        .params
        .iter()
        .map(|p| {
            let spec = ranges.get(&p.name).cloned().unwrap_or_default();
            (p.ty.clone(), Resolved::new(&spec))
        })
        .collect();
    let mut warnings = Vec::new();
    if n == 0 {
        warnings.push("n = 0: generated an empty suite".to_string());
    }
    for name in ranges.keys() {
        if !entry.params.iter().any(|p| &p.name == name) {
            warnings.push(format!("range for unknown parameter `{name}` ignored"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = n.to_string().len();
    let mut tests = Vec::with_capacity(n);
    let mut dropped = 0;
    for i in 0..n {
        let mut made = None;
        for _ in 0..MAX_RETRIES {
            let args: Vec<Value> = resolved.iter().map(|(ty, r)| gen_value(ty, r, &mut rng)).collect();
            let probe = TestCase {
                name: String::new(),
                args,
                expected_output: String::new(),
            };
            let r = run(reference, &probe, &Controller::none(), step_budget);
            if r.abort.is_none() {
                made = Some(TestCase {
                    name: format!("v{:0width$}", i + 1),
                    args: probe.args,
                    expected_output: normalize_output(&r.output),
                });
                break;
            }
        }
        match made {
            Some(t) => tests.push(t),
            None => dropped += 1,
        }
    }
    if dropped > 0 {
        warnings.push(format!("{dropped} inputs dropped after {MAX_RETRIES} failed draws each"));
    }
    Generated {
        suite: TestSuite::new(tests),
        warnings,
    }
}
