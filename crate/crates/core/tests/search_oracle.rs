//! The pattern search against exhaustive negation of every instance subset.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{pattern_bits, program, suite};
use flipfix_core::interp::{run, Controller, DEFAULT_STEP_BUDGET};
use flipfix_core::minilang::TestCase;
use flipfix_core::patterns::NegationPattern;
use flipfix_core::search::heuristic_cfa_search;

struct Micro {
    src: &'static str,
    clause: &'static str,
    tests: &'static str,
}

const MICROS: [Micro; 5] = [
    Micro {
        src: "void main(int x) { if (x > 5) { println(\"big\"); } else { println(\"small\"); } }",
        clause: "x > 5",
        tests: "ok | 9 | big\nf1 | 9 | small\nf2 | 1 | big\nf3 | 1 | tiny",
    },
    Micro {
        src: "void main(int n) { int i = 0; while (i < n) { i = i + 1; } println(i); }",
        clause: "i < n",
        tests: "ok | 3 | 3\nf0 | 3 | 0\nf1 | 3 | 1\nf2 | 3 | 2\nf4 | 2 | 0\nf5 | 3 | 7",
    },
    Micro {
        src: "void main(int[] xs) { int c = 0; int i = 0; while (i < len(xs)) { if (xs[i] > 2) { c = c + 1; } i = i + 1; } println(c); }",
        clause: "xs[i] > 2",
        tests: "ok | [1, 5] | 1\nf1 | [1, 5, 7, 0] | 4\nf2 | [1, 5, 7, 0] | 1\nf3 | [9, 9, 9] | 0\nf4 | [3, 1, 3, 1] | 2\nf5 | [3] | 5",
    },
    Micro {
        src: "int f(int x) { if (x < 0) { return 0 - x; } return x; } void main(int a, int b, int c) { println(f(a) + f(b) + f(c)); }",
        clause: "x < 0",
        tests: "ok | 1 2 3 | 6\nf1 | -1 -2 -3 | -6\nf2 | -1 2 -3 | 0\nf3 | 1 2 3 | 4\nf4 | 5 -5 5 | -5\nf5 | 1 1 1 | 100",
    },
    Micro {
        src: "void main(int n) { int s = 0; while (s < n) { s = s + 2; } println(s); }",
        clause: "s < n",
        tests: "ok | 5 | 6\nf1 | 5 | 2\nf2 | 6 | 0\nf3 | 5 | 8\nf4 | 3 | 4\nf5 | 5 | 3",
    },
];

/// (pattern name, fixed failing tests) from brute force over all
/// 2^n instance subsets of each failing test.
fn oracle(p: &flipfix_core::minilang::LoweredProgram, site: usize, failing: &[&TestCase]) -> BTreeSet<(String, Vec<String>)> {
    let mut fixed: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for t in failing {
        let n = run(p, t, &Controller::none(), DEFAULT_STEP_BUDGET).site_counts[site];
        assert!(n <= 4, "micro-program site runs {n} times");
        let mut fixing = BTreeSet::new();
        for mask in 1u32..(1 << n) {
            let set: BTreeSet<u32> = (1..=n).filter(|k| mask & (1 << (k - 1)) != 0).collect();
            if run(p, t, &Controller::pattern(site, set), DEFAULT_STEP_BUDGET).passed() {
                let bits: String = (1..=n).map(|k| if mask & (1 << (k - 1)) != 0 { '1' } else { '0' }).collect();
                fixing.insert(bits);
            }
        }
        for p in NegationPattern::ALL {
            let bits = pattern_bits(p.name(), n);
            if bits.contains('1') && fixing.contains(&bits) {
                fixed.entry(p.name().to_string()).or_default().push(t.name.clone());
            }
        }
    }
    fixed.into_iter().collect()
}

#[test]
fn candidates_equal_brute_force_on_micro_programs() {
    for (i, m) in MICROS.iter().enumerate() {
        let p = program(m.src);
        let s = suite(&p, m.tests);
        let site = p.sites.iter().find(|s| s.clause == m.clause).unwrap().id;
        let failing: Vec<&TestCase> = s
            .tests
            .iter()
            .filter(|t| !run(&p, t, &Controller::none(), DEFAULT_STEP_BUDGET).passed())
            .collect();
        assert!(!failing.is_empty());
        let queue = heuristic_cfa_search(&p, &[site], &failing, &NegationPattern::ALL, DEFAULT_STEP_BUDGET);
        let found: BTreeSet<(String, Vec<String>)> = queue
            .candidates
            .iter()
            .map(|c| {
                assert_eq!(c.site, site);
                assert_eq!(c.priority, c.fixed_tests.len());
                (c.pattern.name().to_string(), c.fixed_tests.clone())
            })
            .collect();
        assert_eq!(found, oracle(&p, site, &failing), "micro-program {i}");
        assert!(queue.runs <= failing.len() * (NegationPattern::ALL.len() + 1));
        // Queue order: priority descending, then pattern order.
        for w in queue.candidates.windows(2) {
            assert!((std::cmp::Reverse(w[0].priority), w[0].pattern) <= (std::cmp::Reverse(w[1].priority), w[1].pattern));
        }
    }
}

#[test]
fn every_micro_program_has_some_candidate_and_some_miss() {
    // Guards against a vacuous oracle: each suite has a fixable and an
    // unfixable failing test.
    for m in &MICROS {
        let p = program(m.src);
        let s = suite(&p, m.tests);
        let site = p.sites.iter().find(|s| s.clause == m.clause).unwrap().id;
        let failing: Vec<&TestCase> = s
            .tests
            .iter()
            .filter(|t| !run(&p, t, &Controller::none(), DEFAULT_STEP_BUDGET).passed())
            .collect();
        let queue = heuristic_cfa_search(&p, &[site], &failing, &NegationPattern::ALL, DEFAULT_STEP_BUDGET);
        let fixed: BTreeSet<&String> = queue.candidates.iter().flat_map(|c| &c.fixed_tests).collect();
        assert!(!fixed.is_empty(), "{}", m.src);
        assert!(fixed.len() < failing.len(), "{}", m.src);
    }
}
