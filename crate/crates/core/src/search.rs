//! Suspicious-site ranking and the exhaustive (site, test, pattern) search.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::interp::{count_executions, run, Controller};
use crate::minilang::{LoweredProgram, SiteId, TestCase};
use crate::patterns::{instances_to_negate, NegationPattern};

/// Which sites each test executes, plus each test's unmodified verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageMatrix {
    /// `executed[site][test]`
    pub executed: Vec<Vec<bool>>,
    pub passed: Vec<bool>,
}

impl CoverageMatrix {
    pub fn new(executed: Vec<Vec<bool>>, passed: Vec<bool>) -> Self {
        debug_assert!(executed.iter().all(|row| row.len() == passed.len()));
        Self { executed, passed }
    }

    /// Runs every test once without negation.
    pub fn build(p: &LoweredProgram, tests: &[TestCase], step_budget: u64) -> Self {
        let mut executed = alloc::vec![Vec::with_capacity(tests.len()); p.sites.len()];
        let mut passed = Vec::with_capacity(tests.len());
        for t in tests {
            let r = run(p, t, &Controller::none(), step_budget);
            for (site, &n) in r.site_counts.iter().enumerate() {
                executed[site].push(n > 0);
            }
            passed.push(r.passed());
        }
        Self { executed, passed }
    }

    pub fn sites(&self) -> usize {
        self.executed.len()
    }

    pub fn failing(&self) -> usize {
        self.passed.iter().filter(|p| !**p).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FlMethod {
    /// Every predicate is suspicious, in source order.
    #[default]
    All,
    Ochiai,
}

impl core::str::FromStr for FlMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(FlMethod::All),
            "ochiai" => Ok(FlMethod::Ochiai),
            other => Err(alloc::format!("unknown fault localization method `{other}`")),
        }
    }
}

/// `ef / sqrt((ef + nf) * (ef + ep))`, 0 when the denominator is 0.
pub fn ochiai_scores(m: &CoverageMatrix) -> Vec<f64> {
    let total_fail = m.failing();
    m.executed
        .iter()
        .map(|row| {
            let (mut ef, mut ep) = (0usize, 0usize);
            for (hit, pass) in row.iter().zip(&m.passed) {
                match (*hit, *pass) {
                    (true, false) => ef += 1,
                    (true, true) => ep += 1,
                    _ => {}
                }
            }
            let nf = total_fail - ef;
            let denom = ((ef + nf) * (ef + ep)) as f64;
            if denom == 0.0 {
                0.0
            } else {
                ef as f64 / libm::sqrt(denom)
            }
        })
        .collect()
}

pub fn rank_sites(m: &CoverageMatrix, method: FlMethod) -> Vec<SiteId> {
    match method {
        FlMethod::All => (0..m.sites()).collect(),
        FlMethod::Ochiai => {
            if m.failing() == 0 {
                return Vec::new();
            }
            let scores = ochiai_scores(m);
            let mut ids: Vec<SiteId> = (0..m.sites()).collect();
            // Stable sort keeps site order among ties.
            ids.sort_by(|a, b| scores[*b].total_cmp(&scores[*a]));
            ids
        }
    }
}

/// A (site, pattern) pair that makes at least one failing test pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateFix {
    pub site: SiteId,
    pub pattern: NegationPattern,
    /// Names of the fixed failing tests, in suite order.
    pub fixed_tests: Vec<String>,
    pub priority: usize,
}

impl CandidateFix {
    fn sort_key(&self) -> (core::cmp::Reverse<usize>, SiteId, usize) {
        (core::cmp::Reverse(self.priority), self.site, self.pattern.rank())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SolutionQueue {
    pub candidates: Vec<CandidateFix>,
    /// Interpreter runs spent building the queue.
    pub runs: usize,
}

impl SolutionQueue {
    /// Orders candidates by priority, then site id, then pattern order.
    pub fn from_candidates(mut candidates: Vec<CandidateFix>, runs: usize) -> Self {
        candidates.sort_by_key(CandidateFix::sort_key);
        Self { candidates, runs }
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn head(&self) -> Option<&CandidateFix> {
        self.candidates.first()
    }
}

/// Per-test execution counts from one unmodified run, shared across sites.
pub fn baseline_counts(p: &LoweredProgram, t_fail: &[&TestCase], step_budget: u64) -> Vec<Vec<u32>> {
    t_fail
        .iter()
        .map(|t| count_executions(p, t, step_budget))
        .collect()
}

/// Tries every pattern of one site on every failing test. Returns the
/// candidates for that site (unsorted) and the number of negated runs.
///
/// Patterns that materialize to the same instance set for a test share one
/// run, and an empty set is never run: it is the unmodified, failing run.
pub fn search_site(
    p: &LoweredProgram,
    site: SiteId,
    t_fail: &[&TestCase],
    counts: &[Vec<u32>],
    patterns: &[NegationPattern],
    step_budget: u64,
) -> (Vec<CandidateFix>, usize) {
    let mut fixed: BTreeMap<NegationPattern, Vec<String>> = BTreeMap::new();
    let mut runs = 0;
    for (t, count) in t_fail.iter().zip(counts) {
        let n = count[site];
        let mut outcome: BTreeMap<BTreeSet<u32>, bool> = BTreeMap::new();
        for &pat in patterns {
            let set = instances_to_negate(pat, n);
            if set.is_empty() {
                continue;
            }
            let pass = match outcome.get(&set) {
                Some(&pass) => pass,
                None => {
                    runs += 1;
                    let pass = run(p, t, &Controller::pattern(site, set.clone()), step_budget).passed();
                    outcome.insert(set, pass);
                    pass
                }
            };
            if pass {
                fixed.entry(pat).or_default().push(t.name.clone());
            }
        }
    }
    let candidates = fixed
        .into_iter()
        .map(|(pattern, fixed_tests)| CandidateFix {
            site,
            pattern,
            priority: fixed_tests.len(),
            fixed_tests,
        })
        .collect();
    (candidates, runs)
}

/// Exhaustive search over `sites` x `t_fail` x `patterns`.
///
/// The run count includes one counting run per failing test, so it stays
/// within `|sites| * |t_fail| * (|patterns| + 1)`.
pub fn heuristic_cfa_search(
    p: &LoweredProgram,
    sites: &[SiteId],
    t_fail: &[&TestCase],
    patterns: &[NegationPattern],
    step_budget: u64,
) -> SolutionQueue {
    let counts = baseline_counts(p, t_fail, step_budget);
    let mut runs = if sites.is_empty() { 0 } else { t_fail.len() };
    let mut all = Vec::new();
    for &site in sites {
        let (found, spent) = search_site(p, site, t_fail, &counts, patterns, step_budget);
        runs += spent;
        all.extend(found);
    }
    SolutionQueue::from_candidates(all, runs)
}
