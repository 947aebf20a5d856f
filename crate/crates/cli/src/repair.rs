//! The end-to-end pipeline: search, train, synthesize, validate.

use std::time::Instant;

use flipfix_core::dtree::{is_plausible, train, DecisionTree};
use flipfix_core::features::{collect_training_data, TrainingSet};
use flipfix_core::minilang::{emit_source, LoweredProgram, TestCase, TestSuite};
use flipfix_core::search::{
    baseline_counts, rank_sites, search_site, CandidateFix, CoverageMatrix, SolutionQueue,
};
use flipfix_core::synth::{
    evaluate_on_validation, synthesize_patch, tree_to_dnf, validate_patch, FidelityReport,
    PatchReport, PatchVerdict,
};
use rayon::prelude::*;
use similar::TextDiff;

use crate::config::RepairOptions;
use crate::report::{
    CandidateEntry, ClassifierEntry, PatchEntry, Report, SiteEntry, Timings, ValidationCounts,
};

pub const EXIT_PLAUSIBLE: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_PLAUSIBLE: i32 = 2;
pub const EXIT_EMPTY_QUEUE: i32 = 3;

#[derive(Debug, Clone)]
pub struct RepairInput {
    pub defect: String,
    pub program: LoweredProgram,
    pub training: TestSuite,
    pub validation: Option<TestSuite>,
}

/// A trained classifier for one queue entry.
#[derive(Debug, Clone)]
pub struct ClassifierArtifact {
    pub queue_index: usize,
    pub candidate: CandidateFix,
    pub training: TrainingSet,
    pub tree: DecisionTree,
    pub accuracy: f64,
    pub plausible: bool,
}

/// A synthesized source patch and how it fared.
#[derive(Debug, Clone)]
pub struct PatchArtifact {
    pub queue_index: usize,
    pub site: usize,
    pub guard_expr: String,
    pub source: String,
    pub diff: String,
    pub fidelity: FidelityReport,
    pub validation: PatchReport,
    leaves: usize,
    nodes: usize,
}

impl PatchArtifact {
    /// Plausible classifier, faithful patch, every training test passes.
    pub fn is_plausible(&self) -> bool {
        self.validation.verdict != PatchVerdict::Infeasible
    }
}

#[derive(Debug, Clone)]
pub struct RepairOutcome {
    pub report: Report,
    pub failing: Vec<String>,
    pub queue: SolutionQueue,
    pub classifiers: Vec<ClassifierArtifact>,
    /// Best first: fewer leaves, then fewer nodes, then queue order.
    pub patches: Vec<PatchArtifact>,
    pub warnings: Vec<String>,
}

impl RepairOutcome {
    pub fn plausible_patches(&self) -> impl Iterator<Item = &PatchArtifact> {
        self.patches.iter().filter(|p| p.is_plausible())
    }

    pub fn top_plausible(&self) -> Option<&PatchArtifact> {
        self.plausible_patches().next()
    }

    pub fn exit_code(&self) -> i32 {
        if self.top_plausible().is_some() {
            EXIT_PLAUSIBLE
        } else if self.queue.is_empty() {
            EXIT_EMPTY_QUEUE
        } else {
            EXIT_NOT_PLAUSIBLE
        }
    }
}

fn ms(since: Instant) -> u64 {
    since.elapsed().as_millis() as u64
}

fn unified_diff(defect: &str, before: &str, after: &str) -> String {
    TextDiff::from_lines(before, after)
        .unified_diff()
        .context_radius(3)
        .header(&format!("a/{defect}"), &format!("b/{defect}"))
        .to_string()
}

pub fn repair(input: &RepairInput, options: &RepairOptions) -> RepairOutcome {
    let p = &input.program;
    let budget = options.step_budget;
    let mut warnings = Vec::new();

    let started = Instant::now();
    let coverage = CoverageMatrix::build(p, &input.training.tests, budget);
    let t_fail: Vec<&TestCase> = input
        .training
        .tests
        .iter()
        .zip(&coverage.passed)
        .filter(|(_, pass)| !**pass)
        .map(|(t, _)| t)
        .collect();
    let failing: Vec<String> = t_fail.iter().map(|t| t.name.clone()).collect();
    if t_fail.is_empty() {
        warnings.push("every training test already passes; nothing to repair".into());
    }
    let mut sites = rank_sites(&coverage, options.fl);
    if let Some(k) = options.topk {
        sites.truncate(k);
    }
    let queue = if t_fail.is_empty() {
        SolutionQueue::default()
    } else {
        let counts = baseline_counts(p, &t_fail, budget);
        let per_site: Vec<(Vec<CandidateFix>, usize)> = sites
            .par_iter()
            .map(|&site| search_site(p, site, &t_fail, &counts, &options.patterns, budget))
            .collect();
        let mut runs = if sites.is_empty() { 0 } else { t_fail.len() };
        let mut all = Vec::new();
        for (found, spent) in per_site {
            runs += spent;
            all.extend(found);
        }
        SolutionQueue::from_candidates(all, runs)
    };
    let search_ms = ms(started);

    let started = Instant::now();
    let considered = &queue.candidates[..queue.len().min(options.max_candidates)];
    let trained: Vec<Option<ClassifierArtifact>> = considered
        .par_iter()
        .enumerate()
        .map(|(queue_index, c)| {
            let training = collect_training_data(p, c, &input.training, budget).ok()?;
            let tree = train(&training, options.tree);
            let accuracy = tree.accuracy(&training);
            let (plausible, _) =
                is_plausible(p, c.site, &tree, &training.schema, &input.training, budget);
            Some(ClassifierArtifact {
                queue_index,
                candidate: c.clone(),
                training,
                tree,
                accuracy,
                plausible,
            })
        })
        .collect();
    let mut classifiers = Vec::new();
    for (c, t) in considered.iter().zip(trained) {
        match t {
            Some(t) => classifiers.push(t),
            None => warnings.push(format!(
                "site {} / {}: no training samples",
                c.site, c.pattern
            )),
        }
    }
    let train_ms = ms(started);

    let started = Instant::now();
    let empty = TestSuite::default();
    let validation = match &input.validation {
        Some(v) => v,
        None => {
            if classifiers.iter().any(|c| c.plausible) {
                warnings.push("no validation suite: verdicts hold vacuously".into());
            }
            &empty
        }
    };
    let original_text = emit_source(&p.source);
    let synthesized: Vec<Result<PatchArtifact, String>> = classifiers
        .par_iter()
        .filter(|c| c.plausible)
        .map(|c| {
            let schema = &c.training.schema;
            let mut dnf = tree_to_dnf(&c.tree);
            if options.simplify {
                dnf = dnf.simplify();
            }
            let site = c.candidate.site;
            let fail = |e: flipfix_core::synth::SynthError| {
                format!("site {} / {}: {e}", site, c.candidate.pattern)
            };
            let patch = synthesize_patch(p, site, &dnf, schema).map_err(fail)?;
            let fidelity =
                validate_patch(p, &patch, &input.training, &c.tree, schema, budget).map_err(fail)?;
            let report = evaluate_on_validation(
                &patch,
                validation,
                fidelity.all_pass,
                fidelity.fidelity,
                budget,
            )
            .map_err(fail)?;
            let source = emit_source(&patch.program);
            Ok(PatchArtifact {
                queue_index: c.queue_index,
                site,
                guard_expr: patch.guard_expr.clone(),
                diff: unified_diff(&input.defect, &original_text, &source),
                source,
                fidelity,
                validation: report,
                leaves: c.tree.leaves(),
                nodes: c.tree.nodes(),
            })
        })
        .collect();
    let mut patches = Vec::new();
    for s in synthesized {
        match s {
            Ok(a) => {
                for w in &a.validation.warnings {
                    if !warnings.contains(w) && !w.starts_with("empty validation") {
                        warnings.push(w.clone());
                    }
                }
                patches.push(a);
            }
            Err(e) => warnings.push(e),
        }
    }
    patches.sort_by_key(|a| (a.leaves, a.nodes, a.queue_index));
    // Several patterns often train the same tree; keep one patch per edit.
    let mut seen = std::collections::BTreeSet::new();
    patches.retain(|a| seen.insert((a.site, a.guard_expr.clone())));
    let validate_ms = ms(started);

    let report = Report {
        defect: input.defect.clone(),
        sites: p
            .sites
            .iter()
            .map(|s| SiteEntry {
                id: s.id,
                function: s.function.clone(),
                line: s.span.line,
                clause: s.clause.clone(),
            })
            .collect(),
        candidates: queue
            .candidates
            .iter()
            .map(|c| CandidateEntry {
                site: c.site,
                pattern: c.pattern.name().to_string(),
                fixed_tests: c.fixed_tests.clone(),
                priority: c.priority,
            })
            .collect(),
        classifiers: classifiers
            .iter()
            .map(|c| ClassifierEntry {
                site: c.candidate.site,
                pattern: c.candidate.pattern.name().to_string(),
                tree: c.tree.render(&c.training.schema),
                plausible: c.plausible,
                training_accuracy: c.accuracy,
            })
            .collect(),
        patches: patches
            .iter()
            .map(|a| PatchEntry {
                site: a.site,
                guard_expr: a.guard_expr.clone(),
                diff: a.diff.clone(),
                fidelity: a.fidelity.fidelity,
                validation: ValidationCounts {
                    pass: a.validation.pass,
                    fail: a.validation.fail,
                },
                verdict: a.validation.verdict.as_str().to_string(),
            })
            .collect(),
        timings: Timings {
            search_ms,
            train_ms,
            validate_ms,
        },
    };
    RepairOutcome {
        report,
        failing,
        queue,
        classifiers,
        patches,
        warnings,
    }
}
