//! Runs the pipeline over a corpus directory and aggregates the outcomes.
//!
//! Each defect is a subdirectory holding `buggy.mimp`, `reference.mimp`,
//! `train.tests`, optionally `validation.tests` and `defect.toml`. Without a
//! validation file one is generated from the reference program.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use flipfix_core::synth::PatchVerdict;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{load_program, load_suite, DefectConfig, RepairOptions, DEFAULT_VALIDATION_SIZE};
use crate::error::{CliError, Result};
use crate::gen::gen_validation;
use crate::repair::{repair, RepairInput, RepairOutcome};

pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectRow {
    pub defect: String,
    pub failing_tests: usize,
    pub candidates: usize,
    pub candidate_found: bool,
    /// The queue's candidates together fix every failing test.
    pub fully_fixed_by_search: bool,
    pub plausible: bool,
    pub plausible_patches: usize,
    /// The best plausible patch survives validation.
    pub correct: bool,
    /// Verdict of the best plausible patch, or `none`.
    pub verdict: String,
    pub guard_expr: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Ratio {
    Value(f64),
    NotApplicable(String),
}

impl Ratio {
    fn of(num: usize, den: usize) -> Self {
        if den == 0 {
            Ratio::NotApplicable("n/a".into())
        } else {
            Ratio::Value(num as f64 / den as f64)
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Ratio::Value(v) => Some(*v),
            Ratio::NotApplicable(_) => None,
        }
    }
}

impl std::fmt::Display for Ratio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Ratio::Value(v) => write!(f, "{:.3}", v),
            Ratio::NotApplicable(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub defects: Vec<DefectRow>,
    pub total: usize,
    pub with_candidates: usize,
    pub plausible: usize,
    pub correct: usize,
    /// Plausible but failing validation.
    pub incorrect: usize,
    pub errors: usize,
    /// correct / plausible
    pub precision: Ratio,
    /// correct / total
    pub recall: Ratio,
}

impl Metrics {
    pub fn from_rows(defects: Vec<DefectRow>) -> Self {
        let total = defects.len();
        let count = |f: fn(&DefectRow) -> bool| defects.iter().filter(|r| f(r)).count();
        let with_candidates = count(|r| r.candidate_found);
        let plausible = count(|r| r.plausible);
        let correct = count(|r| r.correct);
        let errors = count(|r| r.error.is_some());
        Self {
            total,
            with_candidates,
            plausible,
            correct,
            incorrect: plausible - correct,
            errors,
            precision: Ratio::of(correct, plausible),
            recall: Ratio::of(correct, total),
            defects,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metrics serialize");
        s.push('\n');
        s
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let width = self
            .defects
            .iter()
            .map(|r| r.defect.len())
            .max()
            .unwrap_or(6)
            .max(6);
        let _ = writeln!(
            out,
            "{:<width$}  {:>4}  {:>5}  {:>9}  verdict",
            "defect", "fail", "cands", "plausible"
        );
        for r in &self.defects {
            let verdict = match &r.error {
                Some(e) => format!("error: {e}"),
                None => r.verdict.clone(),
            };
            let _ = writeln!(
                out,
                "{:<width$}  {:>4}  {:>5}  {:>9}  {}",
                r.defect, r.failing_tests, r.candidates, r.plausible_patches, verdict
            );
        }
        let _ = writeln!(
            out,
            "\n{} defects, {} with candidates, {} plausible, {} correct, {} incorrect",
            self.total, self.with_candidates, self.plausible, self.correct, self.incorrect
        );
        let _ = writeln!(out, "precision {}  recall {}", self.precision, self.recall);
        out
    }
}

/// Defect directories in name order.
pub fn defect_dirs(corpus: &Path) -> Result<Vec<PathBuf>> {
    let io = |source| CliError::Io {
        path: corpus.to_path_buf(),
        source,
    };
    let mut dirs = Vec::new();
    for entry in std::fs::read_dir(corpus).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.is_dir() && path.join("buggy.mimp").is_file() {
            dirs.push(path);
        }
    }
    dirs.sort();
    Ok(dirs)
}

/// Loads one defect directory into pipeline input.
pub fn load_defect(dir: &Path, step_budget: u64) -> Result<(RepairInput, Vec<String>)> {
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let program = load_program(&dir.join("buggy.mimp"))?;
    let training = load_suite(&dir.join("train.tests"), &program)?;
    let toml_path = dir.join("defect.toml");
    let cfg = if toml_path.is_file() {
        DefectConfig::load(&toml_path)?
    } else {
        DefectConfig::default()
    };
    let mut warnings = Vec::new();
    let validation_path = dir.join("validation.tests");
    let validation = if validation_path.is_file() {
        load_suite(&validation_path, &program)?
    } else {
        let reference = load_program(&dir.join("reference.mimp"))?;
        let g = gen_validation(
            &reference,
            cfg.validation.n.unwrap_or(DEFAULT_VALIDATION_SIZE),
            cfg.validation.seed.unwrap_or(DEFAULT_SEED),
            &cfg.ranges,
            step_budget,
        );
        warnings.extend(g.warnings);
        g.suite
    };
    Ok((
        RepairInput {
            defect: name,
            program,
            training,
            validation: Some(validation),
        },
        warnings,
    ))
}

pub fn row(defect: &str, outcome: &RepairOutcome) -> DefectRow {
    let mut fixed: Vec<&str> = outcome
        .queue
        .candidates
        .iter()
        .flat_map(|c| c.fixed_tests.iter().map(String::as_str))
        .collect();
    fixed.sort_unstable();
    fixed.dedup();
    let top = outcome.top_plausible();
    DefectRow {
        defect: defect.to_string(),
        failing_tests: outcome.failing.len(),
        candidates: outcome.queue.len(),
        candidate_found: !outcome.queue.is_empty(),
        fully_fixed_by_search: !outcome.failing.is_empty() && fixed.len() == outcome.failing.len(),
        plausible: top.is_some(),
        plausible_patches: outcome.plausible_patches().count(),
        correct: top.is_some_and(|p| p.validation.verdict == PatchVerdict::CorrectCandidate),
        verdict: top
            .map(|p| p.validation.verdict.as_str())
            .unwrap_or("none")
            .to_string(),
        guard_expr: top.map(|p| p.guard_expr.clone()),
        error: None,
    }
}

fn error_row(defect: String, e: &CliError) -> DefectRow {
    DefectRow {
        defect,
        failing_tests: 0,
        candidates: 0,
        candidate_found: false,
        fully_fixed_by_search: false,
        plausible: false,
        plausible_patches: 0,
        correct: false,
        verdict: "none".into(),
        guard_expr: None,
        error: Some(e.to_string()),
    }
}

/// Runs every defect, `jobs` at a time (0 lets rayon decide).
pub fn bench(corpus: &Path, options: &RepairOptions, jobs: usize) -> Result<(Metrics, Vec<String>)> {
    let dirs = defect_dirs(corpus)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    let results: Vec<(DefectRow, Vec<String>)> = pool.install(|| {
        dirs.par_iter()
            .map(|dir| {
                let name = dir
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default();
                match load_defect(dir, options.step_budget) {
                    Ok((input, mut warnings)) => {
                        let outcome = repair(&input, options);
                        warnings.extend(outcome.warnings.iter().cloned());
                        let warnings = warnings.into_iter().map(|w| format!("{name}: {w}")).collect();
                        (row(&name, &outcome), warnings)
                    }
                    Err(e) => (error_row(name, &e), Vec::new()),
                }
            })
            .collect()
    });
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for (r, w) in results {
        rows.push(r);
        warnings.extend(w);
    }
    Ok((Metrics::from_rows(rows), warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(plausible: bool, correct: bool) -> DefectRow {
        DefectRow {
            defect: "d".into(),
            failing_tests: 1,
            candidates: 1,
            candidate_found: true,
            fully_fixed_by_search: true,
            plausible,
            plausible_patches: plausible as usize,
            correct,
            verdict: "none".into(),
            guard_expr: None,
            error: None,
        }
    }

    #[test]
    fn ratios() {
        let m = Metrics::from_rows(vec![r(true, true), r(true, false), r(false, false)]);
        assert_eq!(m.precision, Ratio::Value(0.5));
        assert_eq!(m.recall, Ratio::Value(1.0 / 3.0));
        assert_eq!(m.incorrect, 1);
        let m = Metrics::from_rows(vec![r(false, false)]);
        assert_eq!(m.precision.value(), None);
        assert!(m.to_json().contains("\"precision\": \"n/a\""));
        let m = Metrics::from_rows(vec![]);
        assert_eq!(m.recall.value(), None);
    }
}
