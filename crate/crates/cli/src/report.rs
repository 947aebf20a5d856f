//! JSON shape of a repair report.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub defect: String,
    pub sites: Vec<SiteEntry>,
    pub candidates: Vec<CandidateEntry>,
    pub classifiers: Vec<ClassifierEntry>,
    pub patches: Vec<PatchEntry>,
    pub timings: Timings,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteEntry {
    pub id: usize,
    pub function: String,
    pub line: u32,
    pub clause: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateEntry {
    pub site: usize,
    pub pattern: String,
    pub fixed_tests: Vec<String>,
    pub priority: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierEntry {
    pub site: usize,
    pub pattern: String,
    pub tree: String,
    pub plausible: bool,
    pub training_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchEntry {
    pub site: usize,
    pub guard_expr: String,
    pub diff: String,
    pub fidelity: bool,
    pub validation: ValidationCounts,
    pub verdict: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationCounts {
    pub pass: usize,
    pub fail: usize,
}

/// Wall-clock milliseconds per phase. The only field that varies between
/// identical runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Timings {
    pub search_ms: u64,
    pub train_ms: u64,
    pub validate_ms: u64,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Copy with timings zeroed, for comparing runs.
    pub fn without_timings(&self) -> Report {
        Report {
            timings: Timings::default(),
            ..self.clone()
        }
    }
}
