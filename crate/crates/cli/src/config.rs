//! Repair options and the per-defect `defect.toml`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use flipfix_core::dtree::TreeParams;
use flipfix_core::interp::DEFAULT_STEP_BUDGET;
use flipfix_core::minilang::{compile, parse_test_suite, LoweredProgram, TestSuite};
use flipfix_core::patterns::NegationPattern;
use flipfix_core::search::FlMethod;
use serde::Deserialize;

use crate::error::{read, CliError, Result};
use crate::gen::RangeSpec;

pub const DEFAULT_MAX_CANDIDATES: usize = 10;
pub const DEFAULT_VALIDATION_SIZE: usize = 1000;

/// Everything the pipeline needs besides its inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct RepairOptions {
    pub patterns: Vec<NegationPattern>,
    pub fl: FlMethod,
    /// Keep only the first `topk` ranked sites.
    pub topk: Option<usize>,
    pub max_candidates: usize,
    pub tree: TreeParams,
    pub step_budget: u64,
    pub simplify: bool,
}

impl Default for RepairOptions {
    fn default() -> Self {
        Self {
            patterns: NegationPattern::ALL.to_vec(),
            fl: FlMethod::All,
            topk: None,
            max_candidates: DEFAULT_MAX_CANDIDATES,
            tree: TreeParams::default(),
            step_budget: DEFAULT_STEP_BUDGET,
            simplify: false,
        }
    }
}

/// `p1,p2,...` in canonical names.
pub fn parse_patterns(list: &str) -> Result<Vec<NegationPattern>> {
    let mut out: Vec<NegationPattern> = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let p: NegationPattern = name.parse().map_err(|e: flipfix_core::patterns::UnknownPattern| {
            CliError::Usage(e.to_string())
        })?;
        if !out.contains(&p) {
            out.push(p);
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("empty pattern list".into()));
    }
    out.sort();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepairConfig {
    pub program: PathBuf,
    pub training: PathBuf,
    pub validation: Option<PathBuf>,
    pub options: RepairOptions,
    pub seed: u64,
}

pub fn load_program(path: &Path) -> Result<LoweredProgram> {
    compile(&read(path)?).map_err(|source| CliError::Program {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_suite(path: &Path, program: &LoweredProgram) -> Result<TestSuite> {
    parse_test_suite(&read(path)?, &program.source).map_err(|source| CliError::Suite {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ValidationSection {
    pub n: Option<usize>,
    pub seed: Option<u64>,
}

/// Contents of a corpus `defect.toml`.
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DefectConfig {
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub validation: ValidationSection,
    /// Input ranges for generated validation tests, by `main` parameter.
    #[serde(default)]
    pub ranges: BTreeMap<String, RangeSpec>,
}

impl DefectConfig {
    pub fn load(path: &Path) -> Result<Self> {
        toml::from_str(&read(path)?).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

/// A ranges-only TOML file: one table per `main` parameter.
pub fn load_ranges(path: &Path) -> Result<BTreeMap<String, RangeSpec>> {
    toml::from_str(&read(path)?).map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_lists() {
        assert_eq!(
            parse_patterns("last, all,all").unwrap(),
            vec![NegationPattern::All, NegationPattern::Last]
        );
        assert!(parse_patterns("all,never").is_err());
        assert!(parse_patterns(" , ").is_err());
    }

    #[test]
    fn defect_toml() {
        let cfg: DefectConfig = toml::from_str(
            "description = \"x\"\n[validation]\nn = 5\nseed = 3\n[ranges.word]\nchars = \"ab\"\nmax_len = 4\n",
        )
        .unwrap();
        assert_eq!(cfg.validation.n, Some(5));
        assert_eq!(cfg.ranges["word"].max_len, Some(4));
        assert!(toml::from_str::<DefectConfig>("bogus = 1").is_err());
    }
}
