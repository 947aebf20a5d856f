use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flipfix::bench::bench;
use flipfix::config::{load_program, load_ranges, load_suite, parse_patterns, RepairOptions};
use flipfix::error::{write, CliError};
use flipfix::gen::gen_validation;
use flipfix::repair::{repair, RepairInput, EXIT_ERROR};
use flipfix_core::dtree::TreeParams;
use flipfix_core::interp::{run, Controller, DEFAULT_STEP_BUDGET};
use flipfix_core::minilang::{format_test_suite, normalize_output, TestCase, TestSuite};
use flipfix_core::search::FlMethod;

#[derive(Parser)]
#[command(name = "flipfix", version, about = "Repair faulty predicates by learning when to negate them")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search, train, synthesize and validate patches for one program.
    Repair(RepairArgs),
    /// Repair every defect in a corpus directory and report metrics.
    Bench(BenchArgs),
    /// Generate random tests labeled by a reference program.
    GenValidation(GenArgs),
    /// Run a test suite and print verdicts.
    Run(RunArgs),
}

#[derive(Args)]
struct PipelineArgs {
    /// Comma-separated negation patterns (default: all eleven).
    #[arg(long)]
    patterns: Option<String>,
    /// Fault localization: `all` or `ochiai`.
    #[arg(long, default_value = "all")]
    fl: FlMethod,
    /// Keep only the first N ranked sites.
    #[arg(long)]
    topk: Option<usize>,
    /// Train classifiers for at most N queue entries.
    #[arg(long, default_value_t = flipfix::config::DEFAULT_MAX_CANDIDATES)]
    max_candidates: usize,
    #[arg(long, default_value_t = TreeParams::default().max_depth)]
    max_depth: usize,
    #[arg(long, default_value_t = TreeParams::default().min_samples)]
    min_samples: usize,
    /// Interpreter steps per run before it is aborted.
    #[arg(long, default_value_t = DEFAULT_STEP_BUDGET)]
    step_budget: u64,
    /// Drop redundant literals from the guard.
    #[arg(long)]
    simplify: bool,
}

impl PipelineArgs {
    fn options(&self) -> Result<RepairOptions, CliError> {
        let mut o = RepairOptions {
            fl: self.fl,
            topk: self.topk,
            max_candidates: self.max_candidates,
            tree: TreeParams {
                max_depth: self.max_depth,
                min_samples: self.min_samples.max(1),
            },
            step_budget: self.step_budget,
            simplify: self.simplify,
            ..RepairOptions::default()
        };
        if let Some(list) = &self.patterns {
            o.patterns = parse_patterns(list)?;
        }
        Ok(o)
    }
}

#[derive(Args)]
struct RepairArgs {
    program: PathBuf,
    training: PathBuf,
    #[arg(long)]
    validation: Option<PathBuf>,
    /// Write the JSON report here, and each patch next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write each classifier's training set as a tab-separated file here.
    #[arg(long)]
    dump_training: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct BenchArgs {
    corpus: PathBuf,
    /// Defects repaired in parallel (0: one per core).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct GenArgs {
    reference: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// TOML table of per-parameter ranges.
    #[arg(long)]
    ranges: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_STEP_BUDGET)]
    step_budget: u64,
}

#[derive(Args)]
struct RunArgs {
    program: PathBuf,
    tests: PathBuf,
    /// Print the suite back with actual outputs as the expected ones.
    #[arg(long)]
    emit_tests: bool,
    #[arg(long, default_value_t = DEFAULT_STEP_BUDGET)]
    step_budget: u64,
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn cmd_repair(a: &RepairArgs) -> anyhow::Result<i32> {
    let options = a.pipeline.options()?;
    let program = load_program(&a.program)?;
    let training = load_suite(&a.training, &program)?;
    let validation = a
        .validation
        .as_ref()
        .map(|v| load_suite(v, &program))
        .transpose()?;
    let input = RepairInput {
        defect: stem(&a.program),
        program,
        training,
        validation,
    };
    let outcome = repair(&input, &options);
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(dir) = &a.dump_training {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.clone(),
            source,
        })?;
        for c in &outcome.classifiers {
            let name = format!("site{}_{}.tsv", c.candidate.site, c.candidate.pattern);
            write(&dir.join(name), &c.training.to_columns())?;
        }
    }
    let json = outcome.report.to_json();
    match &a.out {
        Some(out) => {
            write(out, &json)?;
            let base = out.with_extension("");
            for (k, p) in outcome.patches.iter().enumerate() {
                let stem = base.to_string_lossy();
                write(Path::new(&format!("{stem}.patch{}.mimp", k + 1)), &p.source)?;
                write(Path::new(&format!("{stem}.patch{}.diff", k + 1)), &p.diff)?;
            }
            summarize(&outcome);
        }
        None => print!("{json}"),
    }
    Ok(outcome.exit_code())
}

fn summarize(outcome: &flipfix::repair::RepairOutcome) {
    println!(
        "{} failing tests, {} candidates, {} classifiers, {} patches",
        outcome.failing.len(),
        outcome.queue.len(),
        outcome.classifiers.len(),
        outcome.patches.len()
    );
    for p in &outcome.patches {
        println!(
            "  site {}: {}  [{}; validation {} pass / {} fail]",
            p.site,
            p.guard_expr,
            p.validation.verdict.as_str(),
            p.validation.pass,
            p.validation.fail
        );
    }
}

fn cmd_bench(a: &BenchArgs) -> anyhow::Result<i32> {
    let options = a.pipeline.options()?;
    let (metrics, warnings) = bench(&a.corpus, &options, a.jobs)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    print!("{}", metrics.table());
    if let Some(out) = &a.out {
        write(out, &metrics.to_json())?;
    }
    Ok(if metrics.errors > 0 { EXIT_ERROR } else { 0 })
}

fn cmd_gen(a: &GenArgs) -> anyhow::Result<i32> {
    let reference = load_program(&a.reference)?;
    let ranges = match &a.ranges {
        Some(p) => load_ranges(p)?,
        None => Default::default(),
    };
    let g = gen_validation(&reference, a.n, a.seed, &ranges, a.step_budget);
    for w in &g.warnings {
        eprintln!("warning: {w}");
    }
    write(&a.out, &format_test_suite(&g.suite))?;
    Ok(0)
}

fn cmd_run(a: &RunArgs) -> anyhow::Result<i32> {
    let program = load_program(&a.program)?;
    let suite = load_suite(&a.tests, &program)?;
    let mut actual = Vec::new();
    let mut failed = 0;
    for t in &suite.tests {
        let r = run(&program, t, &Controller::none(), a.step_budget);
        if !r.passed() {
            failed += 1;
        }
        if let Some(reason) = &r.abort {
            eprintln!("warning: {} aborted: {reason:?}", t.name);
        }
        if !a.emit_tests {
            println!("{} {}", t.name, r.verdict.as_str());
        }
        actual.push(TestCase {
            expected_output: normalize_output(&r.output),
            ..t.clone()
        });
    }
    if a.emit_tests {
        print!("{}", format_test_suite(&TestSuite::new(actual)));
        return Ok(0);
    }
    println!("{} passed, {} failed", suite.len() - failed, failed);
    Ok(if failed > 0 { 2 } else { 0 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Repair(a) => cmd_repair(a),
        Command::Bench(a) => cmd_bench(a),
        Command::GenValidation(a) => cmd_gen(a),
        Command::Run(a) => cmd_run(a),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
