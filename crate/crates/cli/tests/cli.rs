use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use flipfix::report::Report;
use flipfix_core::minilang::{compile, parse_test_suite};
use flipfix_core::Value;

fn corpus(defect: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(defect)
}

fn flipfix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flipfix"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn repair_code(defect: &str) -> i32 {
    let d = corpus(defect);
    let out = flipfix(&["repair", s(&d.join("buggy.mimp")), s(&d.join("train.tests"))]);
    out.status.code().unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(repair_code("grade_v13"), 0);
    assert_eq!(repair_code("max_index"), 2);
    assert_eq!(repair_code("checksum"), 3);
    let out = flipfix(&["repair", "/nonexistent.mimp", "/nonexistent.tests"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nonexistent"));
}

#[test]
fn malformed_program_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let prog = dir.path().join("bad.mimp");
    std::fs::write(&prog, "void main( { }").unwrap();
    std::fs::write(dir.path().join("t.tests"), "t |  | x\n").unwrap();
    let out = flipfix(&["repair", s(&prog), s(&dir.path().join("t.tests"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn repair_writes_report_and_patches() {
    let d = corpus("grade_v13");
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("grade.json");
    let dump = dir.path().join("training");
    let out = flipfix(&[
        "repair",
        s(&d.join("buggy.mimp")),
        s(&d.join("train.tests")),
        "--out",
        s(&report),
        "--dump-training",
        s(&dump),
        "--max-candidates",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&report).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    let keys: Vec<&str> = json.as_object().unwrap().keys().map(String::as_str).collect();
    for k in ["defect", "sites", "candidates", "classifiers", "patches", "timings"] {
        assert!(keys.contains(&k), "{k}");
    }
    let r: Report = serde_json::from_str(&text).unwrap();
    assert_eq!(r.defect, "buggy");
    assert_eq!(r.classifiers.len(), 2);
    assert_eq!(r.patches[0].guard_expr, "!(score > a)");
    // No validation suite: vacuously correct.
    assert_eq!(r.patches[0].verdict, "correct-candidate");
    assert!(String::from_utf8_lossy(&out.stderr).contains("vacuously"));
    let patched = std::fs::read_to_string(dir.path().join("grade.patch1.mimp")).unwrap();
    assert!(patched.contains("!(score > a)"));
    compile(&patched).unwrap();
    let diff = std::fs::read_to_string(dir.path().join("grade.patch1.diff")).unwrap();
    assert!(diff.contains("-") && diff.contains("+") && diff.contains("!(score > a)"));
    assert_eq!(std::fs::read_dir(&dump).unwrap().count(), 2);
}

#[test]
fn reports_are_reproducible_apart_from_timings() {
    let d = corpus("syllables_v1");
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for k in 0..2 {
        let path = dir.path().join(format!("r{k}.json"));
        let out = flipfix(&["repair", s(&d.join("buggy.mimp")), s(&d.join("train.tests")), "--out", s(&path)]);
        assert_eq!(out.status.code(), Some(0));
        let r: Report = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        reports.push(r.without_timings());
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn options_reach_the_pipeline() {
    let d = corpus("syllables_v1");
    let out = flipfix(&[
        "repair",
        s(&d.join("buggy.mimp")),
        s(&d.join("train.tests")),
        "--patterns",
        "last,first",
        "--fl",
        "ochiai",
        "--topk",
        "1",
    ]);
    let r: Report = serde_json::from_slice(&out.stdout).unwrap();
    assert!(r.candidates.iter().all(|c| c.pattern == "first" || c.pattern == "last"));
    let sites: std::collections::BTreeSet<usize> = r.candidates.iter().map(|c| c.site).collect();
    assert!(sites.len() <= 1);
    let out = flipfix(&["repair", s(&d.join("buggy.mimp")), s(&d.join("train.tests")), "--patterns", "never"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn gen_validation_is_seeded() {
    let reference = corpus("grade_v13").join("reference.mimp");
    let dir = tempfile::tempdir().unwrap();
    let gen = |seed: &str, name: &str| {
        let path = dir.path().join(name);
        let out = flipfix(&["gen-validation", s(&reference), "--n", "200", "--seed", seed, "--out", s(&path)]);
        assert_eq!(out.status.code(), Some(0));
        std::fs::read_to_string(path).unwrap()
    };
    let a = gen("7", "a.tests");
    let b = gen("7", "b.tests");
    let c = gen("8", "c.tests");
    assert_eq!(a, b);
    assert_ne!(a, c);
    let p = compile(&std::fs::read_to_string(&reference).unwrap()).unwrap();
    assert_eq!(parse_test_suite(&a, &p.source).unwrap().len(), 200);
}

#[test]
fn generated_median_expectations_are_sorted_middles() {
    let reference = corpus("median3").join("reference.mimp");
    let dir = tempfile::tempdir().unwrap();
    let ranges = dir.path().join("ranges.toml");
    std::fs::write(&ranges, "[a]\nmin = -9\nmax = 9\n[b]\nmin = -9\nmax = 9\n[c]\nmin = -9\nmax = 9\n").unwrap();
    let path = dir.path().join("v.tests");
    let out = flipfix(&[
        "gen-validation",
        s(&reference),
        "--n",
        "300",
        "--seed",
        "4",
        "--out",
        s(&path),
        "--ranges",
        s(&ranges),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let p = compile(&std::fs::read_to_string(&reference).unwrap()).unwrap();
    let suite = parse_test_suite(&std::fs::read_to_string(&path).unwrap(), &p.source).unwrap();
    assert_eq!(suite.len(), 300);
    for t in &suite.tests {
        let mut xs: Vec<i64> = t
            .args
            .iter()
            .map(|v| match v {
                Value::Int(i) => *i,
                _ => panic!("int args"),
            })
            .collect();
        assert!(xs.iter().all(|x| (-9..=9).contains(x)));
        xs.sort();
        assert_eq!(t.expected_output, xs[1].to_string(), "{:?}", t.args);
    }
}

#[test]
fn bench_reports_na_precision_without_plausible_patches() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("checksum");
    std::fs::create_dir(&target).unwrap();
    for f in ["buggy.mimp", "reference.mimp", "train.tests", "defect.toml"] {
        std::fs::copy(corpus("checksum").join(f), target.join(f)).unwrap();
    }
    let metrics = dir.path().join("m.json");
    let out = flipfix(&["bench", s(dir.path()), "--jobs", "1", "--out", s(&metrics)]);
    assert_eq!(out.status.code(), Some(0));
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&metrics).unwrap()).unwrap();
    assert_eq!(m["plausible"], 0);
    assert_eq!(m["precision"], "n/a");
    assert_eq!(m["recall"], 0.0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("precision n/a"));
}

#[test]
fn run_emits_tests_with_actual_outputs() {
    let d = corpus("sign");
    let out = flipfix(&["run", s(&d.join("buggy.mimp")), s(&d.join("train.tests")), "--emit-tests"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let p = compile(&std::fs::read_to_string(d.join("buggy.mimp")).unwrap()).unwrap();
    let emitted = parse_test_suite(&text, &p.source).unwrap();
    let f1 = emitted.get("f1").unwrap();
    assert_eq!(f1.expected_output, "positive");
    let out = flipfix(&["run", s(&d.join("buggy.mimp")), s(&d.join("train.tests"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("f1 fail"));
}
