use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const TOY_A: &str = "\
investor_id,company_id,tags,date
I1,C2,T1|T2,2020-01-01
I2,C2,T1|T2,2020-01-02
I2,C3,T2,2020-01-03
I2,C1,T1|T2,2020-01-04
";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_startup-match"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn toy(dir: &TempDir) -> PathBuf {
    let p = dir.path().join("toy.csv");
    fs::write(&p, TOY_A).unwrap();
    p
}

fn small_synth(dir: &TempDir) -> PathBuf {
    let p = dir.path().join("synth.csv");
    let out = run(&[
        "synth", "--out", path(&p), "--investors", "150", "--companies", "400", "--tags", "40",
        "--seed", "9",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    p
}

fn lines(p: &Path) -> Vec<String> {
    fs::read_to_string(p).unwrap().lines().map(String::from).collect()
}

#[test]
fn stats_writes_report_and_histograms() {
    let dir = TempDir::new().unwrap();
    let input = small_synth(&dir);
    let out_dir = dir.path().join("stats");
    let out = run(&["stats", "--input", path(&input), "--out-dir", path(&out_dir)]);
    assert!(out.status.success());
    let report = fs::read_to_string(out_dir.join("stats.txt")).unwrap();
    assert!(report.contains("investors\t150"));
    for name in ["companies_per_investor.tsv", "investors_per_company.tsv", "tags_per_company.tsv"] {
        let rows = lines(&out_dir.join(name));
        assert!(!rows.is_empty(), "{name}");
        assert!(rows.iter().all(|r| r.split('\t').count() == 2));
    }
    let investors: usize = lines(&out_dir.join("companies_per_investor.tsv"))
        .iter()
        .map(|r| r.split('\t').nth(1).unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(investors, 150);
    for name in ["favorite_tag_share.tsv", "giant_component_share.tsv"] {
        assert_eq!(lines(&out_dir.join(name)).len(), 20, "{name}");
    }
}

#[test]
fn stats_on_missing_file_fails() {
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "stats",
        "--input",
        path(&dir.path().join("absent.csv")),
        "--out-dir",
        path(&dir.path().join("o")),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.csv"));
}

#[test]
fn analyze_histograms_count_qualifying_investors() {
    let dir = TempDir::new().unwrap();
    let input = small_synth(&dir);
    let out_dir = dir.path().join("an");
    let out = run(&["analyze", "--input", path(&input), "--out-dir", path(&out_dir), "--bins", "10"]);
    assert!(out.status.success());
    let profiles = lines(&out_dir.join("profiles.tsv")).len() - 1;
    for name in ["favorite_tag_share.tsv", "giant_component_share.tsv"] {
        let rows = lines(&out_dir.join(name));
        assert_eq!(rows.len(), 10);
        let total: usize = rows
            .iter()
            .map(|r| r.split('\t').nth(1).unwrap().parse::<usize>().unwrap())
            .sum();
        assert_eq!(total, profiles);
    }
}

#[test]
fn failed_run_removes_partial_outputs() {
    let dir = TempDir::new().unwrap();
    let input = small_synth(&dir);
    let out_dir = dir.path().join("an");
    let out = run(&["analyze", "--input", path(&input), "--out-dir", path(&out_dir), "--bins", "0"]);
    assert!(!out.status.success());
    assert!(!out_dir.join("profiles.tsv").exists());
}

#[test]
fn recommend_toy_a_orders_i2_first() {
    let dir = TempDir::new().unwrap();
    let input = toy(&dir);
    let out_file = dir.path().join("rec.txt");
    let out = run(&[
        "recommend", "--input", path(&input), "--tags", "T1|T2", "--method", "probs",
        "--representation", "cit-w", "--lambda", "0.5", "--reach", "1", "--top", "50",
        "--out", path(&out_file),
    ]);
    assert!(out.status.success());
    let rows: Vec<String> = lines(&out_file).into_iter().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("I2\t"));
    assert!(rows[1].starts_with("I1\t"));
}

#[test]
fn recommend_with_unknown_tags_warns_and_lists_by_id() {
    let dir = TempDir::new().unwrap();
    let input = toy(&dir);
    let out_file = dir.path().join("rec.txt");
    let out = run(&[
        "recommend", "--input", path(&input), "--tags", "nothing", "--method", "heats",
        "--lambda", "0.3", "--out", path(&out_file),
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let rows: Vec<String> = lines(&out_file).into_iter().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows, ["I1\t0", "I2\t0"]);
}

#[test]
fn recommend_rejects_bad_method_and_lambda() {
    let dir = TempDir::new().unwrap();
    let input = toy(&dir);
    let out_file = dir.path().join("rec.txt");
    for extra in [
        &["--method", "nonsense"][..],
        &["--method", "probs", "--lambda", "1.5"][..],
        &["--method", "probs"][..],
    ] {
        let mut args = vec!["recommend", "--input", path(&input), "--tags", "T1", "--out", path(&out_file)];
        args.extend_from_slice(extra);
        let out = run(&args);
        assert!(!out.status.success(), "{extra:?}");
        assert!(!out_file.exists());
    }
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = TempDir::new().unwrap();
    let input = toy(&dir);
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "# defaults\nmethod = probs\nlambda = 0.5\nrepresentation = tci\n").unwrap();
    let out_file = dir.path().join("rec.txt");
    let args = |extra: &[&str]| {
        let mut a = vec![
            "--config", path(&cfg), "recommend", "--input", path(&input), "--tags", "T1|T2",
            "--out", path(&out_file),
        ];
        a.extend_from_slice(extra);
        a.into_iter().map(String::from).collect::<Vec<_>>()
    };
    assert!(bin().args(args(&[])).output().unwrap().status.success());
    let text = fs::read_to_string(&out_file).unwrap();
    assert!(text.starts_with("# ProbS TCI lambda=0.5 reach=1"));
    let first = text.lines().nth(1).unwrap();
    assert!(first.starts_with("I2\t"));
    assert!(bin().args(args(&["--representation", "cit-w"])).output().unwrap().status.success());
    assert!(fs::read_to_string(&out_file).unwrap().starts_with("# ProbS CIT-w"));
}

#[test]
fn every_split_option_is_accepted() {
    let dir = TempDir::new().unwrap();
    let input = small_synth(&dir);
    for split in ["90/10", "85/15", "95/5"] {
        let out_dir = dir.path().join(split.replace('/', "_"));
        let out = run(&[
            "evaluate", "--input", path(&input), "--split", split, "--method",
            "normalized-tag-voting", "--out-dir", path(&out_dir),
        ]);
        assert!(out.status.success(), "{split}: {}", String::from_utf8_lossy(&out.stderr));
        let report = fs::read_to_string(out_dir.join("report.txt")).unwrap();
        assert!(report.contains("mean_rs\t"));
    }
}

#[test]
fn evaluate_is_byte_identical_across_runs_and_workers() {
    let dir = TempDir::new().unwrap();
    let input = small_synth(&dir);
    let mut reports = Vec::new();
    for workers in ["1", "3"] {
        let out_dir = dir.path().join(format!("ev{workers}"));
        let out = run(&[
            "--workers", workers, "evaluate", "--input", path(&input), "--method", "bpr-mf",
            "--seed", "5", "--out-dir", path(&out_dir),
        ]);
        assert!(out.status.success());
        reports.push((
            fs::read(out_dir.join("report.txt")).unwrap(),
            fs::read(out_dir.join("records.tsv")).unwrap(),
        ));
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn sweep_marks_exactly_one_best_cell() {
    let dir = TempDir::new().unwrap();
    let input = small_synth(&dir);
    let out_dir = dir.path().join("sweep");
    let out = run(&[
        "sweep", "--input", path(&input), "--lambda-step", "0.5", "--max-reach", "2",
        "--out-dir", path(&out_dir),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = lines(&out_dir.join("table.txt"));
    let marks = table
        .iter()
        .filter(|l| !l.starts_with('#'))
        .flat_map(|l| l.split_whitespace())
        .filter(|t| *t == "*")
        .count();
    assert_eq!(marks, 1);
    let tsv = lines(&out_dir.join("table.tsv"));
    assert_eq!(tsv.iter().filter(|l| l.ends_with("\t1")).count(), 1);
    // 2 kernels x 5 representations x 3 lambdas x 2 reaches + 5 baselines + header
    assert_eq!(tsv.len(), 2 * 5 * 3 * 2 + 5 + 1);
    assert!(out_dir.join("timing.tsv").exists());
}

#[test]
fn split_writes_train_test_and_targets() {
    let dir = TempDir::new().unwrap();
    let input = small_synth(&dir);
    let out_dir = dir.path().join("split");
    let out = run(&["split", "--input", path(&input), "--split", "85/15", "--out-dir", path(&out_dir)]);
    assert!(out.status.success());
    let total = lines(&input).len() - 1;
    let train = lines(&out_dir.join("train.csv")).len() - 1;
    let test = lines(&out_dir.join("test.csv")).len() - 1;
    assert_eq!(train + test, total);
    assert_eq!(train, (0.85 * total as f64 - 1e-9).ceil() as usize);
    assert!(lines(&out_dir.join("targets.tsv")).len() > 1);
}

#[test]
fn synth_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = small_synth(&dir);
    let first = fs::read(&a).unwrap();
    let b = small_synth(&dir);
    assert_eq!(first, fs::read(&b).unwrap());
}
