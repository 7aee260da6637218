use std::process::Command;

use joinmatch_bench::report::{mean_stddev, summary_path, throughput, ROW_COLUMNS};
use joinmatch_bench::{BenchReport, Format, Row};

fn row(rep: usize, elapsed_ms: f64, matches: u64) -> Row {
    Row {
        benchmark: "smart-house".into(),
        matcher: "while-lazy".into(),
        parameter: 16,
        repetition: rep,
        elapsed_ms,
        matches,
        throughput_mps: throughput(matches, elapsed_ms),
    }
}

fn sample() -> BenchReport {
    let mut r = BenchReport::default();
    for (i, ms) in [12.5, 10.0, 11.25, 9.5, 13.0].into_iter().enumerate() {
        r.rows.push(row(i, ms, 10));
    }
    let mut late = row(0, 300_000.0, 0);
    late.matcher = "brute-force".into();
    late.throughput_mps = f64::NAN;
    r.rows.push(late);
    r
}

#[test]
fn throughput_is_matches_per_second() {
    let r = row(0, 37.0, 10);
    let want = 10.0 / 0.037;
    assert!(((r.throughput_mps - want) / want).abs() < 1e-9);
}

#[test]
fn summary_uses_sample_deviation() {
    let report = sample();
    let s = report.summary();
    assert_eq!(s.len(), 2);
    let tps: Vec<f64> = report.rows[..5].iter().map(|r| r.throughput_mps).collect();
    let mean = tps.iter().sum::<f64>() / 5.0;
    let sd = (tps.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / 4.0).sqrt();
    assert!((s[0].mean_throughput_mps - mean).abs() < 1e-9);
    assert!((s[0].stddev_throughput_mps - sd).abs() < 1e-9);
    assert_eq!(mean_stddev(&tps), (s[0].mean_throughput_mps, s[0].stddev_throughput_mps));
    assert!(s[1].mean_throughput_mps.is_nan(), "only a timed-out repetition");
}

#[test]
fn csv_has_exact_columns_and_round_trips() {
    let report = sample();
    let mut buf = Vec::new();
    report.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert_eq!(text.lines().next().unwrap(), ROW_COLUMNS.join(","));
    let back = BenchReport::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back.rows.len(), report.rows.len());
    assert!(back.rows[5].timed_out());
    assert_eq!(back.rows[..5], report.rows[..5]);
}

#[test]
fn json_round_trips_to_the_same_csv() {
    let report = sample();
    let text = serde_json::to_string(&report.to_json()).unwrap();
    let back = BenchReport::from_json(serde_json::from_str(&text).unwrap()).unwrap();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    report.write_csv(&mut a).unwrap();
    back.write_csv(&mut b).unwrap();
    assert_eq!(a, b);
}

#[test]
fn emit_writes_companion_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.json");
    let summary = sample().emit(Format::Json, &out).unwrap();
    assert_eq!(summary, summary_path(&out));
    let text = std::fs::read_to_string(&summary).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "benchmark,matcher,parameter,mean_throughput_mps,stddev_throughput_mps"
    );
    assert_eq!(text.lines().count(), 3);
}

fn bench() -> Command {
    Command::new(env!("CARGO_BIN_EXE_joinmatch-bench"))
}

#[test]
fn cli_synthetic_run_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("syn.csv");
    let status = bench()
        .args(["synthetic", "--size", "2,3", "--workload", "clean", "--reps", "2", "--warmup", "1"])
        .args(["--matcher", "while-lazy,brute-force", "--workers", "2", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let rows = BenchReport::read_csv(std::fs::File::open(&out).unwrap()).unwrap().rows;
    assert_eq!(rows.len(), 2 * 2 * 2);
    assert!(rows.iter().all(|r| r.matches == 10 && r.benchmark == "synthetic-guarded-clean"));
    assert!(dir.path().join("syn.summary.csv").exists());
}

#[test]
fn cli_timeout_exits_three() {
    let out = bench()
        .args(["smart-house", "--noise", "24", "--matcher", "brute-force", "--matches", "40"])
        .args(["--reps", "1", "--warmup", "0", "--timeout-s", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let report = BenchReport::read_csv(out.stdout.as_slice()).unwrap();
    assert!(report.rows[0].timed_out());
}

#[test]
fn cli_differential_agrees() {
    let out = bench()
        .args(["differential", "--random", "20", "--matches", "4", "--noise", "2", "--workers", "2"])
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.contains("0 diverging"));
}

#[test]
fn cli_rejects_unknown_matcher() {
    let out = bench().args(["micro", "--matcher", "quantum"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown matcher"));
}

#[test]
fn cli_rejects_unguarded_payload_noise() {
    let out = bench()
        .args(["synthetic", "--workload", "noise-payload", "--unguarded", "--reps", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("needs a guard"));
}
