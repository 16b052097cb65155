use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sampclust::report::{read_results, read_summary};

fn sampclust(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sampclust"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn cluster_prints_one_csv_line() {
    let o = sampclust(&[
        "cluster",
        "--algo",
        "rs",
        "--k",
        "2",
        "--m",
        "4",
        "--seed",
        "1",
        "--synthetic",
        "10,2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 1);
    let fields: Vec<&str> = lines[0].split(',').collect();
    assert_eq!(fields[0], "rs");
    assert!(fields[1].parse::<f64>().unwrap() >= 0.0);
    assert_eq!(&fields[2..], ["2", "10", "4", "1"]);
}

#[test]
fn every_algorithm_runs() {
    for algo in ["rs", "km", "kmpp", "rs-balanced"] {
        let o = sampclust(&[
            "cluster",
            "--algo",
            algo,
            "--k",
            "3",
            "--m",
            "12",
            "--synthetic",
            "40,3",
        ]);
        assert_eq!(o.status.code(), Some(0), "{algo}: {}", stderr(&o));
        assert!(stdout(&o).starts_with(&format!("{algo},")));
    }
}

#[test]
fn same_seed_same_line() {
    let args = [
        "cluster",
        "--algo",
        "kmpp",
        "--k",
        "3",
        "--seed",
        "9",
        "--synthetic",
        "60,2",
    ];
    assert_eq!(stdout(&sampclust(&args)), stdout(&sampclust(&args)));
}

#[test]
fn infeasible_bounds_exit_1() {
    let o = sampclust(&[
        "cluster",
        "--algo",
        "rs-balanced",
        "--k",
        "2",
        "--m",
        "4",
        "--lower",
        "3",
        "--upper",
        "3",
        "--synthetic",
        "5,2",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("k·l ≤ n ≤ k·u"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(
        sampclust(&["cluster", "--algo", "rs", "--k", "2", "--nope"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        sampclust(&["cluster", "--algo", "km", "--k", "2"]).status.code(),
        Some(1)
    );
    assert_eq!(
        sampclust(&[
            "cluster",
            "--algo",
            "km",
            "--k",
            "2",
            "--synthetic",
            "5,2",
            "--input",
            "x.txt"
        ])
        .status
        .code(),
        Some(1)
    );
    assert_eq!(
        sampclust(&["cluster", "--algo", "rs", "--k", "2", "--synthetic", "5,2"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(sampclust(&[]).status.code(), Some(1));
}

#[test]
fn help_documents_every_flag() {
    let o = sampclust(&["cluster", "--help"]);
    assert_eq!(o.status.code(), Some(0));
    let help = stdout(&o);
    for flag in [
        "--algo",
        "--k",
        "--m",
        "--seed",
        "--candidates",
        "--candidate-cap",
        "--lower",
        "--upper",
        "--input",
        "--synthetic",
        "--out",
        "--jobs",
        "--polish",
        "--dump-network",
        "--max-iters",
    ] {
        assert!(help.contains(flag), "missing {flag}");
    }
    let bench = stdout(&sampclust(&["bench", "effect-n", "--help"]));
    for flag in ["--seed", "--rounds", "--out", "--jobs"] {
        assert!(bench.contains(flag), "missing {flag}");
    }
    assert_eq!(sampclust(&["--help"]).status.code(), Some(0));
}

#[test]
fn data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "1 2\n3 4 5\n").unwrap();
    let o = sampclust(&["cluster", "--algo", "km", "--k", "1", "--input", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(":2:"), "{}", stderr(&o));
    let missing = dir.path().join("missing.txt");
    let o = sampclust(&[
        "cluster",
        "--algo",
        "km",
        "--k",
        "1",
        "--input",
        missing.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn cluster_reads_files_and_writes_assignments() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("line.txt");
    fs::write(&input, "# x\n0\n1\n9\n10\n").unwrap();
    let out = dir.path().join("labels.csv");
    let o = sampclust(&[
        "cluster",
        "--algo",
        "rs",
        "--k",
        "2",
        "--m",
        "4",
        "--candidates",
        "exhaustive",
        "--input",
        input.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let labels = fs::read_to_string(&out).unwrap();
    assert!(labels.starts_with("point,cluster\n"));
    assert_eq!(labels.lines().count(), 5);
}

#[test]
fn network_dump_format() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("pts.txt");
    let centers = dir.path().join("c.txt");
    fs::write(&pts, "0\n1\n2\n").unwrap();
    fs::write(&centers, "0\n10\n").unwrap();
    let o = sampclust(&[
        "dump-network",
        "--input",
        pts.to_str().unwrap(),
        "--centers",
        centers.to_str().unwrap(),
        "--lower",
        "1",
        "--upper",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    // 3 source arcs, 6 assignment arcs, 2 center arcs.
    assert_eq!(text.lines().count(), 11);
    for line in text.lines() {
        assert_eq!(line.split_whitespace().count(), 5, "{line}");
    }
    assert!(text.lines().any(|l| l == "3 5 0 1 64"), "{text}");
    assert!(text.lines().any(|l| l.ends_with(" 1 2 0")));
}

fn bench_into(dir: &Path, which: &str, extra: &[&str]) -> Output {
    let mut args = vec![
        "bench",
        which,
        "--seed",
        "7",
        "--rounds",
        "2",
        "--out",
        dir.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    sampclust(&args)
}

#[test]
fn bench_effect_m_writes_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("cloud.txt");
    let data = sampclust::synthetic::gen_synthetic(
        sampclust::synthetic::SyntheticSpec { n: 120, d: 3 },
        &mut sampclust_core::RngStream::new(1),
    )
    .unwrap();
    sampclust::io::write_points(&input, &data).unwrap();
    let out = dir.path().join("r");
    let o = bench_into(
        &out,
        "effect-m",
        &["--input", input.to_str().unwrap(), "--values", "10,20"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let results = read_results(out.join("results.csv")).unwrap();
    let summary = read_summary(out.join("summary.csv")).unwrap();
    assert_eq!(results.len(), 2 * 2 * 3);
    assert_eq!(summary.len(), 2 * 3);
    // Recorded hit counts agree with the per-round rows.
    for s in &summary {
        let hits = results
            .iter()
            .filter(|r| r.sweep_value == s.sweep_value && r.algorithm == s.algorithm && r.is_hit)
            .count();
        assert_eq!(hits, s.hits);
        assert_eq!(s.rounds, 2);
    }
    let svg = fs::read_to_string(out.join("chart.svg")).unwrap();
    assert!(svg.contains("<svg") && svg.contains("KM++"));
}

#[test]
fn bench_is_deterministic_across_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(bench_into(&a, "effect-n", &["--values", "100,200", "--jobs", "1"])
        .status
        .success());
    assert!(bench_into(&b, "effect-n", &["--values", "100,200", "--jobs", "3"])
        .status
        .success());
    for f in ["results.csv", "summary.csv", "chart.svg"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn lemma_suite_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = sampclust(&["bench", "lemmas", "--seed", "3", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("lemmas.csv")).unwrap();
    assert_eq!(csv, stdout(&o));
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",1")), "{csv}");
    let o = sampclust(&["lemmas", "--degenerate"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().skip(1).all(|l| l.ends_with(",1")));
}
