use std::path::Path;
use std::process::{Command, Output};

fn bqa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bqa"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn bqa_threads(threads: &str, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bqa"))
        .env("BQA_THREADS", threads)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "exit {:?}: {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows as parsed floats, skipping the header and column names.
fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .skip(2)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

fn header_json(csv: &str) -> serde_json::Value {
    let first = csv.lines().next().unwrap();
    serde_json::from_str(first.strip_prefix("# ").expect("header prefix")).unwrap()
}

#[test]
fn header_carries_version_and_config() {
    let out = stdout(&bqa(&["levels", "--points", "3", "--b0-ratio", "10"]));
    let h = header_json(&out);
    assert_eq!(h["tool"], "bqa");
    assert_eq!(h["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(h["config"]["command"], "levels");
    assert_eq!(h["config"]["bqa"]["b0_ratio"], 10.0);
    assert_eq!(out.lines().nth(1).unwrap(), "t_over_tf,E0,E1,E2,gap");
}

#[test]
fn levels_midpoint_is_the_bare_driver_spectrum() {
    let out = stdout(&bqa(&["levels", "--points", "3"]));
    let mid = &rows(&out)[1];
    assert_eq!(mid[0], 0.5);
    for (e, want) in mid[1..4].iter().zip([-1.0, 0.0, 1.0]) {
        assert!((e - want).abs() < 1e-12, "{mid:?}");
    }
}

#[test]
fn single_probabilities_are_normalized_and_symmetric() {
    let out = stdout(&bqa(&["single", "--tf", "20", "--samples", "5"]));
    let r = rows(&out);
    assert_eq!(r.len(), 5);
    assert_eq!(r[4][0], 20.0);
    for row in &r {
        assert!((row[1] + row[2] + row[3] - 1.0).abs() < 1e-9);
        assert!((row[1] - row[3]).abs() < 1e-9);
    }
}

#[test]
fn tf_sweep_mode_switches_columns() {
    let out = stdout(&bqa(&["single", "--tf-values", "5,50"]));
    assert_eq!(out.lines().nth(1).unwrap(), "tf,P_plus,P_zero,P_minus");
    let r = rows(&out);
    assert_eq!(r.len(), 2);
    // slower anneals leave less weight on the middle level
    assert!(r[1][2] < r[0][2]);
}

#[test]
fn field_sweep_is_mirror_symmetric() {
    let out = stdout(&bqa(&["field-sweep", "--tf", "30", "--h-count", "3"]));
    let r = rows(&out);
    assert!((r[0][1] - r[2][3]).abs() < 1e-9);
    assert!((r[0][3] - r[2][1]).abs() < 1e-9);
    assert!(r[2][1] > 0.9);
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let args = ["ferro", "--n", "3", "--tf-values", "10,20,40"];
    let one = stdout(&bqa_threads("1", &args));
    let four = stdout(&bqa_threads("4", &args));
    assert_eq!(one, four);
}

#[test]
fn replay_reproduces_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.csv");
    let second = dir.path().join("b.csv");
    let f = first.to_str().unwrap();
    stdout(&bqa(&["sampling", "--tf", "30", "--method", "qa", "--out", f]));
    stdout(&bqa(&["replay", "--from", f, "--out", second.to_str().unwrap()]));
    assert_eq!(
        std::fs::read(&first).unwrap(),
        std::fs::read(&second).unwrap()
    );
}

#[test]
fn sampling_lists_every_ground_configuration() {
    let out = stdout(&bqa(&["sampling", "--tf", "30"]));
    let body: Vec<&str> = out.lines().skip(2).collect();
    // six configurations, two methods
    assert_eq!(body.len(), 12);
    for method in ["BQA", "QA"] {
        let total: f64 = body
            .iter()
            .filter(|l| l.split(',').nth(1) == Some(method))
            .map(|l| l.split(',').nth(4).unwrap().parse::<f64>().unwrap())
            .sum();
        assert!(total > 0.0 && total <= 1.0 + 1e-9, "{method}: {total}");
    }
}

#[test]
fn sampling_rejects_nondegenerate_instances() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("inst.json");
    let inst = bqa::instances::ProblemInstance::ferromagnetic_ring(3, 1.0, 0.1).unwrap();
    inst.save(&p).unwrap();
    let o = bqa(&["sampling", "--instance", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn random_bench_writes_histogram_and_records() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("r.jsonl");
    let out = stdout(&bqa(&[
        "random-bench",
        "--n",
        "3",
        "--seeds",
        "0..6",
        "--tf",
        "20",
        "--method",
        "qa",
        "--records",
        rec.to_str().unwrap(),
    ]));
    let counts: u64 = out
        .lines()
        .skip(2)
        .map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(counts, 6);
    let file = std::io::BufReader::new(std::fs::File::open(&rec).unwrap());
    let records = bqa::analysis::read_records(file, "records").unwrap();
    assert_eq!(records.len(), 6);
    assert!(records.iter().all(|r| r.method == bqa::analysis::Method::Qa));
}

#[test]
fn phase_writes_side_files() {
    let dir = tempfile::tempdir().unwrap();
    let b = dir.path().join("b.csv");
    let o = dir.path().join("o.csv");
    let out = stdout(&bqa(&[
        "phase",
        "--a-count",
        "3",
        "--b-count",
        "4",
        "--boundaries",
        b.to_str().unwrap(),
        "--overlay",
        o.to_str().unwrap(),
        "--overlay-points",
        "11",
    ]));
    assert_eq!(out.lines().nth(1).unwrap(), "A,B,m_s,order,energyDensity");
    assert_eq!(out.lines().count(), 2 + 12);
    assert!(Path::new(&b).exists());
    assert_eq!(std::fs::read_to_string(&o).unwrap().lines().count(), 12);
}

#[test]
fn nested_check_agrees() {
    let out = stdout(&bqa(&["nested-check", "--tf", "20", "--samples", "4"]));
    for r in rows(&out) {
        assert!(r[1] < 1e-8, "{r:?}");
        assert!(r[2] < 1e-10, "{r:?}");
    }
}

#[test]
fn a0_sweep_has_one_row_per_amplitude() {
    let out = stdout(&bqa(&["a0-sweep", "--n", "3", "--tf", "20", "--a0-values", "1,2"]));
    let r = rows(&out);
    assert_eq!(r.len(), 2);
    assert_eq!(r[1][0], 2.0);
}

#[test]
fn exit_codes() {
    assert_eq!(bqa(&["single", "--tf=-1"]).status.code(), Some(1));
    assert_eq!(bqa(&["random-bench", "--seeds", "4..2"]).status.code(), Some(1));
    assert_eq!(bqa(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(bqa_threads("zero", &["levels"]).status.code(), Some(1));
    assert_eq!(
        bqa(&["single", "--tf", "100", "--max-steps", "3"]).status.code(),
        Some(2)
    );
    assert_eq!(
        bqa(&["ferro", "--n", "40", "--tf", "1", "--samples", "2"]).status.code(),
        Some(3)
    );
    assert_eq!(bqa(&["--help"]).status.code(), Some(0));
}
