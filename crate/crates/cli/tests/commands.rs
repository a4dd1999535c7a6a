use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn odar(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_odar"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = odar(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn gen_detect_eval_on_unbalanced_data() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "gen",
            "--scenario",
            "unbalanced-two-cluster",
            "--sizes",
            "961,100",
            "--outliers",
            "8",
            "--seed",
            "7",
            "--output",
            "data.csv",
        ],
    );
    ok(
        d,
        &[
            "detect",
            "--input",
            "data.csv",
            "--label-column",
            "label",
            "--output",
            "det.csv",
        ],
    );
    ok(
        d,
        &[
            "eval",
            "--input",
            "data.csv",
            "--detection",
            "det.csv",
            "--output",
            "eval.json",
        ],
    );

    let report = json(&d.join("eval.json"));
    let acc = report["balanced_accuracy"].as_f64().unwrap();
    assert!(acc >= 0.95, "accuracy {acc}");
    assert_eq!(report["config"]["command"], "eval");

    let summary = json(&d.join("det.json"));
    assert_eq!(summary["n"], 1069);
    assert_eq!(summary["config"]["pipeline"]["transform"]["k"], 10);
    let csv = fs::read_to_string(d.join("det.csv")).unwrap();
    assert!(csv.starts_with("# config {"));
    let data = fs::read_to_string(d.join("data.csv")).unwrap();
    assert!(data.starts_with("# odar-gen rng=chacha8 scenario=unbalanced-two-cluster"));
}

#[test]
fn k_not_below_n_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("tiny.csv"), "1,2\n3,4\n5,6\n").unwrap();
    let out = odar(
        d,
        &[
            "detect", "--input", "tiny.csv", "--k", "3", "--output", "det.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("N-1"));
    assert!(!d.join("det.csv").exists());
}

#[test]
fn bad_data_and_missing_files_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.csv"), "1,2\n3,oops\n").unwrap();
    let out = odar(d, &["detect", "--input", "bad.csv", "--output", "det.csv"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let out = odar(
        d,
        &["detect", "--input", "missing.csv", "--output", "det.csv"],
    );
    assert_eq!(out.status.code(), Some(2));

    let out = odar(
        d,
        &[
            "detect",
            "--input",
            "bad.csv",
            "--output",
            "det.csv",
            "--backend",
            "nope",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let steps: [&[&str]; 4] = [
        &[
            "gen",
            "--seed",
            "3",
            "--sizes",
            "200,200",
            "--outliers",
            "20",
            "--output",
            "data.csv",
        ],
        &[
            "detect",
            "--input",
            "data.csv",
            "--label-column",
            "label",
            "--k",
            "6",
            "--output",
            "det.csv",
        ],
        &[
            "sweep",
            "--input",
            "data.csv",
            "--k-values",
            "4,6",
            "--output",
            "sweep.csv",
        ],
        &[
            "plot",
            "--input",
            "data.csv",
            "--label-column",
            "label",
            "--detection",
            "det.csv",
            "--output",
            "plot.svg",
        ],
    ];
    let files = [
        "data.csv",
        "data.json",
        "det.csv",
        "det.json",
        "sweep.csv",
        "sweep.json",
        "plot.svg",
    ];
    let snapshot = || -> Vec<Vec<u8>> {
        for args in steps {
            ok(d, args);
        }
        files.iter().map(|f| fs::read(d.join(f)).unwrap()).collect()
    };
    let first = snapshot();
    let second = snapshot();
    for (name, (a, b)) in files.iter().zip(first.iter().zip(&second)) {
        assert!(a == b, "{name} differs between runs");
    }
}

#[test]
fn plot_marks_each_outlier_once() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--seed", "1", "--output", "blobs.csv"]);
    ok(
        d,
        &[
            "detect",
            "--input",
            "blobs.csv",
            "--label-column",
            "label",
            "--k",
            "6",
            "--output",
            "det.csv",
        ],
    );
    ok(
        d,
        &[
            "plot",
            "--input",
            "blobs.csv",
            "--label-column",
            "label",
            "--detection",
            "det.csv",
            "--output",
            "plot.svg",
        ],
    );
    let svg = fs::read_to_string(d.join("plot.svg")).unwrap();
    let flagged = json(&d.join("det.json"))["outliers"].as_u64().unwrap() as usize;
    assert!(flagged > 0);
    assert_eq!(svg.matches(r##"fill="#ff8c00""##).count(), flagged);
    assert_eq!(svg.matches("<circle").count(), 1060);
    assert!(svg.contains("<metadata>config {"));

    ok(
        d,
        &[
            "plot",
            "--input",
            "blobs.csv",
            "--label-column",
            "label",
            "--k",
            "6",
            "--space",
            "odar",
            "--output",
            "odar.svg",
        ],
    );
    let svg = fs::read_to_string(d.join("odar.svg")).unwrap();
    assert_eq!(svg.matches(r##"fill="#ff8c00""##).count(), flagged);
}

#[test]
fn plot_refuses_three_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "gen",
            "--bbox",
            "0:100,0:100,0:100",
            "--sizes",
            "100,100",
            "--outliers",
            "5",
            "--output",
            "cube.csv",
        ],
    );
    let out = odar(
        d,
        &[
            "plot",
            "--input",
            "cube.csv",
            "--label-column",
            "label",
            "--k",
            "5",
            "--output",
            "cube.svg",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--space odar"));
    ok(
        d,
        &[
            "plot",
            "--input",
            "cube.csv",
            "--label-column",
            "label",
            "--k",
            "5",
            "--space",
            "odar",
            "--output",
            "cube.svg",
        ],
    );
}

#[test]
fn transform_and_bench_write_their_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "gen",
            "--sizes",
            "150,150",
            "--outliers",
            "10",
            "--output",
            "data.csv",
        ],
    );
    ok(
        d,
        &[
            "transform",
            "--input",
            "data.csv",
            "--label-column",
            "label",
            "--normalization",
            "per-rank",
            "--window",
            "one-sided",
            "--output",
            "profile.csv",
        ],
    );
    let profile = fs::read_to_string(d.join("profile.csv")).unwrap();
    let mut lines = profile.lines();
    assert!(lines
        .next()
        .unwrap()
        .contains(r#""normalization":"per-rank""#));
    assert_eq!(lines.next(), Some("index,rho,hrho"));
    assert_eq!(lines.count(), 310);

    ok(
        d,
        &[
            "bench",
            "--input",
            "data.csv",
            "--label-column",
            "label",
            "--output",
            "bench.json",
        ],
    );
    let bench = json(&d.join("bench.json"));
    assert_eq!(bench["n"], 310);
    assert_eq!(bench["k"], 10);
    assert_eq!(bench["beta"], 31);
    assert!(bench["s"].as_f64().unwrap() >= 1.0);
    for stage in [
        "knn",
        "local_density",
        "high_order_density",
        "shrink",
        "detect",
        "total",
    ] {
        assert!(bench["seconds"][stage].as_f64().unwrap() >= 0.0);
    }
}

#[test]
fn sweep_json_reports_each_k() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "gen",
            "--seed",
            "2",
            "--sizes",
            "200,200",
            "--outliers",
            "20",
            "--output",
            "a.csv",
        ],
    );
    ok(
        d,
        &[
            "gen",
            "--seed",
            "5",
            "--sizes",
            "200,200",
            "--outliers",
            "20",
            "--output",
            "b.csv",
        ],
    );
    ok(
        d,
        &[
            "sweep",
            "--input",
            "a.csv",
            "b.csv",
            "--k-values",
            "2..6",
            "--output",
            "sweep.csv",
        ],
    );
    let report = json(&d.join("sweep.json"));
    assert_eq!(report["report"]["rows"].as_array().unwrap().len(), 5);
    assert_eq!(report["report"]["datasets"], serde_json::json!(["a", "b"]));
    let csv = fs::read_to_string(d.join("sweep.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("dataset,k=2,k=3"));
    assert!(csv.lines().last().unwrap().starts_with("average,"));
}
