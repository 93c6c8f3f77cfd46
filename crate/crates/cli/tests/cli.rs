use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn dpsm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpsm")).args(args).output().expect("binary runs")
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn labels(file: &Path) -> Vec<i64> {
    fs::read_to_string(file)
        .unwrap()
        .lines()
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn generate_sizes_and_determinism() {
    let dir = TempDir::new().unwrap();
    for (shape, n) in [("circles", 1500), ("moons", 1000)] {
        let a = path(&dir, &format!("{shape}_a.csv"));
        let b = path(&dir, &format!("{shape}_b.csv"));
        for out in [&a, &b] {
            let o = dpsm(&["generate", "--shape", shape, "--n", &n.to_string(), "--seed", "7", "--out", out]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        }
        let text = fs::read_to_string(&a).unwrap();
        assert_eq!(text, fs::read_to_string(&b).unwrap());
        assert_eq!(text.lines().count(), n);
        let classes: std::collections::BTreeSet<&str> =
            text.lines().map(|l| l.split(',').nth(2).unwrap()).collect();
        assert_eq!(classes.len(), 2);
    }
}

#[test]
fn generate_rejects_bad_shape() {
    let dir = TempDir::new().unwrap();
    let o = dpsm(&["generate", "--shape", "spirals", "--n", "10", "--out", &path(&dir, "x.csv")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn cluster_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let data = path(&dir, "moons.csv");
    assert!(dpsm(&["generate", "--shape", "moons", "--n", "300", "--seed", "3", "--out", &data]).status.success());
    let mut outputs = Vec::new();
    for run in 0..2 {
        let l = path(&dir, &format!("labels{run}.csv"));
        let t = path(&dir, &format!("trace{run}.csv"));
        let o = dpsm(&["cluster", "--input", &data, "--label-column", "2", "--labels-out", &l, "--trace-out", &t]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push((fs::read(&l).unwrap(), fs::read(&t).unwrap(), o.stdout));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn path_edge_list_target_one() {
    let dir = TempDir::new().unwrap();
    let edges = path(&dir, "path.txt");
    fs::write(&edges, "0 1 1\n1 2 1\n2 3 1\n3 4 1\n").unwrap();
    let out = path(&dir, "labels.csv");
    let partition = path(&dir, "partition.txt");
    let o = dpsm(&[
        "cluster", "--input", &edges, "--kind", "edges", "--target-k", "1", "--labels-out", &out,
        "--partition-out", &partition,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let l = labels(Path::new(&out));
    assert_eq!(l.len(), 5);
    assert!(l.iter().all(|&x| x == l[0] && x >= 0));
    assert_eq!(fs::read_to_string(&partition).unwrap().lines().count(), 5);
}

#[test]
fn config_file_and_flag_override() {
    let dir = TempDir::new().unwrap();
    // Two stars joined through a weakly attached bridge node 8.
    let edges = path(&dir, "stars.txt");
    fs::write(&edges, "0 1 1\n0 2 1\n0 3 1\n4 5 1\n4 6 1\n4 7 1\n3 8 0.1\n8 7 0.1\n").unwrap();
    let cfg = path(&dir, "run.toml");
    fs::write(&cfg, format!("input = {edges:?}\nkind = \"edges\"\ntarget_k = 1\nremainder_policy = \"drop\"\n")).unwrap();
    let out = path(&dir, "labels.csv");
    assert!(dpsm(&["cluster", "--config", &cfg, "--labels-out", &out]).status.success());
    let dropped = labels(Path::new(&out));
    assert!(dropped.contains(&-1));
    let o = dpsm(&["cluster", "--config", &cfg, "--remainder-policy", "nearest", "--labels-out", &out]);
    assert!(o.status.success());
    assert!(!labels(Path::new(&out)).contains(&-1));
}

#[test]
fn summary_json_has_metrics() {
    let dir = TempDir::new().unwrap();
    let data = path(&dir, "c.csv");
    assert!(dpsm(&["generate", "--shape", "circles", "--n", "400", "--out", &data]).status.success());
    let summary = path(&dir, "summary.json");
    let o = dpsm(&["cluster", "--input", &data, "--label-column", "2", "--target-k", "2", "--summary-out", &summary]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    assert!(v["clusters_found"].as_u64().unwrap() <= 2);
    assert!(v["metrics"]["ari"].is_number());
}

#[test]
fn missing_input_is_exit_2() {
    let o = dpsm(&["cluster", "--input", "/definitely/not/here.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("input"));
}

#[test]
fn eval_perfect_and_errors() {
    let dir = TempDir::new().unwrap();
    let truth = path(&dir, "truth.csv");
    fs::write(&truth, "0,0\n1,0\n2,1\n3,1\n").unwrap();
    let o = dpsm(&["eval", "--labels", &truth, "--truth", &truth]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    for key in ["vm=1.000000", "ari=1.000000", "ami=1.000000"] {
        assert!(text.contains(key), "{text}");
    }

    let noise = path(&dir, "noise.csv");
    fs::write(&noise, "0,-1\n1,-1\n2,-1\n3,-1\n").unwrap();
    assert_eq!(dpsm(&["eval", "--labels", &noise, "--truth", &truth]).status.code(), Some(3));

    let short = path(&dir, "short.csv");
    fs::write(&short, "0,0\n1,0\n").unwrap();
    assert_eq!(dpsm(&["eval", "--labels", &short, "--truth", &truth]).status.code(), Some(2));
}
