use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const SCENE: &str = r#"{"shape": {"type": "box", "w": 6, "h": 5}, "origin": [2, 10], "direction": "right", "velocity": 4000.0, "duration_us": 12000}"#;

fn clf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clf"))
        .args(args)
        .output()
        .expect("run clf")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn manifest(path: &Path) -> Value {
    let m = PathBuf::from(format!("{}.manifest.json", path.display()));
    serde_json::from_str(&fs::read_to_string(m).unwrap()).unwrap()
}

fn synth(dir: &TempDir, name: &str, ratio: &str, seed: &str) -> PathBuf {
    let out = dir.path().join(name);
    let o = clf(&[
        "synth",
        "--geometry",
        "64x32",
        "--scene",
        SCENE,
        "--noise-ratio",
        ratio,
        "--seed",
        seed,
        "--output",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(clf(&["--help"]).status.code(), Some(0));
    assert_eq!(clf(&[]).status.code(), Some(1));
    assert_eq!(clf(&["denoise"]).status.code(), Some(1));
    assert_eq!(clf(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn missing_input_is_io_error() {
    let dir = TempDir::new().unwrap();
    let o = clf(&[
        "denoise",
        "--input",
        p(&dir.path().join("nope.csv")),
        "--geometry",
        "8x8",
        "--output",
        p(&dir.path().join("out.csv")),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn synth_then_denoise_with_metrics() {
    let dir = TempDir::new().unwrap();
    let input = synth(&dir, "in.csv", "2.0", "5");
    let m = manifest(&input);
    assert_eq!(m["schema_version"], 1);
    assert_eq!(m["seeds"][0], 5);
    let achieved = m["results"]["achieved_ratio"].as_f64().unwrap();
    assert!((achieved - 2.0).abs() <= 0.1, "ratio {achieved}");

    let out = dir.path().join("out.csv");
    let metrics = dir.path().join("metrics.json");
    let o = clf(&[
        "denoise",
        "--input",
        p(&input),
        "--geometry",
        "64x32",
        "--output",
        p(&out),
        "--metrics",
        p(&metrics),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let rows = text.lines().filter(|l| !l.starts_with('#')).count();
    let events = fs::read_to_string(&input)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .count();
    assert_eq!(rows, events);
    let m: Value = serde_json::from_str(&fs::read_to_string(metrics).unwrap()).unwrap();
    let acc = m["accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));
    let total: u64 = ["tp", "fp", "tn", "fn"]
        .iter()
        .map(|k| m[k].as_u64().unwrap())
        .sum();
    assert_eq!(total as usize, events);
}

#[test]
fn unlabeled_input_with_metrics_is_rejected() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("in.csv");
    fs::write(&input, "0,1,1,1\n10,2,1,0\n").unwrap();
    let o = clf(&[
        "denoise",
        "--input",
        p(&input),
        "--geometry",
        "8x8",
        "--output",
        p(&dir.path().join("out.csv")),
        "--metrics",
        p(&dir.path().join("m.json")),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("labels required"));
}

#[test]
fn pipelined_needs_clf() {
    let dir = TempDir::new().unwrap();
    let input = synth(&dir, "in.csv", "1.0", "1");
    let o = clf(&[
        "denoise",
        "--input",
        p(&input),
        "--filter",
        "baf",
        "--pipelined",
        "--output",
        p(&dir.path().join("out.csv")),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let a = synth(&dir, "a.csv", "1.5", "9");
    let b = synth(&dir, "b.csv", "1.5", "9");
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let c = synth(&dir, "c.csv", "1.5", "10");
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());

    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = clf(&[
            "denoise",
            "--input",
            p(&a),
            "--pipelined",
            "--output",
            p(&out),
            "--trace",
            p(&dir.path().join(format!("{name}.trace"))),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(out).unwrap()
    };
    assert_eq!(run("d1.csv"), run("d2.csv"));
}

#[test]
fn sweep_is_independent_of_job_count() {
    let dir = TempDir::new().unwrap();
    synth(&dir, "data.csv", "1.0", "3");
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        r#"{
            "axes": {"s": [[1, 1], [4, 4]], "t_th": [100, 300]},
            "datasets": [
                {"kind": "csv", "name": "file", "path": "data.csv", "geometry": "64x32"},
                {"kind": "synth", "name": "gen", "geometry": "32x32", "noise_ratio": 1.0, "seed": 4,
                 "scenes": [{"shape": {"type": "edge"}, "origin": [0, 0], "velocity": 3000.0, "duration_us": 8000}]}
            ]
        }"#,
    )
    .unwrap();
    let run = |jobs: &str, name: &str| {
        let out = dir.path().join(name);
        let o = clf(&[
            "sweep",
            "--spec",
            p(&spec),
            "--output",
            p(&out),
            "--jobs",
            jobs,
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read_to_string(out).unwrap()
    };
    let one = run("1", "s1.csv");
    assert_eq!(one, run("8", "s8.csv"));
    assert_eq!(one.lines().count(), 1 + 2 * 4);
    assert!(one.lines().next().unwrap().starts_with("dataset,N_RM,N_CM"));
}

#[test]
fn bitwidth_with_zero_rate() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("bw.csv");
    let o = clf(&[
        "bitwidth",
        "--lambda",
        "0",
        "--tth",
        "200",
        "--bwt-list",
        "4,8",
        "--trials",
        "1000",
        "--output",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "BW_T,quant_unit_us,T_s_us,analytic_fp,montecarlo_fp,stderr"
    );
    for l in lines {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!(f[3].parse::<f64>().unwrap(), 0.0);
        assert_eq!(f[4].parse::<f64>().unwrap(), 0.0);
    }
    assert_eq!(manifest(&out)["command"], "bitwidth");
}

#[test]
fn bad_bitwidth_parameters_are_config_errors() {
    let dir = TempDir::new().unwrap();
    let o = clf(&[
        "bitwidth",
        "--lambda=-1",
        "--tth",
        "200",
        "--output",
        p(&dir.path().join("bw.csv")),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn gaps_histogram() {
    let dir = TempDir::new().unwrap();
    let input = synth(&dir, "in.csv", "1.0", "2");
    let out = dir.path().join("gaps.json");
    let o = clf(&[
        "gaps",
        "--input",
        p(&input),
        "--geometry",
        "64x32",
        "--output",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.exists());
}
