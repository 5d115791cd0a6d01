use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mlwf::io::{read_blob, read_field, read_sampled, BlobKind, FieldFile};
use mlwf_core::generators::{generate, gaussian};
use mlwf_core::grid::{forward_transform, Grid};
use mlwf_core::psido::apply_kn;
use serde_json::Value;

fn mlwf(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlwf"))
        .args(args)
        .current_dir(dir)
        .env_remove("MLWF_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

const BUMP_WF: &str = r#"{
  "kind": "wf",
  "grid": {"dimension": 2, "n": 128},
  "field": {"kind": "gaussian-bump", "center": [3.14159, 3.14159], "width": 1.0},
  "query": {
    "base_points": [[3.14159, 3.14159], [1.0, 1.0], [4.5, 2.0]],
    "weight": {"family": "polybracket", "s": 1},
    "space": {"kind": "lp", "p": 1},
    "inner_radius": 8,
    "half_probe": false
  },
  "thresholds": {"max_singular": 0}
}"#;

#[test]
fn smooth_bump_has_no_wave_front() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("wf.json"), BUMP_WF).unwrap();
    let o = mlwf(&["--config", "wf.json", "--out-dir", "out"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");
    let r = report(&out);
    assert_eq!(r["result"]["singular_count"], 0);
    assert_eq!(r["passed"], true);
    assert!(out.join("summary.csv").is_file());
    let shells = fs::read_to_string(out.join("shells.csv")).unwrap();
    assert!(shells.starts_with("series,point,bin,shell,log2_norm"));
}

#[test]
fn point_mass_fails_an_empty_set_assertion() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = BUMP_WF.replace(r#""kind": "gaussian-bump", "center": [3.14159, 3.14159], "width": 1.0"#, r#""kind": "delta-surrogate", "center": [3.14159, 3.14159]"#);
    fs::write(dir.path().join("wf.json"), cfg).unwrap();
    let o = mlwf(&["--config", "wf.json", "--out-dir", "out"], dir.path());
    assert_eq!(code(&o), 4);
    // reports are still written for failed assertions
    assert_eq!(report(&dir.path().join("out"))["passed"], false);
}

#[test]
fn malformed_json_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), r#"{"kind": "wf", "grid": "#).unwrap();
    let o = mlwf(&["--config", "bad.json", "--out-dir", "out"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(!dir.path().join("out").exists());

    fs::write(dir.path().join("bad.json"), r#"{"kind": "wf", "colour": 1}"#).unwrap();
    assert_eq!(code(&mlwf(&["--config", "bad.json", "--out-dir", "out"], dir.path())), 2);
    assert!(!dir.path().join("out").exists());
}

#[test]
fn missing_files_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&mlwf(&["--config", "absent.json"], dir.path())), 3);
    fs::write(dir.path().join("op.json"), r#"{"kind": "op-apply", "symbol": "xi", "input": "f.bin"}"#).unwrap();
    assert_eq!(code(&mlwf(&["--config", "op.json", "--out-dir", "out"], dir.path())), 3);
    assert_eq!(code(&mlwf(&["transform", "--in", "f.bin", "--out", "g.bin"], dir.path())), 3);
}

#[test]
fn inclusion_with_an_elliptic_symbol() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
      "kind": "inclusion",
      "grid": {"dimension": 2, "n": 128},
      "field": {"kind": "delta-surrogate", "center": [3.141592653589793, 3.141592653589793], "taper": {"lo": 0.5, "hi": 0.95}},
      "symbol": "1 + |xi|^2",
      "query": {
        "base_points": [[3.141592653589793, 3.141592653589793], [5.14, 3.14], [3.14, 0.94]],
        "cutoff": [0.05, 1.3],
        "inner_radius": 8,
        "weight": {"family": "polybracket", "s": 1},
        "space": {"kind": "lp", "p": 1},
        "decay": {"eps_rel": 1e-3},
        "half_probe": false
      }
    }"#;
    fs::write(dir.path().join("inc.json"), cfg).unwrap();
    let o = mlwf(&["--config", "inc.json", "--out-dir", "out"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&dir.path().join("out"));
    assert_eq!(r["result"]["forward"]["subset"], true);
    assert_eq!(r["result"]["backward"]["subset"], true);
    assert_eq!(r["result"]["characteristic_count"], 0);
    assert_eq!(r["result"]["field_report"]["entries"].as_array().unwrap().iter().filter(|e| e["singular"] == true).count(), 16);
}

#[test]
fn reports_are_reproducible_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
      "kind": "wf", "grid": {"dimension": 1, "n": 128}, "seed": 11,
      "field": {"kind": "sum-of", "parts": [
        {"kind": "jump-1d", "a": 1.5, "b": 4.5},
        {"kind": "random-bandlimited", "band": 6}
      ]},
      "query": {"base_points": [[1.5, 0], [3.0, 0], [4.5, 0]], "weight": {"family": "constant", "c": 1}, "space": {"kind": "lp", "p": 2}}
    }"#;
    fs::write(dir.path().join("c.json"), cfg).unwrap();
    assert_eq!(code(&mlwf(&["--config", "c.json", "--out-dir", "a", "--jobs", "1"], dir.path())), 0);
    assert_eq!(code(&mlwf(&["--config", "c.json", "--out-dir", "b", "--jobs", "4"], dir.path())), 0);
    let a = fs::read(dir.path().join("a/report.json")).unwrap();
    let b = fs::read(dir.path().join("b/report.json")).unwrap();
    assert_eq!(a, b);
    // a different seed changes the random part
    assert_eq!(code(&mlwf(&["--config", "c.json", "--out-dir", "c", "--seed", "12"], dir.path())), 0);
    assert_ne!(a, fs::read(dir.path().join("c/report.json")).unwrap());
}

#[test]
fn field_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let spec = r#"{"kind": "gaussian-bump", "center": [2.0, 0.0], "width": 0.7}"#;
    let o = mlwf(&["generate", "--spec", spec, "--dimension", "1", "--n", "64", "--out", "f.bin"], p);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let g = Grid::new(1, 64).unwrap();
    let f = read_sampled(&p.join("f.bin")).unwrap();
    assert!(f.sub(&generate(&gaussian([2.0, 0.0], 0.7), g, 0).unwrap()).unwrap().max_abs() < 1e-14);

    assert_eq!(code(&mlwf(&["transform", "--in", "f.bin", "--out", "s.bin"], p)), 0);
    match read_field(&p.join("s.bin")).unwrap() {
        FieldFile::Spectral(s) => assert!(s.sub(&forward_transform(&f)).unwrap().max_abs() < 1e-14),
        FieldFile::Sampled(_) => panic!("expected a spectral blob"),
    }
    assert_eq!(code(&mlwf(&["transform", "--in", "s.bin", "--out", "back.bin"], p)), 0);
    assert!(read_sampled(&p.join("back.bin")).unwrap().sub(&f).unwrap().max_abs() < 1e-12);

    assert_eq!(code(&mlwf(&["op-apply", "--symbol", "xi^2 + cos(x)*xi", "--in", "f.bin", "--out", "g.bin"], p)), 0);
    let a = mlwf::expr::SymbolExpr::parse("xi^2 + cos(x)*xi").unwrap().symbol(g, Default::default()).unwrap();
    let want = apply_kn(&a, &f).unwrap();
    assert!(read_sampled(&p.join("g.bin")).unwrap().sub(&want).unwrap().max_abs() < 1e-12);

    let o = mlwf(&["op-apply", "--symbol", "xi", "--t", "0.5", "--method", "direct", "--in", "f.bin", "--out", "h.bin"], p);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    assert_eq!(code(&mlwf(&["stft", "--in", "f.bin", "--window", "gauss:1.0", "--out", "v.bin"], p)), 0);
    let (h, v) = read_blob(&p.join("v.bin")).unwrap();
    assert_eq!(h.kind, BlobKind::Phasespace);
    assert_eq!(v.len(), 64 * 64);
    assert_eq!(code(&mlwf(&["stft", "--in", "f.bin", "--window", "square:1", "--out", "v.bin"], p)), 2);
}

#[test]
fn wf_and_char_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let spec = r#"{"kind": "jump-1d", "a": 1.0, "b": 4.0, "taper": {"lo": 0.5, "hi": 0.95}}"#;
    assert_eq!(code(&mlwf(&["generate", "--spec", spec, "--dimension", "1", "--n", "256", "--out", "j.bin"], p)), 0);
    let o = mlwf(&["wf", "--in", "j.bin", "--point", "1.0", "--point", "2.5", "--out", "wf.json"], p);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_str(&fs::read_to_string(p.join("wf.json")).unwrap()).unwrap();
    let flags: Vec<bool> = r["entries"].as_array().unwrap().iter().map(|e| e["singular"].as_bool().unwrap()).collect();
    assert_eq!(flags, [true, true, false, false]);

    let o = mlwf(&["mod-wf", "--in", "j.bin", "--point", "1.0", "--point", "2.5", "--window", "gauss:0.5", "--out", "mwf.json"], p);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let o = mlwf(&["char", "--symbol", "1 + |xi|^2", "--n", "64", "--point", "3,3", "--out", "ch.json"], p);
    assert_eq!(code(&o), 0);
    let r: Value = serde_json::from_str(&fs::read_to_string(p.join("ch.json")).unwrap()).unwrap();
    assert!(r["entries"].as_array().unwrap().iter().all(|e| e["characteristic"] == false));
    let o = mlwf(&["char", "--symbol", "xi1", "--n", "64", "--point", "3,3", "--out", "ch.json"], p);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("6 characteristic of 16"), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn verify_writes_a_suite_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = mlwf(&["verify", "quantization", "--fields", "3", "--out-dir", "v"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("PASS quantization"));
    assert_eq!(report(&dir.path().join("v/quantization"))["passed"], true);
    assert_eq!(code(&mlwf(&["verify", "nonsense"], dir.path())), 2);
}

#[test]
fn out_dir_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("wf.json"), BUMP_WF).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_mlwf"))
        .args(["--config", "wf.json"])
        .current_dir(dir.path())
        .env("MLWF_OUT_DIR", "from-env")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("from-env/report.json").is_file());
}

#[test]
fn sample_configs_run_clean() {
    let dir = tempfile::tempdir().unwrap();
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut names: Vec<_> = fs::read_dir(&configs).unwrap().map(|e| e.unwrap().path()).collect();
    names.sort();
    assert!(names.len() >= 5);
    for cfg in names {
        let out = dir.path().join(cfg.file_stem().unwrap());
        let o = mlwf(&["--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()], dir.path());
        assert_eq!(code(&o), 0, "{}: {}", cfg.display(), String::from_utf8_lossy(&o.stderr));
        assert_eq!(report(&out)["passed"], true);
    }
}
