use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use tspn::spn::fixtures;

fn tspn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tspn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Self {
            dir: TempDir::new().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, text: &str) -> PathBuf {
        let path = self.path(name);
        fs::write(&path, text).unwrap();
        path
    }

    fn fixture_spn(&self) -> PathBuf {
        let path = self.path("fixture.json");
        fixtures::two_component_mixture().save(&path).unwrap();
        path
    }

    /// Every state of three variables once.
    fn all_states(&self) -> PathBuf {
        let rows: String = (0..8u8)
            .map(|j| format!("{},{},{}\n", j & 1, (j >> 1) & 1, (j >> 2) & 1))
            .collect();
        self.write("all.csv", &rows)
    }

    /// Two clusters of rows over `d` variables.
    fn clustered(&self, name: &str, d: usize, n: usize) -> PathBuf {
        let mut text = String::new();
        for i in 0..n {
            let row: Vec<String> = (0..d)
                .map(|j| {
                    let on = if i % 3 == 0 { j % 2 == 0 } else { j < d / 2 };
                    let flip = (i * 31 + j * 17) % 11 == 0;
                    u8::from(on ^ flip).to_string()
                })
                .collect();
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.write(name, &text)
    }
}

#[test]
fn infer_fixture_state_and_marginal() {
    let ws = Workspace::new();
    let spn = ws.fixture_spn();
    let o = tspn(&["infer", p(&spn), "--state", "1,0,1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 0.336).abs() < 1e-12);
    let o = tspn(&["infer", p(&spn), "--evidence", "x1=1"]);
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 0.8).abs() < 1e-12);
    let o = tspn(&["infer", p(&spn), "--mpe"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("1,0,1\n"));
}

#[test]
fn infer_errors() {
    let ws = Workspace::new();
    let spn = ws.fixture_spn();
    let o = tspn(&["infer", p(&spn), "--state", "1,0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = tspn(&["infer", p(&spn)]);
    assert_eq!(o.status.code(), Some(1));
    let o = tspn(&["infer", p(&spn), "--state", "1,0,1", "--mpe"]);
    assert_eq!(o.status.code(), Some(1));
    let junk = ws.write("junk.json", "{\"foo\": 1}");
    assert_eq!(tspn(&["infer", p(&junk), "--mpe"]).status.code(), Some(2));
    assert_eq!(tspn(&["bogus"]).status.code(), Some(1));
    assert_eq!(tspn(&["--help"]).status.code(), Some(0));
}

#[test]
fn convert_fixture_and_query_the_train() {
    let ws = Workspace::new();
    let spn = ws.fixture_spn();
    let data = ws.all_states();
    let out = ws.path("tt.json");
    let o = tspn(&["convert", p(&spn), p(&data), p(&out), "--rank", "2", "--non-sample-ratio", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let tv_line = text.lines().find(|l| l.starts_with("TV distance")).unwrap();
    let tv: f64 = tv_line.split_whitespace().nth(2).unwrap().parse().unwrap();
    assert!(tv <= 0.01, "{text}");
    assert!(ws.path("tt.report.json").exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(ws.path("tt.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "convert");
    assert_eq!(manifest["config"]["initial_rank"], 2);

    let o = tspn(&["infer", p(&out), "--state", "1,0,1"]);
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 0.336).abs() < 0.02);
    let o = tspn(&["infer", p(&out), "--mpe"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("MPE unsupported for tSPN models"));
}

#[test]
fn convert_single_sweep_and_dimension_mismatch() {
    let ws = Workspace::new();
    let spn = ws.fixture_spn();
    let data = ws.all_states();
    let out = ws.path("tt.json");
    let o = tspn(&["convert", p(&spn), p(&data), p(&out), "--max-sweeps", "1", "--non-sample-ratio", "0", "--quiet"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(ws.path("tt.report.json")).unwrap()).unwrap();
    assert_eq!(report["sweeps"], 1);

    let wide = ws.clustered("wide.csv", 4, 10);
    let o = tspn(&["convert", p(&spn), p(&wide), p(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("number of variables"));
}

#[test]
fn learn_is_deterministic_and_rejects_empty_data() {
    let ws = Workspace::new();
    let data = ws.clustered("train.csv", 6, 300);
    let a = ws.path("a.json");
    let b = ws.path("b.json");
    for out in [&a, &b] {
        let o = tspn(&["--seed", "7", "learn", p(&data), p(out)]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).contains("Z = 1.000000000000 (ok)"), "{}", stdout(&o));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert!(ws.path("a.manifest.json").exists());

    let empty = ws.write("empty.csv", "");
    let o = tspn(&["learn", p(&empty), p(&ws.path("c.json"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("empty dataset"));
}

#[test]
fn config_file_is_merged_under_flags() {
    let ws = Workspace::new();
    let spn = ws.fixture_spn();
    let data = ws.all_states();
    let cfg = ws.write("cfg.json", r#"{"seed": 3, "convert": {"initial_rank": 3, "max_sweeps": 2, "non_sample_ratio": 0}}"#);
    let out = ws.path("tt.json");
    let o = tspn(&["--config", p(&cfg), "convert", p(&spn), p(&data), p(&out), "--max-sweeps", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(ws.path("tt.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["initial_rank"], 3);
    assert_eq!(m["config"]["max_sweeps"], 1);
    assert_eq!(m["seed"], 3);
    let bad = ws.write("bad.json", r#"{"convert": {"rank": 3}}"#);
    let o = tspn(&["--config", p(&bad), "convert", p(&spn), p(&data), p(&out)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn full_pipeline_with_eval() {
    let ws = Workspace::new();
    let train = ws.clustered("train.csv", 10, 400);
    let test = ws.clustered("test.csv", 10, 60);
    let spn = ws.path("spn.json");
    let tt = ws.path("tt.json");
    assert!(tspn(&["-q", "learn", p(&train), p(&spn)]).status.success());
    let o = tspn(&["-q", "convert", p(&spn), p(&train), p(&tt), "--rank", "4", "--max-sweeps", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out_dir = ws.path("eval");
    let o = tspn(&["eval", p(&spn), p(&tt), p(&train), p(&test), "--out-dir", p(&out_dir), "--svg"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("TV distance"));
    let csv = fs::read_to_string(out_dir.join("profile.csv")).unwrap();
    assert!(csv.starts_with("set,index,spn_prob,tspn_prob\n"));
    assert_eq!(csv.lines().count(), 1 + 400 + 60 + 400 + 60);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("eval_report.json")).unwrap()).unwrap();
    assert!(report["tv_distance"].is_f64());
    assert!(out_dir.join("profile.svg").exists());
    assert!(out_dir.join("manifest.json").exists());

    // identical inputs give a byte-identical profile
    let again = ws.path("eval2");
    tspn(&["-q", "eval", p(&spn), p(&tt), p(&train), p(&test), "--out-dir", p(&again)]);
    assert_eq!(csv, fs::read_to_string(again.join("profile.csv")).unwrap());

    let o = tspn(&["eval", p(&spn), p(&tt), p(&train), p(&ws.path("missing.csv"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn eval_omits_tv_beyond_the_limit() {
    let ws = Workspace::new();
    let train = ws.clustered("train.csv", 100, 120);
    let test = ws.clustered("test.csv", 100, 20);
    let spn = ws.path("spn.json");
    let tt = ws.path("tt.json");
    assert!(tspn(&["-q", "learn", p(&train), p(&spn)]).status.success());
    let o = tspn(&["-q", "convert", p(&spn), p(&train), p(&tt), "--rank", "2", "--max-sweeps", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out_dir = ws.path("eval");
    let o = tspn(&["eval", p(&spn), p(&tt), p(&train), p(&test), "--out-dir", p(&out_dir)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("TV distance omitted"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("eval_report.json")).unwrap()).unwrap();
    assert!(report["tv_distance"].is_null());
    assert_eq!(report["profile_rows"].as_array().unwrap().len(), 120 + 20 + 120 + 20);
}
