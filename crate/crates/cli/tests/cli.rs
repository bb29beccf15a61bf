use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Self { dir: tempfile::tempdir().unwrap() }
    }

    fn file(&self, name: &str, body: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn bnscore(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bnscore"));
    cmd.args(args).env_remove("BNSCORE_MAX_STATES");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn ok_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn err_kind(out: &Output) -> String {
    assert!(!out.status.success());
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    v["error"]["kind"].as_str().unwrap().to_string()
}

const DIRICHLET: &str = r#"{"kind":"dirichlet","variables":["X","Y"],"cardinalities":[2,2],
    "alpha":4.0,"joint":[0.1,0.2,0.3,0.4]}"#;
const NORMAL_WISHART: &str = r#"{"kind":"normal-wishart","variables":["X","Y"],"mu0":[0.0,0.0],
    "a_mu":1.0,"t0":[[1.0,0.0],[0.0,1.0]],"a_w":3.0}"#;
const XY: &str = r#"{"variables":["X","Y"],"arcs":[["X","Y"]]}"#;

#[test]
fn score_of_empty_data_is_zero() {
    let ws = Workspace::new();
    let dag = ws.file("g.json", XY);
    let data = ws.file("d.csv", "X,Y\n");
    for prior in [DIRICHLET, NORMAL_WISHART] {
        let prior = ws.file("p.json", prior);
        let v = ok_json(&bnscore(&["score", "--data", p(&data), "--dag", p(&dag), "--prior", p(&prior)], &[]));
        assert_eq!(v["log_score"].as_f64(), Some(0.0));
        assert_eq!(v["cases"].as_u64(), Some(0));
    }
}

#[test]
fn score_reports_both_forms() {
    let ws = Workspace::new();
    let dag = ws.file("g.json", XY);
    // columns in a different order than the prior
    let data = ws.file("d.csv", "Y,X\na,a\nb,a\nb,b\nb,b\na,b\n");
    let prior = ws.file("p.json", DIRICHLET);
    let v = ok_json(&bnscore(&["score", "--data", p(&data), "--dag", p(&dag), "--prior", p(&prior), "--model", "discrete"], &[]));
    let family = v["forms"]["family"].as_f64().unwrap();
    let ratio = v["forms"]["ratio"].as_f64().unwrap();
    assert!((family - ratio).abs() < 1e-9);
    assert!(v["difference"].as_f64().unwrap().abs() < 1e-9);
    assert_eq!(v["families"].as_array().unwrap().len(), 2);
    let sum: f64 = v["families"].as_array().unwrap().iter().map(|f| f["log_score"].as_f64().unwrap()).sum();
    assert!((sum - family).abs() < 1e-9);

    let gdata = ws.file("g.csv", "X,Y\n0.5,1.0\n-0.3,0.2\n1.1,1.4\n2e-1,-1.5\n");
    let gprior = ws.file("gp.json", NORMAL_WISHART);
    let v = ok_json(&bnscore(&["score", "--data", p(&gdata), "--dag", p(&dag), "--prior", p(&gprior)], &[]));
    assert_eq!(v["model"], "gaussian");
    assert!(v["difference"].as_f64().unwrap().abs() < 1e-8);
}

#[test]
fn model_flag_must_match_prior() {
    let ws = Workspace::new();
    let dag = ws.file("g.json", XY);
    let data = ws.file("d.csv", "X,Y\n");
    let prior = ws.file("p.json", DIRICHLET);
    let out = bnscore(&["score", "--data", p(&data), "--dag", p(&dag), "--prior", p(&prior), "--model", "gaussian"], &[]);
    assert_eq!(err_kind(&out), "config");
}

#[test]
fn equivalence_verdicts() {
    let ws = Workspace::new();
    let chain = ws.file("a.json", r#"{"variables":["A","B","C"],"arcs":[["A","B"],["B","C"]]}"#);
    let reversed = ws.file("b.json", r#"{"variables":["C","B","A"],"arcs":[["C","B"],["B","A"]]}"#);
    let collider = ws.file("c.json", r#"{"variables":["A","B","C"],"arcs":[["A","B"],["C","B"]]}"#);
    let v = ok_json(&bnscore(&["equiv", "--dag1", p(&chain), "--dag2", p(&reversed)], &[]));
    assert_eq!(v["equivalent"], true);
    assert_eq!(v["reversals"].as_array().unwrap().len(), 2);
    let v = ok_json(&bnscore(&["equiv", "--dag1", p(&chain), "--dag2", p(&collider)], &[]));
    assert_eq!(v["equivalent"], false);
    assert!(v["reversals"].is_null());
}

#[test]
fn prior_build_feeds_scoring() {
    let ws = Workspace::new();
    let net = ws.file(
        "n.json",
        r#"{"kind":"discrete","variables":["X","Y"],"cardinalities":[2,2],"states":[["no","yes"],["no","yes"]],
            "arcs":[["X","Y"]],"cpts":[[0.3,0.7],[0.9,0.1,0.2,0.8]]}"#,
    );
    let out_path = ws.path("prior.json");
    let out = bnscore(&["prior-build", "--network", p(&net), "--ess", "10", "--out", p(&out_path)], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let prior: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(prior["kind"], "dirichlet");
    let joint: Vec<f64> = prior["joint"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    for (a, b) in joint.iter().zip([0.27, 0.03, 0.14, 0.56]) {
        assert!((a - b).abs() < 1e-12);
    }
    let data = ws.file("d.csv", "X,Y\nyes,yes\nno,no\nyes,no\n");
    let dag = ws.file("g.json", XY);
    let v = ok_json(&bnscore(&["score", "--data", p(&data), "--dag", p(&dag), "--prior", p(&out_path)], &[]));
    assert!(v["log_score"].as_f64().unwrap() < 0.0);

    let gnet = ws.file(
        "gn.json",
        r#"{"kind":"gaussian","variables":["X","Y"],"arcs":[["X","Y"]],
            "intercepts":[1.0,0.0],"coefficients":[[],[2.0]],"variances":[1.0,0.5]}"#,
    );
    let v = ok_json(&bnscore(&["prior-build", "--network", p(&gnet), "--amu", "2", "--aw", "6"], &[]));
    assert_eq!(v["kind"], "normal-wishart");
    assert_eq!(v["mu0"][1].as_f64(), Some(2.0));
    let out = bnscore(&["prior-build", "--network", p(&gnet), "--amu", "2", "--aw", "3"], &[]);
    assert_eq!(err_kind(&out), "domain");
    let out = bnscore(&["prior-build", "--network", p(&gnet), "--ess", "3"], &[]);
    assert_eq!(err_kind(&out), "config");
}

#[test]
fn consistency_check_reports_small_deviation() {
    let ws = Workspace::new();
    for prior in [DIRICHLET, NORMAL_WISHART] {
        let prior = ws.file("p.json", prior);
        let v = ok_json(&bnscore(&["check-consistency", "--prior", p(&prior), "--points", "100", "--seed", "1"], &[]));
        assert_eq!(v["points"].as_u64(), Some(100));
        assert!(v["max_deviation"].as_f64().unwrap() < 1e-8, "{v}");
    }
}

#[test]
fn learn_is_deterministic_and_writes_trace() {
    let ws = Workspace::new();
    let mut body = String::from("A,B,C\n");
    // B copies A, C copies B, with a few disagreements
    for i in 0..200 {
        let a = i % 2;
        let b = if i % 17 == 0 { 1 - a } else { a };
        let c = if i % 13 == 0 { 1 - b } else { b };
        body.push_str(&format!("{a},{b},{c}\n"));
    }
    let data = ws.file("d.csv", &body);
    let prior = ws.file(
        "p.json",
        r#"{"kind":"dirichlet","variables":["A","B","C"],"cardinalities":[2,2,2],"alpha":1.0,
            "joint":[0.125,0.125,0.125,0.125,0.125,0.125,0.125,0.125]}"#,
    );
    let trace = ws.path("trace.jsonl");
    let args = ["learn", "--data", p(&data), "--prior", p(&prior), "--restarts", "3", "--seed", "5", "--alpha-arc", "-1.5"];
    let first = bnscore(&[&args[..], &["--trace", p(&trace)]].concat(), &[]);
    let second = bnscore(&args, &[]);
    assert_eq!(first.stdout, second.stdout);
    let v = ok_json(&first);
    let steps = v["trace"].as_array().unwrap();
    let lines = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(lines.lines().count(), steps.len());
    let scores: Vec<f64> = steps.iter().map(|s| s["score"].as_f64().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(v["dag"]["arcs"].as_array().unwrap().len(), 2);

    let out = bnscore(&["learn", "--data", p(&data), "--prior", p(&prior)], &[]);
    assert_eq!(err_kind(&out), "config");
}

#[test]
fn data_errors_are_machine_readable() {
    let ws = Workspace::new();
    let dag = ws.file("g.json", XY);
    let prior = ws.file("p.json", DIRICHLET);
    let cases = [
        ("X,Y\na,b\na\n", "csv"),
        ("X,Y\na,\n", "incomplete-data"),
        ("X,Y\na,b\nc,a\nb,a\n", "schema"),
        ("X,Z\na,b\n", "schema"),
    ];
    for (body, kind) in cases {
        let data = ws.file("d.csv", body);
        let out = bnscore(&["score", "--data", p(&data), "--dag", p(&dag), "--prior", p(&prior)], &[]);
        assert_eq!(err_kind(&out), kind, "{body:?}");
    }
    let ragged = ws.file("r.csv", "X,Y\na,b\na\n");
    let out = bnscore(&["score", "--data", p(&ragged), "--dag", p(&dag), "--prior", p(&prior)], &[]);
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(v["error"]["message"].as_str().unwrap().contains("line 3"));

    let cyclic = ws.file("c.json", r#"{"variables":["X","Y"],"arcs":[["X","Y"],["Y","X"]]}"#);
    let data = ws.file("d.csv", "X,Y\n");
    let out = bnscore(&["score", "--data", p(&data), "--dag", p(&cyclic), "--prior", p(&prior)], &[]);
    assert_eq!(err_kind(&out), "structural");

    let gprior = ws.file("gp.json", NORMAL_WISHART);
    let nan = ws.file("n.csv", "X,Y\n1.0,NaN\n");
    let out = bnscore(&["score", "--data", p(&nan), "--dag", p(&dag), "--prior", p(&gprior)], &[]);
    assert_eq!(err_kind(&out), "parse");
}

#[test]
fn state_cap_comes_from_environment() {
    let ws = Workspace::new();
    let prior = ws.file("p.json", DIRICHLET);
    let args = ["check-consistency", "--prior", p(&prior), "--points", "5", "--seed", "0"];
    assert_eq!(err_kind(&bnscore(&args, &[("BNSCORE_MAX_STATES", "3")])), "capacity");
    assert!(bnscore(&args, &[("BNSCORE_MAX_STATES", "4")]).status.success());
    assert_eq!(err_kind(&bnscore(&args, &[("BNSCORE_MAX_STATES", "lots")])), "config");
}
