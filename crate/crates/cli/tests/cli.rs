use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fhs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fhs")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) {
    let o = fhs(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn simulate_writes_expected_row_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("s3");
    ok(&["simulate", "--scenario", "3", "--seed", "7", "--out", p(&out)]);
    let rows = fs::read_to_string(out.join("data.csv")).unwrap().lines().count() - 1;
    assert_eq!(rows, 6000);
    let m = manifest(&out);
    assert_eq!(m["command"], "simulate");
    assert_eq!(m["seed"], 7);
    assert_eq!(m["artifacts"], serde_json::json!(["data.csv", "truth.csv"]));

    let out = tmp.path().join("omit");
    ok(&["simulate", "--scenario", "1", "--omit-rate", "0.05", "--out", p(&out)]);
    let rows = fs::read_to_string(out.join("data.csv")).unwrap().lines().count() - 1;
    assert_eq!(rows, 5700);
}

#[test]
fn usage_errors_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fhs(&["simulate", "--scenario", "wavy", "--out", p(tmp.path())]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage") || String::from_utf8_lossy(&o.stderr).contains("--help"));
    let o = fhs(&["fit", "--data", p(&tmp.path().join("missing.csv")), "--out", p(tmp.path())]);
    assert!(!o.status.success());
    let o = fhs(&["simulate", "--scenario", "1"]);
    assert!(!o.status.success(), "--out is required");
}

#[test]
fn fit_defaults_and_prior_switch() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    ok(&["simulate", "--scenario", "2", "--n-times", "6", "--n-points", "30", "--out", p(&sim)]);
    let data = sim.join("data.csv");
    let fit = tmp.path().join("fit");
    ok(&["fit", "--data", p(&data), "-L", "6", "--prior", "laplace", "--burn", "20", "--draws", "10", "--out", p(&fit)]);
    let m = manifest(&fit);
    assert_eq!(m["config"]["fit"]["model"]["prior"], "laplace");
    assert_eq!(m["config"]["resolved"]["domain"], serde_json::json!([1.0, 120.0]));
    assert!(fit.join("draws.fhs1").exists());
    let summary = fs::read_to_string(fit.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().next().unwrap(), "t,s,mean,median,q025,q975");
    assert_eq!(summary.lines().count() - 1, 6 * 30);

    // the clap defaults are the 3000 + 3000 run shape
    let help = String::from_utf8(fhs(&["fit", "--help"]).stdout).unwrap();
    assert!(help.contains("--burn <BURN>") && help.contains("[default: 3000]"));
}

#[test]
fn single_candidate_selection_equals_fit() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    ok(&["simulate", "--scenario", "1", "--n-times", "5", "--n-points", "40", "--seed", "2", "--out", p(&sim)]);
    let data = sim.join("data.csv");
    let common = ["--burn", "30", "--draws", "20", "--seed", "5"];
    let fit = tmp.path().join("fit");
    let mut args = vec!["fit", "--data", p(&data), "-L", "7", "--out", p(&fit)];
    args.extend(common);
    ok(&args);
    let sel = tmp.path().join("sel");
    let mut args = vec!["select", "--data", p(&data), "--l-candidates", "7", "--out", p(&sel)];
    args.extend(common);
    ok(&args);
    assert_eq!(fs::read(fit.join("draws.fhs1")).unwrap(), fs::read(sel.join("draws.fhs1")).unwrap());
    assert_eq!(fs::read(fit.join("summary.csv")).unwrap(), fs::read(sel.join("summary.csv")).unwrap());
    let ppl = |text: String| text.lines().find_map(|l| l.strip_prefix("ppl=").map(str::to_string)).unwrap();
    assert_eq!(ppl(fs::read_to_string(fit.join("fit.txt")).unwrap()), ppl(fs::read_to_string(sel.join("best.txt")).unwrap()));
}

#[test]
fn selection_does_not_depend_on_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    ok(&["simulate", "--scenario", "3", "--n-times", "10", "--n-points", "40", "--out", p(&sim)]);
    let data = sim.join("data.csv");
    let run = |threads: &str, name: &str| {
        let out = tmp.path().join(name);
        ok(&[
            "select", "--data", p(&data), "--l-candidates", "5,7", "--k-candidates", "0,1", "--burn", "20", "--draws",
            "20", "--threads", threads, "--out", p(&out),
        ]);
        (fs::read(out.join("selection.csv")).unwrap(), fs::read(out.join("draws.fhs1")).unwrap())
    };
    assert_eq!(run("1", "a"), run("3", "b"));
}

#[test]
fn metrics_and_text_draws() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    ok(&["simulate", "--scenario", "1", "--n-times", "5", "--n-points", "40", "--out", p(&sim)]);
    let fit = tmp.path().join("fit");
    ok(&["fit", "--data", p(&sim.join("data.csv")), "-L", "7", "--burn", "20", "--draws", "20", "--text-draws", "--out", p(&fit)]);
    assert!(fs::read_to_string(fit.join("draws.txt")).is_ok());
    let met = tmp.path().join("met");
    ok(&["metrics", "--summary", p(&fit.join("summary.csv")), "--truth", p(&sim.join("truth.csv")), "--out", p(&met)]);
    let text = fs::read_to_string(met.join("metrics.txt")).unwrap();
    for key in ["mad=", "masvd=", "mciw=", "mc="] {
        assert!(text.contains(key), "{text}");
    }
}

#[test]
fn replicate_tables_have_both_methods() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("rep");
    ok(&[
        "replicate", "--scenario", "3", "--n-times", "10", "--n-points", "40", "--replicates", "2", "--l-candidates", "7",
        "--burn", "20", "--draws", "20", "--out", p(&out),
    ]);
    let csv = fs::read_to_string(out.join("table.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("FHS,")) && csv.lines().any(|l| l.starts_with("B-spline,")));
    assert!(fs::read_to_string(out.join("table.txt")).unwrap().contains("2 of 2 replicates succeeded"));
    for i in 0..2 {
        assert_eq!(manifest(&out.join(format!("rep_{i:03}")))["command"], "replicate-member");
    }
    // replicate seeds are split from the base seed, so the two differ
    assert_ne!(fs::read(out.join("rep_000/data.csv")).unwrap(), fs::read(out.join("rep_001/data.csv")).unwrap());
}

#[test]
fn verify_reports_and_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fhs(&["verify", "--skip-geweke", "--out", p(tmp.path())]);
    assert!(o.status.success());
    let text = fs::read_to_string(tmp.path().join("verify.txt")).unwrap();
    assert!(text.contains("tail exponent L=5") && !text.contains("FAIL"));
}

#[test]
fn rerun_reproduces_simulation() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    ok(&["simulate", "--scenario", "4", "--seed", "11", "--omit-rate", "0.1", "--out", p(&a)]);
    ok(&["rerun", p(&a.join("manifest.json")), "--out", p(&b)]);
    for f in ["data.csv", "truth.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
    let (mut ma, mut mb) = (manifest(&a), manifest(&b));
    ma["wall_clock_secs"] = Value::Null;
    mb["wall_clock_secs"] = Value::Null;
    assert_eq!(ma, mb);
}
