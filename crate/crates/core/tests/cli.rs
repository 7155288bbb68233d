use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use polarize::geometry::read_points_csv;
use polarize::potential::control_g;
use polarize::solver::ReportRecord;
use polarize::{Point, PotentialSpec};
use tempfile::TempDir;

const TRIANGLE: &str = r#"{"type":"polygon","vertices":[[0,0],[1,0],[0.5,0.8660254037844386]]}"#;
const DISK: &str = r#"{"type":"disk","center":[0,0],"radius":1}"#;

fn polarize(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polarize"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn record(path: PathBuf) -> ReportRecord {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn usage_errors_exit_one_with_prefix() {
    let o = polarize(&["lower", "--eps"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("ERROR:"));
    assert_eq!(polarize(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(polarize(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_settings_are_usage_errors() {
    let dir = TempDir::new().unwrap();
    let region = write(dir.path(), "tri.json", TRIANGLE);
    let o = polarize(&["lower", "--region", &region, "--n", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("eps"));
}

#[test]
fn malformed_region_is_reported() {
    let dir = TempDir::new().unwrap();
    let region = write(dir.path(), "bad.json", r#"{"type":"disk","radius":-1}"#);
    let out = dir.path().join("o");
    let o = polarize(&["lower", "--region", &region, "--n", "1", "--eps", "0.2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("ERROR:"));
}

#[test]
fn binary_upper_without_multiplicity_exits_two() {
    let dir = TempDir::new().unwrap();
    let region = write(dir.path(), "tri.json", TRIANGLE);
    let out = dir.path().join("o");
    let o = polarize(&[
        "upper", "--region", &region, "--n", "2", "--eps", "0.2", "--binary", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("ERROR:"));
}

#[test]
fn net_command_writes_points_and_metadata() {
    let dir = TempDir::new().unwrap();
    let region = write(dir.path(), "disk.json", DISK);
    let out = dir.path().join("nets");
    let o = polarize(&["net", "--region", &region, "--eps", "0.2", "--tag", "on-conv-A", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let pts = read_points_csv(fs::File::open(out.join("net_on-conv-A.csv")).unwrap()).unwrap();
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("net_on-conv-A.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["points"].as_u64().unwrap() as usize, pts.len());
    assert_eq!(meta["domain_tag"], "on-conv-A");
    assert_eq!(meta["validated"], true);
    assert_eq!(meta["epsilon"], 0.2);
}

#[test]
fn lower_on_disk_with_one_lamp_picks_the_center() {
    let dir = TempDir::new().unwrap();
    let region = write(dir.path(), "disk.json", DISK);
    let out = dir.path().join("o");
    let o = polarize(&["lower", "--region", &region, "--n", "1", "--eps", "0.05", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rec = record(out.join("report_lower.json"));
    assert_eq!(rec.configuration.len(), 1);
    let [x, y, k] = rec.configuration[0];
    assert_eq!(k, 1.0);
    assert!(Point::new(x, y).norm() < 0.05);
    // true optimum is e^{-5}; the lower bound sits below it, within the control envelope
    let f1 = (-5.0f64).exp();
    let spec = PotentialSpec::gaussian(5.0).unwrap();
    assert!(rec.value <= f1);
    assert!(rec.value >= f1 - 2.0 * spec.max_control(0.05));
}

/// Recomputes the reported value from the configuration and the written
/// constraint net.
fn recompute_lower(rec: &ReportRecord, gamma: &[Point]) -> f64 {
    let spec = rec.potential.unwrap();
    gamma
        .iter()
        .map(|&p| {
            rec.configuration_counts()
                .iter()
                .map(|&(c, k)| {
                    let d = c.dist(p);
                    k as f64 * ((-spec.a() * d * d).exp() - control_g(&spec, d, rec.epsilon_used))
                })
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn sandwich_round_trip_and_determinism() {
    let dir = TempDir::new().unwrap();
    let region = write(dir.path(), "tri.json", TRIANGLE);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = polarize(&[
            "sandwich", "--region", &region, "--a", "5", "--n", "3", "--eps", "0.12", "--seed", "7",
            "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        (out, stdout(&o))
    };
    let (out, text) = run("a");
    assert!(text.contains("<="));

    let lower = record(out.join("report_lower.json"));
    let upper = record(out.join("report_upper.json"));
    assert!(lower.value <= upper.value);
    assert_eq!(lower.n, 3);
    assert!(lower.binary && !upper.binary);
    assert_eq!(lower.configuration.iter().map(|c| c[2]).sum::<f64>(), 3.0);
    let gamma = read_points_csv(fs::File::open(out.join("net_gamma.csv")).unwrap()).unwrap();
    assert_eq!(gamma.len(), lower.n_gamma);
    assert!((recompute_lower(&lower, &gamma) - lower.value).abs() <= 1e-9);
    // parse → serialize → parse is stable
    let again: ReportRecord = serde_json::from_str(&serde_json::to_string(&lower).unwrap()).unwrap();
    assert_eq!(again, lower);

    let (out2, _) = run("b");
    for name in ["report_lower.json", "report_upper.json"] {
        let mut a = record(out.join(name));
        let mut b = record(out2.join(name));
        a.wall_ms = 0;
        b.wall_ms = 0;
        assert_eq!(a, b);
    }
    for name in ["net_gamma.csv", "net_lambda_lower.csv", "net_lambda_upper.csv"] {
        assert_eq!(fs::read(out.join(name)).unwrap(), fs::read(out2.join(name)).unwrap());
    }
}

#[test]
fn run_document_defaults_and_precedence() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "tri.json", TRIANGLE);
    let cfg = write(dir.path(), "run.json", r#"{"region":"tri.json","a":5,"n":2,"eps":0.3}"#);
    let out = dir.path().join("o");
    let o = polarize(&["lower", "--config", &cfg, "--eps", "0.15", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rec = record(out.join("report_lower.json"));
    assert_eq!(rec.epsilon_used, 0.15);
    assert!(rec.binary);
    let lam: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("net_lambda.meta.json")).unwrap()).unwrap();
    assert!((lam["epsilon"].as_f64().unwrap() - 0.05).abs() < 1e-15);

    let bad = write(dir.path(), "bad.json", r#"{"region":"tri.json","n":2,"eps":0.3,"extra":1}"#);
    assert_eq!(polarize(&["lower", "--config", &bad, "--out", out.to_str().unwrap()]).status.code(), Some(1));
    let zero = write(dir.path(), "zero.json", r#"{"region":"tri.json","n":0,"eps":0.3}"#);
    assert_eq!(polarize(&["lower", "--config", &zero, "--out", out.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn verify_conditions_and_heatmap() {
    let dir = TempDir::new().unwrap();
    let region = write(dir.path(), "disk.json", DISK);
    let lamps = write(dir.path(), "c.csv", "x,y\n0,0\n");
    let out = dir.path().join("o");
    let outs = out.to_str().unwrap();

    let o = polarize(&["verify", "--region", &region, "--a", "5", "--eps", "0.02", "--configuration", &lamps, "--out", outs]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("verify.json")).unwrap()).unwrap();
    let bound = v["certified_lower_bound"].as_f64().unwrap();
    assert!(bound <= (-5.0f64).exp() && bound > 0.0);

    let o = polarize(&["conditions", "--region", &region, "--a", "5", "--eps", "0.05", "--configuration", &lamps, "--out", outs]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("conditions.txt")).unwrap();
    assert!(text.contains("containment holds=true"));
    assert!(text.contains("holds=true violators=0\nshadow"));
    assert!(fs::read_to_string(out.join("dark_set.csv")).unwrap().starts_with("x,y,u\n"));

    let o = polarize(&["heatmap", "--region", &region, "--a", "5", "--configuration", &lamps, "--resolution", "9", "--out", outs]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("heatmap.csv")).unwrap();
    assert!(csv.starts_with("x,y,inside,u\n"));
    assert_eq!(csv.lines().count(), 82);
    assert_eq!(
        polarize(&["heatmap", "--region", &region, "--configuration", &lamps, "--resolution", "1", "--out", outs])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn off_center_lamp_fails_containment() {
    let dir = TempDir::new().unwrap();
    let region = write(dir.path(), "disk.json", DISK);
    let lamps = write(dir.path(), "c.csv", "x,y\n0.9,0\n");
    let out = dir.path().join("o");
    let o = polarize(&["conditions", "--region", &region, "--eps", "0.05", "--configuration", &lamps, "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = fs::read_to_string(out.join("conditions.txt")).unwrap();
    assert!(text.contains("containment holds=false"));
    assert!(text.contains("verdict evidence against local optimality"));
}

#[test]
fn oracle_test_reports_matches() {
    let o = polarize(&["oracle-test", "--seeds", "20"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("20/20 match"));
}
