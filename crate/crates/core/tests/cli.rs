use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_brightbeam"));
    c.env_remove("BRIGHTBEAM_FIXTURES");
    c
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const SYMMETRIC: &str = "method = \"B\"\ninput_a.squeezing_db = 3.0103\ninput_b.squeezing_db = 3.0103\n";

#[test]
fn table1_reproduces_the_reference_sums() {
    let out = bin().arg("table1").output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    for (name, sum) in [("method_a", "1.29"), ("method_b", "1.08"), ("method_c_port_c", "1.04"), ("method_c_port_d", "1.09")] {
        let line = text.lines().find(|l| l.starts_with(name)).unwrap_or_else(|| panic!("{name} missing:\n{text}"));
        assert!(line.contains(sum), "{line}");
    }
    assert!(text.contains("cannot be compared directly"));
}

#[test]
fn fixture_directory_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let mut a = SYMMETRIC.replace("\"B\"", "\"A\"");
    a.push_str("band.center_frequency = 20.5e6\n");
    write(dir.path(), "scenario_x.cfg", &a);
    write(dir.path(), "scenario_y.cfg", SYMMETRIC);

    let from_env = bin().arg("table1").env("BRIGHTBEAM_FIXTURES", dir.path()).output().unwrap();
    assert!(stdout(&from_env).starts_with("scenario"), "{}", stdout(&from_env));
    assert!(stdout(&from_env).contains("\nx "));

    // the flag wins over the environment
    let flagged = bin()
        .args(["table1", "--fixtures"])
        .arg(fixtures())
        .env("BRIGHTBEAM_FIXTURES", dir.path())
        .output()
        .unwrap();
    assert!(stdout(&flagged).contains("method_a"));

    let missing = bin().args(["table1", "--fixtures", "/nonexistent/dir"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn simulate_prints_text_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "s.cfg", SYMMETRIC);
    let out = bin().args(["simulate", "--scenario"]).arg(&p).output().unwrap();
    assert!(out.status.success());
    assert!(stdout(&out).contains("sum         1.00000"), "{}", stdout(&out));

    let out = bin().args(["simulate", "--json", "--mc-samples", "2000", "--seed", "5", "--scenario"]).arg(&p).output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["method"], "B");
    assert_eq!(v["witnessed"], true);
    assert!(v["mc_sum"].is_number());
    assert_eq!(v["detections"][0]["name"], "sum");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.cfg", &format!("{SYMMETRIC}entangle_ratio = 1.2\n"));
    let out = bin().args(["simulate", "--scenario"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("entangle_ratio"));

    let unknown = write(dir.path(), "unknown.cfg", &format!("{SYMMETRIC}budget_a.loss = 0.1\n"));
    let out = bin().args(["simulate", "--scenario"]).arg(&unknown).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget_a.loss"));

    // port c of a balanced pair is dark at φ = 0
    let dark = write(dir.path(), "dark.cfg", &format!("{}phi = 0\n", SYMMETRIC.replace("\"B\"", "\"C\"")));
    let out = bin().args(["simulate", "--scenario"]).arg(&dark).output().unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));

    let good = write(dir.path(), "good.cfg", SYMMETRIC);
    let out = bin()
        .args(["sweep", "--param", "detuning", "--from", "0", "--to", "1", "--steps", "3", "--scenario"])
        .arg(&good)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.cfg", &format!("{SYMMETRIC}mc_samples = 500\nseed = 9\n"));
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = bin()
            .args(["sweep", "--param", "eta", "--from", "0.5", "--to", "1", "--steps", "6", "--scenario"])
            .arg(&s)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out).unwrap()
    };
    let (a, b) = (run("a.csv"), run("b.csv"));
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 7);
    assert!(text.lines().nth(6).unwrap().starts_with("B,eta,1.00000,0.500000,0.500000,1.00000,2.00000,true,"));
}

#[test]
fn sweep_accepts_negative_limits() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.cfg", &SYMMETRIC.replace("\"B\"", "\"A\""));
    let out = bin()
        .args(["sweep", "--param", "theta", "--from", "-1", "--to", "1", "--steps", "3", "--scenario"])
        .arg(&s)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).lines().nth(1).unwrap().starts_with("A,theta,-1.00000,"));

    // a negative gain fails validation and aborts the sweep
    let out = bin()
        .args(["sweep", "--param", "gain", "--from", "-1", "--to", "1", "--steps", "3", "--scenario"])
        .arg(&s)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_reports_each_probe() {
    let out = bin()
        .args(["validate", "--mc-samples", "50000", "--seed", "1", "--scenario"])
        .arg(fixtures().join("scenario_method_b.cfg"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.lines().any(|l| l.starts_with("sum ")));
    assert!(text.lines().any(|l| l.starts_with("difference ")));
}
