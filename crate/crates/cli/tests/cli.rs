use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn viable() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/viable.cfg")
}

fn metapop(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metapop"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn with_config(out: &Path, args: &[&str]) -> Output {
    let cfg = viable();
    let mut all = vec!["--config", cfg.to_str().unwrap(), "--override", "n=300", "--override", "r=0.15"];
    all.extend_from_slice(args);
    metapop(out, &all)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn check_reports_every_hypothesis() {
    let dir = tempfile::tempdir().unwrap();
    let o = with_config(dir.path(), &["check"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("UB.ineq1") && text.contains("all hypotheses pass"));
    assert!(dir.path().join("checklist.csv").exists());
    assert!(dir.path().join("manifest").exists());
}

#[test]
fn violated_invariant_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = with_config(dir.path(), &["--override", "bounds.alpha2=0.95", "check"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("alpha2 <= alpha1"), "{}", stderr(&o));
}

#[test]
fn unknown_key_lists_valid_keys() {
    let dir = tempfile::tempdir().unwrap();
    let o = with_config(dir.path(), &["--override", "colonisation=3", "sample"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("colonisation") && err.contains("valid keys") && err.contains("kernel.kind"), "{err}");
}

#[test]
fn missing_config_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = metapop(dir.path(), &["sample"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--config"));
}

#[test]
fn equilibrium_is_reproducible_for_a_seed() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let o = with_config(dir.path(), &["--seed", "7", "equilibrium"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for name in ["manifest", "patches.csv", "tmatrix.csv", "equilibrium.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let manifest = fs::read_to_string(a.path().join("manifest")).unwrap();
    assert!(manifest.contains("seed = 7"), "{manifest}");
}

#[test]
fn report_prints_saved_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = with_config(dir.path(), &["--override", "replicates=2", "bounds-experiment"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("equilibrium_1.csv").exists());
    let o = metapop(dir.path(), &["report"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("ub_holds") && text.contains("experiment = bounds-experiment"), "{text}");
}

#[test]
fn report_without_outputs_fails() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(metapop(dir.path(), &["report"]).status.code(), Some(1));
}

#[test]
fn approx_writes_grid_values() {
    let dir = tempfile::tempdir().unwrap();
    let o = with_config(dir.path(), &["--override", "grid.step=0.1", "approx"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("approx.csv")).unwrap();
    assert!(text.starts_with("x1,x2,rho,q1,p_upper,p_lower"));
}
