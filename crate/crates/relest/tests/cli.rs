use std::fs;
use std::process::Command;

fn relest() -> Command {
    Command::new(env!("CARGO_BIN_EXE_relest"))
}

#[test]
fn simulate_then_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let st = relest().args(["simulate", "--seed", "4", "--out-dir"]).arg(&out).output().unwrap().status;
    assert!(st.success());
    assert!(out.join("trace.csv").is_file() && out.join("snr.csv").is_file());

    let est = dir.path().join("est");
    let st = relest()
        .args(["estimate", "--input"])
        .arg(out.join("trace.csv"))
        .arg("--out-dir")
        .arg(&est)
        .output()
        .unwrap()
        .status;
    assert!(st.success());
    let text = fs::read_to_string(est.join("estimates.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 1600);
}

#[test]
fn compare_and_obs() {
    let dir = tempfile::tempdir().unwrap();
    let out = relest().args(["compare", "--seed", "1", "--out-dir"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("ratio_semera_over_integral"));
    assert!(dir.path().join("rmse.csv").is_file());

    let st = relest().args(["obs", "--preset", "relay", "--out-dir"]).arg(dir.path()).output().unwrap().status;
    assert!(st.success());
    let obs = fs::read_to_string(dir.path().join("observability.csv")).unwrap();
    assert!(obs.lines().nth(1).unwrap().contains(",true,"));
}

#[test]
fn exit_codes_by_category() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    fs::write(&conf, "filter.nope = 1\n").unwrap();
    let st = relest().args(["compare", "--config"]).arg(&conf).arg("--out-dir").arg(dir.path()).output().unwrap().status;
    assert_eq!(st.code(), Some(2));

    let input = dir.path().join("bad.csv");
    fs::write(&input, "t,u,iota\n0,1,x\n").unwrap();
    let st = relest().args(["estimate", "--input"]).arg(&input).arg("--out-dir").arg(dir.path()).output().unwrap().status;
    assert_eq!(st.code(), Some(3));

    let st = relest()
        .args(["estimate", "--input"])
        .arg(dir.path().join("missing.csv"))
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap()
        .status;
    assert_eq!(st.code(), Some(4));

    let st = relest().args(["bench", "--iterations", "10"]).output().unwrap().status;
    assert_eq!(st.code(), Some(2));
}
