use std::fs;
use std::process::Command;

fn huefuse() -> Command {
    Command::new(env!("CARGO_BIN_EXE_huefuse"))
}

#[test]
fn missing_input_fails_without_writing_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let status = huefuse()
        .args(["pipeline", "--images", "does-not-exist.png", "--ev", "0", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(!status.status.success());
    assert!(!String::from_utf8_lossy(&status.stderr).is_empty());
    assert!(!out.join("fused.png").exists());
    assert!(!out.join("corrected.png").exists());
}

#[test]
fn synth_pipeline_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let stack = dir.path().join("stack");
    let out = dir.path().join("out");
    let synth = huefuse()
        .args(["synth", "--scene", "3", "--size", "64", "--ev=-4,0,4", "--out"])
        .arg(&stack)
        .output()
        .unwrap();
    assert!(synth.status.success(), "{}", String::from_utf8_lossy(&synth.stderr));
    assert!(stack.join("stack.json").exists());

    let run = huefuse()
        .args(["pipeline", "--stack"])
        .arg(stack.join("stack.json"))
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    for f in ["fused.png", "corrected.png", "hdr.pfm", "curve.txt"] {
        assert!(out.join(f).exists(), "{f} missing");
    }

    let metrics = huefuse()
        .args(["metrics", "--json", "--fused"])
        .arg(out.join("corrected.png"))
        .arg("--ref")
        .arg(out.join("hdr.pfm"))
        .output()
        .unwrap();
    assert!(metrics.status.success(), "{}", String::from_utf8_lossy(&metrics.stderr));
    let v: serde_json::Value = serde_json::from_slice(&metrics.stdout).unwrap();
    let q = v["tmqi_q"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&q), "{v}");
    assert!(v["mean_dh"].as_f64().unwrap() >= 0.0);
    assert!(fs::read_to_string(out.join("curve.txt")).unwrap().lines().count() > 0);
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "nonsense.key = 1\n").unwrap();
    let out = dir.path().join("s");
    let bad = huefuse()
        .arg("--config")
        .arg(&cfg)
        .args(["eval", "--scenes", "1", "--size", "32", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("nonsense.key"));
    assert!(!out.exists());
}
