use std::process::Command;

fn autodse() -> Command {
    Command::new(env!("CARGO_BIN_EXE_autodse"))
}

fn gemm() -> String {
    format!("{}/../../models/gemm.kernel", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn space_reports_sizes() {
    let out = autodse().args(["space", "--model", &gemm()]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("grid points:"), "{text}");
    assert!(text.contains("valid points:"), "{text}");
}

#[test]
fn explore_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let run = autodse()
        .args(["explore", "--model", &gemm(), "--threads", "2", "--max-evals", "60", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(run.status.success());
    assert!(String::from_utf8(run.stdout).unwrap().starts_with("autodse summary v1"));
    let r = autodse().arg("report").arg("--out").arg(&out).output().unwrap();
    assert!(r.status.success());
    assert_eq!(r.stdout, std::fs::read(out.join("summary.txt")).unwrap());
}

#[test]
fn exit_codes() {
    let missing = autodse().args(["space", "--model", "/nonexistent.kernel"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
    let bad_tu = autodse()
        .args(["oracle", "--model", &gemm(), "--tu", "1.5"])
        .output()
        .unwrap();
    assert_eq!(bad_tu.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad_space = dir.path().join("bad.ds");
    std::fs::write(&bad_space, "loop: i\n#pragma ACCEL PIPELINE mode=auto{ options: P=[x for x in [off,@]]; default: off }\n").unwrap();
    let s = autodse()
        .args(["space", "--model", &gemm(), "--space"])
        .arg(&bad_space)
        .output()
        .unwrap();
    assert_eq!(s.status.code(), Some(2));
    assert!(String::from_utf8(s.stderr).unwrap().contains("2:63"));
}
