mod common;

use std::path::Path;

use autodse::orchestrator::{report, run, OrchestratorError, RunConfig};
use common::*;

fn model(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("seeded.kernel");
    std::fs::write(&path, seeded_kernel(2).to_text()).unwrap();
    path
}

#[test]
fn same_seed_gives_byte_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let m = model(dir.path());
    for out in ["a", "b"] {
        let mut rc = RunConfig::new(&m, dir.path().join(out));
        rc.threads = 2;
        rc.seed = 3;
        rc.max_evals = Some(200);
        run(&rc).unwrap();
    }
    for f in ["report.json", "partitions.json", "design_space.txt", "best_config.txt", "summary.txt"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
    }
}

#[test]
fn report_rerenders_the_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut rc = RunConfig::new(model(dir.path()), &out);
    rc.max_evals = Some(80);
    let r = run(&rc).unwrap();
    assert!(r.best.is_some());
    let written = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    std::fs::remove_file(out.join("summary.txt")).unwrap();
    assert_eq!(report(&out).unwrap(), written);
    assert!(out.join("summary.txt").exists());
    assert!(std::fs::read_dir(out.join("traces")).unwrap().count() > 0);
}

#[test]
fn evaluation_budget_is_global() {
    let dir = tempfile::tempdir().unwrap();
    let mut rc = RunConfig::new(model(dir.path()), dir.path().join("run"));
    rc.threads = 4;
    rc.max_evals = Some(50);
    let r = run(&rc).unwrap();
    let explored: u64 = r.partitions.iter().map(|p| p.evaluations).sum();
    assert!(explored <= 50 + r.partitions.len() as u64);
}

#[test]
fn missing_inputs_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let e = report(&dir.path().join("nothing")).unwrap_err();
    assert!(matches!(e, OrchestratorError::NotFound(_)), "{e:?}");
    let rc = RunConfig::new(dir.path().join("none.kernel"), dir.path().join("out"));
    assert!(run(&rc).unwrap_err().is_config_error());
    let mut rc = RunConfig::new(model(dir.path()), dir.path().join("out"));
    rc.threads = 0;
    assert!(run(&rc).unwrap_err().is_config_error());
}
