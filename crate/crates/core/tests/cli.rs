use std::path::Path;
use std::process::Command;

use eqwave::cli::run_from;
use eqwave::harness::load_wave;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("eqwave").chain(args.iter().copied());
    let code = run_from(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn solve_into(dir: &Path, name: &str, d: &str, h: &str) -> String {
    let dir_s = dir.to_str().unwrap();
    let (code, _, err) = run(&[
        "solve", "--L", "100", "--d", d, "--H", h, "--name", name, "--dir", dir_s,
    ]);
    assert_eq!(code, 0, "{err}");
    dir.join(format!("{name}.wave.json"))
        .to_str()
        .unwrap()
        .to_string()
}

#[test]
fn solve_flat_wave_writes_a_loadable_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = solve_into(dir.path(), "flat", "10", "0");
    let file = load_wave(Path::new(&path)).unwrap();
    assert!(file.wave.is_flat());
    assert_eq!(file.manifest.params.wave_height, 0.0);
}

#[test]
fn diagnose_writes_one_row_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let wave = solve_into(dir.path(), "w", "10", "5");
    let (code, out, _) = run(&["diagnose", &wave, "--functional", "T", "--p-points", "65"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[0].starts_with("# functional=T"));
    assert_eq!(lines[1], "p,value");
    assert_eq!(lines.len() - 2, 65);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let wave = solve_into(dir.path(), "w", "20", "3");
    let again = solve_into(&dir.path().join("again"), "w", "20", "3");
    // the manifests differ only in their wall-clock timings
    let (a, b) = (
        load_wave(Path::new(&wave)).unwrap(),
        load_wave(Path::new(&again)).unwrap(),
    );
    assert_eq!(
        serde_json::to_string(&a.wave).unwrap(),
        serde_json::to_string(&b.wave).unwrap()
    );
    for sub in ["a", "b"] {
        let out = dir.path().join(sub);
        let out = out.to_str().unwrap();
        let (code, _, err) = run(&[
            "diagnose",
            &wave,
            "--functional",
            "all",
            "--s",
            "0.5",
            "--p-points",
            "17",
            "--dir",
            out,
        ]);
        assert_eq!(code, 0, "{err}");
        let (code, _, _) = run(&[
            "trace",
            &wave,
            "--q0-frac",
            "0",
            "--q0-frac",
            "0.4",
            "--tol",
            "1e-10",
            "--dir",
            out,
        ]);
        assert_eq!(code, 0);
    }
    let mut names: Vec<_> = std::fs::read_dir(dir.path().join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 12 + 2);
    for name in names {
        let a = std::fs::read(dir.path().join("a").join(&name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(&name)).unwrap();
        assert_eq!(a, b, "{name:?} differs");
    }
}

#[test]
fn verify_reports_every_claim_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let wave = solve_into(dir.path(), "w1", "10", "5");
    let out_dir = dir.path().to_str().unwrap();
    let (code, out, _) = run(&["verify", &wave, "--dir", out_dir]);
    assert_eq!(code, 0, "{out}");
    let ids = eqwave::harness::claim_ids();
    for id in &ids {
        assert!(out.contains(id.as_str()), "{id} missing from the table");
    }
    let report = std::fs::read_to_string(dir.path().join("w1.report.csv")).unwrap();
    assert_eq!(report.lines().count(), ids.len() + 1);
    assert!(!report.contains(",fail,"));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(&["bogus"]).0, 2);
    assert_eq!(run(&["solve", "--L", "100", "--d", "10"]).0, 2);
    assert_eq!(run(&["solve", "--L", "abc", "--d", "10", "--H", "1"]).0, 2);
    let dir = tempfile::tempdir().unwrap();
    let wave = solve_into(dir.path(), "w", "10", "1");
    assert_eq!(run(&["diagnose", &wave, "--functional", "Ms"]).0, 2);
    assert_eq!(run(&["diagnose", &wave, "--functional", "Nope"]).0, 2);
    assert_eq!(run(&["trace", &wave, "--p-frac", "1.5"]).0, 2);
    assert_eq!(
        run(&[
            "diagnose",
            &wave,
            "--functional",
            "EnergyMovingS",
            "--s",
            "0.8"
        ])
        .0,
        1
    );
}

#[test]
fn solver_and_file_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let (code, _, err) = run(&["solve", "--L", "100", "--d", "10", "--H", "30", "--dir", d]);
    assert_eq!(code, 1);
    assert!(err.contains("steepness"));
    let bad = dir.path().join("bad.wave.json");
    std::fs::write(&bad, "{not json").unwrap();
    assert_eq!(run(&["verify", bad.to_str().unwrap()]).0, 1);
    assert_eq!(
        run(&[
            "verify",
            dir.path().join("missing.wave.json").to_str().unwrap()
        ])
        .0,
        1
    );
}

#[test]
fn sweep_prints_one_row_per_wave() {
    let (code, out, err) = run(&["sweep", "--L", "100", "--depths", "50", "--heights", "0,2"]);
    assert_eq!(code, 0, "{err}");
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows[0], "depth,height,c,residual,pass,fail,finding,skipped");
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("50,0,"));
}

#[test]
fn binary_respects_the_worker_variable() {
    let bin = env!("CARGO_BIN_EXE_eqwave");
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(bin)
        .args(["solve", "--L", "100", "--d", "10", "--H", "1", "--dir"])
        .arg(dir.path())
        .env("EQWAVE_WORKERS", "0")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    let status = Command::new(bin)
        .args(["solve", "--L", "100", "--d", "10", "--H", "1", "--dir"])
        .arg(dir.path())
        .env("EQWAVE_WORKERS", "1")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let status = Command::new(bin).arg("--nope").status().unwrap();
    assert_eq!(status.code(), Some(2));
}
