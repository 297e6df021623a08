use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn codim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_codim"))
        .args(args)
        .output()
        .unwrap()
}

const SCENE: &str = r#"
[sim]
h = 0.02
frames = 2

[[object]]
name = "sheet"
kind = "shell"
shape = { type = "grid", n = 4, size = 0.1 }
translate = [0.0, 0.002, 0.0]

[[object]]
name = "floor"
kind = "obstacle"
shape = { type = "plane", half = 0.3 }
"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn check_accepts_valid_scene() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "s.toml", SCENE);
    let out = codim(&["check", &p]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok: 20 nodes"));
}

#[test]
fn invalid_scenes_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let overlap = SCENE.replace("0.002", "0.0001");
    for text in [overlap.as_str(), "[sim]\nh = 0\n", "[sim\n"] {
        let p = write(dir.path(), "bad.toml", text);
        let out = codim(&["check", &p]);
        assert_eq!(out.status.code(), Some(2), "{text}");
        let out = codim(&["simulate", &p]);
        assert_eq!(out.status.code(), Some(2));
    }
    let missing = dir.path().join("absent.toml");
    assert_eq!(
        codim(&["check", missing.to_str().unwrap()]).status.code(),
        Some(2)
    );
}

#[test]
fn simulate_writes_frames_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "s.toml", SCENE);
    let out_dir = dir.path().join("frames");
    let out = codim(&[
        "simulate",
        &p,
        "--frames",
        "3",
        "--out",
        out_dir.to_str().unwrap(),
        "--deterministic",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for k in 0..=3 {
        assert!(out_dir.join(format!("frame_{k:05}.obj")).exists());
    }
    let stats = fs::read_to_string(out_dir.join("stats.csv")).unwrap();
    assert_eq!(stats.lines().count(), 4);
}

#[test]
fn unconverged_step_under_abort_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let text = SCENE.replace(
        "frames = 2",
        "frames = 2\nmax_newton = 1\non_unconverged = \"abort\"",
    );
    let p = write(dir.path(), "s.toml", &text);
    let out_dir = dir.path().join("o");
    let out = codim(&["simulate", &p, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn ccd_bench_reports_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(dir.path(), "empty.txt", "");
    let out = codim(&["ccd-bench", &empty]);
    assert_eq!(out.status.code(), Some(0));
    let corpus = write(
        dir.path(),
        "c.txt",
        "PP 0 0 0 2 0 0 1 0 0 -1 0 0 0 0.1\nPT 0 1 0 -1 0 -1 1 0 -1 0 0 1 0 -2 0 0 0 0 0 0 0 0 0 0 0.001 0.1\n",
    );
    let out = codim(&["ccd-bench", &corpus, "--samples", "1000"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("queries 2 mismatches 0"), "{text}");
    let bad = write(dir.path(), "bad.txt", "PT 1 2 3\n");
    assert_eq!(codim(&["ccd-bench", &bad]).status.code(), Some(2));
}
