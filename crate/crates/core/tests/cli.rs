use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mergeflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mergeflow"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn preset_list_names_every_preset() {
    let out = mergeflow(&["preset", "list"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for name in [
        "merge_fair_1",
        "merge_fair_2",
        "merge_fair_3",
        "merge_fair_4",
        "merge_priority_1",
        "merge_priority_2",
        "merge_priority_3",
    ] {
        assert!(text.contains(name), "{name} missing from\n{text}");
    }
}

#[test]
fn run_writes_snapshots_and_flags_override_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("scenario.toml");
    fs::write(
        &config,
        "model = \"lwr\"\ncoupling = \"fair\"\nrho1 = 0.1\nrho2 = 0.15\nrho3 = 0.2\ncells = 50\nt_end = 0.5\nsnapshots = [0.25, 0.5]\n",
    )
    .unwrap();
    let out_dir = tmp.path().join("out");
    let out = mergeflow(&[
        "run",
        "--config",
        path(&config),
        "--cells",
        "40",
        "--output-dir",
        path(&out_dir),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let manifest = fs::read_to_string(out_dir.join("manifest.toml")).unwrap();
    assert!(manifest.contains("cells = 40"), "{manifest}");
    let csv = fs::read_to_string(out_dir.join("road3_t001.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,rho,flux"));
    assert_eq!(lines.count(), 40);
    for k in 1..=3 {
        assert!(out_dir.join(format!("road{k}_t000.csv")).exists());
    }
}

#[test]
fn compare_two_output_directories() {
    let tmp = tempfile::tempdir().unwrap();
    let common = [
        "--preset",
        "merge_fair_1",
        "--cells",
        "100",
        "--t-end",
        "0.5",
        "--epsilon",
        "0.01",
    ];
    let mut dirs = Vec::new();
    for model in ["kinetic", "lwr"] {
        let dir = tmp.path().join(model);
        let mut args = vec!["run", "--model", model, "--output-dir", path(&dir)];
        args.extend(common);
        let out = mergeflow(&args);
        assert!(out.status.success(), "{}", stderr(&out));
        dirs.push(dir);
    }
    let out = mergeflow(&["compare", path(&dirs[0]), path(&dirs[1])]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("road 3: L1"), "{text}");

    let mismatch = tmp.path().join("coarse");
    let out = mergeflow(&[
        "run",
        "--model",
        "lwr",
        "--cells",
        "50",
        "--output-dir",
        path(&mismatch),
        "--preset",
        "merge_fair_1",
        "--t-end",
        "0.5",
    ]);
    assert!(out.status.success());
    let out = mergeflow(&["compare", path(&dirs[0]), path(&mismatch)]);
    assert!(!out.status.success());
}

#[test]
fn preset_run_fails_when_a_marker_is_missed() {
    // Far too short for the junction states to settle.
    let out = mergeflow(&[
        "preset",
        "run",
        "merge_fair_4",
        "--t-end",
        "0.01",
        "--cells",
        "50",
    ]);
    assert!(!out.status.success());
    assert!(stdout(&out).contains("FAIL"));
    assert!(stderr(&out).contains("marker(s) failed"));
}

#[test]
fn preset_run_passes_with_reference_settings() {
    let tmp = tempfile::tempdir().unwrap();
    let out = mergeflow(&[
        "preset",
        "run",
        "merge_priority_2",
        "--output-dir",
        path(tmp.path()),
    ]);
    assert!(out.status.success(), "{}\n{}", stdout(&out), stderr(&out));
    assert!(!stdout(&out).contains("FAIL"));
    assert!(tmp.path().join("kinetic/manifest.toml").exists());
    assert!(tmp.path().join("lwr/manifest.toml").exists());
}

#[test]
fn bad_config_reports_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("bad.toml");
    fs::write(&config, "rho1 = 0.1\nrho2 = 0.2\nrho3 = 1.5\n").unwrap();
    let out = mergeflow(&["run", "--config", path(&config)]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));

    let out = mergeflow(&["run", "--rho1", "0.1", "--rho2", "0.2"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("rho3"), "{}", stderr(&out));

    let out = mergeflow(&["preset", "run", "no_such_preset"]);
    assert!(!out.status.success());
}
