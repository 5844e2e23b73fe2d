use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn readorder(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_readorder"))
        .args(args)
        .current_dir(cwd)
        .env_remove("READORDER_CONFIG")
        .output()
        .expect("run readorder")
}

fn synth(dir: &Path, pages: &str) {
    let out = readorder(
        &["synth", "--out-dir", "s", "--pages", pages, "--seed", "40", "--mixed-layout", "--line-confidence", "0.95"],
        dir,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(readorder(&["bogus"], dir.path()).status.code(), Some(1));
    assert_eq!(readorder(&["parse"], dir.path()).status.code(), Some(1));
    assert_eq!(readorder(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn missing_and_malformed_inputs_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "1");
    let out = readorder(&["parse", "nope.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));

    fs::write(dir.path().join("s/page0000.detections.json"), "[{\"box\":[5,0,1,1]}]").unwrap();
    let out = readorder(&["parse", "s/page0000.manifest.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("page0000") && err.contains("record 0"), "{err}");

    fs::write(dir.path().join("bad.conf"), "tol_frac = x\n").unwrap();
    let out = readorder(&["--config", "bad.conf", "config"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn continue_on_error_processes_remaining_pages() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "3");
    fs::remove_file(dir.path().join("s/page0001.mask.pgm")).unwrap();
    let strict = readorder(&["parse", "--list", "s/manifests.txt"], dir.path());
    assert_eq!(strict.status.code(), Some(1));
    assert!(strict.stdout.is_empty());

    let lenient = readorder(
        &["parse", "--continue-on-error", "--list", "s/manifests.txt", "--out-dir", "o"],
        dir.path(),
    );
    assert_eq!(lenient.status.code(), Some(0));
    assert!(dir.path().join("o/page0000.txt").exists());
    assert!(!dir.path().join("o/page0001.txt").exists());
    assert!(dir.path().join("o/page0002.txt").exists());
}

#[test]
fn config_env_var_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.conf"), "tol_frac = 0.3\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_readorder"))
        .arg("config")
        .current_dir(dir.path())
        .env("READORDER_CONFIG", "c.conf")
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&out.stdout).contains("tol_frac = 0.3"));
}

#[test]
fn parse_output_matches_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "2");
    let out = readorder(&["parse", "--list", "s/manifests.txt", "--out-dir", "o"], dir.path());
    assert!(out.status.success());
    for i in 0..2 {
        let gt: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(format!("s/page000{i}.gt.json"))).unwrap())
                .unwrap();
        let text = fs::read_to_string(dir.path().join(format!("o/page000{i}.txt"))).unwrap();
        assert_eq!(text.trim_end_matches('\n'), gt["transcript"].as_str().unwrap());
    }
}

#[test]
fn merge_windows_and_rescore() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("w.json"),
        r#"[{"offset":{"x":0,"y":0},"detections":[{"box":[100,10,140,50],"label":"a","score":0.9}]},
            {"offset":{"x":80,"y":0},"detections":[{"box":[22,10,62,50],"label":"a","score":0.8},
                                                  {"box":[300,10,340,50],"label":"b","score":0.7}]}]"#,
    )
    .unwrap();
    let out = readorder(&["merge-windows", "w.json"], dir.path());
    assert!(out.status.success());
    let merged: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(merged.as_array().unwrap().len(), 2);
    assert_eq!(merged[1]["box"][0], 380.0);

    fs::write(dir.path().join("c.json"), r#"{"symbols":["a","x"],"probs":[0.9,0.2]}"#).unwrap();
    fs::write(dir.path().join("l.json"), r#"{"symbols":["a","b"],"probs":[0.9,0.9]}"#).unwrap();
    let out = readorder(&["rescore", "--chars", "c.json", "--line", "l.json"], dir.path());
    let fused: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(fused["sequence"]["symbols"], serde_json::json!(["a", "b"]));
    assert_eq!(fused["rule"], "replace_only");
}

/// Runs `args` twice in fresh copies of the same inputs and returns both
/// sets of produced files.
fn run_twice(args: &[&str]) -> [Vec<(String, Vec<u8>)>; 2] {
    let runs = [0, 1].map(|_| {
        let dir = tempfile::tempdir().unwrap();
        synth(dir.path(), "3");
        fs::write(
            dir.path().join("w.json"),
            r#"[{"offset":{"x":0,"y":0},"detections":[{"box":[0,0,40,40],"label":"a","score":0.5}]}]"#,
        )
        .unwrap();
        fs::write(dir.path().join("c.json"), r#"{"symbols":["a","x"],"probs":[0.9,0.2]}"#).unwrap();
        fs::write(dir.path().join("l.json"), r#"{"symbols":["a","b","c"],"probs":[0.9,0.9,0.9]}"#).unwrap();
        let out = readorder(args, dir.path());
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        let mut files = vec![("stdout".to_string(), out.stdout)];
        for sub in ["s", "o"] {
            let Ok(entries) = fs::read_dir(dir.path().join(sub)) else { continue };
            let mut names: Vec<_> = entries.map(|e| e.unwrap().path()).collect();
            names.sort();
            for p in names {
                files.push((p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()));
            }
        }
        files
    });
    runs
}

#[test]
fn lines_and_eval_are_deterministic() {
    for args in [
        &["lines", "--list", "s/manifests.txt"][..],
        &["eval", "--list", "s/manifests.txt"][..],
    ] {
        let [a, b] = run_twice(args);
        assert_eq!(a, b, "{args:?}");
    }
}
