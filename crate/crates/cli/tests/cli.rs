use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenes_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenes")
}

fn hybrid_sdf(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hybrid-sdf"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn small_config(dir: &Path, extra: &str) -> PathBuf {
    let mesh = scenes_dir().join("icosphere.obj");
    let text = format!(
        r#"
frames = 2
coarse_resolution = 16
reference_samples = 16
reference_frames = [1]
{extra}

[object.sphere]
mesh = "{}"

[camera]
position = [0.0, 2.0, 3.5]
width = 16
height = 12
"#,
        mesh.display()
    );
    let path = dir.join("small.toml");
    fs::write(&path, text).unwrap();
    path
}

fn files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}

#[test]
fn render_writes_frames_references_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), "");
    let out = hybrid_sdf(
        &["render", "--config", config.to_str().unwrap(), "--out", "run"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        files(&dir.path().join("run")),
        [
            "coarse.sdf",
            "fine.sdf",
            "fine_sign_back.sdf",
            "fine_sign_front.sdf",
            "frame_0000.ppm",
            "frame_0001.ppm",
            "metrics_0001.json",
            "reference_0001.pgm",
            "timing.json",
            "visibility_0000.pgm",
            "visibility_0001.pgm",
        ]
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"config_hash\""));
}

#[test]
fn build_and_reference_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), "");
    let config = config.to_str().unwrap();
    assert!(hybrid_sdf(
        &["build", "--config", config, "--out", "b", "--frames", "1"],
        dir.path()
    )
    .status
    .success());
    assert_eq!(
        files(&dir.path().join("b")),
        [
            "coarse.sdf",
            "fine.sdf",
            "fine_sign_back.sdf",
            "fine_sign_front.sdf",
            "timing.json"
        ]
    );
    assert!(hybrid_sdf(&["reference", "--config", config, "--out", "r"], dir.path())
        .status
        .success());
    assert_eq!(files(&dir.path().join("r")), ["reference_0001.pgm", "timing.json"]);
}

#[test]
fn frames_flag_drops_out_of_range_reference_frames() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), "");
    let out = hybrid_sdf(
        &[
            "render",
            "--config",
            config.to_str().unwrap(),
            "--out",
            "run",
            "--frames",
            "1",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!files(&dir.path().join("run"))
        .iter()
        .any(|n| n.starts_with("reference")));
}

#[test]
fn compare_prints_and_writes_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), "");
    let config = config.to_str().unwrap();
    assert!(hybrid_sdf(&["render", "--config", config, "--out", "run"], dir.path())
        .status
        .success());
    let out = hybrid_sdf(
        &[
            "compare",
            "--config",
            config,
            "--sdf",
            "run/visibility_0001.pgm",
            "--reference",
            "run/visibility_0001.pgm",
            "--out",
            "cmp",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let printed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(printed["rmse"], 0.0);
    let written: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("cmp/metrics.json")).unwrap()).unwrap();
    assert_eq!(printed, written);
}

#[test]
fn bench_writes_one_entry_per_resolution() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), "bench_resolutions = [8, 12]");
    let out = hybrid_sdf(
        &[
            "bench",
            "--config",
            config.to_str().unwrap(),
            "--out",
            "bench",
            "--frames",
            "1",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("bench/bench.json")).unwrap()).unwrap();
    let entries = json.as_array().unwrap();
    assert_eq!(entries.len(), 2);
    assert_eq!(entries[0]["coarse_resolution"], 8);
    assert_eq!(entries[1]["coarse_resolution"], 12);
}

#[test]
fn thread_count_does_not_change_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), "");
    let config = config.to_str().unwrap();
    for (threads, out) in [("1", "t1"), ("8", "t8")] {
        let run = hybrid_sdf(
            &["render", "--config", config, "--threads", threads, "--out", out],
            dir.path(),
        );
        assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    }
    let names = files(&dir.path().join("t1"));
    assert_eq!(names, files(&dir.path().join("t8")));
    for name in names.iter().filter(|n| *n != "timing.json") {
        assert_eq!(
            fs::read(dir.path().join("t1").join(name)).unwrap(),
            fs::read(dir.path().join("t8").join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn seed_flag_changes_the_sampling() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), "");
    let config = config.to_str().unwrap();
    for (seed, out) in [("1", "s1"), ("2", "s2")] {
        let run = hybrid_sdf(
            &[
                "build", "--config", config, "--frames", "1", "--seed", seed, "--out", out,
            ],
            dir.path(),
        );
        assert!(run.status.success());
    }
    assert_ne!(
        fs::read(dir.path().join("s1/fine.sdf")).unwrap(),
        fs::read(dir.path().join("s2/fine.sdf")).unwrap()
    );
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = small_config(dir.path(), "no_such_key = 1");
    let out = hybrid_sdf(&["build", "--config", unknown.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_key"));

    let invalid = small_config(dir.path(), "alpha = 1.5");
    let out = hybrid_sdf(&["build", "--config", invalid.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let out = hybrid_sdf(&["build", "--config", "missing.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let config = small_config(dir.path(), "");
    let out = hybrid_sdf(
        &["build", "--config", config.to_str().unwrap(), "--frames", "0"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));

    fs::write(dir.path().join("nomesh.toml"), "[object.a]\nmesh = \"nowhere.obj\"\n").unwrap();
    let out = hybrid_sdf(&["build", "--config", "nomesh.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), "");
    let config = config.to_str().unwrap();
    let out = hybrid_sdf(
        &["compare", "--config", config, "--sdf", "a.pgm", "--reference", "b.pgm"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));

    fs::write(dir.path().join("blocker"), "").unwrap();
    let out = hybrid_sdf(&["build", "--config", config, "--out", "blocker/sub"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}
