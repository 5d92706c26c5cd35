use std::path::Path;
use std::process::{Command, Output};

fn langshape(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_langshape"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = langshape(args);
    assert!(
        out.status.success(),
        "langshape {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes the synthetic fixture and returns its config path.
fn fixture(root: &Path) -> std::path::PathBuf {
    let data = root.join("data");
    ok(&["synth", "--out", s(&data)]);
    data.join("config.toml")
}

fn csv_files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv") || n.ends_with(".txt"))
        .filter(|n| n != "manifest.csv")
        .collect();
    v.sort();
    v
}

#[test]
fn run_writes_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = fixture(tmp.path());
    let out = tmp.path().join("out");
    let stdout = ok(&["run", "--config", s(&cfg), "--out", s(&out)]);
    assert!(stdout.contains("exact test"), "{stdout}");
    assert!(stdout.contains("2/252"), "{stdout}");
    for f in [
        "manifest.csv",
        "distmat.csv",
        "mds.csv",
        "permtest.csv",
        "scree_variance.svg",
        "diagram_lp001.svg",
    ] {
        assert!(out.join(f).exists(), "{f} missing");
    }
}

#[test]
fn stage_commands_reproduce_run_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = fixture(tmp.path());
    let full = tmp.path().join("full");
    ok(&["run", "--config", s(&cfg), "--out", s(&full)]);

    let staged = tmp.path().join("staged");
    let base = ["--config", s(&cfg), "--dir", s(&staged)];
    for stage in [
        "ingest", "mca", "clouds", "diagrams", "distmat", "mds", "permtest",
    ] {
        let mut args = vec![stage];
        args.extend(base);
        ok(&args);
    }
    let files = csv_files(&staged);
    assert_eq!(files, csv_files(&full));
    for f in &files {
        let a = std::fs::read(full.join(f)).unwrap();
        let b = std::fs::read(staged.join(f)).unwrap();
        assert!(a == b, "{f} differs between `run` and the stage commands");
    }
}

#[test]
fn flags_override_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = fixture(tmp.path());
    let out = tmp.path().join("out");
    ok(&[
        "run",
        "--config",
        s(&cfg),
        "--out",
        s(&out),
        "--metric",
        "bottleneck",
        "--workers",
        "2",
    ]);
    let permtest = std::fs::read_to_string(out.join("permtest.csv")).unwrap();
    assert!(
        permtest
            .lines()
            .nth(1)
            .unwrap()
            .starts_with("exact,bottleneck,"),
        "{permtest}"
    );
    assert!(out.join("mds2d_bottleneck.svg").exists());
}

#[test]
fn errors_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.toml");
    let out = langshape(&["run", "--config", s(&missing)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    // a later stage without its inputs
    let empty = tmp.path().join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    let out = langshape(&["mds", "--dir", s(&empty)]);
    assert!(!out.status.success());

    let out = langshape(&["no-such-command"]);
    assert!(!out.status.success());
}

#[test]
fn plot_renders_saved_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = fixture(tmp.path());
    let out = tmp.path().join("out");
    ok(&["run", "--config", s(&cfg), "--out", s(&out)]);
    let cases = [
        ("diagram", "diagram_lp001.csv"),
        ("scree", "scree.csv"),
        ("scatter", "coordinates.csv"),
        ("subcloud", "subcloud_ar001.csv"),
        ("mds2d", "mds.csv"),
        ("mds3d", "mds.csv"),
    ];
    for (kind, input) in cases {
        let svg = tmp.path().join(format!("{kind}.svg"));
        ok(&[
            "plot",
            "--kind",
            kind,
            "--input",
            s(&out.join(input)),
            "--out",
            s(&svg),
            "--background",
            s(&out.join("coordinates.csv")),
            "--threshold",
            "0.3",
        ]);
        let text = std::fs::read_to_string(&svg).unwrap();
        assert!(text.starts_with("<?xml"), "{kind}");
        assert!(text.contains("id=\"pt-0\""), "{kind}");
        assert!(text.trim_end().ends_with("</svg>"), "{kind}");
    }
}
