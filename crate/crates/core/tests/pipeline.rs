use std::path::{Path, PathBuf};

use langshape::cloud::SubCloud;
use langshape::config::PipelineConfig;
use langshape::io::LabeledMatrix;
use langshape::mds::{classical_mds, Embedding};
use langshape::pipeline::{
    build_subclouds, diagram_distances, languages_in, read_diagrams, read_manifest, read_mca_stage,
    read_subclouds, resolve_groups, run_permtest, run_pipeline, PipelineOutcome,
};
use langshape::synth;
use langshape::Error;
use sha2::{Digest, Sha256};

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic")
}

fn run_fixture(out: &Path) -> (PipelineConfig, PipelineOutcome) {
    let mut cfg = PipelineConfig::load(fixture_dir().join("config.toml")).unwrap();
    cfg.output.dir = out.to_path_buf();
    let outcome = run_pipeline(&cfg).unwrap();
    (cfg, outcome)
}

fn read(dir: &Path, name: &str) -> std::fs::File {
    std::fs::File::open(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn shipped_fixture_matches_generator() {
    let ds = synth::generate();
    let dir = fixture_dir();
    for (name, text) in [
        ("values.csv", &ds.values_csv),
        ("groups.csv", &ds.groups_csv),
        ("config.toml", &ds.config_toml),
    ] {
        assert_eq!(
            &std::fs::read_to_string(dir.join(name)).unwrap(),
            text,
            "{name}"
        );
    }
}

#[test]
fn fixture_separates_looped_from_arc_languages() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, outcome) = run_fixture(tmp.path());
    for d in &outcome.diagrams {
        let loops = d.diagram.dimension(1);
        let top = loops
            .pairs
            .iter()
            .map(|p| p.persistence())
            .fold(0.0, f64::max);
        if d.language_id.starts_with("lp") {
            assert!(top > 0.3, "{}: strongest loop {top}", d.language_id);
            assert!(!d.cycles.is_empty());
        } else {
            assert!(loops.is_empty(), "{}: {:?}", d.language_id, loops.pairs);
        }
    }
    let t = outcome.test.unwrap();
    assert_eq!((t.count_leq, t.total), (2, 252));
    assert!(t.p_value <= 0.05);
}

#[test]
fn manifest_lists_every_artifact_with_its_digest() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, outcome) = run_fixture(tmp.path());
    let on_disk = read_manifest(&tmp.path().join("manifest.csv")).unwrap();
    assert_eq!(on_disk, outcome.manifest);
    let mut files: Vec<String> = std::fs::read_dir(tmp.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n != "manifest.csv")
        .collect();
    files.sort();
    let listed: Vec<String> = on_disk.iter().map(|e| e.file.clone()).collect();
    assert_eq!(listed, files);
    for e in &on_disk {
        let bytes = std::fs::read(tmp.path().join(&e.file)).unwrap();
        assert_eq!(e.bytes, bytes.len() as u64);
        assert_eq!(e.sha256, hex(&Sha256::digest(&bytes)));
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn assert_close(a: f64, b: f64, what: &str) {
    assert!((a - b).abs() <= 1e-12, "{what}: {a} vs {b}");
}

#[test]
fn stage_files_reproduce_the_full_run() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let (cfg, outcome) = run_fixture(dir);

    // sub-clouds from the saved table and coordinates
    let (points, table) = read_mca_stage(dir).unwrap();
    assert_eq!(table, outcome.table);
    let languages = languages_in(dir, "subcloud").unwrap();
    assert_eq!(languages, outcome.languages);
    let rebuilt = build_subclouds(&points, &table, &languages, cfg.mca.dims).unwrap();
    let saved = read_subclouds(dir, &languages).unwrap();
    for ((a, b), c) in rebuilt.iter().zip(&saved).zip(&outcome.subclouds) {
        for s in [b, c] {
            same_cloud(a, s);
        }
    }

    // distances from the saved diagrams
    let diagrams = read_diagrams(dir, &languages).unwrap();
    let dm = diagram_distances(&diagrams, &cfg.metric, cfg.persistence.homology_dim).unwrap();
    let saved_dm = LabeledMatrix::read_csv(read(dir, "distmat.csv")).unwrap();
    let full_dm = outcome.distances.as_ref().unwrap();
    for m in [&saved_dm, full_dm] {
        assert_eq!(m.labels, dm.labels);
        for (x, y) in m.values.as_slice().iter().zip(dm.values.as_slice()) {
            assert_close(*x, *y, "distance");
        }
    }

    // embedding and test from the saved matrix
    let e = classical_mds(&saved_dm, cfg.mds.dims).unwrap();
    let (labels, coords) = Embedding::read_coordinates(read(dir, "mds.csv")).unwrap();
    assert_eq!(labels, e.labels);
    for (x, y) in coords.as_slice().iter().zip(e.coordinates.as_slice()) {
        assert_close(*x, *y, "mds coordinate");
    }
    let groups = resolve_groups(&cfg.groups).unwrap();
    let t = run_permtest(
        &saved_dm,
        &groups,
        &cfg.permtest,
        &cfg.metric.metric().to_string(),
    )
    .unwrap()
    .unwrap();
    let full = outcome.test.unwrap();
    assert_eq!((t.count_leq, t.total), (full.count_leq, full.total));
    assert_close(t.observed_loss, full.observed_loss, "observed loss");
    assert_eq!(t.p_value, full.p_value);
}

fn same_cloud(a: &SubCloud, b: &SubCloud) {
    assert_eq!(a.language_id, b.language_id);
    assert_eq!(a.cloud.len(), b.cloud.len());
    for (p, q) in a.cloud.points().iter().zip(b.cloud.points()) {
        for (x, y) in p.coords.iter().zip(&q.coords) {
            assert_close(*x, *y, &a.language_id);
        }
    }
}

#[test]
fn failing_stage_leaves_partial_files() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth::generate().write_to(&data).unwrap();
    // a grouped language that is not in the table fails the clouds stage
    let mut groups = std::fs::read_to_string(data.join("groups.csv")).unwrap();
    groups.push_str("nosuch1234,arc\n");
    std::fs::write(data.join("groups.csv"), groups).unwrap();

    let mut cfg = PipelineConfig::load(data.join("config.toml")).unwrap();
    cfg.output.dir = tmp.path().join("out");
    let err = run_pipeline(&cfg).unwrap_err();
    match &err {
        Error::Stage { stage, source } => {
            assert_eq!(*stage, "clouds");
            assert!(
                matches!(**source, Error::UnknownSample(ref id) if id == "nosuch1234"),
                "{source}"
            );
        }
        other => panic!("unexpected error {other}"),
    }
    let mut names: Vec<String> = std::fs::read_dir(&cfg.output.dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert!(!names.is_empty());
    assert!(names.iter().all(|n| n.ends_with(".partial")), "{names:?}");
    assert!(names.contains(&"table.csv.partial".to_owned()));
    assert!(names.contains(&"coordinates.csv.partial".to_owned()));
}

#[test]
fn preprocessing_outputs_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_fixture(a.path());
    run_fixture(b.path());
    for name in [
        "table.csv",
        "preprocess_report.txt",
        "preprocess_dropped.csv",
    ] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
}
