use std::fs;
use std::path::{Path, PathBuf};

use svarlab_core::pipeline::{run_pipeline, PipelineConfig, FAILURE_MARKER, MANIFEST};
use svarlab_core::timeseries::load_macro;
use svarlab_core::Error;

fn config(dir: &Path, text: &str) -> PipelineConfig {
    PipelineConfig::parse(text, dir).unwrap()
}

fn manifest_paths(manifest: &str) -> Vec<String> {
    manifest
        .lines()
        .skip(1)
        .map(|l| l.split_once("  ").unwrap().1.to_string())
        .collect()
}

fn all_files(dir: &Path, root: &Path, out: &mut Vec<String>) {
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            all_files(&path, root, out);
        } else {
            out.push(path.strip_prefix(root).unwrap().display().to_string());
        }
    }
}

const SMALL_CHAIN: &str = r#"
seed = 5
out_dir = "out"

[[stage]]
name = "sim"
kind = "simulate"
t = 120

[[stage]]
name = "fit"
kind = "estimate"
data = ["@sim"]
lags = 1
draws = 150

[[stage]]
name = "id"
kind = "identify"
posterior = "@fit"
accepted = 30
max_tries = 500
data = ["@sim"]

[[stage]]
name = "irf"
kind = "irf"
posterior = "@fit"
drawset = "@id"
horizon = 8
"#;

#[test]
fn simulate_only_writes_dataset_shocks_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "seed = 1\n[[stage]]\nname = \"sim\"\nkind = \"simulate\"\nt = 80\n");
    let manifest = run_pipeline(&cfg).unwrap();
    assert_eq!(manifest, tmp.path().join("out").join(MANIFEST));
    let text = fs::read_to_string(&manifest).unwrap();
    assert!(text.starts_with("seed = 1\n"));
    assert_eq!(manifest_paths(&text), ["sim/data.csv", "sim/shocks.csv"]);
    let data = load_macro(&tmp.path().join("out/sim/data.csv"), None).unwrap();
    assert_eq!(data.t(), 80);
    assert_eq!(data.n(), 5);
    let shocks = load_macro(&tmp.path().join("out/sim/shocks.csv"), None).unwrap();
    assert_eq!(shocks.names()[0], "gas");
}

#[test]
fn missing_input_names_the_stage_and_leaves_marker() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"
seed = 3
[[stage]]
name = "sim"
kind = "simulate"
t = 60

[[stage]]
name = "fit"
kind = "estimate"
data = ["nowhere.csv"]
"#;
    let err = run_pipeline(&config(tmp.path(), text)).unwrap_err();
    match &err {
        Error::Stage { stage, cause } => {
            assert_eq!(stage, "fit");
            assert!(cause.contains("nowhere.csv"), "{cause}");
        }
        other => panic!("unexpected error {other}"),
    }
    let out = tmp.path().join("out");
    let marker = fs::read_to_string(out.join(FAILURE_MARKER)).unwrap();
    assert!(marker.contains("`fit`"));
    // the completed stage's outputs are retained and listed
    assert!(out.join("sim/data.csv").exists());
    let manifest = fs::read_to_string(out.join(MANIFEST)).unwrap();
    assert!(manifest_paths(&manifest).contains(&"sim/data.csv".to_string()));
}

#[test]
fn successful_rerun_clears_stale_failure_marker() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    fs::create_dir_all(&out).unwrap();
    fs::write(out.join(FAILURE_MARKER), "old").unwrap();
    let cfg = config(tmp.path(), "seed = 1\n[[stage]]\nname = \"sim\"\nkind = \"simulate\"\nt = 40\n");
    run_pipeline(&cfg).unwrap();
    assert!(!out.join(FAILURE_MARKER).exists());
}

#[test]
fn reruns_reproduce_manifest_and_cover_every_file() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ma = fs::read(run_pipeline(&config(a.path(), SMALL_CHAIN)).unwrap()).unwrap();
    let mb = fs::read(run_pipeline(&config(b.path(), SMALL_CHAIN)).unwrap()).unwrap();
    assert_eq!(ma, mb);

    let text = String::from_utf8(ma).unwrap();
    let mut listed = manifest_paths(&text);
    let mut on_disk = Vec::new();
    let out = a.path().join("out");
    all_files(&out, &out, &mut on_disk);
    on_disk.retain(|p| p != MANIFEST);
    listed.sort();
    on_disk.sort();
    assert_eq!(listed, on_disk);
    assert!(listed.contains(&"irf/irf.csv".to_string()));
    assert!(listed.contains(&"id/shocks.csv".to_string()));
}

#[test]
fn master_seed_changes_outputs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let sim = |seed: u64| format!("seed = {seed}\n[[stage]]\nname = \"sim\"\nkind = \"simulate\"\nt = 40\n");
    run_pipeline(&config(a.path(), &sim(1))).unwrap();
    run_pipeline(&config(b.path(), &sim(2))).unwrap();
    let read = |d: &Path| fs::read(d.join("out/sim/data.csv")).unwrap();
    assert_ne!(read(a.path()), read(b.path()));
}

#[test]
fn explicit_stage_seed_overrides_derivation() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let sim = |seed: u64| format!("seed = {seed}\n[[stage]]\nname = \"sim\"\nkind = \"simulate\"\nt = 40\nseed = 9\n");
    run_pipeline(&config(a.path(), &sim(1))).unwrap();
    run_pipeline(&config(b.path(), &sim(2))).unwrap();
    let read = |d: &Path| fs::read(d.join("out/sim/data.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn config_errors() {
    let dir = PathBuf::from(".");
    let unknown_param = "seed = 1\n[[stage]]\nname = \"sim\"\nkind = \"simulate\"\nlength = 40\n";
    assert!(matches!(PipelineConfig::parse(unknown_param, &dir), Err(Error::Stage { .. })));
    let unknown_kind = "seed = 1\n[[stage]]\nname = \"x\"\nkind = \"plot\"\n";
    assert!(matches!(PipelineConfig::parse(unknown_kind, &dir), Err(Error::Stage { .. })));
    let dup = "seed = 1\n[[stage]]\nname = \"a\"\nkind = \"simulate\"\n[[stage]]\nname = \"a\"\nkind = \"simulate\"\n";
    assert!(matches!(PipelineConfig::parse(dup, &dir), Err(Error::Duplicate(_))));
    assert!(PipelineConfig::parse("out_dir = \"x\"\n", &dir).is_err());
}

#[test]
fn reference_to_later_stage_fails_in_that_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"
seed = 1
[[stage]]
name = "fit"
kind = "estimate"
data = ["@sim"]

[[stage]]
name = "sim"
kind = "simulate"
"#;
    match run_pipeline(&config(tmp.path(), text)) {
        Err(Error::Stage { stage, .. }) => assert_eq!(stage, "fit"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn shipped_config_parses() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/paper_like.toml");
    let cfg = PipelineConfig::load(&path).unwrap();
    assert_eq!(cfg.stages.len(), 9);
    assert!(cfg.base_dir.join("fixtures/survey_panel.csv").exists());
}
