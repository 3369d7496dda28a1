use std::path::PathBuf;

use boson_lr::scenario::{parse_config, run_config_file, run_config_str, RunOptions};
use boson_lr::Error;

fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn example_configs() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(scenario_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    v.sort();
    v
}

#[test]
fn every_example_runs_without_failures() {
    let configs = example_configs();
    assert_eq!(configs.len(), 11);
    for path in configs {
        let text = std::fs::read_to_string(&path).unwrap();
        let out = run_config_str(&text, &RunOptions { seed: Some(3), ..Default::default() })
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(!out.report.rows.is_empty(), "{}", path.display());
        assert_eq!(out.failed(), 0, "{}", path.display());
        let csv = String::from_utf8(out.csv_bytes().unwrap()).unwrap();
        assert_eq!(csv.lines().next().unwrap(), out.report.header.join(","));
        assert_eq!(csv.lines().count(), out.report.rows.len() + 1);
    }
}

#[test]
fn reports_independent_of_thread_count() {
    for name in ["moment_check.toml", "tail_check.toml", "approx_sweep.toml"] {
        let text = std::fs::read_to_string(scenario_dir().join(name)).unwrap();
        let run = |threads| {
            let opts = RunOptions { seed: Some(11), threads: Some(threads), ..Default::default() };
            let out = run_config_str(&text, &opts).unwrap();
            (out.csv_bytes().unwrap(), out.json_string().unwrap())
        };
        assert_eq!(run(1), run(3), "{name}");
    }
}

#[test]
fn seed_changes_random_operator() {
    let text = r#"
        [lattice]
        kind = "chain"
        dims = [5]
        [basis]
        cutoff = 2
        sector = 2
        [model]
        j = 1.0
        u = 1.0
        [scenario]
        kind = "lightcone-map"
        times = [0.5]
        operator = { kind = "random-unitary", site = 0 }
    "#;
    let run = |seed| run_config_str(text, &RunOptions { seed: Some(seed), ..Default::default() }).unwrap();
    assert_eq!(run(1).csv_bytes().unwrap(), run(1).csv_bytes().unwrap());
    assert_ne!(run(1).csv_bytes().unwrap(), run(2).csv_bytes().unwrap());
}

#[test]
fn empty_grid_writes_header_only() {
    let text = r#"
        [lattice]
        kind = "chain"
        dims = [4]
        [basis]
        cutoff = 2
        [model]
        j = 1.0
        [scenario]
        kind = "moment-check"
        times = []
    "#;
    let out = run_config_str(text, &RunOptions::default()).unwrap();
    assert_eq!(out.csv_bytes().unwrap(), b"scenario,i,s,t,M_probe,M_bound,log_M_bound,pass\n");
    assert_eq!(out.json_string().unwrap(), "[]");
}

#[test]
fn config_errors_are_reported() {
    let unknown = "[lattice]\nkind = \"chain\"\ndims = [3]\ncolour = 1\n[basis]\ncutoff = 1\n[scenario]\nkind = \"fs-check\"\n";
    match parse_config(unknown) {
        Err(Error::Config(msg)) => assert!(msg.contains("colour"), "{msg}"),
        other => panic!("expected config error, got {other:?}"),
    }
    let bad_kind = "[lattice]\nkind = \"chain\"\ndims = [3]\n[basis]\ncutoff = 1\n[scenario]\nkind = \"nope\"\n";
    assert!(matches!(parse_config(bad_kind), Err(Error::Config(_))));
}

#[test]
fn file_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions { out: Some(dir.path().to_path_buf()), ..Default::default() };
    let (out, files) = run_config_file(&scenario_dir().join("fs_check.toml"), &opts).unwrap();
    assert_eq!(files.len(), 3);
    for f in &files {
        assert!(f.starts_with(dir.path()) && f.exists(), "{}", f.display());
    }
    let csv = std::fs::read(dir.path().join("fs-check.csv")).unwrap();
    assert_eq!(csv, out.csv_bytes().unwrap());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fs-check.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["scenario"], "fs-check");
    assert_eq!(manifest["failed"], 0);
}
