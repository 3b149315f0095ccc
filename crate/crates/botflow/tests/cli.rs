use std::path::Path;
use std::process::{Command, Output};

use botflow::cli::expand_grid;
use botflow_core::model::Family;
use botflow_core::HyperParams;

fn botflow(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_botflow"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Writes a small synthetic capture and its feature table into `dir`.
fn prepare(dir: &Path) {
    std::fs::write(
        dir.join("cfg.json"),
        r#"{"n_background_flows": 4000, "n_background_sources": 600, "n_botnet_sources": 2, "duration_secs": 900}"#,
    )
    .unwrap();
    stdout(&botflow(dir, &["synth", "--config", "cfg.json", "-o", "flows.csv"]));
    stdout(&botflow(dir, &["extract", "flows.csv", "-o", "features.csv"]));
}

#[test]
fn pipeline_from_synthesis_to_evaluation() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    prepare(dir);

    let summary = stdout(&botflow(dir, &["summarize", "flows.csv"]));
    assert!(summary.contains("# command: summarize"));
    assert!(summary.contains("Dur"));

    let features = std::fs::read_to_string(dir.join("features.csv")).unwrap();
    let header = features.lines().next().unwrap();
    assert!(header.starts_with("window_index,src_addr,label,counts,"), "{header}");
    assert_eq!(header.split(',').count(), 3 + botflow_core::FEATURE_COUNT);

    stdout(&botflow(
        dir,
        &["train", "features.csv", "--model", "logreg", "-o", "model.json"],
    ));
    let model: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("model.json")).unwrap()).unwrap();
    assert_eq!(model["family"], "logreg");

    let eval = stdout(&botflow(
        dir,
        &["eval", "features.csv", "--model-file", "model.json", "--runs", "3"],
    ));
    assert!(eval.contains("# runs: 3"));
    assert!(eval.contains("Test f1"));
    assert!(eval.lines().any(|l| l.contains(" mean ")));
    assert!(eval.lines().any(|l| l.contains(" std ")));

    let csv = stdout(&botflow(
        dir,
        &[
            "--format",
            "csv",
            "eval",
            "features.csv",
            "--model",
            "rf",
            "--trees",
            "10",
        ],
    ));
    let table: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(
        table[0],
        "Botnet,Size,Botnet‰,Stat,Train P,Train R,Train f1,Test P,Test R,Test f1"
    );
    assert_eq!(table.len(), 3);
}

#[test]
fn sweep_crossscen_bootstrap_and_select() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    prepare(dir);

    let sweep = stdout(&botflow(
        dir,
        &[
            "sweep",
            "features.csv",
            "--model",
            "gboost",
            "--grid",
            "n_trees=3,6",
            "--grid",
            "max_depth=1,2",
        ],
    ));
    for label in [
        "n_trees=3;max_depth=1",
        "n_trees=3;max_depth=2",
        "n_trees=6;max_depth=1",
        "n_trees=6;max_depth=2",
    ] {
        assert!(sweep.contains(label), "{label} missing from\n{sweep}");
    }

    let cross = stdout(&botflow(
        dir,
        &[
            "crossscen",
            "--train",
            "features.csv",
            "--test",
            "features.csv",
            "--model",
            "rf",
            "--trees",
            "5",
        ],
    ));
    assert!(cross.contains("# command: crossscen"));

    let boot = stdout(&botflow(
        dir,
        &[
            "bootstrap-eval",
            "features.csv",
            "--factor",
            "2",
            "--trees",
            "5",
            "--runs",
            "2",
        ],
    ));
    assert!(boot.contains("# factor: 2"), "{boot}");

    stdout(&botflow(
        dir,
        &["select", "features.csv", "--method", "filter", "--out-dir", "sel"],
    ));
    assert!(dir.join("sel/correlation.csv").exists());
    assert!(dir.join("sel/label_correlation.csv").exists());
    stdout(&botflow(
        dir,
        &["select", "features.csv", "--method", "pca", "--out-dir", "sel"],
    ));
    assert!(dir.join("sel/pca_projection.csv").exists());
    assert!(dir.join("sel/pca_loadings.csv").exists());
    stdout(&botflow(
        dir,
        &[
            "select",
            "features.csv",
            "--method",
            "importance",
            "--trees",
            "5",
            "--out-dir",
            "sel",
        ],
    ));
    assert!(dir.join("sel/importance.csv").exists());
}

#[test]
fn exit_codes_separate_usage_and_runtime_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let code = |args: &[&str]| botflow(dir, args).status.code();
    assert_eq!(code(&["--help"]), Some(0));
    assert_eq!(code(&["frobnicate"]), Some(2));
    assert_eq!(code(&["train"]), Some(2));
    assert_eq!(code(&["summarize", "missing.csv"]), Some(1));
    prepare(dir);
    assert_eq!(code(&["--threads", "0", "summarize", "flows.csv"]), Some(2));
    assert_eq!(
        code(&[
            "train",
            "features.csv",
            "--model",
            "rf",
            "--set",
            "alpha=1",
            "-o",
            "m.json"
        ]),
        Some(2)
    );
    assert_eq!(code(&["bootstrap-eval", "features.csv", "--factor", "0"]), Some(2));
    assert_eq!(
        code(&["sweep", "features.csv", "--model", "rf", "--grid", "trees"]),
        Some(2)
    );
    assert_eq!(code(&["eval", "features.csv", "--model-file", "missing.json"]), Some(1));
    std::fs::write(dir.join("bad.json"), "{\"duration_secs\": 10}").unwrap();
    // Out-of-range config values are reported like bad arguments.
    assert_eq!(code(&["synth", "--config", "bad.json", "-o", "x.csv"]), Some(2));
    std::fs::write(dir.join("broken.json"), "{").unwrap();
    assert_eq!(code(&["synth", "--config", "broken.json", "-o", "x.csv"]), Some(1));
}

#[test]
fn grid_expansion_is_a_cartesian_product() {
    let base = HyperParams::default_for(Family::LinearSvm);
    let points = expand_grid(&base, &["alpha=1e-4,1e-3".into(), "penalty=l1,l2,elasticnet".into()]).unwrap();
    let labels: Vec<&str> = points.iter().map(|(l, _)| l.as_str()).collect();
    assert_eq!(labels.len(), 6);
    assert_eq!(labels[0], "alpha=1e-4;penalty=l1");
    assert_eq!(labels[5], "alpha=1e-3;penalty=elasticnet");
    let HyperParams::LinearSvm(p) = &points[4].1 else {
        panic!("family changed")
    };
    assert_eq!(p.alpha, 1e-3);
    assert!(expand_grid(&base, &["trees=1".into()]).is_err());
    assert!(expand_grid(&base, &["alpha=".into()]).is_err());
}
