use std::path::Path;
use std::process::{Command, Output};

fn tabtriplet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tabtriplet")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const DATA: &str = "a,b,colour,class\n\
    0.1,1.0,red,x\n0.2,1.1,red,x\n0.3,0.9,blue,x\n0.0,1.2,red,x\n0.15,1.05,blue,x\n\
    0.25,0.95,red,x\n0.05,1.0,blue,x\n0.35,1.1,red,x\n\
    2.0,3.0,blue,y\n2.1,3.1,red,y\n1.9,2.9,blue,y\n2.2,3.2,blue,y\n2.05,2.95,red,y\n";

#[test]
fn run_prints_parseable_report() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "d.csv", DATA);
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"dataset": {"path": "d.csv", "label_column": "class", "categorical": ["colour"]},
            "cv": {"folds": 3}, "classifier": "tree"}"#,
    );
    let out = tabtriplet(&["run", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["n_rows"], 13);
    assert_eq!(report["folds"].as_array().unwrap().len(), 3);
    let f1 = report["summary"]["macro_f1"]["mean"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&f1));
}

#[test]
fn out_flag_writes_json_and_prints_table() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "d.csv", DATA);
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"dataset": {"path": "d.csv", "label_column": "class", "ignore": ["colour"]}, "cv": {"folds": 2}}"#,
    );
    let dest = dir.path().join("r.json");
    let out = tabtriplet(&["run", &cfg, "--out", dest.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("macro_f1"));
    serde_json::from_str::<serde_json::Value>(&std::fs::read_to_string(dest).unwrap()).unwrap();
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "d.csv", DATA);
    let cfg = write(dir.path(), "c.json", r#"{"dataset": {"path": "d.csv", "label_column": "class"}, "epochz": 3}"#);
    let out = tabtriplet(&["run", &cfg]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("epochz"));
}

#[test]
fn representation_with_preprocessor_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "d.csv", DATA);
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"dataset": {"path": "d.csv", "label_column": "class"},
            "representation": "triplet", "preprocessor": "mdo"}"#,
    );
    assert!(!tabtriplet(&["run", &cfg]).status.success());
}

#[test]
fn missing_dataset_fails_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"dataset": {"path": "nope.csv", "label_column": "class"}}"#);
    let out = tabtriplet(&["run", &cfg]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn undeclared_text_column_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "d.csv", DATA);
    let cfg = write(dir.path(), "c.json", r#"{"dataset": {"path": "d.csv", "label_column": "class"}}"#);
    let out = tabtriplet(&["run", &cfg]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn viz_without_representation_writes_original_view_only() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "d.csv", DATA);
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"dataset": {"path": "d.csv", "label_column": "class", "categorical": ["colour"]}}"#,
    );
    let out_dir = dir.path().join("v");
    let out = tabtriplet(&["viz", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("original_pca.csv").exists());
    assert!(!out_dir.join("embedding_pca.csv").exists());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("viz.json")).unwrap()).unwrap();
    assert_eq!(report["encoder"], "none");
}
