use std::path::Path;
use std::process::{Command, Output};

use gdelt_geoclass::synth::{fixture_csv, FixtureConfig};

fn geoclass(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geoclass"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn with_fixture(points: usize) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let csv = fixture_csv(&FixtureConfig { points, ..FixtureConfig::default() }).unwrap();
    std::fs::write(dir.path().join("iraq.csv"), csv).unwrap();
    dir
}

#[test]
fn gen_query_prints_the_listing() {
    let dir = tempfile::tempdir().unwrap();
    let o = geoclass(dir.path(), &["gen-query", "--event", "0"]);
    assert!(o.status.success());
    let sql = stdout(&o);
    assert!(sql.contains("WHERE Actor1Type1Code=\"REF\""));
    assert!(sql.contains("AND (Year> 2011 AND Year < 2016)"));
    assert!(sql.contains("Actor1Geo_Long < 48.48)"));
    let o = geoclass(dir.path(), &["gen-query", "--event", "194"]);
    assert!(stdout(&o).contains("WHERE EventCode=\"194\""));
}

#[test]
fn ingest_and_combos_write_datasets() {
    let dir = with_fixture(2_000);
    let o = geoclass(dir.path(), &["ingest", "--input", "iraq.csv", "--out-dir", "data"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("Total number of records"));
    assert!(dir.path().join("data/full.csv").is_file());
    assert!(dir.path().join("data/full.ingest.json").is_file());

    let o = geoclass(dir.path(), &["combos", "--input", "data/full.csv", "--out-dir", "combos"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("25 combinations"));
    assert!(dir.path().join("combos/0-194.csv").is_file());
    assert!(dir.path().join("combos/73-145-194-202.csv").is_file());
    let leftovers: Vec<_> = std::fs::read_dir(dir.path().join("combos"))
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with(".tmp"))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn train_classify_eval_cv() {
    let dir = with_fixture(4_000);
    let o = geoclass(
        dir.path(),
        &["--deterministic", "train", "--input", "iraq.csv", "--classes", "0,194", "--algorithm", "decision_tree"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = stdout(&o);
    assert!(report.contains("Accuracy:"));
    let model_bytes = std::fs::read(dir.path().join("models/dt-0-194.model")).unwrap();

    let again = geoclass(
        dir.path(),
        &["--deterministic", "train", "--input", "iraq.csv", "--classes", "0,194", "--algorithm", "decision_tree"],
    );
    assert_eq!(stdout(&again), report);
    assert_eq!(std::fs::read(dir.path().join("models/dt-0-194.model")).unwrap(), model_bytes);

    let o = geoclass(dir.path(), &["classify", "--model", "dt-0-194", "--lat", "36.19", "--lon", "44.01"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "0 Refugees\n");

    let o = geoclass(dir.path(), &["eval", "--model", "dt-0-194", "--input", "iraq.csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let acc = |s: &str| s.lines().find(|l| l.starts_with("Accuracy:")).map(str::to_string);
    assert_eq!(acc(&stdout(&o)), acc(&report));

    let o = geoclass(dir.path(), &["cv", "--input", "iraq.csv", "--classes", "0,194", "--algorithm", "knn", "--folds", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("fold  5"));
}

#[test]
fn single_class_training_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("one.csv"), "lat,lon,label\n33.1,44.2,0\n33.2,44.1,0\n").unwrap();
    let o = geoclass(
        dir.path(),
        &["train", "--input", "one.csv", "--classes", "0,194", "--algorithm", "decision_tree"],
    );
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error:"));
    assert!(!dir.path().join("models").exists());
}

#[test]
fn missing_input_and_bad_flags_fail() {
    let dir = tempfile::tempdir().unwrap();
    let o = geoclass(dir.path(), &["ingest", "--input", "absent.csv"]);
    assert!(!o.status.success());
    let o = geoclass(dir.path(), &["classify", "--model", "nope", "--lat", "1", "--lon", "2"]);
    assert!(!o.status.success());
    let o = geoclass(dir.path(), &["gen-query", "--event", "999"]);
    assert!(!o.status.success());
}

#[test]
fn grid_is_reproducible() {
    let dir = with_fixture(1_500);
    let run = |name: &str| {
        let o = geoclass(
            dir.path(),
            &["--deterministic", "grid", "--input", "iraq.csv", "--workers", "2", "--out", name, "--json", &format!("{name}.json")],
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (
            std::fs::read(dir.path().join(name)).unwrap(),
            std::fs::read(dir.path().join(format!("{name}.json"))).unwrap(),
        )
    };
    let a = run("a.txt");
    let b = run("b.txt");
    assert_eq!(a, b);
    let text = String::from_utf8(a.0).unwrap();
    assert_eq!(text.matches("Results of the").count(), 104);
    assert!(text.contains("Selected:"));
}
