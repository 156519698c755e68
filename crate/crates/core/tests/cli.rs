use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparse-blocks"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn prefix(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

#[test]
fn words_json_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = prefix(dir.path(), "w");
    let o = cli(&["words", "--p-max", "4", "--format", "json", "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let produced = std::fs::read_to_string(format!("{out}.words.json")).unwrap();
    let golden = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/tests/data/words_p4.json"
    ))
    .unwrap();
    assert_eq!(produced, golden);
}

#[test]
fn sample_spectrum_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let common = [
        "--n",
        "50",
        "--z",
        "4",
        "--d",
        "2",
        "--realizations",
        "2",
        "--seed",
        "11",
    ];
    let mut files = Vec::new();
    for (name, jobs) in [("a", "1"), ("b", "2")] {
        let out = prefix(dir.path(), name);
        let mut args = vec!["sample-spectrum", "--out", &out, "--jobs", jobs];
        args.extend_from_slice(&common);
        let o = cli(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        files.push((
            std::fs::read(format!("{out}.sample-spectrum.csv")).unwrap(),
            std::fs::read(format!("{out}.sample-spectrum.histogram.csv")).unwrap(),
        ));
    }
    assert_eq!(files[0], files[1]);
    assert!(!files[0].0.is_empty());
}

#[test]
fn theory_header_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = prefix(dir.path(), "th");
    let o = cli(&[
        "theory",
        "--kind",
        "laplacian",
        "--t",
        "2",
        "--format",
        "json",
        "--out",
        &out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(format!("{out}.theory.json")).unwrap())
            .unwrap();
    let header = &report["results"]["header"];
    assert!(header["lower"].as_f64().unwrap().abs() < 1e-12);
    assert!((header["upper"].as_f64().unwrap() - 8.0).abs() < 1e-12);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(format!("{out}.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["config_hash"], report["config_hash"]);
    assert_eq!(manifest["seed"], 42);
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# scalar check\nn = 40\nz = 3\nd = 1\nrealizations = 2\np_max = 4\nseed = 5\n",
    )
    .unwrap();
    let out = prefix(dir.path(), "m");
    let o = cli(&[
        "moments",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "6",
        "--out",
        &out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(format!("{out}.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["seed"], 6);
    let csv = std::fs::read_to_string(format!("{out}.moments.csv")).unwrap();
    assert!(csv.starts_with("p,mu,stderr,theory,z\n0,1.0,"));
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = prefix(dir.path(), "e");
    assert_eq!(
        cli(&["moments", "--n", "lots", "--out", &out])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(cli(&["nonsense", "--out", &out]).status.code(), Some(2));
    assert_eq!(
        cli(&["moments", "--realizations", "0", "--out", &out])
            .status
            .code(),
        Some(2)
    );
    let o = cli(&[
        "sample-spectrum",
        "--n",
        "100",
        "--z",
        "4",
        "--d",
        "4",
        "--dense-limit",
        "50",
        "--out",
        &out,
    ]);
    assert_eq!(o.status.code(), Some(3));
    let o = cli(&[
        "sample-spectrum",
        "--n",
        "40",
        "--z",
        "4",
        "--d",
        "2",
        "--realizations",
        "1",
        "--ks-max",
        "0",
        "--check",
        "--out",
        &out,
    ]);
    assert_eq!(o.status.code(), Some(4));
}
