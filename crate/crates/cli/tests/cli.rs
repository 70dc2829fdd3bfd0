use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_dchaos"));
    c.env_remove("DCHAOS_OUTPUT_DIR");
    c
}

fn docs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn validator(file: &str) -> jsonschema::Validator {
    let schema: Value = serde_json::from_str(&fs::read_to_string(docs().join(file)).unwrap()).unwrap();
    jsonschema::validator_for(&schema).expect("schema compiles")
}

fn assert_valid(v: &jsonschema::Validator, doc: &Value, what: &str) {
    let errors: Vec<String> = v.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{what}: {errors:?}");
}

fn examples() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(docs().join("examples"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    v.sort();
    v
}

fn listing(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    v.sort();
    v
}

#[test]
fn density_of_evens_is_one_half() {
    let o = run(&["density", "--p", "evens", "--q", "naturals", "--m", "10"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "0.5");
}

#[test]
fn ip_cluster_bound_is_small() {
    let o = run(&["density", "--p", "ip:3,5,9", "--measure", "cluster", "--n", "2", "--m", "8", "--k-bound", "17"]);
    assert!(o.status.success());
    let k: u64 = stdout(&o).trim().parse().unwrap();
    assert!(k <= 17, "k = {k}");
}

#[test]
fn example_configs_match_the_config_schema() {
    let v = validator("config.schema.json");
    for p in examples() {
        let doc: Value = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
        assert_valid(&v, &doc, &p.display().to_string());
    }
}

#[test]
fn runs_are_deterministic_and_reports_validate() {
    let report = validator("report.schema.json");
    let tmp = tempfile::tempdir().unwrap();
    for p in examples() {
        let stem = p.file_stem().unwrap().to_string_lossy().into_owned();
        let dirs: Vec<PathBuf> = (0..2).map(|i| tmp.path().join(format!("{stem}-{i}"))).collect();
        for d in &dirs {
            let o = run(&["run", p.to_str().unwrap(), "--out", d.to_str().unwrap()]);
            assert!(o.status.success(), "{stem}: {}", String::from_utf8_lossy(&o.stderr));
        }
        let names = listing(&dirs[0]);
        assert!(!names.is_empty());
        assert_eq!(names, listing(&dirs[1]), "{stem}");
        for n in &names {
            let a = fs::read(dirs[0].join(n)).unwrap();
            assert_eq!(a, fs::read(dirs[1].join(n)).unwrap(), "{stem}/{n} differs between runs");
            if n.ends_with(".json") {
                let doc: Value = serde_json::from_slice(&a).unwrap();
                assert_valid(&report, &doc, &format!("{stem}/{n}"));
            } else if n.ends_with(".csv") {
                let text = String::from_utf8(a).unwrap();
                assert_eq!(
                    text.lines().next().unwrap(),
                    "checkpoint_m,value_decimal,value_num,value_den,indeterminate_count,mode,threshold,sequence"
                );
            }
        }
    }
}

#[test]
fn sparse_block_example_is_scrambled() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = docs().join("examples/sparse-blocks.json");
    let o = run(&["run", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert!(o.status.success());
    let r: Value = serde_json::from_slice(&fs::read(tmp.path().join("scrambled.json")).unwrap()).unwrap();
    assert_eq!(r["report"]["scrambled"], Value::Bool(true));
    assert_eq!(r["report"]["kind"], "distributional");
    let c: Value = serde_json::from_slice(&fs::read(tmp.path().join("coincidence.json")).unwrap()).unwrap();
    assert_eq!(c["report"]["verified"], 50);
}

#[test]
fn construct_exports_symbol_windows() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("c");
    let o = run(&["construct", "sparse-blocks", "--n", "3", "--window", "0:200000", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let w: Value = serde_json::from_slice(&fs::read(out.join("window.json")).unwrap()).unwrap();
    assert_valid(&validator("report.schema.json"), &w, "window.json");
    let rows = w["report"]["points"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for (i, row) in rows.iter().enumerate() {
        let bytes = fs::read(out.join(format!("point-{i}.bin"))).unwrap();
        assert_eq!(bytes.len(), 200_000);
        let json: Vec<u8> = row.as_array().unwrap().iter().map(|v| v.as_u64().unwrap() as u8).collect();
        assert_eq!(bytes, json);
        // Coordinate 1 is the first block, which carries the selector.
        assert_eq!((bytes[0], bytes[1], bytes[2]), (0, i as u8, 0));
    }
}

#[test]
fn verify_pigeonhole_emits_all_certificates() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("v");
    let o = run(&["verify", "pigeonhole", "--n", "2", "--radius", "5", "--samples", "100", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let r: Value = serde_json::from_slice(&fs::read(out.join("pigeonhole.json")).unwrap()).unwrap();
    assert_eq!(r["report"]["certificates"].as_array().unwrap().len(), 100);
    for c in r["report"]["certificates"].as_array().unwrap() {
        assert_ne!(c["pair"][0], c["pair"][1]);
        assert!(c["distance"]["value"].as_f64().unwrap() < 1.0 / 32.0);
    }
}

#[test]
fn empty_analysis_list_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "empty.json", r#"{"version":1,"tuple":{"construction":"sparse-blocks","n":2}}"#);
    let out = tmp.path().join("out");
    let o = run(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(!out.exists());
}

#[test]
fn schema_violations_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    for (i, body) in [
        r#"{"version":3}"#,
        r#"{"version":1,"analyses":[{"kind":"profile","name":"p","mode":"lower","threshold":0.5}]}"#,
        r#"{"version":1,"analyses":[{"kind":"density","name":"d","measure":"upper","p":"primes","m":3}]}"#,
        "not json",
    ]
    .iter()
    .enumerate()
    {
        let cfg = write_config(tmp.path(), &format!("bad{i}.json"), body);
        assert_eq!(run(&["run", &cfg]).status.code(), Some(2), "{body}");
    }
    assert_eq!(run(&["density", "--p", "evens"]).status.code(), Some(2));
}

#[test]
fn coarse_windows_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "coarse.json",
        r#"{"version":1,"window":2,"schedule":{"geometric":{"from":2,"to":4}},
            "system":{"kind":"full-shift","symbols":2,"sidedness":"two-sided"},
            "tuple":{"construction":"explicit","points":[{"constant":0},{"constant":0}]},
            "analyses":[{"kind":"profile","name":"p","mode":"upper","threshold":0.015625}]}"#,
    );
    let o = run(&["run", &cfg, "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("window of at least"));
}

#[test]
fn windows_past_the_construction_exit_4() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&[
        "construct", "sparse-blocks", "--n", "2", "--blocks", "2", "--window", "0:400000", "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn output_dir_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let env_dir = tmp.path().join("env");
    let cfg = write_config(
        tmp.path(),
        "d.json",
        r#"{"version":1,"output_dir":"ignored","analyses":[{"kind":"density","name":"half","measure":"upper","p":"evens","m":10}]}"#,
    );
    let o = bin()
        .args(["run", &cfg])
        .current_dir(tmp.path())
        .env("DCHAOS_OUTPUT_DIR", &env_dir)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(listing(&env_dir), vec!["half.json"]);
    assert!(!tmp.path().join("ignored").exists());
}

#[test]
fn subcommand_flags_override_the_config() {
    let cfg = docs().join("examples/sparse-blocks.json");
    let o = run(&["profile", "--config", cfg.to_str().unwrap(), "--mode", "lower", "--threshold", "0.5", "--schedule", "6:10"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let p = &r["report"]["profile"];
    assert_eq!(p["mode"], "min-pairwise-below-t");
    assert_eq!(p["points"].as_array().unwrap().len(), 5);
    assert_eq!(p["points"][0]["checkpoint"], "64");

    let o = run(&["classify", "--config", cfg.to_str().unwrap(), "--slack", "0"]);
    assert!(o.status.success());
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["report"]["slack"], 0.0);
    assert_eq!(r["report"]["scrambled"], false);
}
