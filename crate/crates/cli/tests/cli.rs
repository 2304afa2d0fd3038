// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn tlsim(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tlsim"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], out: &Path) {
    let o = tlsim(args, out);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn yield_sweep_csv_shape() {
    let d = tempfile::tempdir().unwrap();
    ok(
        &[
            "yield",
            "--axis",
            "n",
            "--values",
            "1,20,40,60",
            "--trials",
            "1000",
            "--seed",
            "7",
        ],
        d.path(),
    );
    let csv = read(d.path(), "yield.csv");
    let data: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(data[0].starts_with("axis_value,n,m,sigma_rel"));
    assert_eq!(data.len(), 5);
    assert!(csv.contains("seed=7"));
}

#[test]
fn stochastic_outputs_are_byte_identical_across_threads() {
    let runs: Vec<_> = [1usize, 4, 4]
        .iter()
        .map(|&t| {
            let d = tempfile::tempdir().unwrap();
            let threads = t.to_string();
            let base = ["--threads", threads.as_str(), "--seed", "11"];
            ok(
                &[
                    &base[..],
                    &["yield", "--axis", "sigma", "--values", "0,0.5,1.2", "--trials", "300"],
                ]
                .concat(),
                d.path(),
            );
            ok(&[&base[..], &["mac-check", "--instances", "6"]].concat(), d.path());
            let fixture = fixtures().join("mlp");
            ok(
                &[
                    &base[..],
                    &[
                        "accuracy",
                        "--fixture",
                        fixture.to_str().unwrap(),
                        "--rates",
                        "0,0.1",
                        "--seeds",
                        "2",
                    ],
                ]
                .concat(),
                d.path(),
            );
            ["yield.csv", "mac_check.json", "accuracy.csv", "accuracy.json"].map(|f| read(d.path(), f))
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[1], runs[2]);
}

#[test]
fn density_table_values() {
    let d = tempfile::tempdir().unwrap();
    let model = fixtures().join("models/resnet18.json");
    ok(&["density", "--model", model.to_str().unwrap()], d.path());
    let csv = read(d.path(), "density.csv");
    assert!(csv.lines().any(|l| l.starts_with("TL-nvSRAM") && l.contains("60.47")));
    assert!(csv.lines().any(|l| l.starts_with("SL-nvSRAM") && l.contains("7.7253")));
    let area: serde_json::Value = serde_json::from_str(&read(d.path(), "area.json")).unwrap();
    assert_eq!(area["report"]["area"]["tl_arrays"], 6);
    assert_eq!(area["report"]["area"]["sl_arrays"], 76);
}

#[test]
fn perf_two_ledgers_and_ratio() {
    let d = tempfile::tempdir().unwrap();
    let model = fixtures().join("models/resnet18.json");
    ok(
        &["perf", "--arch", "TL,baseline1", "--model", model.to_str().unwrap()],
        d.path(),
    );
    let doc: serde_json::Value = serde_json::from_str(&read(d.path(), "perf.json")).unwrap();
    assert_eq!(doc["report"]["ledgers"].as_array().unwrap().len(), 2);
    let r = doc["report"]["tl_efficiency_ratio"]["baseline1"].as_f64().unwrap();
    assert!((2.3..=3.1).contains(&r), "{r}");
    let csv = read(d.path(), "perf.csv");
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 3);
}

#[test]
fn map_writes_placement_and_capacity() {
    let d = tempfile::tempdir().unwrap();
    let model = fixtures().join("models/vgg9.json");
    ok(&["map", "--model", model.to_str().unwrap()], d.path());
    let cap: serde_json::Value = serde_json::from_str(&read(d.path(), "capacity.json")).unwrap();
    assert_eq!(cap["report"]["tl"]["subarrays_needed"], 2);
    let placement: serde_json::Value = serde_json::from_str(&read(d.path(), "placement.json")).unwrap();
    assert!(!placement["report"]["blocks"].as_array().unwrap().is_empty());
}

#[test]
fn exit_codes_and_structured_errors() {
    let d = tempfile::tempdir().unwrap();

    let o = tlsim(&["yield", "--axis", "n", "--values", "1"], d.path());
    assert_eq!(o.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "validation");

    let bad = d.path().join("bad.json");
    std::fs::write(&bad, r#"{"device":{"lrs":1}}"#).unwrap();
    let o = tlsim(&["--config", bad.to_str().unwrap(), "density"], d.path());
    assert_eq!(o.status.code(), Some(1));

    let collapse = d.path().join("collapse.json");
    std::fs::write(
        &collapse,
        r#"{"device":{"sel_insulating_ohms":1e-3,"sel_metallic_ohms":1e-4}}"#,
    )
    .unwrap();
    let o = tlsim(
        &[
            "--config",
            collapse.to_str().unwrap(),
            "--seed",
            "1",
            "yield",
            "--axis",
            "n",
            "--values",
            "60",
        ],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "model_failure");

    let model = fixtures().join("models/resnet18.json");
    let o = tlsim(
        &["map", "--model", model.to_str().unwrap(), "--subarrays", "1"],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_seed_and_hash_echo() {
    let d = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/calibrated.json");
    ok(
        &[
            "--config",
            cfg.to_str().unwrap(),
            "yield",
            "--axis",
            "n",
            "--values",
            "1,60",
            "--trials",
            "500",
        ],
        d.path(),
    );
    let csv = read(d.path(), "yield.csv");
    assert!(csv.contains("seed=7"));
    let default = tempfile::tempdir().unwrap();
    ok(
        &[
            "--seed", "7", "yield", "--axis", "n", "--values", "1,60", "--trials", "500",
        ],
        default.path(),
    );
    let hash = |s: &str| s.split("config_sha256=").nth(1).unwrap()[..64].to_string();
    assert_ne!(hash(&csv), hash(&read(default.path(), "yield.csv")));
}
