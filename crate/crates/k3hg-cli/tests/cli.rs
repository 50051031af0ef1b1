//! End to end runs of the `k3hg` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("k3hg-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn run_in(cache: &PathBuf, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_k3hg"))
        .args(args)
        .env("K3HG_CACHE", cache)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn keys(v: &Value) -> Vec<String> {
    v.as_object().unwrap().keys().cloned().collect()
}

#[test]
fn count_reports_the_frozen_value() {
    let cache = scratch_dir("count");
    for mode in ["formula", "koblitz", "brute"] {
        let out = run_in(
            &cache,
            &[
                "count", "--family", "F4", "--psi", "3", "--p", "7", "--mode", mode,
            ],
        );
        assert_eq!(out.status.code(), Some(0));
        let v = json(&out);
        assert_eq!(v["schema"], "k3hg/1");
        assert_eq!(v["count"], "56");
        assert_eq!(v["family"], "F4");
        for key in ["family", "p", "r", "psi", "mode", "count"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }
}

#[test]
fn output_is_deterministic_with_sorted_keys() {
    let cache = scratch_dir("det");
    let args = [
        "verify", "--family", "L4", "--psi", "2", "--p", "11", "--depth", "2",
    ];
    let a = run_in(&cache, &args);
    let b = run_in(&cache, &args);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    let k = keys(&v);
    let mut sorted = k.clone();
    sorted.sort();
    assert_eq!(k, sorted);
    let raw = String::from_utf8(a.stdout).unwrap();
    let pos = |key: &str| raw.find(&format!("\"{key}\"")).unwrap();
    assert!(pos("command") < pos("counts") && pos("counts") < pos("schema"));
    assert_eq!(v["match"], true);
}

#[test]
fn bad_prime_is_an_error_object_with_exit_2() {
    let cache = scratch_dir("bad");
    let out = run_in(
        &cache,
        &["count", "--family", "F4", "--psi", "2", "--p", "5"],
    );
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["error"]["code"], "bad_prime");
    assert_eq!(v["error"]["stage"], "pencils");
    assert_eq!(v["command"], "count");
}

#[test]
fn invalid_field_is_an_error() {
    let cache = scratch_dir("field");
    let out = run_in(&cache, &["field-info", "--p", "9"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(json(&out)["error"]["code"].is_string());
}

#[test]
fn cold_and_warm_cache_agree() {
    let cache = scratch_dir("cache");
    let args = [
        "hsum",
        "--p",
        "5",
        "--r",
        "2",
        "--alpha",
        "1/4,1/2,3/4",
        "--beta",
        "0,0,0",
        "--t-num",
        "2",
    ];
    let cold = run_in(&cache, &args);
    let info = json(&run_in(&cache, &["field-info", "--p", "5", "--r", "2"]));
    let path = PathBuf::from(info["cache_path"].as_str().unwrap());
    assert!(path.starts_with(&cache));
    assert!(path.exists());
    let warm = run_in(&cache, &args);
    assert_eq!(cold.status.code(), Some(0));
    assert_eq!(cold.stdout, warm.stdout);
    std::fs::remove_dir_all(&cache).unwrap();
}

#[test]
fn environment_cache_overrides_the_flag() {
    let env_dir = scratch_dir("env");
    let flag_dir = scratch_dir("flag");
    let out = run_in(
        &env_dir,
        &[
            "--cache-dir",
            flag_dir.to_str().unwrap(),
            "field-info",
            "--p",
            "11",
        ],
    );
    let path = PathBuf::from(json(&out)["cache_path"].as_str().unwrap().to_string());
    assert!(path.starts_with(&env_dir));
}

#[test]
fn csv_output_has_one_row_per_key() {
    let cache = scratch_dir("csv");
    let out = run_in(
        &cache,
        &[
            "--format", "csv", "count", "--family", "L2L2", "--psi", "3", "--p", "11",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("key,value"));
    let rows: Vec<&str> = lines.collect();
    assert!(rows.contains(&"count,148"));
    assert!(rows.contains(&"schema,k3hg/1"));
}

#[test]
fn grid_without_good_primes_is_empty() {
    let cache = scratch_dir("grid");
    let out = run_in(&cache, &["grid", "--primes", "2..3", "--psis", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["results"], Value::Array(vec![]));
    assert_eq!(v["summary"]["total"], 0);
}

#[test]
fn grid_cross_checks_pass() {
    let cache = scratch_dir("grid2");
    let out = run_in(
        &cache,
        &[
            "--threads",
            "1",
            "grid",
            "--families",
            "F4,L4",
            "--primes",
            "7..13",
            "--psis",
            "2,3",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let results = v["results"].as_array().unwrap();
    assert!(!results.is_empty());
    assert_eq!(v["summary"]["failed"], 0);
    assert_eq!(
        v["summary"]["passed"].as_u64().unwrap() as usize,
        results.len()
    );
}

#[test]
fn zeta_at_281_matches_the_table() {
    let cache = scratch_dir("zeta");
    let out = run_in(
        &cache,
        &["zeta", "--family", "F4", "--psi", "18", "--p", "281"],
    );
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let r: Vec<&str> = v["R"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_str().unwrap())
        .collect();
    assert_eq!(r, ["1", "137", "-38497", "-22188041"]);
}

#[test]
fn verify_reports_each_factor_with_its_method() {
    let cache = scratch_dir("verify");
    let out = run_in(
        &cache,
        &[
            "verify", "--family", "F4", "--psi", "3", "--p", "13", "--depth", "2",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let factors = v["rhs_factors"].as_array().unwrap();
    assert!(factors.len() >= 3);
    for f in factors {
        for key in ["label", "method", "poly", "power", "twist", "M"] {
            assert!(f.get(key).is_some(), "factor lacks {key}");
        }
    }
    assert_eq!(v["counts"][0], "320");
}
