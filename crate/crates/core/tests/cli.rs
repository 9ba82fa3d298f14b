use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn config(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "configs", name].iter().collect();
    p.to_str().unwrap().to_string()
}

fn locaw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_locaw")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn residual(record: &Value, name: &str) -> f64 {
    record["residuals"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["name"] == name)
        .and_then(|r| r["value"].as_f64())
        .unwrap()
}

#[test]
fn validate_shipped_three_node_system() {
    let out = locaw(&["validate", "--config", &config("three_node.toml")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn every_shipped_config_validates() {
    for name in ["three_node.toml", "diag01.toml", "harmonic_chain.toml"] {
        assert_eq!(
            locaw(&["validate", "--config", &config(name)]).status.code(),
            Some(0),
            "{name}"
        );
    }
}

#[test]
fn spectral_on_diag01_within_mesh() {
    let out = locaw(&[
        "spectral",
        "x",
        "--mesh",
        "0.25",
        "--config",
        &config("diag01.toml"),
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let summary = &v["records"][0];
    assert_eq!(summary["id"], "spectral-summary");
    assert!(residual(summary, "max_error") <= 0.25);
}

#[test]
fn w_star_is_refused() {
    let out = locaw(&["verify", "w-star", "--config", &config("diag01.toml")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("out of scope"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(locaw(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        locaw(&["verify", "nonsense", "--config", &config("diag01.toml")])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        locaw(&["masa", "missing", "--config", &config("diag01.toml")])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(locaw(&["validate"]).status.code(), Some(2));
    assert_eq!(
        locaw(&["validate", "--config", "/nonexistent.toml"]).status.code(),
        Some(2)
    );
    let out = locaw(&[
        "bounded",
        "h",
        "--horizon",
        "21",
        "--config",
        &config("harmonic_chain.toml"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("horizon"));
}

#[test]
fn precondition_failures_carry_module_text() {
    // y is not self-adjoint
    let out = locaw(&["masa", "y", "--config", &config("three_node.toml")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not self-adjoint"));
}

#[test]
fn boundedness_verdicts_on_chain() {
    let c = config("harmonic_chain.toml");
    assert_eq!(locaw(&["bounded", "h", "--config", &c]).status.code(), Some(0));
    assert_eq!(locaw(&["bounded", "u", "--config", &c]).status.code(), Some(0));
    let out = locaw(&["bounded", "l", "--config", &c, "--format", "json"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert!(v["records"][0]["witness"].as_str().unwrap().contains("`11`"));
    assert_eq!(v["exit_status"], 1);
}

#[test]
fn text_and_json_carry_the_same_records() {
    let c = config("three_node.toml");
    let text = String::from_utf8(locaw(&["verify", "theorem1", "--config", &c, "--samples", "10"]).stdout).unwrap();
    let v = json(&locaw(&[
        "verify",
        "theorem1",
        "--config",
        &c,
        "--samples",
        "10",
        "--format",
        "json",
    ]));
    let lines: Vec<&str> = text.lines().filter(|l| l.starts_with('[')).collect();
    let records = v["records"].as_array().unwrap();
    assert_eq!(lines.len(), records.len());
    for (l, r) in lines.iter().zip(records) {
        let tag = if r["passed"].as_bool().unwrap() {
            "[PASS]"
        } else {
            "[FAIL]"
        };
        assert!(l.starts_with(&format!("{tag} {} ", r["id"].as_str().unwrap())), "{l}");
    }
}

#[test]
fn shipped_examples_pass_their_commands() {
    let c = config("three_node.toml");
    for args in [
        vec!["center"],
        vec!["corner", "p"],
        vec!["masa", "x"],
        vec!["commutant", "p,q"],
        vec!["annihilate", "p", "y"],
        vec!["ideal-annihilator", "p"],
        vec!["lemma1", "x", "0.5"],
        vec!["lemma2", "p,q", "x"],
        vec!["spectral", "x"],
        vec!["bounded-part"],
        vec!["verify", "baer"],
        vec!["verify", "kaplansky"],
        vec!["verify", "lattice"],
    ] {
        let mut full = args.clone();
        full.extend(["--config", c.as_str(), "--samples", "10"]);
        let out = locaw(&full);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{args:?}: {}{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn floats_are_written_with_seventeen_digits() {
    let out = locaw(&["spectral", "x", "--config", &config("diag01.toml"), "--format", "json"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let re = text.find("\"value\": ").unwrap();
    let number: String = text[re + 9..]
        .chars()
        .take_while(|c| !matches!(c, ',' | '\n' | '}'))
        .collect();
    let mantissa = number.split('e').next().unwrap();
    assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{number}");
}

#[test]
fn gen_random_output_validates() {
    let dir = std::env::temp_dir().join(format!("locaw-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    for seed in 0..20 {
        let out = locaw(&["gen-random", "--seed", &seed.to_string()]);
        assert_eq!(out.status.code(), Some(0));
        let path = dir.join("sys.toml");
        std::fs::write(&path, &out.stdout).unwrap();
        let v = locaw(&["validate", "--config", path.to_str().unwrap()]);
        assert_eq!(v.status.code(), Some(0), "seed {seed}");
    }
    std::fs::remove_dir_all(&dir).ok();
}
