mod common;

use std::path::Path;
use std::process::Command;

fn run(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_nncs-reach"))
        .args(args)
        .current_dir(common::repo_root())
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn errors_exit_with_two() {
    assert_eq!(run(&["forward", "--config", "scenarios/missing.json"]), 2);
    assert_eq!(run(&["frobnicate"]), 2);
    assert_eq!(run(&["forward", "--config", "scenarios/taxi.json", "--engine", "magic"]), 2);
    assert_eq!(run(&["forward", "--config", "scenarios/taxi.json", "--engine", "baseline", "--m", "2"]), 2);
}

#[test]
fn forward_outputs_are_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let out = d.path().to_str().unwrap();
        assert_eq!(run(&["forward", "--config", "scenarios/taxi.json", "--output-dir", out]), 0);
    }
    for name in ["forward.json", "forward.csv"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
    let doc: serde_json::Value = serde_json::from_slice(&read(a.path(), "forward.json")).unwrap();
    assert_eq!(doc["is_safe"], true);
    assert!(doc["converged_at"].is_u64());
}

#[test]
fn backward_simulate_and_maps_are_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let out = d.path().to_str().unwrap();
        assert_eq!(run(&["backward", "--config", "scenarios/brake_fine.json", "--m", "2", "--output-dir", out]), 1);
        assert_eq!(run(&["simulate", "--config", "scenarios/brake_fine.json", "--runs", "40", "--output-dir", out]), 1);
        assert_eq!(run(&["maps", "--config", "scenarios/pole.json", "--output-dir", out]), 0);
    }
    for name in ["backward.json", "safe.csv", "simulate.json", "maps.json"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
    let doc: serde_json::Value = serde_json::from_slice(&read(a.path(), "backward.json")).unwrap();
    assert!(doc["safe"].as_array().unwrap().iter().any(|c| c == &serde_json::json!([24, 0])));
}

#[test]
fn pole_scenario_is_reported_unsafe() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run(&["forward", "--config", "scenarios/pole.json", "--output-dir", d.path().to_str().unwrap()]), 1);
    let doc: serde_json::Value = serde_json::from_slice(&read(d.path(), "forward.json")).unwrap();
    assert!(!doc["unverifiable"].as_array().unwrap().is_empty());
}

/// Set `UPDATE_GOLDENS=1` to rewrite the pinned files after an intended
/// change.
#[test]
fn outputs_match_pinned_goldens() {
    let update = std::env::var_os("UPDATE_GOLDENS").is_some();
    for (args, produced, golden) in common::CLI_GOLDENS {
        let d = tempfile::tempdir().unwrap();
        let code = common::run_cli(args, d.path());
        assert!(code == 0 || code == 1, "{args:?} exited with {code}");
        let got = read(d.path(), produced);
        let path = common::golden_dir().join(golden);
        if update {
            std::fs::write(&path, &got).unwrap();
        }
        assert!(got == std::fs::read(&path).unwrap(), "{golden} differs from the pinned output");
    }
}
