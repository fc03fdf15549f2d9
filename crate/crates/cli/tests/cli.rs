use std::path::PathBuf;
use std::process::Command;

use abp_cli::catalog::list_catalog;
use abp_cli::config::{parse_config, plan, ConfigError, Overrides};
use abp_cli::report::to_csv;
use abp_cli::{load_config, run_campaign, BUNDLED};
use serde_json::json;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn campaign(checks: serde_json::Value) -> abp_cli::config::CampaignConfig {
    parse_config(&json!({ "schema_version": 1, "name": "t", "checks": checks }).to_string()).unwrap()
}

fn validation_message(checks: serde_json::Value) -> String {
    match plan(&campaign(checks), &Overrides::default()) {
        Err(ConfigError::Validation(m)) => m,
        other => panic!("expected a validation error, got {other:?}"),
    }
}

fn quick_checks() -> serde_json::Value {
    json!([
        { "id": "ids", "module": "symalg", "operation": "newton_identities", "params": { "samples": 50 } },
        { "id": "area", "module": "logsob", "operation": "area_comparison",
          "params": { "surface": { "name": "clifford-torus" }, "resolution": 17 } },
        { "id": "split", "module": "logsob", "operation": "superadditivity", "params": { "samples": 20 }, "seed": 4 }
    ])
}

#[test]
fn listing_names_catalog_entries() {
    let text = list_catalog();
    for name in ["clifford-torus", "peanut-domain", "sharp_m12", "general_m", "euclidean_sphere", "trig-gram", "paper-full"] {
        assert!(text.contains(name), "missing {name}");
    }
    assert_eq!(text, list_catalog());
}

#[test]
fn validation_errors_name_the_offender() {
    let m = validation_message(json!([{ "id": "a", "module": "logsob", "operation": "deficit",
        "params": { "surface": { "name": "donut" }, "resolution": 8 } }]));
    assert!(m.contains("donut"), "{m}");
    let m = validation_message(json!([{ "id": "a", "module": "serre", "operation": "check",
        "params": { "domain": { "name": "disk", "radius": 1.0 }, "resolution": 8, "field": { "name": "swirl" } } }]));
    assert!(m.contains("swirl"), "{m}");
    let m = validation_message(json!([{ "id": "a", "module": "logsob", "operation": "deficit",
        "params": { "surface": { "name": "clifford-torus" }, "resolution": 8, "variant": "sharpest" } }]));
    assert!(m.contains("sharpest"), "{m}");
    assert!(validation_message(json!([{ "id": "a", "module": "topology", "operation": "x" }])).contains("topology"));
    assert!(validation_message(json!([{ "id": "a", "module": "symalg", "operation": "hodge" }])).contains("hodge"));
    let dup = json!([
        { "id": "a", "module": "logsob", "operation": "constant_reduction" },
        { "id": "a", "module": "logsob", "operation": "constant_reduction" }
    ]);
    assert!(validation_message(dup).contains("duplicated"));
    assert!(validation_message(json!([{ "id": "a", "module": "symalg", "operation": "amgm",
        "params": { "samples": 3, "colour": 1 } }]))
    .contains("colour"));
    assert!(validation_message(json!([{ "id": "a", "module": "symalg", "operation": "amgm", "params": { "n_min": 1 } }]))
        .contains("n_min"));
}

#[test]
fn schema_version_and_shape() {
    let cfg = parse_config(r#"{"schema_version": 2, "name": "x", "checks": []}"#).unwrap();
    assert!(matches!(plan(&cfg, &Overrides::default()), Err(ConfigError::Validation(_))));
    assert!(matches!(parse_config(r#"{"name": "x"}"#), Err(ConfigError::Parse(_))));
    assert!(matches!(parse_config(r#"{"schema_version": 1, "name": "x", "extra": 1}"#), Err(ConfigError::Parse(_))));
    assert!(matches!(load_config("/nonexistent/campaign.json"), Err(ConfigError::Parse(_))));
    let bad_scale = Overrides { seed: None, resolution_scale: 0.0 };
    assert!(matches!(plan(&campaign(json!([])), &bad_scale), Err(ConfigError::Validation(_))));
}

#[test]
fn bundled_campaign_validates() {
    for (name, _) in BUNDLED {
        let cfg = load_config(name).unwrap();
        let planned = plan(&cfg, &Overrides::default()).unwrap();
        assert!(!planned.is_empty());
    }
}

#[test]
fn records_follow_config_order_and_are_reproducible() {
    let cfg = campaign(quick_checks());
    let (a, _) = run_campaign(&cfg, &Overrides::default()).unwrap();
    let (b, _) = run_campaign(&cfg, &Overrides::default()).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let ids: Vec<&str> = a.records.iter().map(|r| r.id.as_str()).collect();
    assert_eq!(ids, ["ids", "area", "split"]);
    assert_eq!(a.summary.total, 3);
    assert_eq!(a.summary.passed, 3);
    assert!(a.records.iter().all(|r| r.inputs_digest.len() == 64));
    let csv = to_csv(&a).unwrap();
    assert!(csv.starts_with("check_id,lhs,rhs,deficit,pass\n"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn digest_tracks_effective_inputs() {
    let cfg = campaign(quick_checks());
    let base = plan(&cfg, &Overrides::default()).unwrap();
    let reseeded = plan(&cfg, &Overrides { seed: Some(99), resolution_scale: 1.0 }).unwrap();
    let scaled = plan(&cfg, &Overrides { seed: None, resolution_scale: 2.0 }).unwrap();
    assert_ne!(base[0].canonical_inputs, reseeded[0].canonical_inputs);
    assert!(reseeded.iter().all(|p| p.seed == 99));
    // the identity battery has no grid, the area check does
    assert_eq!(base[0].canonical_inputs, scaled[0].canonical_inputs);
    assert_ne!(base[1].canonical_inputs, scaled[1].canonical_inputs);
    assert!(scaled[1].canonical_inputs.contains("\"resolution\":34"));
    assert_eq!(base[2].seed, 4);
    assert_eq!(base[0].seed, 1);
}

#[test]
fn tolerance_override_and_expectations() {
    let cfg = campaign(json!([
        { "id": "tight", "module": "logsob", "operation": "area_comparison", "tolerance": 0.0,
          "params": { "surface": { "name": "clifford-torus" }, "resolution": 17 } },
        { "id": "wrong-equality", "module": "logsob", "operation": "area_comparison", "expect": { "kind": "equality" },
          "params": { "surface": { "name": "clifford-torus" }, "resolution": 17 } },
        { "id": "equator-equality", "module": "logsob", "operation": "area_comparison", "expect": { "kind": "equality", "abs": 1e-10 },
          "params": { "surface": { "name": "equatorial-sphere", "n": 2, "m": 1 }, "resolution": 16 } },
        { "id": "area-value", "module": "logsob", "operation": "area_comparison",
          "expect": { "kind": "deficit", "target": 7.1719, "abs": 1e-3 },
          "params": { "surface": { "name": "clifford-torus" }, "resolution": 17 } }
    ]));
    let (r, _) = run_campaign(&cfg, &Overrides::default()).unwrap();
    assert!(r.records[0].pass && r.records[0].tolerance == Some(0.0));
    assert!(!r.records[1].pass);
    assert_eq!(r.records[1].metadata["require:expect:equality"], json!(false));
    assert!(r.records[2].pass, "{:?}", r.records[2]);
    assert!(r.records[3].pass, "{:?}", r.records[3]);
    assert_eq!(r.summary.failed, 1);
}

#[test]
fn runtime_errors_become_failing_records() {
    let cfg = campaign(json!([{ "id": "af-torus", "module": "quermass", "operation": "af",
        "params": { "surface": { "name": "torus", "major": 2.0, "minor": 0.5 }, "resolution": 16 } }]));
    let (r, _) = run_campaign(&cfg, &Overrides::default()).unwrap();
    assert_eq!(r.records.len(), 1);
    let rec = &r.records[0];
    assert!(!rec.pass && rec.error.as_deref().unwrap().contains("precondition"), "{rec:?}");
    assert_eq!(rec.check_id, "af-torus::error");
}

fn run_binary(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_abp-verify")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into(), String::from_utf8_lossy(&out.stderr).into())
}

#[test]
fn exit_status_contract() {
    let dir = std::env::temp_dir().join(format!("abp-cli-test-{}", std::process::id()));
    let out = dir.to_str().unwrap();
    let run = |name: &str| run_binary(&["--config", fixture(name).to_str().unwrap(), "--out", out]);
    let (code, _, _) = run("empty.json");
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["summary"], json!({ "total": 0, "passed": 0, "failed": 0 }));
    let (code, _, err) = run("unknown_surface.json");
    assert_eq!(code, 3);
    assert!(err.contains("donut"), "{err}");
    assert_eq!(run("bad_schema.json").0, 3);
    assert_eq!(run("malformed.json").0, 2);
    assert_eq!(run("failing.json").0, 1);
    assert_eq!(run_binary(&["--config", "/nonexistent.json"]).0, 2);
    let (code, listing, _) = run_binary(&["--list"]);
    assert_eq!(code, 0);
    assert!(listing.contains("clifford-torus"));
    let _ = std::fs::remove_dir_all(dir);
}
