use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("examples")
        .join(name)
}

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lcm-dilate-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lcm-dilate"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn fixtures_report_their_documented_verdicts() {
    let expected = [
        ("cuntz_m2.json", 0),
        ("doubly_commuting.json", 0),
        ("nica_violating.json", 1),
        ("popescu_row.json", 0),
        ("row_contraction.json", 0),
        ("sznagy_half.json", 0),
        ("transpose_boundary.json", 1),
        ("transpose_flat.json", 1),
        ("uhf_not_ideal.json", 1),
    ];
    for (name, want) in expected {
        let path = example(name);
        let o = run(&["report", path.to_str().unwrap()]);
        assert_eq!(code(&o), want, "{name}:\n{}{}", stdout(&o), stderr(&o));
        let overall = if want == 0 {
            "# overall PASS"
        } else {
            "# overall FAIL"
        };
        assert!(stdout(&o).contains(overall), "{name}:\n{}", stdout(&o));
    }
}

#[test]
fn truncated_json_is_a_schema_error_with_a_pointer() {
    let dir = scratch_dir("truncated");
    let text = std::fs::read_to_string(example("cuntz_m2.json")).unwrap();
    let cut = dir.join("cut.json");
    std::fs::write(&cut, &text[..60]).unwrap();
    let o = run(&["validate", cut.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains(": /"), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
}

#[test]
fn wrong_type_names_the_offending_field() {
    let dir = scratch_dir("wrong-type");
    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"semigroup": 5}"#).unwrap();
    let o = run(&["validate", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("/semigroup"), "{}", stderr(&o));
}

#[test]
fn missing_file_exits_with_usage_code() {
    let o = run(&["validate", "/nonexistent/instance.json"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn scalar_contraction_dilates_at_depth_four() {
    let path = example("sznagy_half.json");
    let o = run(&["dilate", path.to_str().unwrap(), "--depth", "4"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("depth=4"));
}

#[test]
fn nica_violation_prints_subset_and_eigenvalue() {
    let path = example("nica_violating.json");
    let o = run(&["check-nica", path.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let out = stdout(&o);
    assert!(out.contains("F={"), "{out}");
    assert!(out.contains("eigenvalue -"), "{out}");
}

#[test]
fn non_ideal_stage_map_fails_validation() {
    let path = example("uhf_not_ideal.json");
    let o = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("image not an ideal"), "{}", stdout(&o));
}

#[test]
fn transpose_is_refused_by_dilate() {
    let path = example("transpose_flat.json");
    let o = run(&["dilate", path.to_str().unwrap()]);
    assert_eq!(code(&o), 1, "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn stored_result_verifies_against_its_instance() {
    let dir = scratch_dir("verify");
    let result = dir.join("cuntz.result.json");
    let inst = example("cuntz_m2.json");
    let o = run(&[
        "dilate",
        inst.to_str().unwrap(),
        "--result",
        result.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(result.exists());
    let o = run(&[
        "verify",
        inst.to_str().unwrap(),
        "--result",
        result.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));

    let other = example("sznagy_half.json");
    let o = run(&[
        "verify",
        other.to_str().unwrap(),
        "--result",
        result.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
    assert!(
        stderr(&o).contains("was computed for instance"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn verify_without_result_is_a_usage_error() {
    let inst = example("cuntz_m2.json");
    let o = run(&["verify", inst.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn report_hash_is_reproducible() {
    let inst = example("doubly_commuting.json");
    let hash = || {
        let o = run(&["report", "--format", "json", inst.to_str().unwrap()]);
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        v["report_hash"].as_str().unwrap().to_owned()
    };
    let a = hash();
    assert_eq!(a.len(), 64);
    assert_eq!(a, hash());
}

#[test]
fn json_report_carries_checks_and_verdict() {
    let inst = example("nica_violating.json");
    let o = run(&["check-nica", "--format", "json", inst.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["command"], "check-nica");
    assert_eq!(v["passed"], false);
    let checks = v["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    let failing = checks.iter().find(|c| c["verdict"] == "FAIL").unwrap();
    assert!(failing["value"].as_f64().unwrap() < 0.0);
    assert!(failing["witness"].as_str().unwrap().contains("F={"));
}

#[test]
fn seed_and_depth_flags_reach_the_report() {
    let inst = example("doubly_commuting.json");
    let o = run(&[
        "check-nica",
        "--format",
        "json",
        "--seed",
        "7",
        "--depth",
        "1",
        inst.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["seed"], 7);
    assert_eq!(v["depth"], 1);
}

#[test]
fn resource_cap_is_a_usage_error() {
    let inst = example("cuntz_m2.json");
    let o = run(&["dilate", inst.to_str().unwrap(), "--max-dim", "4"]);
    assert_eq!(code(&o), 2, "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn batch_writes_one_report_per_instance() {
    let dir = scratch_dir("batch");
    let out = dir.join("reports");
    let a = example("sznagy_half.json");
    let b = example("nica_violating.json");
    let o = run(&[
        "check-nica",
        "--jobs",
        "2",
        "--output",
        out.to_str().unwrap(),
        a.to_str().unwrap(),
        b.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
    let good = std::fs::read_to_string(out.join("sznagy_half.check-nica.txt")).unwrap();
    let bad = std::fs::read_to_string(out.join("nica_violating.check-nica.txt")).unwrap();
    assert!(good.contains("# overall PASS"));
    assert!(bad.contains("# overall FAIL"));
}

#[test]
fn batch_exit_code_is_the_worst_job() {
    let a = example("sznagy_half.json");
    let o = run(&["validate", a.to_str().unwrap(), "/nonexistent/x.json"]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("# overall PASS"));
}

#[test]
fn schema_lists_every_field_the_examples_use() {
    let schema_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/instance.schema.json");
    let schema: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(schema_path).unwrap()).unwrap();
    let props = schema["properties"].as_object().unwrap();
    for entry in std::fs::read_dir(example("")).unwrap() {
        let path = entry.unwrap().path();
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        for key in v.as_object().unwrap().keys() {
            assert!(props.contains_key(key), "{}: {key}", path.display());
        }
        let model = v["model"].as_str().unwrap();
        assert!(schema["properties"]["model"]["enum"]
            .as_array()
            .unwrap()
            .iter()
            .any(|m| m == model));
    }
}
