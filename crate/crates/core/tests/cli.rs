use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loophom")).args(args).env_remove("LOOPHOM_SIZE_CAP").output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn error_code(out: &Output) -> (i32, String) {
    let v: Value = serde_json::from_slice(&out.stderr).expect("json on stderr");
    (out.status.code().unwrap(), v["error"]["code"].as_str().unwrap().to_string())
}

#[test]
fn compute_hyperbolic_five_matches_sphere_products() {
    let out = run(&["compute", "--preset", "hyperbolic", "--n", "5", "--genus", "1", "--ring", "Q", "--max-degree", "14", "--format", "json"]);
    let v = stdout_json(&out);
    let totals: Vec<(u64, u64)> =
        v["totals"].as_array().unwrap().iter().map(|t| (t["degree"].as_u64().unwrap(), t["free_rank"].as_u64().unwrap())).filter(|t| t.1 > 0).collect();
    // (1 + t^5)^2 / (1 - t^4)^2 up to t^14
    assert_eq!(totals, vec![(0, 1), (4, 2), (5, 2), (8, 3), (9, 4), (10, 1), (12, 4), (13, 6), (14, 2)]);
    assert_eq!(v["poincare_series"], "1 + 2t^4 + 2t^5 + 3t^8 + 4t^9 + t^10 + 4t^12 + 6t^13 + 2t^14");
    assert_eq!(v["metadata"]["tool"], "loophom");
    assert_eq!(v["verification"]["euler"]["passed"], true);
}

#[test]
fn compute_hyperbolic_six_over_z_has_klein_torsion() {
    let out = run(&["compute", "--preset", "hyperbolic", "--n", "6", "--genus", "1", "--ring", "Z", "--max-degree", "12", "--format", "json"]);
    let v = stdout_json(&out);
    let row = v["homology"].as_array().unwrap().iter().find(|r| r["degree"] == 10).expect("degree 10 row");
    assert_eq!(row["summand"], "Q");
    assert_eq!(row["free_rank"], 1);
    assert_eq!(row["torsion"], serde_json::json!([2, 2]));
}

#[test]
fn excluded_dimension_exits_two() {
    let out = run(&["compute", "--matrix", "[[1]]", "--n", "4", "--ring", "Z"]);
    assert_eq!(error_code(&out), (2, "ExcludedDimension".into()));
    assert!(out.stdout.is_empty());
}

#[test]
fn forced_dimension_runs() {
    let out = run(&["compute", "--matrix", "[[1]]", "--n", "4", "--force", "--max-degree", "9", "--format", "json"]);
    let v = stdout_json(&out);
    assert!(!v["metadata"]["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn bv_rows_for_hyperbolic_five() {
    let out = run(&["bv", "--preset", "hyperbolic", "--n", "5", "--genus", "1", "--max-degree", "12", "--format", "json"]);
    let v = stdout_json(&out);
    let lines: Vec<String> = ["q_rows", "w_rows"]
        .iter()
        .flat_map(|k| v["bv"][k].as_array().unwrap().clone())
        .map(|r| format!("{} ↦ {}", r["input"].as_str().unwrap(), r["output"].as_str().unwrap()))
        .collect();
    assert!(lines.contains(&"Q[u1u2] ↦ a1⊗u2 + a2⊗u1".to_string()), "{lines:?}");
    assert!(lines.contains(&"W[a1⊗u2] ↦ [M]⊗1".to_string()), "{lines:?}");
}

#[test]
fn bv_rejects_even_n_and_non_rational_rings() {
    let out = run(&["bv", "--preset", "hyperbolic", "--n", "6", "--genus", "1", "--max-degree", "12"]);
    assert_eq!(error_code(&out), (2, "ParityUnsupported".into()));
    let out = run(&["bv", "--preset", "hyperbolic", "--n", "5", "--genus", "1", "--ring", "Z", "--max-degree", "12"]);
    assert_eq!(error_code(&out).0, 2);
}

#[test]
fn verify_passes_on_hyperbolic_forms() {
    for n in ["5", "6"] {
        let out = run(&["verify", "--preset", "hyperbolic", "--n", n, "--genus", "1"]);
        let v = stdout_json(&out);
        assert_eq!(v["passed"], true);
        let names: Vec<&str> = v["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
        for expected in ["composites", "euler/Q", "euler/F2", "ucoeff/F2", "ucoeff/F3", "ucoeff/F5", "base_change/seed0", "permutation/reverse"] {
            assert!(names.contains(&expected), "{names:?}");
        }
    }
}

#[test]
fn verify_random_seed_sweep() {
    for seed in ["1", "2"] {
        let out = run(&["verify", "--random", seed, "--n", "7", "--m", "4", "--max-length", "4", "--max-degree", "24"]);
        assert_eq!(stdout_json(&out)["passed"], true);
    }
}

#[test]
fn json_is_byte_identical_across_runs_and_thread_counts() {
    let base = ["compute", "--preset", "e8", "--n", "6", "--ring", "Z", "--max-degree", "20", "--format", "json"];
    let a = run(&base);
    let b = run(&base);
    let mut threaded = base.to_vec();
    threaded.extend(["--threads", "1"]);
    let c = run(&threaded);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn csv_and_table_formats() {
    let out = run(&["compute", "--preset", "hyperbolic", "--n", "6", "--genus", "1", "--ring", "Z", "--max-degree", "12", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("degree,summand,word_length,free_rank,torsion\n"));
    assert!(text.contains("10,Q,2,1,2;2\n"));
    let out = run(&["compute", "--preset", "hyperbolic", "--n", "5", "--genus", "1", "--max-degree", "10"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("Poincaré series: 1 + 2t^4 + 2t^5 + 3t^8 + 4t^9 + t^10"));
}

#[test]
fn input_file_and_output_file() {
    let dir = std::env::temp_dir().join(format!("loophom-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let input = dir.join("form.json");
    std::fs::write(&input, r#"{"n": 7, "intersection_matrix": [[0, 1], [-1, 0]], "ring": {"Fp": 3}, "max_degree": 13}"#).unwrap();
    let output = dir.join("report.json");
    let out = run(&["compute", "--input", input.to_str().unwrap(), "--format", "json", "--output", output.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&output).unwrap()).unwrap();
    assert_eq!(v["metadata"]["ring"], "F3");
    assert_eq!(v["metadata"]["max_degree"], 13);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn error_paths_emit_structured_json() {
    let cases: &[(&[&str], i32, &str)] = &[
        (&["compute", "--matrix", "[[0,1],[1,0]]", "--n", "5"], 2, "SymmetryViolation"),
        (&["compute", "--matrix", "[[2]]", "--n", "6"], 2, "NotUnimodular"),
        (&["compute", "--matrix", "[[0]]", "--n", "5"], 2, "OddRankSkew"),
        (&["compute", "--matrix", "[[1,0]]", "--n", "6"], 2, "NonSquareMatrix"),
        (&["compute", "--matrix", "[[2]]", "--n", "6", "--allow-nonunimodular", "--ring", "Z"], 4, "TorsionInU"),
        (&["compute", "--preset", "e8", "--n", "6", "--max-degree", "30", "--size-cap", "1000"], 3, "SizeCapExceeded"),
        (&["compute", "--preset", "nope", "--n", "6"], 2, "UnknownPreset"),
        (&["compute", "--preset", "hyperbolic", "--n", "6", "--ring", "F4"], 2, "InvalidPrime"),
        (&["compute"], 2, "UsageError"),
        (&["compute", "--preset", "e8", "--matrix", "[[1]]", "--n", "6"], 2, "UsageError"),
    ];
    for (args, exit, code) in cases {
        let out = run(args);
        assert_eq!(error_code(&out), (*exit, code.to_string()), "{args:?}");
    }
}

#[test]
fn size_cap_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_loophom"))
        .args(["compute", "--preset", "e8", "--n", "6", "--max-degree", "30"])
        .env("LOOPHOM_SIZE_CAP", "1000")
        .output()
        .unwrap();
    assert_eq!(error_code(&out), (3, "SizeCapExceeded".into()));
}

#[test]
fn help_and_presets_exit_zero() {
    assert!(run(&["--help"]).status.success());
    let out = run(&["presets"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["hyperbolic", "e8", "diag"] {
        assert!(text.contains(name));
    }
}
