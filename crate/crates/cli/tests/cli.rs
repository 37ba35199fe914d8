//! End-to-end tests of the `locmeas` binary: exit codes, the input
//! mini-language, JSON envelopes, and the documented example invocations.

use std::process::{Command, Output};

use serde_json::Value;

fn locmeas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_locmeas"))
        .args(args)
        .env_remove("LOCMEAS_SEED")
        .output()
        .expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "bad JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn run_reports_exact_distributions() {
    let out = locmeas(&["run", "twisted", "--input", "00", "--json"]);
    assert_eq!(exit_code(&out), 0);
    let report = json_stdout(&out);
    let dist = report["result"]["distribution"].as_array().unwrap();
    assert!((dist[0].as_f64().unwrap() - 1.0).abs() < 1e-9);
    for p in &dist[1..] {
        assert!(p.as_f64().unwrap().abs() < 1e-9);
    }
    assert_eq!(report["result"]["labels"][0], "00");
    assert_eq!(report["command"], "run");
    assert_eq!(report["version"], env!("CARGO_PKG_VERSION"));
    assert!(report["tolerances"]["equality"].as_f64().unwrap() > 0.0);
    assert_eq!(report["config"]["input"], "00");

    let out = locmeas(&["run", "ejm", "--input", "ejm:2", "--json"]);
    let report = json_stdout(&out);
    let dist = report["result"]["distribution"].as_array().unwrap();
    assert!((dist[2].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn sampled_runs_stay_inside_binomial_bounds() {
    let out = locmeas(&[
        "run",
        "bsm",
        "--input",
        "haar:3",
        "--samples",
        "100000",
        "--seed",
        "9",
        "--json",
    ]);
    assert_eq!(exit_code(&out), 0);
    let report = json_stdout(&out);
    assert_eq!(report["result"]["within_3_sigma"], true);
    let counts = report["result"]["counts"].as_array().unwrap();
    let total: u64 = counts.iter().map(|c| c.as_u64().unwrap()).sum();
    assert_eq!(total, 100_000);
    assert_eq!(report["seeds"][0], 9);
}

#[test]
fn seed_env_var_supplies_the_default() {
    let with_flag = locmeas(&[
        "run",
        "bsm",
        "--input",
        "haar:3",
        "--samples",
        "500",
        "--seed",
        "9",
        "--json",
    ]);
    let with_env = Command::new(env!("CARGO_BIN_EXE_locmeas"))
        .args([
            "run",
            "bsm",
            "--input",
            "haar:3",
            "--samples",
            "500",
            "--json",
        ])
        .env("LOCMEAS_SEED", "9")
        .output()
        .expect("binary runs");
    assert_eq!(exit_code(&with_env), 0);
    assert_eq!(
        json_stdout(&with_flag)["result"]["counts"],
        json_stdout(&with_env)["result"]["counts"]
    );
}

#[test]
fn naive_scenario_fails_no_signaling_and_expect_fail_inverts_it() {
    let out = locmeas(&["verify", "sorkin-naive", "--checks", "nosig", "--json"]);
    assert_eq!(exit_code(&out), 1);
    let report = json_stdout(&out);
    let gap = report["result"]["reports"][0]["witnesses"][0]["gap"]
        .as_f64()
        .unwrap();
    assert!((gap - 0.5).abs() < 1e-12);
    assert_eq!(report["result"]["reports"][0]["verdict"], "fail");

    let out = locmeas(&[
        "verify",
        "sorkin-naive",
        "--checks",
        "nosig",
        "--expect-fail",
    ]);
    assert_eq!(exit_code(&out), 0);

    // A passing verification under --expect-fail is itself a failure.
    let out = locmeas(&[
        "verify",
        "bsm",
        "--checks",
        "born",
        "--haar",
        "2",
        "--expect-fail",
    ]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn corrected_bell_protocol_passes_every_check() {
    let out = locmeas(&[
        "verify",
        "bsm-ideal",
        "--checks",
        "born,nosig,ideal,erasure,ebits",
        "--haar",
        "4",
        "--json",
    ]);
    assert_eq!(
        exit_code(&out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = json_stdout(&out);
    let reports = report["result"]["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 5);
    for r in reports {
        assert_eq!(r["verdict"], "pass", "check {} failed", r["check"]);
    }
    assert_eq!(report["result"]["all_passed"], true);
}

#[test]
fn bare_protocols_fail_the_idealness_check() {
    let out = locmeas(&["verify", "twisted", "--checks", "ideal", "--json"]);
    assert_eq!(exit_code(&out), 1);
    let report = json_stdout(&out);
    assert_eq!(report["result"]["reports"][0]["verdict"], "fail");
    assert!(!report["result"]["reports"][0]["witnesses"]
        .as_array()
        .unwrap()
        .is_empty());
}

#[test]
fn unknown_names_and_malformed_inputs_are_usage_errors() {
    assert_eq!(exit_code(&locmeas(&["run", "quux", "--input", "00"])), 2);
    assert_eq!(exit_code(&locmeas(&["run", "bsm", "--input", "zz"])), 2);
    assert_eq!(exit_code(&locmeas(&["run", "bsm", "--input", "000"])), 2);
    assert_eq!(
        exit_code(&locmeas(&["verify", "bsm", "--checks", "born,bogus"])),
        2
    );
    assert_eq!(
        exit_code(&locmeas(&["verify", "sorkin-naive", "--checks", "ideal"])),
        2
    );
    assert_eq!(
        exit_code(&locmeas(&["search", "--target", "bogus", "--ebits", "1"])),
        2
    );
    // Missing required flag: clap's own usage error.
    assert_eq!(exit_code(&locmeas(&["run", "bsm"])), 2);
}

#[test]
fn register_cap_refuses_oversized_protocols() {
    let out = locmeas(&["--max-qubits", "6", "run", "ghz:4", "--input", "ghz4:+0000"]);
    assert_eq!(exit_code(&out), 2);
    let out = locmeas(&["run", "ghz:4", "--input", "ghz4:+0000", "--json"]);
    assert_eq!(exit_code(&out), 0);
    let report = json_stdout(&out);
    assert!((report["result"]["distribution"][0].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn search_finds_the_bell_analyzer_and_labels_the_evidence() {
    let out = locmeas(&[
        "search",
        "--target",
        "bell",
        "--ebits",
        "1",
        "--restarts",
        "4",
        "--seed",
        "1",
        "--max-evals",
        "6000",
        "--json",
    ]);
    assert_eq!(
        exit_code(&out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = json_stdout(&out);
    assert_eq!(report["result"]["status"], "numerical evidence");
    let best = report["result"]["search"]["best_score"].as_f64().unwrap();
    assert!(best >= 0.99, "best score {best}");
    assert_eq!(report["config"]["seed"], 1);
}

#[test]
fn paper_report_recomputes_every_claim() {
    let path = std::env::temp_dir().join(format!("locmeas-claims-{}.json", std::process::id()));
    let out = locmeas(&[
        "paper-report",
        "--restarts",
        "8",
        "--json",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(
        exit_code(&out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = json_stdout(&out);
    let rows = report["result"]["claims"].as_array().unwrap();
    assert!(rows.len() >= 10);
    assert_eq!(rows[0]["id"], "signaling-demo");
    assert!(rows[0]["computed"].as_str().unwrap().contains("TV = 0.5"));
    for row in rows {
        assert_eq!(row["pass"], true, "claim {} failed", row["id"]);
    }
    let evidence = rows.last().unwrap()["computed"].as_str().unwrap();
    assert!(evidence.contains("numerical evidence"));

    // The file write is the same canonical document.
    let on_disk: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(on_disk, report);
    std::fs::remove_file(&path).unwrap();
}

#[test]
fn exported_protocols_reload_into_the_library() {
    let out = locmeas(&["export-protocol", "ejm"]);
    assert_eq!(exit_code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let protocol = locmeas::serial::protocol_from_str(&text).expect("export parses");
    assert_eq!(protocol.name, "ejm");
    assert_eq!(protocol.parties.len(), 2);

    assert_eq!(exit_code(&locmeas(&["export-protocol", "nope"])), 2);
}

#[test]
fn output_files_are_written_whole() {
    let dir = std::env::temp_dir();
    let path = dir.join(format!("locmeas-out-{}.json", std::process::id()));
    let out = locmeas(&[
        "run",
        "twisted",
        "--input",
        "1+",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    let body = std::fs::read_to_string(&path).unwrap();
    let report: Value = serde_json::from_str(&body).unwrap();
    let dist = report["result"]["distribution"].as_array().unwrap();
    assert!((dist[2].as_f64().unwrap() - 1.0).abs() < 1e-9);
    // No temporary siblings left behind.
    let leftovers = std::fs::read_dir(&dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| {
            e.file_name()
                .to_string_lossy()
                .starts_with(&format!(".locmeas-out-{}", std::process::id()))
        })
        .count();
    assert_eq!(leftovers, 0);
    std::fs::remove_file(&path).unwrap();
}
