//! `locmeas` — run, verify, and search measurement protocols built from
//! local operations and shared entanglement.
//!
//! Exit codes: 0 on success, 1 when a verification fails (or an execution
//! error occurs), 2 on usage errors such as unknown ids or malformed inputs.

mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use locmeas::basis::parse_basis_id;
use locmeas::engine::{result_distribution, sample_label_counts};
use locmeas::protocols::{shipped_protocol, shipped_target_basis};
use locmeas::report::{claim_rows, render_table, ReportOptions};
use locmeas::scenario::{protocol_scenario, sorkin_naive};
use locmeas::search::{optimize, SearchConfig};
use locmeas::serial::protocol_to_string;
use locmeas::state::{set_max_qubits, StateVector};
use locmeas::verify::{
    check_born_equivalence, check_ideal, check_no_signaling, check_protocol_erasure, ebit_cost,
    spanning_inputs, Verdict, VerificationReport, Witness,
};

use output::{aligned, emit, envelope, print_stdout, prob, write_atomic};

const SEED_ENV: &str = "LOCMEAS_SEED";

#[derive(Parser)]
#[command(
    name = "locmeas",
    version,
    about = "Exact simulation and verification of measurement protocols built from local operations and shared entanglement"
)]
struct Cli {
    /// Refuse work involving registers larger than this many qubits.
    #[arg(long, global = true)]
    max_qubits: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a protocol on an input state and print its outcome statistics.
    Run(RunArgs),
    /// Check named properties of a protocol and report witnesses.
    Verify(VerifyArgs),
    /// Optimize a protocol template against a target basis (numerical evidence).
    Search(SearchArgs),
    /// Recompute every headline claim and render the verdict table.
    PaperReport(PaperReportArgs),
    /// Print the portable JSON form of a shipped protocol.
    ExportProtocol(ExportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Protocol id: twisted, bsm, bsm-ideal, ejm, ghz:<n>, ghz-ideal:<n>.
    protocol: String,
    /// Input state: a ket like 00 or 1+, bell:<k>, ejm:<k>, ghz<n>:<label>,
    /// haar:<seed>, or an inline JSON amplitude list.
    #[arg(long)]
    input: String,
    /// Also draw this many samples and compare them with the exact law.
    #[arg(long)]
    samples: Option<usize>,
    /// Sampling seed (default: $LOCMEAS_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Print canonical JSON instead of the text rendering.
    #[arg(long)]
    json: bool,
    /// Also write the canonical JSON report to this file (atomically).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Protocol id, or sorkin-naive for the signaling demonstration.
    protocol: String,
    /// Comma-separated subset of: born, nosig, ideal, erasure, ebits.
    #[arg(long, value_delimiter = ',')]
    checks: Vec<String>,
    /// Succeed (exit 0) only if the verification fails.
    #[arg(long)]
    expect_fail: bool,
    /// Number of seeded Haar states in the spanning input set.
    #[arg(long, default_value_t = 20)]
    haar: u64,
    /// Print canonical JSON instead of the text rendering.
    #[arg(long)]
    json: bool,
    /// Also write the canonical JSON report to this file (atomically).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    /// Target basis id, e.g. bell, ejm, twisted, t_alpha:<angle>.
    #[arg(long)]
    target: String,
    /// Shared pairs available to the template.
    #[arg(long, default_value_t = 1)]
    ebits: usize,
    /// Independent optimizer restarts.
    #[arg(long, default_value_t = 24)]
    restarts: usize,
    /// Base seed for the restart streams (default: $LOCMEAS_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Objective evaluations allowed per restart.
    #[arg(long, default_value_t = 30_000)]
    max_evals: usize,
    /// Print canonical JSON instead of the text rendering.
    #[arg(long)]
    json: bool,
    /// Also write the canonical JSON report to this file (atomically).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PaperReportArgs {
    /// Restarts for each of the two search-based rows.
    #[arg(long, default_value_t = 50)]
    restarts: usize,
    /// Print canonical JSON instead of the text rendering.
    #[arg(long)]
    json: bool,
    /// Also write the canonical JSON report to this file (atomically).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    /// Protocol id: twisted, bsm, bsm-ideal, ejm, ghz:<n>, ghz-ideal:<n>.
    protocol: String,
    /// Write to this file (atomically) instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Failures that should not be blamed on the user's command line.
struct Failure(String);
/// Bad ids, malformed inputs, impossible flag combinations.
struct Usage(String);

enum CliError {
    Failure(String),
    Usage(String),
}

impl From<Failure> for CliError {
    fn from(f: Failure) -> Self {
        CliError::Failure(f.0)
    }
}

impl From<Usage> for CliError {
    fn from(u: Usage) -> Self {
        CliError::Usage(u.0)
    }
}

/// Library errors that surface while resolving user-supplied names are usage
/// errors; anything later is an execution failure.
fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

/// Execution-time errors, except that tripping the configured register cap
/// is still the user's command asking for too much.
fn failure(e: locmeas::error::Error) -> CliError {
    match e {
        locmeas::error::Error::Resource(msg) => {
            CliError::Usage(format!("resource limit exceeded: {msg}"))
        }
        other => CliError::Failure(other.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(m) = cli.max_qubits {
        set_max_qubits(m);
    }
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Search(args) => cmd_search(args),
        Command::PaperReport(args) => cmd_paper_report(args),
        Command::ExportProtocol(args) => cmd_export(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn default_seed(explicit: Option<u64>) -> u64 {
    explicit
        .or_else(|| std::env::var(SEED_ENV).ok().and_then(|s| s.parse().ok()))
        .unwrap_or(0)
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let protocol = shipped_protocol(&args.protocol).map_err(usage)?;
    let n = protocol.input_slots.len();
    let input_state = input::parse_state(&args.input, n).map_err(CliError::Usage)?;
    let seed = default_seed(args.seed);

    let distribution = result_distribution(&protocol, &input_state).map_err(failure)?;
    let labels = &protocol.postprocess.labels;

    let mut payload = json!({
        "protocol": args.protocol,
        "input": args.input,
        "labels": labels,
        "distribution": distribution,
    });
    let mut rows: Vec<(String, String)> = labels
        .iter()
        .zip(&distribution)
        .map(|(l, p)| (l.clone(), prob(*p)))
        .collect();

    let mut seeds = vec![];
    if let Some(samples) = args.samples {
        if samples == 0 {
            return Err(Usage("--samples must be positive".into()).into());
        }
        seeds.push(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let counts =
            sample_label_counts(&protocol, &input_state, samples, &mut rng).map_err(failure)?;
        let mut worst_sigma = 0.0f64;
        for (&c, &p) in counts.iter().zip(&distribution) {
            let sigma = (p * (1.0 - p) / samples as f64).sqrt();
            if sigma > 0.0 {
                worst_sigma = worst_sigma.max((c as f64 / samples as f64 - p).abs() / sigma);
            }
        }
        for (row, &c) in rows.iter_mut().zip(&counts) {
            row.1 = format!(
                "{}  observed {:.10}  ({} of {})",
                row.1,
                c as f64 / samples as f64,
                c,
                samples
            );
        }
        let obj = payload.as_object_mut().unwrap();
        obj.insert("samples".into(), json!(samples));
        obj.insert("counts".into(), json!(counts));
        obj.insert("max_sigma_deviation".into(), json!(worst_sigma));
        obj.insert("within_3_sigma".into(), json!(worst_sigma <= 3.0));
        rows.push((
            "agreement".into(),
            format!("largest deviation {worst_sigma:.2} sigma (3.00 allowed)"),
        ));
    }

    let config = json!({
        "protocol": args.protocol,
        "input": args.input,
        "samples": args.samples,
        "seed": seed,
    });
    let report = envelope("run", config, &seeds, payload);
    let mut text = format!("{} on input {}\n", args.protocol, args.input);
    text.push_str(&aligned(&rows));
    emit(&report, &text, args.json, args.output.as_deref()).map_err(CliError::Failure)
}

const CHECK_NAMES: [&str; 5] = ["born", "nosig", "ideal", "erasure", "ebits"];

/// Documented entanglement budget per protocol family.
fn documented_ebits(id: &str) -> Option<usize> {
    if id.starts_with("ghz-ideal:") {
        return Some(2);
    }
    if id.starts_with("ghz:") {
        return Some(1);
    }
    match id {
        "twisted" | "bsm" => Some(1),
        "bsm-ideal" => Some(2),
        "ejm" => Some(3),
        _ => None,
    }
}

fn cmd_verify(args: VerifyArgs) -> Result<(), CliError> {
    let mut checks: Vec<String> = if args.checks.is_empty() {
        if args.protocol == "sorkin-naive" {
            vec!["nosig".into()]
        } else {
            CHECK_NAMES.iter().map(|s| s.to_string()).collect()
        }
    } else {
        args.checks
            .iter()
            .map(|c| c.trim().to_lowercase())
            .collect()
    };
    checks.dedup();
    for c in &checks {
        if !CHECK_NAMES.contains(&c.as_str()) {
            return Err(Usage(format!(
                "unknown check {c:?} (expected a subset of {})",
                CHECK_NAMES.join(", ")
            ))
            .into());
        }
    }

    let started = std::time::Instant::now();
    let mut reports: Vec<VerificationReport> = Vec::new();

    if args.protocol == "sorkin-naive" {
        for c in &checks {
            if c != "nosig" {
                return Err(Usage(format!(
                    "sorkin-naive is a scenario, not a protocol; only the nosig check applies (got {c:?})"
                ))
                .into());
            }
        }
        let scenario = sorkin_naive();
        let inputs = vec![(
            "ket:00".to_string(),
            StateVector::from_ket("00").map_err(failure)?,
        )];
        reports.push(check_no_signaling(&scenario, &inputs).map_err(failure)?);
    } else {
        let protocol = shipped_protocol(&args.protocol).map_err(usage)?;
        let target = shipped_target_basis(&args.protocol).map_err(usage)?;
        let n = protocol.input_slots.len();
        let inputs = spanning_inputs(n, Some(&target), args.haar).map_err(failure)?;
        for c in &checks {
            let report = match c.as_str() {
                "born" => check_born_equivalence(&protocol, &target, &inputs).map_err(failure)?,
                "nosig" => {
                    let scenario = protocol_scenario(&protocol).map_err(failure)?;
                    check_no_signaling(&scenario, &inputs).map_err(failure)?
                }
                "ideal" => check_ideal(&protocol, &inputs).map_err(failure)?,
                "erasure" => check_protocol_erasure(&protocol, &inputs).map_err(failure)?,
                "ebits" => {
                    let cost = ebit_cost(&protocol).map_err(failure)?;
                    let want = documented_ebits(&args.protocol).ok_or_else(|| {
                        Usage(format!("no documented cost for {}", args.protocol))
                    })?;
                    let gap = cost.abs_diff(want) as f64;
                    VerificationReport {
                        check: "ebits".into(),
                        verdict: if cost == want {
                            Verdict::Pass
                        } else {
                            Verdict::Fail
                        },
                        tolerance: 0.0,
                        witnesses: vec![Witness {
                            input_id: "-".into(),
                            kick: format!("measured {cost} ebits, documented {want}"),
                            gap,
                        }],
                        seed_list: vec![],
                        runtime_ms: 0,
                    }
                }
                _ => unreachable!("names validated above"),
            };
            reports.push(report);
        }
    }

    let all_passed = reports.iter().all(|r| r.passed());
    let payload = json!({
        "protocol": args.protocol,
        "reports": reports,
        "all_passed": all_passed,
        "expect_fail": args.expect_fail,
    });
    let seeds: Vec<u64> = reports
        .iter()
        .flat_map(|r| r.seed_list.iter().copied())
        .collect();
    let config = json!({
        "protocol": args.protocol,
        "checks": checks,
        "haar": args.haar,
        "expect_fail": args.expect_fail,
    });
    let report = envelope("verify", config, &seeds, payload);

    let mut rows: Vec<(String, String)> = Vec::new();
    for r in &reports {
        let verdict = if r.passed() { "pass" } else { "FAIL" };
        let detail = match r.witnesses.first() {
            Some(w) => format!(
                "{verdict}  worst gap {:.3e} (input {}, {})",
                w.gap, w.input_id, w.kick
            ),
            None => format!("{verdict}  no witnesses"),
        };
        rows.push((r.check.clone(), detail));
    }
    let mut text = format!(
        "verify {} ({} checks, {:.1}s)\n",
        args.protocol,
        reports.len(),
        started.elapsed().as_secs_f64()
    );
    text.push_str(&aligned(&rows));
    emit(&report, &text, args.json, args.output.as_deref()).map_err(CliError::Failure)?;

    let ok = if args.expect_fail {
        !all_passed
    } else {
        all_passed
    };
    if ok {
        Ok(())
    } else if args.expect_fail {
        Err(Failure("verification passed but --expect-fail was given".into()).into())
    } else {
        Err(Failure("verification failed".into()).into())
    }
}

fn cmd_search(args: SearchArgs) -> Result<(), CliError> {
    let target = parse_basis_id(&args.target).map_err(usage)?;
    if target.n_qubits() != 2 {
        return Err(Usage(format!(
            "search targets two-qubit bases; {} acts on {} qubits",
            args.target,
            target.n_qubits()
        ))
        .into());
    }
    if args.restarts == 0 {
        return Err(Usage("--restarts must be positive".into()).into());
    }
    let seed = default_seed(args.seed);
    let config = SearchConfig {
        ebits: args.ebits,
        restarts: args.restarts,
        seed,
        max_evals_per_restart: args.max_evals,
        ..SearchConfig::default()
    };
    let result = optimize(&target, &config).map_err(failure)?;

    let payload = json!({
        "target": args.target,
        "status": "numerical evidence",
        "search": result,
    });
    let cfg = json!({
        "target": args.target,
        "ebits": args.ebits,
        "restarts": args.restarts,
        "seed": seed,
        "max_evals": args.max_evals,
    });
    let report = envelope("search", cfg, &[seed], payload);

    let mut rows = vec![
        ("target".to_string(), args.target.clone()),
        ("ebits".to_string(), result.ebits.to_string()),
        (
            "best score".to_string(),
            format!("{:.12}", result.best_score),
        ),
        (
            "worst case".to_string(),
            format!("{:.12}", result.worst_case),
        ),
        ("restarts".to_string(), result.restarts.len().to_string()),
        (
            "status".to_string(),
            "numerical evidence, not a proof".to_string(),
        ),
    ];
    let converged = result
        .restarts
        .iter()
        .filter(|r| r.best_score >= result.best_score - 1e-6)
        .count();
    rows.push(("near-best restarts".to_string(), converged.to_string()));
    let text = aligned(&rows);
    emit(&report, &text, args.json, args.output.as_deref()).map_err(CliError::Failure)
}

fn cmd_paper_report(args: PaperReportArgs) -> Result<(), CliError> {
    if args.restarts == 0 {
        return Err(Usage("--restarts must be positive".into()).into());
    }
    let opts = ReportOptions {
        search_restarts: args.restarts,
    };
    let rows = claim_rows(&opts).map_err(failure)?;
    let all_pass = rows.iter().all(|r| r.pass);
    let payload = json!({
        "claims": rows,
        "all_pass": all_pass,
    });
    let cfg = json!({ "restarts": args.restarts });
    let report = envelope("paper-report", cfg, &[1, 2026], payload);
    let text = render_table(&rows);
    emit(&report, &text, args.json, args.output.as_deref()).map_err(CliError::Failure)?;
    if all_pass {
        Ok(())
    } else {
        Err(Failure("one or more claims failed".into()).into())
    }
}

fn cmd_export(args: ExportArgs) -> Result<(), CliError> {
    let protocol = shipped_protocol(&args.protocol).map_err(usage)?;
    let text = protocol_to_string(&protocol);
    match args.output {
        Some(path) => write_atomic(&path, &text).map_err(CliError::Failure),
        None => print_stdout(&text).map_err(CliError::Failure),
    }
}
