//! Report envelopes and rendering.
//!
//! JSON is the canonical output; the aligned text shown on stdout is a
//! rendering of the same data. Every envelope embeds the command line that
//! produced it, the library version, the seeds in play, and the numeric
//! tolerances, which together reproduce the run bit for bit.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde_json::{json, Map, Value};

use locmeas::tol;

/// Wraps a command's payload with the provenance fields every report carries.
pub fn envelope(command: &str, config: Value, seeds: &[u64], payload: Value) -> Value {
    let mut obj = Map::new();
    obj.insert("command".into(), json!(command));
    obj.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    obj.insert("config".into(), config);
    obj.insert("seeds".into(), json!(seeds));
    obj.insert(
        "tolerances".into(),
        json!({
            "construction": tol::CONSTRUCT,
            "equality": tol::EQUALITY,
            "prune": tol::PRUNE,
            "state_norm": tol::STATE,
        }),
    );
    obj.insert("result".into(), payload);
    Value::Object(obj)
}

/// Writes to stdout, treating a closed pipe (e.g. `| head`) as a clean stop
/// rather than an error.
pub fn print_stdout(s: &str) -> Result<(), String> {
    let mut out = std::io::stdout().lock();
    let done = out.write_all(s.as_bytes()).and_then(|_| {
        if s.ends_with('\n') {
            Ok(())
        } else {
            out.write_all(b"\n")
        }
    });
    match done {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::exit(0),
        Err(e) => Err(e.to_string()),
    }
}

/// Prints either the text rendering or the canonical JSON, and optionally
/// writes the JSON to a file. File writes go through a temporary sibling and
/// a rename so readers never observe a half-written report.
pub fn emit(
    report: &Value,
    text: &str,
    json_to_stdout: bool,
    path: Option<&Path>,
) -> Result<(), String> {
    if json_to_stdout {
        print_stdout(&serde_json::to_string_pretty(report).map_err(|e| e.to_string())?)?;
    } else {
        print_stdout(text)?;
    }
    if let Some(path) = path {
        write_atomic(
            path,
            &serde_json::to_string_pretty(report).map_err(|e| e.to_string())?,
        )?;
    }
    Ok(())
}

pub fn write_atomic(path: &Path, contents: &str) -> Result<(), String> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(dir) => dir.join(format!(
            ".{}.tmp{}",
            path.file_name()
                .and_then(|n| n.to_str())
                .unwrap_or("report"),
            std::process::id()
        )),
        None => Path::new(&format!(".locmeas.tmp{}", std::process::id())).to_path_buf(),
    };
    let mut file = fs::File::create(&tmp).map_err(|e| format!("{}: {e}", tmp.display()))?;
    file.write_all(contents.as_bytes())
        .and_then(|_| file.write_all(b"\n"))
        .and_then(|_| file.sync_all())
        .map_err(|e| format!("{}: {e}", tmp.display()))?;
    drop(file);
    fs::rename(&tmp, path).map_err(|e| format!("{}: {e}", path.display()))
}

/// Aligned two-column table: left-justified names, free-form right side.
pub fn aligned(rows: &[(String, String)]) -> String {
    let width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (l, r) in rows {
        out.push_str(&format!("{l:<width$}  {r}\n"));
    }
    out
}

/// Probability column formatted so exact zeros and ones stay readable.
pub fn prob(p: f64) -> String {
    format!("{p:.10}")
}
