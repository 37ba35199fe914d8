//! The input-state mini-language shared by `run` and `verify`.
//!
//! Accepted forms, where `n` is the protocol's input width:
//!
//! * ket strings over `{0,1,+,-,r,l}`, e.g. `00` or `1+`
//! * `bell:<k>` — Bell state k (two qubits)
//! * `ejm:<k>` — iso-entangled tetrahedral basis state k (two qubits)
//! * `ghz<n>:<label>` — GHZ basis state, e.g. `ghz3:+000`
//! * `haar:<seed>` — seeded Haar-random state of the right width
//! * an inline JSON amplitude list, e.g. `[1,0,0,1]` or `[[0,1],[1,0]]`
//!   (normalized on the way in)

use num_complex::Complex64;

use locmeas::basis::{bell_basis, ejm_basis, ghz_basis};
use locmeas::state::{haar_random_state, StateVector};

/// Parses `spec` into a state of exactly `n` qubits.
pub fn parse_state(spec: &str, n: usize) -> Result<StateVector, String> {
    let state = if let Some(rest) = spec.strip_prefix("haar:") {
        let seed: u64 = rest.parse().map_err(|_| format!("bad seed in {spec:?}"))?;
        haar_random_state(n, seed).map_err(|e| e.to_string())?
    } else {
        parse_context_free(spec)?
    };
    if state.n_qubits() != n {
        return Err(format!(
            "input {spec:?} has {} qubits but the protocol takes {n}",
            state.n_qubits()
        ));
    }
    Ok(state)
}

fn parse_context_free(spec: &str) -> Result<StateVector, String> {
    if spec.starts_with('[') {
        return parse_inline(spec);
    }
    if let Some(rest) = spec.strip_prefix("bell:") {
        let k: usize = rest.parse().map_err(|_| format!("bad index in {spec:?}"))?;
        if k >= 4 {
            return Err(format!("bell index {k} out of range 0..4"));
        }
        return Ok(bell_basis().vector(k).clone());
    }
    if let Some(rest) = spec.strip_prefix("ejm:") {
        let k: usize = rest.parse().map_err(|_| format!("bad index in {spec:?}"))?;
        if k >= 4 {
            return Err(format!("ejm index {k} out of range 0..4"));
        }
        return Ok(ejm_basis().vector(k).clone());
    }
    if let Some(rest) = spec.strip_prefix("ghz") {
        if let Some((count, label)) = rest.split_once(':') {
            let m: usize = count
                .parse()
                .map_err(|_| format!("bad qubit count in {spec:?}"))?;
            let basis = ghz_basis(m).map_err(|e| e.to_string())?;
            let idx = basis
                .label_index(label)
                .ok_or_else(|| format!("unknown GHZ label {label:?} in {spec:?}"))?;
            return Ok(basis.vector(idx).clone());
        }
    }
    StateVector::from_ket(spec).map_err(|e| e.to_string())
}

fn parse_inline(spec: &str) -> Result<StateVector, String> {
    let value: serde_json::Value =
        serde_json::from_str(spec).map_err(|e| format!("bad amplitude list: {e}"))?;
    let arr = value
        .as_array()
        .ok_or_else(|| "amplitude list must be a JSON array".to_string())?;
    let mut amps = Vec::with_capacity(arr.len());
    for entry in arr {
        let z = match entry {
            serde_json::Value::Array(pair) if pair.len() == 2 => {
                let re = pair[0].as_f64().ok_or("amplitude parts must be numbers")?;
                let im = pair[1].as_f64().ok_or("amplitude parts must be numbers")?;
                Complex64::new(re, im)
            }
            other => Complex64::new(
                other
                    .as_f64()
                    .ok_or("amplitudes must be numbers or [re,im] pairs")?,
                0.0,
            ),
        };
        amps.push(z);
    }
    if amps.len() < 2 || !amps.len().is_power_of_two() {
        return Err(format!(
            "{} amplitudes is not a power of two >= 2",
            amps.len()
        ));
    }
    let n = amps.len().trailing_zeros() as usize;
    StateVector::normalized(n, amps).map_err(|e| e.to_string())
}
