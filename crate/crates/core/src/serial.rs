//! JSON import and export for protocols and states.
//!
//! Complex numbers serialize as `[re, im]` pairs. All floats go through
//! serde_json's shortest-round-trip formatting, so amplitudes survive a
//! write/read cycle bit for bit. Measurement payloads and resources carry
//! registry ids (`"bell"`, `"computational:1"`, `"ghz:3"`, ...) when they
//! have one and inline data otherwise; readers accept either form.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::basis::{bell_basis, ghz_basis, parse_basis_id, MeasurementBasis};
use crate::error::{Error, Result};
use crate::ops::UnitaryOp;
use crate::protocol::{
    InputSlot, Party, Payload, PayloadChoice, Postprocess, Protocol, ProtocolStep, Resource,
};
use crate::state::StateVector;

fn complex_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn complex_from(v: &Value, what: &str) -> Result<Complex64> {
    let pair = v
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| Error::Argument(format!("{what}: complex values are [re, im] pairs")))?;
    let part = |x: &Value| {
        x.as_f64()
            .ok_or_else(|| Error::Argument(format!("{what}: non-numeric complex component")))
    };
    Ok(Complex64::new(part(&pair[0])?, part(&pair[1])?))
}

/// A state as a flat amplitude array, `[[re, im], ...]`.
pub fn state_to_json(state: &StateVector) -> Value {
    Value::Array(state.amps().iter().map(|&z| complex_json(z)).collect())
}

/// Reads an amplitude array; the length fixes the qubit count. Amplitudes
/// must arrive normalized — rescaling on the way in would silently change
/// the numbers and break exact round-trips.
pub fn state_from_json(v: &Value) -> Result<StateVector> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::Argument("state: expected an amplitude array".into()))?;
    if arr.len() < 2 || !arr.len().is_power_of_two() {
        return Err(Error::Dimension(format!(
            "state: {} amplitudes is not a power of two >= 2",
            arr.len()
        )));
    }
    let amps = arr
        .iter()
        .map(|x| complex_from(x, "state"))
        .collect::<Result<Vec<_>>>()?;
    StateVector::new(arr.len().trailing_zeros() as usize, amps)
}

fn matrix_to_json(m: &DMatrix<Complex64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|r| Value::Array((0..m.ncols()).map(|c| complex_json(m[(r, c)])).collect()))
            .collect(),
    )
}

fn matrix_from(v: &Value) -> Result<DMatrix<Complex64>> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::Argument("unitary: expected an array of rows".into()))?;
    let dim = rows.len();
    let mut mat = DMatrix::<Complex64>::zeros(dim, dim);
    for (r, row) in rows.iter().enumerate() {
        let cols = row
            .as_array()
            .filter(|c| c.len() == dim)
            .ok_or_else(|| Error::Dimension(format!("unitary: row {r} is not {dim} wide")))?;
        for (c, x) in cols.iter().enumerate() {
            mat[(r, c)] = complex_from(x, "unitary")?;
        }
    }
    Ok(mat)
}

/// Small registry of named gates accepted in hand-written protocol files.
fn named_unitary(id: &str) -> Result<UnitaryOp> {
    if let Some(rest) = id.strip_prefix("identity:") {
        let n: usize = rest
            .parse()
            .map_err(|_| Error::Argument(format!("bad qubit count in {id:?}")))?;
        return Ok(UnitaryOp::identity(n));
    }
    if let Some(rest) = id.strip_prefix("pauli:") {
        let k: usize = rest
            .parse()
            .ok()
            .filter(|k| *k < 4)
            .ok_or_else(|| Error::Argument(format!("bad pauli index in {id:?}")))?;
        return Ok(UnitaryOp::pauli(k));
    }
    match id {
        "hadamard" => Ok(UnitaryOp::hadamard()),
        "cz" => Ok(UnitaryOp::cz()),
        "cnot" => Ok(UnitaryOp::cnot()),
        _ => Err(Error::Argument(format!("unknown gate id {id:?}"))),
    }
}

fn payload_entry(p: &Payload) -> (String, Value) {
    match p {
        Payload::Unitary(u) => ("unitary".into(), matrix_to_json(u.mat())),
        Payload::Basis(b) => {
            let v = match b.id() {
                Some(id) => json!(id),
                None => json!({
                    "labels": b.labels(),
                    "vectors": b.vectors().iter().map(state_to_json).collect::<Vec<_>>(),
                }),
            };
            ("measure".into(), v)
        }
    }
}

fn payload_from(obj: &Map<String, Value>, what: &str) -> Result<Payload> {
    if let Some(u) = obj.get("unitary") {
        let op = match u {
            Value::String(id) => named_unitary(id)?,
            _ => UnitaryOp::new(matrix_from(u)?)?,
        };
        return Ok(Payload::Unitary(op));
    }
    if let Some(m) = obj.get("measure") {
        let basis = match m {
            Value::String(id) => parse_basis_id(id)?,
            _ => {
                let labels: Vec<String> = m
                    .get("labels")
                    .and_then(|l| serde_json::from_value(l.clone()).ok())
                    .ok_or_else(|| Error::Argument(format!("{what}: basis needs labels")))?;
                let vectors = m
                    .get("vectors")
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::Argument(format!("{what}: basis needs vectors")))?
                    .iter()
                    .map(state_from_json)
                    .collect::<Result<Vec<_>>>()?;
                MeasurementBasis::new(labels, vectors)?
            }
        };
        return Ok(Payload::Basis(basis));
    }
    Err(Error::Argument(format!(
        "{what}: needs a \"unitary\" or \"measure\" key"
    )))
}

fn record_key(record: &[u8]) -> String {
    record
        .iter()
        .map(u8::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn record_from_key(key: &str) -> Result<Vec<u8>> {
    key.split(',')
        .map(|p| {
            p.trim()
                .parse::<u8>()
                .map_err(|_| Error::Argument(format!("bad outcome record key {key:?}")))
        })
        .collect()
}

/// Full protocol as a JSON value.
pub fn protocol_to_json(p: &Protocol) -> Value {
    let steps: Vec<Value> = p
        .steps
        .iter()
        .map(|s| {
            let mut obj = Map::new();
            obj.insert("party".into(), json!(s.party));
            obj.insert("targets".into(), json!(s.targets));
            match &s.payload {
                PayloadChoice::Fixed(pl) => {
                    let (k, v) = payload_entry(pl);
                    obj.insert(k, v);
                }
                PayloadChoice::Conditional { sources, table } => {
                    let table: Map<String, Value> = table
                        .iter()
                        .map(|(rec, pl)| {
                            let (k, v) = payload_entry(pl);
                            (record_key(rec), Value::Object(Map::from_iter([(k, v)])))
                        })
                        .collect();
                    obj.insert(
                        "conditional".into(),
                        json!({"sources": sources, "table": table}),
                    );
                }
            }
            Value::Object(obj)
        })
        .collect();
    let resources: Vec<Value> = p
        .resources
        .iter()
        .map(|r| {
            let mut obj = Map::new();
            if let Some(id) = &r.id {
                obj.insert("id".into(), json!(id));
            }
            obj.insert("registers".into(), json!(r.registers));
            obj.insert("state".into(), state_to_json(&r.state));
            Value::Object(obj)
        })
        .collect();
    let postprocess_table: Map<String, Value> = p
        .postprocess
        .table
        .iter()
        .map(|(rec, label)| (record_key(rec), json!(label)))
        .collect();
    json!({
        "name": p.name,
        "parties": p.parties.iter()
            .map(|x| json!({"name": x.name, "registers": x.registers}))
            .collect::<Vec<_>>(),
        "input_slots": p.input_slots.iter()
            .map(|x| json!({"register": x.register, "party": x.party}))
            .collect::<Vec<_>>(),
        "resources": resources,
        "steps": steps,
        "postprocess": {"labels": p.postprocess.labels, "table": postprocess_table},
        "output_registers": p.output_registers,
    })
}

pub fn protocol_to_string(p: &Protocol) -> String {
    serde_json::to_string_pretty(&protocol_to_json(p)).expect("protocol JSON is serializable")
}

fn require<'a>(obj: &'a Map<String, Value>, key: &str, what: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| Error::Argument(format!("{what}: missing field {key:?}")))
}

fn as_object<'a>(v: &'a Value, what: &str) -> Result<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| Error::Argument(format!("{what}: expected an object")))
}

fn as_usize(v: &Value, what: &str) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| Error::Argument(format!("{what}: expected a nonnegative integer")))
}

fn usize_list(v: &Value, what: &str) -> Result<Vec<usize>> {
    v.as_array()
        .ok_or_else(|| Error::Argument(format!("{what}: expected an array")))?
        .iter()
        .map(|x| as_usize(x, what))
        .collect()
}

/// Resolves a resource id like `bell:0` or `ghz3:+00` to its state, for
/// files that omit inline amplitudes.
fn resource_state_from_id(id: &str) -> Result<StateVector> {
    if let Some(rest) = id.strip_prefix("bell:") {
        let k: usize = rest
            .parse()
            .ok()
            .filter(|k| *k < 4)
            .ok_or_else(|| Error::Argument(format!("bad pair index in {id:?}")))?;
        return Ok(bell_basis().vector(k).clone());
    }
    if let Some(rest) = id.strip_prefix("ghz") {
        if let Some((n, label)) = rest.split_once(':') {
            let n: usize = n
                .parse()
                .map_err(|_| Error::Argument(format!("bad qubit count in {id:?}")))?;
            let basis = ghz_basis(n)?;
            let idx = basis
                .label_index(label)
                .ok_or_else(|| Error::Argument(format!("unknown label in {id:?}")))?;
            return Ok(basis.vector(idx).clone());
        }
    }
    Err(Error::Argument(format!(
        "resource id {id:?} has no registered state"
    )))
}

/// Reads and validates a protocol from its JSON form.
pub fn protocol_from_json(v: &Value) -> Result<Protocol> {
    let top = as_object(v, "protocol")?;
    let name = require(top, "name", "protocol")?
        .as_str()
        .ok_or_else(|| Error::Argument("protocol: name must be a string".into()))?
        .to_string();

    let parties = require(top, "parties", "protocol")?
        .as_array()
        .ok_or_else(|| Error::Argument("protocol: parties must be an array".into()))?
        .iter()
        .map(|p| {
            let obj = as_object(p, "party")?;
            Ok(Party {
                name: require(obj, "name", "party")?
                    .as_str()
                    .ok_or_else(|| Error::Argument("party: name must be a string".into()))?
                    .to_string(),
                registers: usize_list(require(obj, "registers", "party")?, "party registers")?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let input_slots = require(top, "input_slots", "protocol")?
        .as_array()
        .ok_or_else(|| Error::Argument("protocol: input_slots must be an array".into()))?
        .iter()
        .map(|s| {
            let obj = as_object(s, "input slot")?;
            Ok(InputSlot {
                register: as_usize(require(obj, "register", "input slot")?, "slot register")?,
                party: as_usize(require(obj, "party", "input slot")?, "slot party")?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let resources = require(top, "resources", "protocol")?
        .as_array()
        .ok_or_else(|| Error::Argument("protocol: resources must be an array".into()))?
        .iter()
        .map(|r| {
            let obj = as_object(r, "resource")?;
            let id = obj.get("id").and_then(Value::as_str).map(str::to_string);
            let state = match obj.get("state") {
                Some(s) => state_from_json(s)?,
                None => resource_state_from_id(id.as_deref().ok_or_else(|| {
                    Error::Argument("resource: needs a state or a known id".into())
                })?)?,
            };
            Ok(Resource {
                id,
                state,
                registers: usize_list(
                    require(obj, "registers", "resource")?,
                    "resource registers",
                )?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let steps = require(top, "steps", "protocol")?
        .as_array()
        .ok_or_else(|| Error::Argument("protocol: steps must be an array".into()))?
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let what = format!("step {i}");
            let obj = as_object(s, &what)?;
            let payload = if let Some(c) = obj.get("conditional") {
                let cond = as_object(c, &what)?;
                let sources = usize_list(require(cond, "sources", &what)?, "condition sources")?;
                let table = as_object(require(cond, "table", &what)?, &what)?
                    .iter()
                    .map(|(key, pl)| {
                        Ok((
                            record_from_key(key)?,
                            payload_from(as_object(pl, &what)?, &what)?,
                        ))
                    })
                    .collect::<Result<BTreeMap<_, _>>>()?;
                PayloadChoice::Conditional { sources, table }
            } else {
                PayloadChoice::Fixed(payload_from(obj, &what)?)
            };
            Ok(ProtocolStep {
                party: as_usize(require(obj, "party", &what)?, "step party")?,
                targets: usize_list(require(obj, "targets", &what)?, "step targets")?,
                payload,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let pp = as_object(require(top, "postprocess", "protocol")?, "postprocess")?;
    let labels: Vec<String> = serde_json::from_value(require(pp, "labels", "postprocess")?.clone())
        .map_err(|_| Error::Argument("postprocess: labels must be strings".into()))?;
    let table = as_object(require(pp, "table", "postprocess")?, "postprocess table")?
        .iter()
        .map(|(key, label)| {
            let label = label
                .as_str()
                .ok_or_else(|| Error::Argument("postprocess: table values are labels".into()))?;
            Ok((record_from_key(key)?, label.to_string()))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;

    let output_registers = match top.get("output_registers") {
        None | Some(Value::Null) => None,
        Some(v) => Some(usize_list(v, "output registers")?),
    };

    let protocol = Protocol {
        name,
        parties,
        input_slots,
        resources,
        steps,
        postprocess: Postprocess { labels, table },
        output_registers,
    };
    protocol.validate().map_err(|violations| {
        Error::Validation(
            violations
                .iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join("; "),
        )
    })?;
    Ok(protocol)
}

pub fn protocol_from_str(s: &str) -> Result<Protocol> {
    let v: Value =
        serde_json::from_str(s).map_err(|e| Error::Argument(format!("invalid JSON: {e}")))?;
    protocol_from_json(&v)
}
