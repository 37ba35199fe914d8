//! Protocol data model: parties, registers, resources, and ordered local
//! steps, plus structural validation.
//!
//! A protocol describes a measurement built only from local operations on
//! preshared entangled resources. Registers are global qubit indices; each
//! belongs to exactly one party. Steps act strictly on the registers of the
//! party performing them, and a step's payload may be chosen conditionally
//! only on outcomes that same party already holds — the validator rejects
//! anything that would smuggle in communication.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::basis::MeasurementBasis;
use crate::ops::UnitaryOp;
use crate::state::StateVector;

/// One participant, owning a fixed set of registers.
#[derive(Clone, Debug)]
pub struct Party {
    pub name: String,
    pub registers: Vec<usize>,
}

/// A register that receives one qubit of the joint input state. Slot order
/// defines the qubit order of the input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InputSlot {
    pub register: usize,
    pub party: usize,
}

/// A preshared state occupying the listed registers (qubit `i` of the state
/// goes to `registers[i]`).
#[derive(Clone, Debug)]
pub struct Resource {
    pub id: Option<String>,
    pub state: StateVector,
    pub registers: Vec<usize>,
}

/// What a step does to its target registers.
#[derive(Clone, Debug)]
pub enum Payload {
    Unitary(UnitaryOp),
    Basis(MeasurementBasis),
}

impl Payload {
    pub fn n_qubits(&self) -> usize {
        match self {
            Payload::Unitary(u) => u.n_qubits(),
            Payload::Basis(b) => b.n_qubits(),
        }
    }

    pub fn is_measurement(&self) -> bool {
        matches!(self, Payload::Basis(_))
    }

    pub fn outcome_count(&self) -> usize {
        match self {
            Payload::Unitary(_) => 0,
            Payload::Basis(b) => b.len(),
        }
    }
}

/// Fixed payload, or a payload selected by outcomes of earlier measurement
/// steps (`sources` lists step indices; table keys are the outcomes of those
/// steps in the same order).
#[derive(Clone, Debug)]
pub enum PayloadChoice {
    Fixed(Payload),
    Conditional {
        sources: Vec<usize>,
        table: BTreeMap<Vec<u8>, Payload>,
    },
}

impl PayloadChoice {
    /// Some representative payload, used for shape checks.
    pub fn any_payload(&self) -> Option<&Payload> {
        match self {
            PayloadChoice::Fixed(p) => Some(p),
            PayloadChoice::Conditional { table, .. } => table.values().next(),
        }
    }

    pub fn payloads(&self) -> Vec<&Payload> {
        match self {
            PayloadChoice::Fixed(p) => vec![p],
            PayloadChoice::Conditional { table, .. } => table.values().collect(),
        }
    }
}

/// One local operation: a party applies a payload to some of its registers.
#[derive(Clone, Debug)]
pub struct ProtocolStep {
    pub party: usize,
    pub targets: Vec<usize>,
    pub payload: PayloadChoice,
}

impl ProtocolStep {
    pub fn is_measurement(&self) -> bool {
        self.payload
            .any_payload()
            .map(|p| p.is_measurement())
            .unwrap_or(false)
    }

    /// Outcome count of a measurement step (uniform across a conditional
    /// table once validated).
    pub fn outcome_count(&self) -> usize {
        self.payload
            .any_payload()
            .map(|p| p.outcome_count())
            .unwrap_or(0)
    }
}

/// Classical map from the full outcome record (one entry per measurement
/// step, in step order) to a final outcome label.
#[derive(Clone, Debug)]
pub struct Postprocess {
    pub labels: Vec<String>,
    pub table: BTreeMap<Vec<u8>, String>,
}

/// A complete localizable-measurement protocol.
#[derive(Clone, Debug)]
pub struct Protocol {
    pub name: String,
    pub parties: Vec<Party>,
    pub input_slots: Vec<InputSlot>,
    pub resources: Vec<Resource>,
    pub steps: Vec<ProtocolStep>,
    pub postprocess: Postprocess,
    /// Registers left holding the post-measurement state, if the protocol
    /// claims one.
    pub output_registers: Option<Vec<usize>>,
}

/// A structural defect found by [`Protocol::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// Party list or register ownership is malformed.
    Parties(String),
    /// Registers are not covered exactly once by slots and resources.
    Coverage(String),
    /// A step touches a register its party does not own.
    Locality { step: usize, register: usize },
    /// A step's targets are malformed (out of range, duplicated, reused
    /// after measurement).
    Targets { step: usize, detail: String },
    /// A payload does not fit its targets, or a conditional table mixes
    /// shapes.
    Payload { step: usize, detail: String },
    /// A conditional source is not an earlier measurement step.
    ConditionSource { step: usize, detail: String },
    /// A step conditions on an outcome held by a different party.
    CrossPartyCondition { step: usize, source: usize },
    /// A conditional table does not cover every source outcome combination.
    ConditionTable { step: usize, detail: String },
    /// The postprocess map is incomplete or inconsistent.
    Postprocess(String),
    /// Output registers are out of range, duplicated, or were measured.
    OutputRegisters(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Parties(d) => write!(f, "parties: {d}"),
            Violation::Coverage(d) => write!(f, "register coverage: {d}"),
            Violation::Locality { step, register } => {
                write!(
                    f,
                    "step {step} acts on register {register} owned by another party"
                )
            }
            Violation::Targets { step, detail } => write!(f, "step {step} targets: {detail}"),
            Violation::Payload { step, detail } => write!(f, "step {step} payload: {detail}"),
            Violation::ConditionSource { step, detail } => {
                write!(f, "step {step} condition source: {detail}")
            }
            Violation::CrossPartyCondition { step, source } => write!(
                f,
                "step {step} conditions on step {source}, which belongs to a different party"
            ),
            Violation::ConditionTable { step, detail } => {
                write!(f, "step {step} condition table: {detail}")
            }
            Violation::Postprocess(d) => write!(f, "postprocess: {d}"),
            Violation::OutputRegisters(d) => write!(f, "output registers: {d}"),
        }
    }
}

impl Protocol {
    /// Total number of registers.
    pub fn n_qubits(&self) -> usize {
        self.parties.iter().map(|p| p.registers.len()).sum()
    }

    /// Owner of a register, if any party lists it.
    pub fn party_of_register(&self, register: usize) -> Option<usize> {
        self.parties
            .iter()
            .position(|p| p.registers.contains(&register))
    }

    /// Indices of the measurement steps, in execution order.
    pub fn measurement_step_indices(&self) -> Vec<usize> {
        self.steps
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_measurement())
            .map(|(i, _)| i)
            .collect()
    }

    /// Outcome counts of the measurement steps, in execution order.
    pub fn outcome_counts(&self) -> Vec<usize> {
        self.steps
            .iter()
            .filter(|s| s.is_measurement())
            .map(|s| s.outcome_count())
            .collect()
    }

    /// Checks every structural rule; returns all violations found.
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        self.check_parties(&mut out);
        self.check_coverage(&mut out);
        self.check_steps(&mut out);
        self.check_postprocess(&mut out);
        self.check_outputs(&mut out);
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    fn check_parties(&self, out: &mut Vec<Violation>) {
        if self.parties.is_empty() {
            out.push(Violation::Parties("no parties".into()));
            return;
        }
        let mut names = BTreeSet::new();
        let mut owned = BTreeMap::new();
        for (i, p) in self.parties.iter().enumerate() {
            if p.name.is_empty() {
                out.push(Violation::Parties(format!("party {i} has an empty name")));
            }
            if !names.insert(p.name.clone()) {
                out.push(Violation::Parties(format!(
                    "duplicate party name {:?}",
                    p.name
                )));
            }
            for &r in &p.registers {
                if let Some(prev) = owned.insert(r, i) {
                    out.push(Violation::Parties(format!(
                        "register {r} owned by both party {prev} and party {i}"
                    )));
                }
            }
        }
        let n = self.n_qubits();
        for r in 0..n {
            if !owned.contains_key(&r) {
                out.push(Violation::Parties(format!(
                    "register {r} has no owner (registers must be exactly 0..{n})"
                )));
            }
        }
        for (&r, _) in owned.iter() {
            if r >= n {
                out.push(Violation::Parties(format!(
                    "register {r} out of range (registers must be exactly 0..{n})"
                )));
            }
        }
    }

    fn check_coverage(&self, out: &mut Vec<Violation>) {
        let n = self.n_qubits();
        let mut seen: BTreeMap<usize, &str> = BTreeMap::new();
        for (i, slot) in self.input_slots.iter().enumerate() {
            if slot.register >= n {
                out.push(Violation::Coverage(format!(
                    "input slot {i} register {} out of range",
                    slot.register
                )));
                continue;
            }
            if slot.party >= self.parties.len() {
                out.push(Violation::Coverage(format!(
                    "input slot {i} names party {}",
                    slot.party
                )));
            } else if self.party_of_register(slot.register) != Some(slot.party) {
                out.push(Violation::Coverage(format!(
                    "input slot {i} register {} does not belong to party {}",
                    slot.register, slot.party
                )));
            }
            if seen.insert(slot.register, "input slot").is_some() {
                out.push(Violation::Coverage(format!(
                    "register {} assigned twice",
                    slot.register
                )));
            }
        }
        for (i, res) in self.resources.iter().enumerate() {
            if res.state.n_qubits() != res.registers.len() {
                out.push(Violation::Coverage(format!(
                    "resource {i} has a {}-qubit state on {} registers",
                    res.state.n_qubits(),
                    res.registers.len()
                )));
            }
            for &r in &res.registers {
                if r >= n {
                    out.push(Violation::Coverage(format!(
                        "resource {i} register {r} out of range"
                    )));
                    continue;
                }
                if seen.insert(r, "resource").is_some() {
                    out.push(Violation::Coverage(format!("register {r} assigned twice")));
                }
            }
        }
        for r in 0..n {
            if !seen.contains_key(&r) {
                out.push(Violation::Coverage(format!(
                    "register {r} receives neither an input qubit nor a resource qubit"
                )));
            }
        }
    }

    fn check_steps(&self, out: &mut Vec<Violation>) {
        let n = self.n_qubits();
        let mut measured: BTreeSet<usize> = BTreeSet::new();
        for (i, step) in self.steps.iter().enumerate() {
            if step.party >= self.parties.len() {
                out.push(Violation::Parties(format!(
                    "step {i} names party {} of {}",
                    step.party,
                    self.parties.len()
                )));
                continue;
            }
            let mut local_seen = BTreeSet::new();
            for &t in &step.targets {
                if t >= n {
                    out.push(Violation::Targets {
                        step: i,
                        detail: format!("register {t} out of range"),
                    });
                    continue;
                }
                if !local_seen.insert(t) {
                    out.push(Violation::Targets {
                        step: i,
                        detail: format!("register {t} repeated"),
                    });
                }
                if self.party_of_register(t) != Some(step.party) {
                    out.push(Violation::Locality {
                        step: i,
                        register: t,
                    });
                }
                if measured.contains(&t) {
                    out.push(Violation::Targets {
                        step: i,
                        detail: format!("register {t} was already measured"),
                    });
                }
            }
            self.check_payload_shape(i, step, out);
            self.check_conditions(i, step, out);
            if step.is_measurement() {
                measured.extend(step.targets.iter().copied());
            }
        }
    }

    fn check_payload_shape(&self, i: usize, step: &ProtocolStep, out: &mut Vec<Violation>) {
        let payloads = step.payload.payloads();
        if payloads.is_empty() {
            out.push(Violation::Payload {
                step: i,
                detail: "empty conditional table".into(),
            });
            return;
        }
        let first_is_meas = payloads[0].is_measurement();
        let first_count = payloads[0].outcome_count();
        for p in &payloads {
            if p.n_qubits() != step.targets.len() {
                out.push(Violation::Payload {
                    step: i,
                    detail: format!(
                        "payload acts on {} qubits but step has {} targets",
                        p.n_qubits(),
                        step.targets.len()
                    ),
                });
            }
            if p.is_measurement() != first_is_meas {
                out.push(Violation::Payload {
                    step: i,
                    detail: "conditional table mixes unitaries and measurements".into(),
                });
            }
            if p.outcome_count() != first_count {
                out.push(Violation::Payload {
                    step: i,
                    detail: "conditional measurements disagree on outcome count".into(),
                });
            }
        }
    }

    fn check_conditions(&self, i: usize, step: &ProtocolStep, out: &mut Vec<Violation>) {
        let PayloadChoice::Conditional { sources, table } = &step.payload else {
            return;
        };
        let mut counts = Vec::with_capacity(sources.len());
        for &src in sources {
            if src >= i {
                out.push(Violation::ConditionSource {
                    step: i,
                    detail: format!("step {src} does not precede step {i}"),
                });
                return;
            }
            let source_step = &self.steps[src];
            if !source_step.is_measurement() {
                out.push(Violation::ConditionSource {
                    step: i,
                    detail: format!("step {src} is not a measurement"),
                });
                return;
            }
            if source_step.party != step.party {
                out.push(Violation::CrossPartyCondition {
                    step: i,
                    source: src,
                });
                return;
            }
            counts.push(source_step.outcome_count());
        }
        let expected: usize = counts.iter().product();
        if table.len() != expected {
            out.push(Violation::ConditionTable {
                step: i,
                detail: format!("{} entries, expected {expected}", table.len()),
            });
        }
        for key in table.keys() {
            if key.len() != sources.len()
                || key.iter().zip(&counts).any(|(&k, &c)| (k as usize) >= c)
            {
                out.push(Violation::ConditionTable {
                    step: i,
                    detail: format!("key {key:?} does not match the source outcome ranges"),
                });
            }
        }
    }

    fn check_postprocess(&self, out: &mut Vec<Violation>) {
        let pp = &self.postprocess;
        if pp.labels.is_empty() {
            out.push(Violation::Postprocess("no outcome labels".into()));
        }
        let mut uniq = pp.labels.clone();
        uniq.sort();
        uniq.dedup();
        if uniq.len() != pp.labels.len() {
            out.push(Violation::Postprocess("duplicate outcome labels".into()));
        }
        let counts = self.outcome_counts();
        let expected: usize = counts.iter().product();
        if pp.table.len() != expected {
            out.push(Violation::Postprocess(format!(
                "table has {} entries but the {} measurement steps produce {expected} records",
                pp.table.len(),
                counts.len()
            )));
        }
        for (key, label) in &pp.table {
            if key.len() != counts.len()
                || key.iter().zip(&counts).any(|(&k, &c)| (k as usize) >= c)
            {
                out.push(Violation::Postprocess(format!(
                    "record {key:?} does not match the measurement outcome ranges"
                )));
            }
            if !pp.labels.contains(label) {
                out.push(Violation::Postprocess(format!(
                    "record {key:?} maps to unknown label {label:?}"
                )));
            }
        }
    }

    fn check_outputs(&self, out: &mut Vec<Violation>) {
        let Some(regs) = &self.output_registers else {
            return;
        };
        let n = self.n_qubits();
        let mut seen = BTreeSet::new();
        let measured: BTreeSet<usize> = self
            .steps
            .iter()
            .filter(|s| s.is_measurement())
            .flat_map(|s| s.targets.iter().copied())
            .collect();
        if regs.is_empty() {
            out.push(Violation::OutputRegisters("empty list".into()));
        }
        for &r in regs {
            if r >= n {
                out.push(Violation::OutputRegisters(format!(
                    "register {r} out of range"
                )));
            }
            if !seen.insert(r) {
                out.push(Violation::OutputRegisters(format!("register {r} repeated")));
            }
            if measured.contains(&r) {
                out.push(Violation::OutputRegisters(format!(
                    "register {r} was measured and holds no output"
                )));
            }
        }
    }
}

/// Builds the identity postprocess for the given outcome counts: each record
/// maps to its own comma-joined label.
pub fn identity_postprocess(counts: &[usize]) -> Postprocess {
    let mut table = BTreeMap::new();
    let mut labels = Vec::new();
    let total: usize = counts.iter().product();
    for flat in 0..total {
        let mut rec = Vec::with_capacity(counts.len());
        let mut rem = flat;
        for &c in counts.iter().rev() {
            rec.push((rem % c) as u8);
            rem /= c;
        }
        rec.reverse();
        let label = rec
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
        labels.push(label.clone());
        table.insert(rec, label);
    }
    Postprocess { labels, table }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{bell_basis, computational_basis};
    use crate::ops::UnitaryOp;

    fn two_party_skeleton() -> Protocol {
        // Party 0 owns {0, 2}, party 1 owns {1, 3}; input on 0 and 1,
        // a shared pair on 2 and 3.
        let pair = bell_basis().vector(0).clone();
        Protocol {
            name: "skeleton".into(),
            parties: vec![
                Party {
                    name: "A".into(),
                    registers: vec![0, 2],
                },
                Party {
                    name: "B".into(),
                    registers: vec![1, 3],
                },
            ],
            input_slots: vec![
                InputSlot {
                    register: 0,
                    party: 0,
                },
                InputSlot {
                    register: 1,
                    party: 1,
                },
            ],
            resources: vec![Resource {
                id: Some("bell:0".into()),
                state: pair,
                registers: vec![2, 3],
            }],
            steps: vec![
                ProtocolStep {
                    party: 1,
                    targets: vec![1, 3],
                    payload: PayloadChoice::Fixed(Payload::Basis(bell_basis())),
                },
                ProtocolStep {
                    party: 0,
                    targets: vec![0, 2],
                    payload: PayloadChoice::Fixed(Payload::Basis(bell_basis())),
                },
            ],
            postprocess: identity_postprocess(&[4, 4]),
            output_registers: None,
        }
    }

    #[test]
    fn skeleton_is_valid() {
        two_party_skeleton().validate().unwrap();
    }

    #[test]
    fn acting_on_foreign_register_is_a_locality_violation() {
        let mut p = two_party_skeleton();
        p.steps[1].party = 1;
        let errs = p.validate().unwrap_err();
        assert!(
            errs.iter().any(|v| matches!(v, Violation::Locality { .. })),
            "{errs:?}"
        );
    }

    #[test]
    fn conditioning_on_another_party_is_rejected() {
        let mut p = two_party_skeleton();
        // Party 0 tries to pick its unitary from party 1's outcome.
        let mut table = BTreeMap::new();
        for b in 0..4u8 {
            table.insert(vec![b], Payload::Unitary(UnitaryOp::pauli(b as usize)));
        }
        p.steps.insert(
            1,
            ProtocolStep {
                party: 0,
                targets: vec![2],
                payload: PayloadChoice::Conditional {
                    sources: vec![0],
                    table,
                },
            },
        );
        // Step 2's registers are now measured later; keep the record shape.
        let errs = p.validate().unwrap_err();
        assert!(
            errs.iter()
                .any(|v| matches!(v, Violation::CrossPartyCondition { .. })),
            "{errs:?}"
        );
    }

    #[test]
    fn own_outcome_conditioning_is_allowed() {
        let mut p = two_party_skeleton();
        let mut table = BTreeMap::new();
        for b in 0..4u8 {
            table.insert(vec![b], Payload::Unitary(UnitaryOp::pauli(b as usize)));
        }
        p.steps.push(ProtocolStep {
            party: 1,
            targets: vec![1],
            payload: PayloadChoice::Conditional {
                sources: vec![0],
                table,
            },
        });
        let errs = p.validate().unwrap_err();
        // Register 1 was already measured by step 0; that is the only defect.
        assert!(
            errs.iter().all(|v| matches!(v, Violation::Targets { .. })),
            "{errs:?}"
        );
    }

    #[test]
    fn incomplete_conditional_table_is_rejected() {
        let mut p = two_party_skeleton();
        let mut table = BTreeMap::new();
        table.insert(vec![0u8], Payload::Unitary(UnitaryOp::pauli(0)));
        table.insert(vec![1u8], Payload::Unitary(UnitaryOp::pauli(1)));
        p.steps.push(ProtocolStep {
            party: 1,
            targets: vec![3],
            payload: PayloadChoice::Conditional {
                sources: vec![0],
                table,
            },
        });
        let errs = p.validate().unwrap_err();
        assert!(
            errs.iter()
                .any(|v| matches!(v, Violation::ConditionTable { .. })),
            "{errs:?}"
        );
    }

    #[test]
    fn partial_postprocess_is_rejected() {
        let mut p = two_party_skeleton();
        p.postprocess.table.remove(&vec![0, 0]);
        let errs = p.validate().unwrap_err();
        assert!(
            errs.iter().any(|v| matches!(v, Violation::Postprocess(_))),
            "{errs:?}"
        );
    }

    #[test]
    fn postprocess_label_must_be_declared() {
        let mut p = two_party_skeleton();
        p.postprocess.table.insert(vec![0, 0], "mystery".into());
        let errs = p.validate().unwrap_err();
        assert!(
            errs.iter().any(|v| matches!(v, Violation::Postprocess(_))),
            "{errs:?}"
        );
    }

    #[test]
    fn uncovered_register_is_rejected() {
        let mut p = two_party_skeleton();
        p.resources.clear();
        let errs = p.validate().unwrap_err();
        assert!(
            errs.iter().any(|v| matches!(v, Violation::Coverage(_))),
            "{errs:?}"
        );
    }

    #[test]
    fn measuring_a_register_twice_is_rejected() {
        let mut p = two_party_skeleton();
        p.steps.push(ProtocolStep {
            party: 0,
            targets: vec![0, 2],
            payload: PayloadChoice::Fixed(Payload::Basis(computational_basis(2).unwrap())),
        });
        let errs = p.validate().unwrap_err();
        assert!(
            errs.iter().any(|v| matches!(v, Violation::Targets { .. })),
            "{errs:?}"
        );
    }

    #[test]
    fn measured_output_register_is_rejected() {
        let mut p = two_party_skeleton();
        p.output_registers = Some(vec![0]);
        let errs = p.validate().unwrap_err();
        assert!(
            errs.iter()
                .any(|v| matches!(v, Violation::OutputRegisters(_))),
            "{errs:?}"
        );
    }

    #[test]
    fn payload_arity_must_match_targets() {
        let mut p = two_party_skeleton();
        p.steps[0].targets = vec![1];
        let errs = p.validate().unwrap_err();
        assert!(
            errs.iter().any(|v| matches!(v, Violation::Payload { .. })),
            "{errs:?}"
        );
    }

    #[test]
    fn identity_postprocess_covers_all_records() {
        let pp = identity_postprocess(&[4, 2, 2]);
        assert_eq!(pp.table.len(), 16);
        assert_eq!(pp.labels.len(), 16);
        assert_eq!(pp.table[&vec![3, 1, 0]], "3,1,0");
    }
}
