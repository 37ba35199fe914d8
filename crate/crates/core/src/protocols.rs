//! The shipped protocol constructions.
//!
//! Each constructor builds a measurement out of strictly local steps on
//! preshared entanglement:
//!
//! * [`twisted_local`] — the twisted basis `{|00>, |01>, |1+>, |1->}` from
//!   one shared pair: the receiving party teleports its qubit across, the
//!   other party reads its own qubit in Z and then reads the teleported one
//!   in Z or X depending on that first bit.
//! * [`bsm_local`] / [`bsm_ideal`] — a Bell measurement on two remote qubits
//!   from one (respectively two) shared pairs; the ideal variant leaves a
//!   fresh pair steered into the announced Bell state.
//! * [`ghz_local`] / [`ghz_local_ideal`] — a GHZ-basis measurement on one
//!   qubit per party from one (respectively two) shared GHZ states.
//! * [`ejm_local`] — the iso-entangled tetrahedral two-qubit measurement
//!   from three shared pairs, with a readout basis picked by the receiving
//!   party's own teleportation outcome.

use std::collections::BTreeMap;

use crate::basis::{
    bell_basis, computational_basis, ejm_basis, ghz_basis, twisted_basis, x_basis, MeasurementBasis,
};
use crate::error::{Error, Result};
use crate::ops::{pauli_bits, pauli_product_index, UnitaryOp};
use crate::protocol::{
    InputSlot, Party, Payload, PayloadChoice, Postprocess, Protocol, ProtocolStep, Resource,
};
use crate::state::StateVector;

fn bell_resource(registers: Vec<usize>) -> Resource {
    Resource {
        id: Some("bell:0".into()),
        state: bell_basis().vector(0).clone(),
        registers,
    }
}

fn ghz_resource(n: usize, registers: Vec<usize>) -> Result<Resource> {
    Ok(Resource {
        id: Some(format!("ghz{n}:+{}", "0".repeat(n - 1))),
        state: ghz_basis(n)?.vector(0).clone(),
        registers,
    })
}

fn measure(party: usize, targets: Vec<usize>, basis: MeasurementBasis) -> ProtocolStep {
    ProtocolStep {
        party,
        targets,
        payload: PayloadChoice::Fixed(Payload::Basis(basis)),
    }
}

fn unitary(party: usize, targets: Vec<usize>, u: UnitaryOp) -> ProtocolStep {
    ProtocolStep {
        party,
        targets,
        payload: PayloadChoice::Fixed(Payload::Unitary(u)),
    }
}

/// Single-qubit Pauli correction indexed by the outcome of an earlier
/// four-outcome measurement by the same party.
fn pauli_correction(party: usize, target: usize, source_step: usize) -> ProtocolStep {
    let mut table = BTreeMap::new();
    for k in 0..4u8 {
        table.insert(vec![k], Payload::Unitary(UnitaryOp::pauli(k as usize)));
    }
    ProtocolStep {
        party,
        targets: vec![target],
        payload: PayloadChoice::Conditional {
            sources: vec![source_step],
            table,
        },
    }
}

/// Twisted-basis measurement on two remote qubits from one shared pair.
///
/// Registers: 0 = first input (party A), 1 = second input (party B),
/// 2/3 = the shared pair (A side / B side). B teleports its input onto 2 by
/// a Bell measurement on (1, 3); A reads 0 in Z and then reads 2 in Z or X
/// according to that bit.
pub fn twisted_local() -> Protocol {
    let z1 = computational_basis(1).unwrap();
    let mut readout = BTreeMap::new();
    readout.insert(vec![0u8], Payload::Basis(z1.clone()));
    readout.insert(vec![1u8], Payload::Basis(x_basis()));

    // Undo the teleportation twist classically: for the Z readout the
    // second bit flips under X- and Y-type twists, for the X readout under
    // Y- and Z-type twists.
    let mut table = BTreeMap::new();
    for b in 0..4u8 {
        for a1 in 0..2u8 {
            for a2 in 0..2u8 {
                let label = if a1 == 0 {
                    if a2 ^ u8::from(b == 1 || b == 2) == 0 {
                        "00"
                    } else {
                        "01"
                    }
                } else if a2 ^ u8::from(b == 2 || b == 3) == 0 {
                    "1+"
                } else {
                    "1-"
                };
                table.insert(vec![b, a1, a2], label.to_string());
            }
        }
    }

    Protocol {
        name: "twisted".into(),
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
        resources: vec![bell_resource(vec![2, 3])],
        steps: vec![
            measure(1, vec![1, 3], bell_basis()),
            measure(0, vec![0], z1),
            ProtocolStep {
                party: 0,
                targets: vec![2],
                payload: PayloadChoice::Conditional {
                    sources: vec![1],
                    table: readout,
                },
            },
        ],
        postprocess: Postprocess {
            labels: twisted_basis().labels().to_vec(),
            table,
        },
        output_registers: None,
    }
}

/// Bell measurement on two remote qubits from one shared pair: B teleports
/// its input onto A's side, A measures its two qubits in the Bell basis, and
/// the two outcomes compose through the Pauli group.
pub fn bsm_local() -> Protocol {
    let labels = bell_basis().labels().to_vec();
    let mut table = BTreeMap::new();
    for b in 0..4u8 {
        for a in 0..4u8 {
            let r = pauli_product_index(a as usize, b as usize);
            table.insert(vec![b, a], labels[r].clone());
        }
    }
    Protocol {
        name: "bsm".into(),
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
        resources: vec![bell_resource(vec![2, 3])],
        steps: vec![
            measure(1, vec![1, 3], bell_basis()),
            measure(0, vec![0, 2], bell_basis()),
        ],
        postprocess: Postprocess {
            labels: bell_basis().labels().to_vec(),
            table,
        },
        output_registers: None,
    }
}

/// Bell measurement that is also ideal: a second shared pair (registers 4
/// and 5) is steered into the announced Bell state by local Pauli
/// corrections, each conditioned only on its own party's outcome.
pub fn bsm_ideal() -> Protocol {
    let mut base = bsm_local();
    base.name = "bsm-ideal".into();
    base.parties[0].registers.push(4);
    base.parties[1].registers.push(5);
    base.resources.push(bell_resource(vec![4, 5]));
    base.steps.push(pauli_correction(0, 4, 1));
    base.steps.push(pauli_correction(1, 5, 0));
    base.output_registers = Some(vec![4, 5]);
    base
}

/// GHZ-basis measurement on one qubit per party (n parties, n >= 2) from a
/// single shared GHZ state. Party j owns input register j and share n+j and
/// measures the two in the Bell basis.
pub fn ghz_local(n: usize) -> Result<Protocol> {
    let (parties, input_slots, steps) = ghz_layout(n, 2)?;
    Ok(Protocol {
        name: format!("ghz:{n}"),
        parties,
        input_slots,
        resources: vec![ghz_resource(n, (n..2 * n).collect())?],
        steps,
        postprocess: ghz_postprocess(n)?,
        output_registers: None,
    })
}

/// GHZ-basis measurement that is also ideal: a second shared GHZ state
/// (registers 2n..3n) is steered into the announced basis state, each party
/// applying the Pauli matching its own Bell outcome.
pub fn ghz_local_ideal(n: usize) -> Result<Protocol> {
    let (parties, input_slots, mut steps) = ghz_layout(n, 3)?;
    for j in 0..n {
        steps.push(pauli_correction(j, 2 * n + j, j));
    }
    Ok(Protocol {
        name: format!("ghz-ideal:{n}"),
        parties,
        input_slots,
        resources: vec![
            ghz_resource(n, (n..2 * n).collect())?,
            ghz_resource(n, (2 * n..3 * n).collect())?,
        ],
        steps,
        postprocess: ghz_postprocess(n)?,
        output_registers: Some((2 * n..3 * n).collect()),
    })
}

fn ghz_layout(
    n: usize,
    regs_per_party: usize,
) -> Result<(Vec<Party>, Vec<InputSlot>, Vec<ProtocolStep>)> {
    if n < 2 {
        return Err(Error::Argument(format!(
            "a GHZ-type measurement needs at least 2 parties, got {n}"
        )));
    }
    let parties = (0..n)
        .map(|j| Party {
            name: format!("P{j}"),
            registers: (0..regs_per_party).map(|k| k * n + j).collect(),
        })
        .collect();
    let input_slots = (0..n)
        .map(|j| InputSlot {
            register: j,
            party: j,
        })
        .collect();
    let steps = (0..n)
        .map(|j| measure(j, vec![j, n + j], bell_basis()))
        .collect();
    Ok((parties, input_slots, steps))
}

/// Combines the per-party Bell outcomes into a GHZ-basis label: the sign bit
/// is the parity of the Z-type bits, and tail bit i flips when party i's
/// X-type bit differs from party 0's.
fn ghz_postprocess(n: usize) -> Result<Postprocess> {
    let labels = ghz_basis(n)?.labels().to_vec();
    let mut table = BTreeMap::new();
    for flat in 0..(1usize << (2 * n)) {
        let rec: Vec<u8> = (0..n)
            .map(|j| ((flat >> (2 * (n - 1 - j))) & 3) as u8)
            .collect();
        let (x0, z0) = pauli_bits(rec[0] as usize);
        let mut s = z0;
        let mut y = 0usize;
        for (i, &o) in rec.iter().enumerate().skip(1) {
            let (xi, zi) = pauli_bits(o as usize);
            s ^= zi;
            if x0 ^ xi == 1 {
                y |= 1 << (n - 1 - i);
            }
        }
        let g = (s as usize) << (n - 1) | y;
        table.insert(rec, labels[g].clone());
    }
    Ok(Postprocess { labels, table })
}

/// The two-qubit unitary whose columns are the four tetrahedral basis
/// states; its adjoint rotates that basis onto the computational one.
pub fn ejm_unitary() -> UnitaryOp {
    ejm_basis().as_unitary().unwrap()
}

/// The readout basis the receiving party uses after announcing Bell outcome
/// `b` in [`ejm_local`]: the image of the tetrahedral basis under the
/// rotation and that twist, which comes out as a product basis of X/Y
/// eigenstates or a real maximally entangled basis.
pub fn ejm_outcome_basis(b: usize) -> MeasurementBasis {
    use num_complex::Complex64;
    let labels: Vec<String> = (0..4).map(|i| i.to_string()).collect();
    let ket = |s: &str| StateVector::from_ket(s).unwrap();
    let vectors = match b {
        // Identity twist: the rotated basis is already computational.
        0 => (0..4)
            .map(|i| StateVector::basis_state(2, i).unwrap())
            .collect(),
        // X-type twist: product basis of X and Y eigenstates.
        1 => vec![ket("+r"), ket("+l"), ket("-r"), ket("-l")],
        // Y-type twist: product basis of Y and X eigenstates.
        2 => vec![ket("r+"), ket("r-"), ket("l+"), ket("l-")],
        // Z-type twist: the reflection basis `u - e_j` around the uniform
        // vector `u = (1,1,1,1)/2`, real and maximally entangled.
        3 => (0..4)
            .map(|j| {
                let amps = (0..4)
                    .map(|i| Complex64::new(0.5 - if i == j { 1.0 } else { 0.0 }, 0.0))
                    .collect();
                StateVector::new(2, amps).unwrap()
            })
            .collect(),
        _ => panic!("outcome index must be 0..4"),
    };
    MeasurementBasis::new(labels, vectors).unwrap()
}

/// Frozen classical readout map for [`ejm_local`], indexed as
/// `[b][a1][a2][o]` with `b` the receiving party's Bell outcome, `a1`/`a2`
/// the sending party's two Bell outcomes and `o` the final readout outcome;
/// the entry is the simulated measurement result. Rederived and checked by
/// a regression test.
const EJM_TABLE: [[[[u8; 4]; 4]; 4]; 4] = [
    [
        [[0, 1, 2, 3], [1, 0, 3, 2], [1, 0, 3, 2], [0, 1, 2, 3]],
        [[2, 3, 0, 1], [3, 2, 1, 0], [3, 2, 1, 0], [2, 3, 0, 1]],
        [[2, 3, 0, 1], [3, 2, 1, 0], [3, 2, 1, 0], [2, 3, 0, 1]],
        [[0, 1, 2, 3], [1, 0, 3, 2], [1, 0, 3, 2], [0, 1, 2, 3]],
    ],
    [
        [[0, 3, 1, 2], [3, 0, 2, 1], [0, 3, 1, 2], [3, 0, 2, 1]],
        [[0, 3, 1, 2], [3, 0, 2, 1], [0, 3, 1, 2], [3, 0, 2, 1]],
        [[1, 2, 0, 3], [2, 1, 3, 0], [1, 2, 0, 3], [2, 1, 3, 0]],
        [[1, 2, 0, 3], [2, 1, 3, 0], [1, 2, 0, 3], [2, 1, 3, 0]],
    ],
    [
        [[3, 1, 0, 2], [3, 1, 0, 2], [1, 3, 2, 0], [1, 3, 2, 0]],
        [[0, 2, 3, 1], [0, 2, 3, 1], [2, 0, 1, 3], [2, 0, 1, 3]],
        [[3, 1, 0, 2], [3, 1, 0, 2], [1, 3, 2, 0], [1, 3, 2, 0]],
        [[0, 2, 3, 1], [0, 2, 3, 1], [2, 0, 1, 3], [2, 0, 1, 3]],
    ],
    [
        [[0, 2, 1, 3], [2, 0, 3, 1], [3, 1, 2, 0], [1, 3, 0, 2]],
        [[1, 3, 0, 2], [3, 1, 2, 0], [2, 0, 3, 1], [0, 2, 1, 3]],
        [[3, 1, 2, 0], [1, 3, 0, 2], [0, 2, 1, 3], [2, 0, 3, 1]],
        [[2, 0, 3, 1], [0, 2, 1, 3], [1, 3, 0, 2], [3, 1, 2, 0]],
    ],
];

/// Recomputes the readout map entry by entry: for every twist combination
/// the image of each tetrahedral basis state under the local maps must land
/// exactly on one readout vector. Exists so the frozen table stays checkable.
pub fn derive_ejm_table() -> Result<[[[[u8; 4]; 4]; 4]; 4]> {
    let ejm = ejm_basis();
    let u_dag = ejm_unitary().adjoint();
    let mut table = [[[[0u8; 4]; 4]; 4]; 4];
    for b in 0..4 {
        let readout = ejm_outcome_basis(b);
        let twist_b = UnitaryOp::identity(1).kron(&UnitaryOp::pauli(b));
        for a1 in 0..4 {
            for a2 in 0..4 {
                let twist_a = UnitaryOp::pauli(a1).kron(&UnitaryOp::pauli(a2));
                let map = twist_a.mul(&u_dag).mul(&twist_b);
                for o in 0..4 {
                    let mut hit = None;
                    for j in 0..4 {
                        let image = ejm.vector(j).apply_on(&map, &[0, 1])?;
                        let overlap = readout.vector(o).inner(&image).norm();
                        if overlap > 1.0 - 1e-9 {
                            if hit.is_some() {
                                return Err(Error::Validation(format!(
                                    "readout {o} under twists ({b},{a1},{a2}) matches two basis states"
                                )));
                            }
                            hit = Some(j as u8);
                        } else if overlap > 1e-6 {
                            return Err(Error::Validation(format!(
                                "readout {o} under twists ({b},{a1},{a2}) has partial overlap {overlap}"
                            )));
                        }
                    }
                    table[b][a1][a2][o] = hit.ok_or_else(|| {
                        Error::Validation(format!(
                            "readout {o} under twists ({b},{a1},{a2}) matches nothing"
                        ))
                    })?;
                }
            }
        }
    }
    Ok(table)
}

/// Tetrahedral iso-entangled measurement on two remote qubits from three
/// shared pairs.
///
/// Registers: 0/1 = the inputs (A side / B side); pairs (2,3), (4,5), (6,7)
/// with A holding the even registers. B teleports its input onto 6; A
/// rotates (0,6) into the computational basis of the target measurement and
/// teleports both halves back onto B's registers 3 and 5; B reads those in a
/// basis picked by its own first outcome.
pub fn ejm_local() -> Protocol {
    let labels = ejm_basis().labels().to_vec();
    let mut table = BTreeMap::new();
    for b in 0..4usize {
        for a1 in 0..4usize {
            for a2 in 0..4usize {
                for o in 0..4usize {
                    table.insert(
                        vec![b as u8, a1 as u8, a2 as u8, o as u8],
                        labels[EJM_TABLE[b][a1][a2][o] as usize].clone(),
                    );
                }
            }
        }
    }
    let mut readout = BTreeMap::new();
    for b in 0..4u8 {
        readout.insert(vec![b], Payload::Basis(ejm_outcome_basis(b as usize)));
    }
    Protocol {
        name: "ejm".into(),
        parties: vec![
            Party {
                name: "A".into(),
                registers: vec![0, 2, 4, 6],
            },
            Party {
                name: "B".into(),
                registers: vec![1, 3, 5, 7],
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
        resources: vec![
            bell_resource(vec![2, 3]),
            bell_resource(vec![4, 5]),
            bell_resource(vec![6, 7]),
        ],
        steps: vec![
            measure(1, vec![1, 7], bell_basis()),
            unitary(0, vec![0, 6], ejm_unitary().adjoint()),
            measure(0, vec![0, 2], bell_basis()),
            measure(0, vec![6, 4], bell_basis()),
            ProtocolStep {
                party: 1,
                targets: vec![3, 5],
                payload: PayloadChoice::Conditional {
                    sources: vec![0],
                    table: readout,
                },
            },
        ],
        postprocess: Postprocess { labels, table },
        output_registers: None,
    }
}

/// Looks up a shipped protocol by id: `twisted`, `bsm`, `bsm-ideal`, `ejm`,
/// `ghz:<n>`, `ghz-ideal:<n>`.
pub fn shipped_protocol(id: &str) -> Result<Protocol> {
    if let Some(rest) = id.strip_prefix("ghz-ideal:") {
        let n: usize = rest
            .parse()
            .map_err(|_| Error::Argument(format!("bad party count in {id:?}")))?;
        return ghz_local_ideal(n);
    }
    if let Some(rest) = id.strip_prefix("ghz:") {
        let n: usize = rest
            .parse()
            .map_err(|_| Error::Argument(format!("bad party count in {id:?}")))?;
        return ghz_local(n);
    }
    match id {
        "twisted" => Ok(twisted_local()),
        "bsm" => Ok(bsm_local()),
        "bsm-ideal" => Ok(bsm_ideal()),
        "ejm" => Ok(ejm_local()),
        _ => Err(Error::Argument(format!(
            "unknown protocol id {id:?} (try one of {})",
            shipped_ids().join(", ")
        ))),
    }
}

/// The measurement basis a shipped protocol simulates.
pub fn shipped_target_basis(id: &str) -> Result<MeasurementBasis> {
    if let Some(rest) = id.strip_prefix("ghz-ideal:") {
        let n: usize = rest
            .parse()
            .map_err(|_| Error::Argument(format!("bad party count in {id:?}")))?;
        return ghz_basis(n);
    }
    if let Some(rest) = id.strip_prefix("ghz:") {
        let n: usize = rest
            .parse()
            .map_err(|_| Error::Argument(format!("bad party count in {id:?}")))?;
        return ghz_basis(n);
    }
    match id {
        "twisted" => Ok(twisted_basis()),
        "bsm" | "bsm-ideal" => Ok(bell_basis()),
        "ejm" => Ok(ejm_basis()),
        _ => Err(Error::Argument(format!("unknown protocol id {id:?}"))),
    }
}

/// Representative shipped protocol ids (the GHZ families take any party
/// count as `ghz:<n>` / `ghz-ideal:<n>`).
pub fn shipped_ids() -> Vec<String> {
    ["twisted", "bsm", "bsm-ideal", "ejm", "ghz:3", "ghz-ideal:3"]
        .into_iter()
        .map(String::from)
        .collect()
}
