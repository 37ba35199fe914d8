//! Structural laws of the branch engine that the shipped protocols rely on:
//! step-order independence across parties, channel-level no-signaling for
//! every valid protocol, the idealness-implies-erasure direction, verifier
//! determinism, and the two-party reduction of the parity protocol.

use std::collections::BTreeMap;

use locmeas::basis::{bell_basis, ghz_basis, twisted_basis};
use locmeas::density::trace_distance;
use locmeas::engine::{enumerate_branches, result_distribution};
use locmeas::ops::UnitaryOp;
use locmeas::protocol::{PayloadChoice, Protocol};
use locmeas::protocols::{
    bsm_ideal, bsm_local, ghz_local, shipped_ids, shipped_protocol, twisted_local,
};
use locmeas::scenario::MiddleMeasurement;
use locmeas::state::{haar_random_state, StateVector};
use locmeas::verify::{check_ideal, check_no_signaling, check_protocol_erasure, spanning_inputs};

/// The twisted protocol with the receiving party's teleportation moved from
/// first step to last: measurement records are permuted accordingly, so the
/// conditional source index and every postprocess key must be remapped.
fn twisted_reordered() -> Protocol {
    let mut p = twisted_local();
    let teleport = p.steps.remove(0);
    p.steps.push(teleport);
    // The adaptive readout now conditions on step 0 instead of step 1.
    if let PayloadChoice::Conditional { sources, .. } = &mut p.steps[1].payload {
        *sources = vec![0];
    } else {
        panic!("expected the readout step to be conditional");
    }
    // Records were [b, a1, a2]; they are now [a1, a2, b].
    let remapped: BTreeMap<Vec<u8>, String> = p
        .postprocess
        .table
        .iter()
        .map(|(k, v)| (vec![k[1], k[2], k[0]], v.clone()))
        .collect();
    p.postprocess.table = remapped;
    p
}

#[test]
fn commuting_steps_of_different_parties_can_be_permuted() {
    let original = twisted_local();
    let reordered = twisted_reordered();
    reordered.validate().expect("reordered protocol is valid");

    for (id, input) in spanning_inputs(2, Some(&twisted_basis()), 10).unwrap() {
        let a = result_distribution(&original, &input).unwrap();
        let b = result_distribution(&reordered, &input).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12, "distribution moved on {id}");
        }

        // The full record statistics agree too, up to the index permutation.
        let ra = enumerate_branches(&original, &input)
            .unwrap()
            .record_distribution();
        let rb = enumerate_branches(&reordered, &input)
            .unwrap()
            .record_distribution();
        assert_eq!(ra.len(), rb.len());
        for (k, v) in &ra {
            let permuted = vec![k[1], k[2], k[0]];
            let w = rb.get(&permuted).copied().unwrap_or(0.0);
            assert!((v - w).abs() < 1e-12, "record {k:?} moved on {id}");
        }
    }
}

#[test]
fn valid_protocols_cannot_signal_through_the_channel() {
    for id in shipped_ids() {
        let protocol = shipped_protocol(&id).unwrap();
        let n = protocol.input_slots.len();
        let middle = MiddleMeasurement::Localizable {
            protocol: protocol.clone(),
        };

        let mut inputs = vec![StateVector::basis_state(n, 0).unwrap()];
        inputs.push(haar_random_state(n, 31).unwrap());
        inputs.push(haar_random_state(n, 32).unwrap());

        for (p_idx, party) in protocol.parties.iter().enumerate() {
            let foreign_slots: Vec<usize> = protocol
                .input_slots
                .iter()
                .enumerate()
                .filter(|(_, s)| s.party != p_idx)
                .map(|(i, _)| i)
                .collect();
            for input in &inputs {
                let base = middle
                    .nonselective_reduced(input, &party.registers)
                    .unwrap();
                for seed in [5u64, 6] {
                    let mut kicked = input.clone();
                    for (j, &slot) in foreign_slots.iter().enumerate() {
                        let u = UnitaryOp::haar_random(1, seed + j as u64 * 100);
                        kicked = kicked.apply_on(&u, &[slot]).unwrap();
                    }
                    let moved = middle
                        .nonselective_reduced(&kicked, &party.registers)
                        .unwrap();
                    let gap = trace_distance(&base, &moved).unwrap();
                    assert!(gap < 1e-9, "{id} party {} leaks {gap:.3e}", party.name);
                }
            }
        }
    }
}

#[test]
fn ideal_protocols_also_erase() {
    for id in ["bsm-ideal", "ghz-ideal:3"] {
        let protocol = shipped_protocol(id).unwrap();
        let n = protocol.input_slots.len();
        let inputs = spanning_inputs(n, None, 4).unwrap();
        let ideal = check_ideal(&protocol, &inputs).unwrap();
        let erasure = check_protocol_erasure(&protocol, &inputs).unwrap();
        assert!(ideal.passed(), "{id} not ideal");
        assert!(erasure.passed(), "{id} ideal but not erasing");
    }
}

#[test]
fn verifier_reports_are_deterministic() {
    let protocol = bsm_local();
    let scenario = locmeas::scenario::protocol_scenario(&protocol).unwrap();
    let inputs = spanning_inputs(2, Some(&bell_basis()), 5).unwrap();
    let mut a = check_no_signaling(&scenario, &inputs).unwrap();
    let mut b = check_no_signaling(&scenario, &inputs).unwrap();
    a.runtime_ms = 0;
    b.runtime_ms = 0;
    assert_eq!(
        serde_json::to_value(&a).unwrap(),
        serde_json::to_value(&b).unwrap()
    );
}

#[test]
fn two_party_parity_protocol_reduces_to_the_bell_protocol() {
    let parity = ghz_local(2).unwrap();
    let bell = bsm_local();
    let parity_basis = ghz_basis(2).unwrap();
    let bell_basis = bell_basis();

    // The two bases span the same states; find the label permutation.
    let perm: Vec<usize> = bell_basis
        .vectors()
        .iter()
        .map(|v| {
            parity_basis
                .vectors()
                .iter()
                .position(|w| v.inner(w).norm() > 1.0 - 1e-9)
                .expect("two-party parity basis must be the Bell basis")
        })
        .collect();

    for (id, input) in spanning_inputs(2, Some(&bell_basis), 10).unwrap() {
        let db = result_distribution(&bell, &input).unwrap();
        let dp = result_distribution(&parity, &input).unwrap();
        for (i, &j) in perm.iter().enumerate() {
            assert!((db[i] - dp[j]).abs() < 1e-9, "marginals differ on {id}");
        }
    }
}

#[test]
fn corrected_protocol_repeats_its_own_outcome() {
    // Run bsm-ideal, take each branch's output state, feed it back, and
    // demand the same label: the operational reading of idealness.
    let protocol = bsm_ideal();
    let input = haar_random_state(2, 17).unwrap();
    let outputs = protocol.output_registers.clone().unwrap();
    let branches = enumerate_branches(&protocol, &input).unwrap();
    for branch in &branches.branches {
        let label = branch.label(&protocol.postprocess).unwrap().to_string();
        let idx = protocol
            .postprocess
            .labels
            .iter()
            .position(|l| *l == label)
            .unwrap();
        let again =
            result_distribution(&protocol, &branch.output_state(&outputs).unwrap()).unwrap();
        assert!((again[idx] - 1.0).abs() < 1e-9);
    }
}
