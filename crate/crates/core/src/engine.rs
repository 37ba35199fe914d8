//! Exact branch enumeration.
//!
//! The engine plays out a protocol on a given input state, following every
//! measurement outcome, and returns the complete tree of leaves: each branch
//! carries its outcome record, its joint probability, and the exact
//! post-measurement state on the full register set (measured registers stay
//! collapsed in their outcome eigenstates). Branches whose conditional
//! probability falls below the prune threshold are dropped but counted.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::distributions::WeightedIndex;
use rand::prelude::*;

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::protocol::{Payload, PayloadChoice, Postprocess, Protocol};
use crate::state::StateVector;
use crate::tol;

/// One surviving measurement history.
#[derive(Clone, Debug)]
pub struct Branch {
    /// One outcome index per measurement step, in step order.
    pub record: Vec<u8>,
    /// Joint probability of this history.
    pub probability: f64,
    /// Post-measurement state on all registers.
    pub state: StateVector,
}

impl Branch {
    /// Final label of this branch under a postprocess map.
    pub fn label<'a>(&self, pp: &'a Postprocess) -> Result<&'a str> {
        pp.table
            .get(&self.record)
            .map(String::as_str)
            .ok_or_else(|| Error::Validation(format!("record {:?} has no label", self.record)))
    }

    /// Pure state held on `outputs` after the run. Fails if those registers
    /// are still correlated with the rest.
    pub fn output_state(&self, outputs: &[usize]) -> Result<StateVector> {
        let rho = self.state.reduced_density(outputs)?;
        let (weight, vector) = rho.principal_component()?;
        if weight < 1.0 - tol::EQUALITY {
            return Err(Error::Validation(format!(
                "registers {outputs:?} are not in a pure state (leading weight {weight})"
            )));
        }
        Ok(vector)
    }
}

/// A measurement history dropped by pruning.
#[derive(Clone, Debug)]
pub struct PrunedBranch {
    pub record: Vec<u8>,
    pub probability: f64,
}

/// All leaves of a protocol run.
#[derive(Clone, Debug)]
pub struct BranchSet {
    pub branches: Vec<Branch>,
    pub pruned: Vec<PrunedBranch>,
    pub prune_threshold: f64,
}

impl BranchSet {
    /// Surviving plus pruned histories.
    pub fn leaf_count(&self) -> usize {
        self.branches.len() + self.pruned.len()
    }

    pub fn total_probability(&self) -> f64 {
        self.branches.iter().map(|b| b.probability).sum()
    }

    /// Probability of each outcome record.
    pub fn record_distribution(&self) -> BTreeMap<Vec<u8>, f64> {
        let mut out = BTreeMap::new();
        for b in &self.branches {
            *out.entry(b.record.clone()).or_insert(0.0) += b.probability;
        }
        out
    }

    /// Probability of each label, in the postprocess label order.
    pub fn label_distribution(&self, pp: &Postprocess) -> Result<Vec<f64>> {
        let mut out = vec![0.0; pp.labels.len()];
        for b in &self.branches {
            let label = b.label(pp)?;
            let idx = pp
                .labels
                .iter()
                .position(|l| l == label)
                .ok_or_else(|| Error::Validation(format!("label {label:?} not declared")))?;
            out[idx] += b.probability;
        }
        Ok(out)
    }

    /// Nonselective state after the run: the probability-weighted mixture of
    /// branch states on all registers (normalized over surviving branches,
    /// whose weight differs from 1 only by pruning dust).
    pub fn mixture(&self) -> Result<DensityMatrix> {
        let first = self
            .branches
            .first()
            .ok_or_else(|| Error::Validation("no surviving branches".into()))?;
        let dim = first.state.dim();
        let total = self.total_probability();
        let mut acc = nalgebra::DMatrix::<Complex64>::zeros(dim, dim);
        for b in &self.branches {
            let rho = DensityMatrix::from_pure(&b.state);
            acc += rho.mat() * Complex64::new(b.probability / total, 0.0);
        }
        DensityMatrix::new(acc)
    }

    /// Reduced nonselective state on `keep`, assembled branch by branch so
    /// the full-register mixture is never materialized.
    pub fn reduced_mixture(&self, keep: &[usize]) -> Result<DensityMatrix> {
        if self.branches.is_empty() {
            return Err(Error::Validation("no surviving branches".into()));
        }
        let total = self.total_probability();
        let dim = 1usize << keep.len();
        let mut acc = nalgebra::DMatrix::<Complex64>::zeros(dim, dim);
        for b in &self.branches {
            let rho = b.state.reduced_density(keep)?;
            acc += rho.mat() * Complex64::new(b.probability / total, 0.0);
        }
        DensityMatrix::new(acc)
    }
}

/// Reorders qubits: source qubit `p` moves to position `dest[p]`.
pub fn permute_qubits(state: &StateVector, dest: &[usize]) -> Result<StateVector> {
    let n = state.n_qubits();
    if dest.len() != n {
        return Err(Error::Argument(format!(
            "permutation lists {} qubits, state has {n}",
            dest.len()
        )));
    }
    let mut seen = vec![false; n];
    for &d in dest {
        if d >= n || seen[d] {
            return Err(Error::Argument(format!(
                "{dest:?} is not a permutation of 0..{n}"
            )));
        }
        seen[d] = true;
    }
    let mut amps = vec![Complex64::ZERO; state.dim()];
    for i in 0..state.dim() {
        let mut j = 0usize;
        for (p, &d) in dest.iter().enumerate() {
            if (i >> (n - 1 - p)) & 1 == 1 {
                j |= 1 << (n - 1 - d);
            }
        }
        amps[j] = state.amplitude(i);
    }
    StateVector::new(n, amps)
}

/// Places the joint input state into the input slots and the resource states
/// into their registers, producing the full initial state.
pub fn assemble_initial(protocol: &Protocol, input: &StateVector) -> Result<StateVector> {
    if input.n_qubits() != protocol.input_slots.len() {
        return Err(Error::Dimension(format!(
            "protocol {:?} takes a {}-qubit input, got {} qubits",
            protocol.name,
            protocol.input_slots.len(),
            input.n_qubits()
        )));
    }
    let mut full = input.clone();
    for res in &protocol.resources {
        full = full.kron(&res.state)?;
    }
    if full.n_qubits() != protocol.n_qubits() {
        return Err(Error::Dimension(format!(
            "slots and resources fill {} registers, protocol declares {}",
            full.n_qubits(),
            protocol.n_qubits()
        )));
    }
    let mut dest: Vec<usize> = protocol.input_slots.iter().map(|s| s.register).collect();
    for res in &protocol.resources {
        dest.extend(res.registers.iter().copied());
    }
    permute_qubits(&full, &dest)
}

fn resolve_payload<'a>(
    protocol: &'a Protocol,
    ordinal_of_step: &[Option<usize>],
    step_idx: usize,
    record: &[u8],
) -> Result<&'a Payload> {
    match &protocol.steps[step_idx].payload {
        PayloadChoice::Fixed(p) => Ok(p),
        PayloadChoice::Conditional { sources, table } => {
            let key: Vec<u8> = sources
                .iter()
                .map(|&s| {
                    ordinal_of_step[s]
                        .map(|o| record[o])
                        .ok_or_else(|| Error::Validation(format!("step {s} has no outcome")))
                })
                .collect::<Result<_>>()?;
            table
                .get(&key)
                .ok_or_else(|| Error::Validation(format!("no payload for outcomes {key:?}")))
        }
    }
}

struct Walker<'a> {
    protocol: &'a Protocol,
    ordinal_of_step: Vec<Option<usize>>,
    prune: f64,
    branches: Vec<Branch>,
    pruned: Vec<PrunedBranch>,
}

impl Walker<'_> {
    fn walk(
        &mut self,
        step_idx: usize,
        state: StateVector,
        prob: f64,
        record: Vec<u8>,
    ) -> Result<()> {
        if step_idx == self.protocol.steps.len() {
            self.branches.push(Branch {
                record,
                probability: prob,
                state,
            });
            return Ok(());
        }
        let payload = resolve_payload(self.protocol, &self.ordinal_of_step, step_idx, &record)?;
        let targets = &self.protocol.steps[step_idx].targets;
        match payload {
            Payload::Unitary(u) => {
                let next = state.apply_on(u, targets)?;
                self.walk(step_idx + 1, next, prob, record)
            }
            Payload::Basis(basis) => {
                for i in 0..basis.len() {
                    let (p_cond, collapsed) =
                        state.project_on(basis.vector(i), targets, self.prune)?;
                    let mut rec = record.clone();
                    rec.push(i as u8);
                    match collapsed {
                        Some(s) => self.walk(step_idx + 1, s, prob * p_cond, rec)?,
                        None => self.pruned.push(PrunedBranch {
                            record: rec,
                            probability: prob * p_cond,
                        }),
                    }
                }
                Ok(())
            }
        }
    }
}

/// Validates the protocol, then enumerates every measurement branch exactly.
pub fn enumerate_branches(protocol: &Protocol, input: &StateVector) -> Result<BranchSet> {
    protocol.validate().map_err(|violations| {
        Error::Validation(
            violations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("; "),
        )
    })?;
    enumerate_branches_prevalidated(protocol, input)
}

/// Enumeration without the validation pass, for callers that validated the
/// structure once and then only swap payloads of identical shape.
pub(crate) fn enumerate_branches_prevalidated(
    protocol: &Protocol,
    input: &StateVector,
) -> Result<BranchSet> {
    let initial = assemble_initial(protocol, input)?;
    let mut ordinal_of_step = vec![None; protocol.steps.len()];
    for (ordinal, idx) in protocol.measurement_step_indices().into_iter().enumerate() {
        ordinal_of_step[idx] = Some(ordinal);
    }
    let mut walker = Walker {
        protocol,
        ordinal_of_step,
        prune: tol::PRUNE,
        branches: Vec::new(),
        pruned: Vec::new(),
    };
    walker.walk(0, initial, 1.0, Vec::new())?;
    Ok(BranchSet {
        branches: walker.branches,
        pruned: walker.pruned,
        prune_threshold: tol::PRUNE,
    })
}

/// Label probabilities of a protocol on an input, in postprocess label order.
pub fn result_distribution(protocol: &Protocol, input: &StateVector) -> Result<Vec<f64>> {
    enumerate_branches(protocol, input)?.label_distribution(&protocol.postprocess)
}

/// One sampled run of a protocol.
#[derive(Clone, Debug)]
pub struct RunSample {
    pub record: Vec<u8>,
    pub label: String,
    pub probability: f64,
    /// State on the declared output registers, when the protocol has them.
    pub output: Option<StateVector>,
}

/// Samples a single run by exact enumeration followed by a weighted draw.
pub fn sample_run<R: Rng>(
    protocol: &Protocol,
    input: &StateVector,
    rng: &mut R,
) -> Result<RunSample> {
    let set = enumerate_branches(protocol, input)?;
    let weights: Vec<f64> = set.branches.iter().map(|b| b.probability).collect();
    let dist = WeightedIndex::new(&weights)
        .map_err(|e| Error::Validation(format!("cannot sample branches: {e}")))?;
    let branch = &set.branches[dist.sample(rng)];
    let output = match &protocol.output_registers {
        Some(regs) => Some(branch.output_state(regs)?),
        None => None,
    };
    Ok(RunSample {
        record: branch.record.clone(),
        label: branch.label(&protocol.postprocess)?.to_string(),
        probability: branch.probability,
        output,
    })
}

/// Draws `n` runs by enumerating once and sampling outcome labels from the
/// branch weights. Returns the per-label counts, indexed like the
/// postprocess label list.
pub fn sample_label_counts<R: Rng>(
    protocol: &Protocol,
    input: &StateVector,
    n: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let set = enumerate_branches(protocol, input)?;
    let weights: Vec<f64> = set.branches.iter().map(|b| b.probability).collect();
    let dist = WeightedIndex::new(&weights)
        .map_err(|e| Error::Validation(format!("cannot sample branches: {e}")))?;
    let labels = &protocol.postprocess.labels;
    let mut counts = vec![0usize; labels.len()];
    for _ in 0..n {
        let label = set.branches[dist.sample(rng)].label(&protocol.postprocess)?;
        let idx = labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::Validation(format!("unknown label {label:?}")))?;
        counts[idx] += 1;
    }
    Ok(counts)
}

/// The nonselective channel of the protocol: mixture of all branch states on
/// the full register set.
pub fn nonselective_channel(protocol: &Protocol, input: &StateVector) -> Result<DensityMatrix> {
    enumerate_branches(protocol, input)?.mixture()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{bell_basis, computational_basis, x_basis};
    use crate::ops::UnitaryOp;
    use crate::protocol::{identity_postprocess, InputSlot, Party, ProtocolStep, Resource};
    use crate::state::haar_random_state;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Two parties, A owning {0, 2} and B owning {1, 3}; input qubits land on
    /// 0 and 1, a shared pair on (2, 3).
    fn teleport_protocol() -> Protocol {
        Protocol {
            name: "teleport".into(),
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
                state: bell_basis().vector(0).clone(),
                registers: vec![2, 3],
            }],
            steps: vec![ProtocolStep {
                party: 1,
                targets: vec![1, 3],
                payload: PayloadChoice::Fixed(Payload::Basis(bell_basis())),
            }],
            postprocess: identity_postprocess(&[4]),
            output_registers: None,
        }
    }

    #[test]
    fn assemble_places_input_and_resource() {
        let p = teleport_protocol();
        let full = assemble_initial(&p, &StateVector::from_ket("01").unwrap()).unwrap();
        // |0>_0 |1>_1 (Φ+)_{23}: support on 0100 and 0111.
        assert!((full.amplitude(0b0100).re - (0.5f64).sqrt()).abs() < 1e-12);
        assert!((full.amplitude(0b0111).re - (0.5f64).sqrt()).abs() < 1e-12);
        assert!((full.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn assemble_respects_slot_order() {
        let mut p = teleport_protocol();
        p.input_slots = vec![
            InputSlot {
                register: 1,
                party: 1,
            },
            InputSlot {
                register: 0,
                party: 0,
            },
        ];
        // Input qubit 0 now lands on register 1.
        let full = assemble_initial(&p, &StateVector::from_ket("10").unwrap()).unwrap();
        assert!((full.amplitude(0b0100).re - (0.5f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn permute_is_consistent_with_its_inverse() {
        let psi = haar_random_state(3, 11).unwrap();
        let fwd = permute_qubits(&psi, &[2, 0, 1]).unwrap();
        let back = permute_qubits(&fwd, &[1, 2, 0]).unwrap();
        for i in 0..psi.dim() {
            assert!((psi.amplitude(i) - back.amplitude(i)).norm() < 1e-12);
        }
    }

    #[test]
    fn bell_measurement_teleports_with_pauli_twists() {
        let p = teleport_protocol();
        let input = haar_random_state(2, 7).unwrap();
        let set = enumerate_branches(&p, &input).unwrap();
        assert_eq!(set.branches.len(), 4);
        assert_eq!(set.pruned.len(), 0);
        assert!((set.total_probability() - 1.0).abs() < 1e-10);
        for b in &set.branches {
            assert!((b.probability - 0.25).abs() < 1e-10);
            let out = b.output_state(&[0, 2]).unwrap();
            let expected = input
                .apply_on(&UnitaryOp::pauli(b.record[0] as usize), &[1])
                .unwrap();
            assert!(
                out.close_up_to_phase(&expected, 1e-9),
                "outcome {:?}",
                b.record
            );
        }
    }

    #[test]
    fn conditional_basis_follows_own_outcome() {
        let z = computational_basis(1).unwrap();
        let mut table = BTreeMap::new();
        table.insert(vec![0u8], Payload::Basis(z.clone()));
        table.insert(vec![1u8], Payload::Basis(x_basis()));
        let p = Protocol {
            name: "branching readout".into(),
            parties: vec![Party {
                name: "A".into(),
                registers: vec![0, 1],
            }],
            input_slots: vec![
                InputSlot {
                    register: 0,
                    party: 0,
                },
                InputSlot {
                    register: 1,
                    party: 0,
                },
            ],
            resources: vec![],
            steps: vec![
                ProtocolStep {
                    party: 0,
                    targets: vec![0],
                    payload: PayloadChoice::Fixed(Payload::Basis(z)),
                },
                ProtocolStep {
                    party: 0,
                    targets: vec![1],
                    payload: PayloadChoice::Conditional {
                        sources: vec![0],
                        table,
                    },
                },
            ],
            postprocess: identity_postprocess(&[2, 2]),
            output_registers: None,
        };
        p.validate().unwrap();

        // |1+>: first outcome is 1, so the second qubit is read in X and
        // lands on "+" with certainty.
        let one = enumerate_branches(&p, &StateVector::from_ket("1+").unwrap()).unwrap();
        let dist = one.record_distribution();
        assert!((dist[&vec![1, 0]] - 1.0).abs() < 1e-12);

        // |0+>: first outcome is 0, the second qubit is read in Z, 50/50.
        let zero = enumerate_branches(&p, &StateVector::from_ket("0+").unwrap()).unwrap();
        let dist = zero.record_distribution();
        assert!((dist[&vec![0, 0]] - 0.5).abs() < 1e-12);
        assert!((dist[&vec![0, 1]] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn conditional_unitary_corrects_a_shared_pair() {
        let z = computational_basis(1).unwrap();
        let mut table = BTreeMap::new();
        table.insert(vec![0u8], Payload::Unitary(UnitaryOp::identity(1)));
        table.insert(vec![1u8], Payload::Unitary(UnitaryOp::pauli(1)));
        let p = Protocol {
            name: "flip correction".into(),
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
                state: bell_basis().vector(0).clone(),
                registers: vec![2, 3],
            }],
            steps: vec![
                ProtocolStep {
                    party: 1,
                    targets: vec![1],
                    payload: PayloadChoice::Fixed(Payload::Basis(z)),
                },
                ProtocolStep {
                    party: 1,
                    targets: vec![3],
                    payload: PayloadChoice::Conditional {
                        sources: vec![0],
                        table,
                    },
                },
            ],
            postprocess: identity_postprocess(&[2]),
            output_registers: Some(vec![2, 3]),
        };
        p.validate().unwrap();
        // Input |01>: B reads 1 and flips its half, turning Φ+ into Ψ+.
        let set = enumerate_branches(&p, &StateVector::from_ket("01").unwrap()).unwrap();
        assert_eq!(set.branches.len(), 1);
        let out = set.branches[0].output_state(&[2, 3]).unwrap();
        assert!(out.close_up_to_phase(bell_basis().vector(1), 1e-12));
        // Input |00>: no correction, pair stays Φ+.
        let set = enumerate_branches(&p, &StateVector::from_ket("00").unwrap()).unwrap();
        let out = set.branches[0].output_state(&[2, 3]).unwrap();
        assert!(out.close_up_to_phase(bell_basis().vector(0), 1e-12));
    }

    #[test]
    fn deterministic_outcomes_prune_the_rest() {
        let p = Protocol {
            name: "fixed readout".into(),
            parties: vec![Party {
                name: "A".into(),
                registers: vec![0],
            }],
            input_slots: vec![InputSlot {
                register: 0,
                party: 0,
            }],
            resources: vec![],
            steps: vec![ProtocolStep {
                party: 0,
                targets: vec![0],
                payload: PayloadChoice::Fixed(Payload::Basis(computational_basis(1).unwrap())),
            }],
            postprocess: identity_postprocess(&[2]),
            output_registers: None,
        };
        let set = enumerate_branches(&p, &StateVector::from_ket("0").unwrap()).unwrap();
        assert_eq!(set.branches.len(), 1);
        assert_eq!(set.pruned.len(), 1);
        assert_eq!(set.leaf_count(), 2);
    }

    #[test]
    fn invalid_protocol_is_rejected_before_running() {
        let mut p = teleport_protocol();
        p.steps[0].party = 0; // acts on B's registers
        let err = enumerate_branches(&p, &StateVector::from_ket("00").unwrap()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn sampling_is_reproducible_and_follows_the_distribution() {
        let p = teleport_protocol();
        let input = StateVector::from_ket("00").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = sample_run(&p, &input, &mut rng).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = sample_run(&p, &input, &mut rng).unwrap();
        assert_eq!(a.record, b.record);

        let mut counts = [0usize; 4];
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..4000 {
            let s = sample_run(&p, &input, &mut rng).unwrap();
            counts[s.record[0] as usize] += 1;
        }
        for c in counts {
            let f = c as f64 / 4000.0;
            assert!((f - 0.25).abs() < 0.05, "frequency {f}");
        }
    }

    #[test]
    fn nonselective_readout_dephases() {
        let p = Protocol {
            name: "dephase".into(),
            parties: vec![Party {
                name: "A".into(),
                registers: vec![0],
            }],
            input_slots: vec![InputSlot {
                register: 0,
                party: 0,
            }],
            resources: vec![],
            steps: vec![ProtocolStep {
                party: 0,
                targets: vec![0],
                payload: PayloadChoice::Fixed(Payload::Basis(computational_basis(1).unwrap())),
            }],
            postprocess: identity_postprocess(&[2]),
            output_registers: None,
        };
        let rho = nonselective_channel(&p, &StateVector::from_ket("+").unwrap()).unwrap();
        let mixed = DensityMatrix::maximally_mixed(1);
        assert!(crate::density::trace_distance(&rho, &mixed).unwrap() < 1e-12);
    }

    #[test]
    fn label_distribution_matches_records() {
        let p = teleport_protocol();
        let dist = result_distribution(&p, &haar_random_state(2, 3).unwrap()).unwrap();
        assert_eq!(dist.len(), 4);
        for v in &dist {
            assert!((v - 0.25).abs() < 1e-10);
        }
    }
}
