//! Kick/measure/readout scenarios for detecting superluminal signaling.
//!
//! The arrangement: a joint state is prepared, a sender may apply a local
//! "kick" unitary to its qubit, a middle measurement acts nonselectively
//! (its outcome is discarded), and a receiver finally reads its own qubit.
//! If the receiver's outcome statistics depend on which kick was chosen, the
//! middle measurement signals. An idealized projective middle measurement in
//! an entangled basis does signal; a middle measurement realized as local
//! steps on shared entanglement cannot.

use num_complex::Complex64;

use crate::basis::{computational_basis, twisted_basis, MeasurementBasis};
use crate::density::DensityMatrix;
use crate::engine::{enumerate_branches, nonselective_channel};
use crate::error::{Error, Result};
use crate::ops::UnitaryOp;
use crate::protocol::Protocol;
use crate::state::StateVector;
use crate::tol;

/// A named local unitary the sender may or may not apply.
#[derive(Clone, Debug)]
pub struct Kick {
    pub name: String,
    pub op: UnitaryOp,
}

/// The standard single-qubit kick set: identity plus the three Paulis and
/// the Hadamard.
pub fn standard_kicks() -> Vec<Kick> {
    vec![
        Kick {
            name: "identity".into(),
            op: UnitaryOp::identity(1),
        },
        Kick {
            name: "x".into(),
            op: UnitaryOp::pauli(1),
        },
        Kick {
            name: "y".into(),
            op: UnitaryOp::pauli(2),
        },
        Kick {
            name: "z".into(),
            op: UnitaryOp::pauli(3),
        },
        Kick {
            name: "h".into(),
            op: UnitaryOp::hadamard(),
        },
    ]
}

/// What acts in the middle of the scenario.
#[derive(Clone, Debug)]
pub enum MiddleMeasurement {
    /// A textbook projective measurement applied directly to the listed
    /// scenario qubits, collapse in place.
    NaiveIdeal {
        basis: MeasurementBasis,
        targets: Vec<usize>,
    },
    /// A protocol run on the scenario qubits as its inputs.
    Localizable { protocol: Protocol },
}

impl MiddleMeasurement {
    /// Applies the measurement nonselectively to a pure state. Returns the
    /// resulting mixed state on the middle's register set, plus the register
    /// each scenario qubit occupies afterwards.
    pub fn nonselective(&self, state: &StateVector) -> Result<(DensityMatrix, Vec<usize>)> {
        match self {
            MiddleMeasurement::NaiveIdeal { basis, targets } => {
                let dim = state.dim();
                let mut acc = nalgebra::DMatrix::<Complex64>::zeros(dim, dim);
                for i in 0..basis.len() {
                    let (p, collapsed) = state.project_on(basis.vector(i), targets, tol::PRUNE)?;
                    if let Some(s) = collapsed {
                        acc += DensityMatrix::from_pure(&s).mat() * Complex64::new(p, 0.0);
                    }
                }
                Ok((DensityMatrix::new(acc)?, (0..state.n_qubits()).collect()))
            }
            MiddleMeasurement::Localizable { protocol } => {
                let rho = nonselective_channel(protocol, state)?;
                let map = protocol.input_slots.iter().map(|s| s.register).collect();
                Ok((rho, map))
            }
        }
    }

    /// Reduced nonselective post-state on the given registers of the
    /// middle's own register set, assembled branch by branch. The full
    /// mixture is never materialized, which matters once protocols carry
    /// many auxiliary qubits.
    pub fn nonselective_reduced(
        &self,
        state: &StateVector,
        keep: &[usize],
    ) -> Result<DensityMatrix> {
        match self {
            MiddleMeasurement::NaiveIdeal { basis, targets } => {
                let dim = 1usize << keep.len();
                let mut acc = nalgebra::DMatrix::<Complex64>::zeros(dim, dim);
                let mut total = 0.0;
                for i in 0..basis.len() {
                    let (p, collapsed) = state.project_on(basis.vector(i), targets, tol::PRUNE)?;
                    if let Some(s) = collapsed {
                        acc += s.reduced_density(keep)?.mat() * Complex64::new(p, 0.0);
                        total += p;
                    }
                }
                DensityMatrix::new(acc / Complex64::new(total, 0.0))
            }
            MiddleMeasurement::Localizable { protocol } => {
                enumerate_branches(protocol, state)?.reduced_mixture(keep)
            }
        }
    }

    /// Where each scenario qubit lives inside the middle's register set.
    pub fn register_map(&self, n_scenario_qubits: usize) -> Vec<usize> {
        match self {
            MiddleMeasurement::NaiveIdeal { .. } => (0..n_scenario_qubits).collect(),
            MiddleMeasurement::Localizable { protocol } => {
                protocol.input_slots.iter().map(|s| s.register).collect()
            }
        }
    }
}

/// A complete kick/measure/readout arrangement.
#[derive(Clone, Debug)]
pub struct SorkinScenario {
    pub name: String,
    /// Joint state prepared before the kick, one qubit per scenario slot.
    pub initial: StateVector,
    pub kicks: Vec<Kick>,
    /// Scenario qubits the kick acts on.
    pub sender_qubits: Vec<usize>,
    /// Scenario qubits the receiver reads at the end.
    pub receiver_qubits: Vec<usize>,
    pub middle: MiddleMeasurement,
    pub receiver_basis: MeasurementBasis,
}

impl SorkinScenario {
    pub fn n_qubits(&self) -> usize {
        self.initial.n_qubits()
    }

    /// Same scenario, different prepared state.
    pub fn with_initial(mut self, initial: StateVector) -> Result<Self> {
        if initial.n_qubits() != self.n_qubits() {
            return Err(Error::Dimension(format!(
                "scenario {:?} takes {} qubits, got {}",
                self.name,
                self.n_qubits(),
                initial.n_qubits()
            )));
        }
        self.initial = initial;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_qubits();
        let in_range = |qs: &[usize]| qs.iter().all(|&q| q < n);
        if !in_range(&self.sender_qubits) || !in_range(&self.receiver_qubits) {
            return Err(Error::Validation(
                "sender or receiver qubit out of range".into(),
            ));
        }
        if self.kicks.is_empty() {
            return Err(Error::Validation("scenario needs at least one kick".into()));
        }
        for k in &self.kicks {
            if k.op.n_qubits() != self.sender_qubits.len() {
                return Err(Error::Validation(format!(
                    "kick {:?} acts on {} qubits, sender holds {}",
                    k.name,
                    k.op.n_qubits(),
                    self.sender_qubits.len()
                )));
            }
        }
        if self.receiver_basis.n_qubits() != self.receiver_qubits.len() {
            return Err(Error::Validation(
                "receiver basis does not match the receiver qubit count".into(),
            ));
        }
        match &self.middle {
            MiddleMeasurement::NaiveIdeal { basis, targets } => {
                if !in_range(targets) || basis.n_qubits() != targets.len() {
                    return Err(Error::Validation(
                        "middle measurement does not fit its targets".into(),
                    ));
                }
            }
            MiddleMeasurement::Localizable { protocol } => {
                protocol.validate().map_err(|v| {
                    Error::Validation(
                        v.iter()
                            .map(|x| x.to_string())
                            .collect::<Vec<_>>()
                            .join("; "),
                    )
                })?;
                if protocol.input_slots.len() != n {
                    return Err(Error::Validation(format!(
                        "middle protocol takes {} inputs, scenario has {n} qubits",
                        protocol.input_slots.len()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Receiver's reduced state after the chosen kick and the nonselective
    /// middle measurement.
    pub fn receiver_state(&self, kick: usize) -> Result<DensityMatrix> {
        let k = self
            .kicks
            .get(kick)
            .ok_or_else(|| Error::Argument(format!("kick index {kick} out of range")))?;
        let kicked = self.initial.apply_on(&k.op, &self.sender_qubits)?;
        let map = self.middle.register_map(self.n_qubits());
        let regs: Vec<usize> = self.receiver_qubits.iter().map(|&q| map[q]).collect();
        self.middle.nonselective_reduced(&kicked, &regs)
    }

    /// Receiver's outcome distribution after the chosen kick.
    pub fn receiver_distribution(&self, kick: usize) -> Result<Vec<f64>> {
        self.receiver_basis
            .probabilities_dm(&self.receiver_state(kick)?)
    }
}

/// The canonical signaling arrangement: two qubits prepared in `|00>`, the
/// sender optionally flips the first, the middle measures both in the
/// twisted basis as if it were a single ideal device, and the receiver reads
/// the second in Z. The flip changes the receiver's statistics, so the
/// idealized middle measurement signals.
pub fn sorkin_naive() -> SorkinScenario {
    SorkinScenario {
        name: "sorkin-naive".into(),
        initial: StateVector::from_ket("00").unwrap(),
        kicks: vec![
            Kick {
                name: "identity".into(),
                op: UnitaryOp::identity(1),
            },
            Kick {
                name: "x".into(),
                op: UnitaryOp::pauli(1),
            },
        ],
        sender_qubits: vec![0],
        receiver_qubits: vec![1],
        middle: MiddleMeasurement::NaiveIdeal {
            basis: twisted_basis(),
            targets: vec![0, 1],
        },
        receiver_basis: computational_basis(1).unwrap(),
    }
}

/// Wraps a protocol in the standard scenario: the sender kicks the first
/// input qubit, the middle runs the protocol nonselectively, the receiver
/// reads the last input qubit's register in Z. The prepared state defaults
/// to all zeros.
pub fn protocol_scenario(protocol: &Protocol) -> Result<SorkinScenario> {
    let n = protocol.input_slots.len();
    if n < 2 {
        return Err(Error::Argument(
            "a signaling scenario needs at least two input qubits".into(),
        ));
    }
    Ok(SorkinScenario {
        name: format!("{}-scenario", protocol.name),
        initial: StateVector::basis_state(n, 0)?,
        kicks: standard_kicks(),
        sender_qubits: vec![0],
        receiver_qubits: vec![n - 1],
        middle: MiddleMeasurement::Localizable {
            protocol: protocol.clone(),
        },
        receiver_basis: computational_basis(1)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::total_variation;
    use crate::protocols::twisted_local;

    #[test]
    fn naive_middle_signals_through_the_flip() {
        let s = sorkin_naive();
        s.validate().unwrap();
        let quiet = s.receiver_distribution(0).unwrap();
        assert!((quiet[0] - 1.0).abs() < 1e-12, "{quiet:?}");
        let flipped = s.receiver_distribution(1).unwrap();
        assert!((flipped[0] - 0.5).abs() < 1e-12, "{flipped:?}");
        assert!((flipped[1] - 0.5).abs() < 1e-12);
        assert!((total_variation(&quiet, &flipped) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn localizable_middle_does_not_signal() {
        let s = protocol_scenario(&twisted_local()).unwrap();
        s.validate().unwrap();
        let reference = s.receiver_distribution(0).unwrap();
        for kick in 1..s.kicks.len() {
            let dist = s.receiver_distribution(kick).unwrap();
            assert!(
                total_variation(&reference, &dist) < 1e-12,
                "kick {:?} shifted the receiver: {dist:?} vs {reference:?}",
                s.kicks[kick].name
            );
        }
    }

    #[test]
    fn localizable_middle_scrambles_the_receiver_qubit() {
        // The price of locality: the receiver's qubit comes out maximally
        // mixed even when the idealized measurement would have left it alone.
        let s = protocol_scenario(&twisted_local()).unwrap();
        let dist = s.receiver_distribution(0).unwrap();
        assert!((dist[0] - 0.5).abs() < 1e-12, "{dist:?}");

        let naive = sorkin_naive();
        let naive_dist = naive.receiver_distribution(0).unwrap();
        assert!((naive_dist[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scenario_accepts_replacement_initial_states() {
        let s = sorkin_naive()
            .with_initial(StateVector::from_ket("10").unwrap())
            .unwrap();
        let dist = s.receiver_distribution(0).unwrap();
        // |10> under the nonselective twisted middle leaves the second qubit
        // maximally mixed.
        assert!((dist[0] - 0.5).abs() < 1e-12);
        assert!(sorkin_naive()
            .with_initial(StateVector::from_ket("000").unwrap())
            .is_err());
    }

    #[test]
    fn mismatched_kick_is_rejected() {
        let mut s = sorkin_naive();
        s.kicks.push(Kick {
            name: "too-big".into(),
            op: UnitaryOp::cz(),
        });
        assert!(s.validate().is_err());
    }
}
