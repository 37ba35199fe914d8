//! Verification checks with machine-readable reports.
//!
//! Each check runs a protocol (or scenario) over a set of input states and
//! produces a [`VerificationReport`]: a pass/fail verdict against an explicit
//! tolerance, plus witnesses recording where the worst deviation occurred.
//! Passing reports still carry their worst witness so the margin is visible.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::basis::MeasurementBasis;
use crate::density::{total_variation, trace_distance, DensityMatrix};
use crate::engine::{enumerate_branches, result_distribution};
use crate::error::{Error, Result};
use crate::protocol::Protocol;
use crate::scenario::{MiddleMeasurement, SorkinScenario};
use crate::state::{haar_random_state, StateVector};
use crate::tol;

/// Outcome of a verification check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// A concrete place where a check deviated (or came closest to deviating).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Witness {
    /// Which input state, by the id it was supplied under.
    pub input_id: String,
    /// Context of the deviation: a kick pair, a party name, or a note.
    pub kick: String,
    /// Size of the deviation, in the check's own units.
    pub gap: f64,
}

/// Result of one verification check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub verdict: Verdict,
    pub tolerance: f64,
    /// Worst deviations, largest first. The single worst witness is always
    /// present, even when the check passes.
    pub witnesses: Vec<Witness>,
    /// Seeds of any pseudo-random input states that took part.
    pub seed_list: Vec<u64>,
    pub runtime_ms: u64,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Largest deviation seen by the check.
    pub fn worst_gap(&self) -> f64 {
        self.witnesses.first().map_or(0.0, |w| w.gap)
    }
}

fn haar_seeds(inputs: &[(String, StateVector)]) -> Vec<u64> {
    let mut seeds: Vec<u64> = inputs
        .iter()
        .filter_map(|(id, _)| id.strip_prefix("haar:").and_then(|s| s.parse().ok()))
        .collect();
    seeds.sort_unstable();
    seeds.dedup();
    seeds
}

/// Assembles a report from per-case witnesses: sorts by gap, keeps every
/// witness above tolerance plus the worst one overall (or all of them when
/// `keep_all` is set, e.g. for per-party breakdowns).
fn finish_report(
    check: &str,
    tolerance: f64,
    mut witnesses: Vec<Witness>,
    seed_list: Vec<u64>,
    keep_all: bool,
    started: Instant,
) -> VerificationReport {
    witnesses.sort_by(|a, b| b.gap.total_cmp(&a.gap));
    let verdict = if witnesses.iter().any(|w| w.gap > tolerance) {
        Verdict::Fail
    } else {
        Verdict::Pass
    };
    if !keep_all {
        let keep = witnesses
            .iter()
            .filter(|w| w.gap > tolerance)
            .count()
            .max(1)
            .min(witnesses.len());
        witnesses.truncate(keep);
    }
    VerificationReport {
        check: check.into(),
        verdict,
        tolerance,
        witnesses,
        seed_list,
        runtime_ms: started.elapsed().as_millis() as u64,
    }
}

/// Standard input battery for a check on `n` qubits: the target basis states
/// (when given), the six uniform product states |ss...s> over
/// {0, 1, +, -, r, l}, and `haar_count` pseudo-random states with seeds
/// 0..haar_count.
pub fn spanning_inputs(
    n: usize,
    target: Option<&MeasurementBasis>,
    haar_count: u64,
) -> Result<Vec<(String, StateVector)>> {
    if n == 0 {
        return Err(Error::Argument(
            "input states need at least one qubit".into(),
        ));
    }
    let mut out = Vec::new();
    if let Some(basis) = target {
        if basis.n_qubits() != n {
            return Err(Error::Dimension(format!(
                "target basis acts on {} qubits, inputs have {n}",
                basis.n_qubits()
            )));
        }
        for (label, vec) in basis.labels().iter().zip(basis.vectors()) {
            out.push((format!("eig:{label}"), vec.clone()));
        }
    }
    for s in ["0", "1", "+", "-", "r", "l"] {
        let ket: String = s.repeat(n);
        out.push((format!("ket:{ket}"), StateVector::from_ket(&ket)?));
    }
    for seed in 0..haar_count {
        out.push((format!("haar:{seed}"), haar_random_state(n, seed)?));
    }
    Ok(out)
}

/// Checks that the protocol's outcome distribution matches the Born rule for
/// the target basis on every input, comparing labels positionally. Gap is
/// the L1 distance between distributions.
pub fn check_born_equivalence(
    protocol: &Protocol,
    target: &MeasurementBasis,
    inputs: &[(String, StateVector)],
) -> Result<VerificationReport> {
    let started = Instant::now();
    if protocol.postprocess.labels.len() != target.len() {
        return Err(Error::Argument(format!(
            "protocol announces {} outcomes, target basis has {}",
            protocol.postprocess.labels.len(),
            target.len()
        )));
    }
    let mut witnesses = Vec::new();
    for (id, state) in inputs {
        let got = result_distribution(protocol, state)?;
        let want = target.probabilities(state)?;
        let gap: f64 = got.iter().zip(&want).map(|(g, w)| (g - w).abs()).sum();
        witnesses.push(Witness {
            input_id: id.clone(),
            kick: "-".into(),
            gap,
        });
    }
    Ok(finish_report(
        "born-equivalence",
        tol::EQUALITY,
        witnesses,
        haar_seeds(inputs),
        false,
        started,
    ))
}

/// Checks that the receiver's statistics are independent of the sender's
/// kick, for every prepared input. Gap is the largest pairwise total
/// variation across kicks.
pub fn check_no_signaling(
    scenario: &SorkinScenario,
    inputs: &[(String, StateVector)],
) -> Result<VerificationReport> {
    let started = Instant::now();
    scenario.validate()?;
    let mut witnesses = Vec::new();
    for (id, state) in inputs {
        let s = scenario.clone().with_initial(state.clone())?;
        let dists: Vec<Vec<f64>> = (0..s.kicks.len())
            .map(|k| s.receiver_distribution(k))
            .collect::<Result<_>>()?;
        let mut worst = Witness {
            input_id: id.clone(),
            kick: "-".into(),
            gap: 0.0,
        };
        for i in 0..dists.len() {
            for j in i + 1..dists.len() {
                let tv = total_variation(&dists[i], &dists[j]);
                if tv > worst.gap {
                    worst.gap = tv;
                    worst.kick = format!("{} vs {}", s.kicks[i].name, s.kicks[j].name);
                }
            }
        }
        witnesses.push(worst);
    }
    Ok(finish_report(
        "no-signaling",
        tol::EQUALITY,
        witnesses,
        haar_seeds(inputs),
        false,
        started,
    ))
}

/// Checks the ideal-measurement property: after a run, the output registers
/// hold a pure state that reproduces the announced outcome with certainty
/// when the protocol is run again on it. Protocols without output registers
/// fail outright. Gap is one minus the repeat probability.
pub fn check_ideal(
    protocol: &Protocol,
    inputs: &[(String, StateVector)],
) -> Result<VerificationReport> {
    let started = Instant::now();
    let outputs = match &protocol.output_registers {
        Some(regs) => regs.clone(),
        None => {
            let witness = Witness {
                input_id: "*".into(),
                kick: "no output state".into(),
                gap: 1.0,
            };
            return Ok(finish_report(
                "ideal",
                tol::EQUALITY,
                vec![witness],
                haar_seeds(inputs),
                false,
                started,
            ));
        }
    };
    let labels = &protocol.postprocess.labels;
    let mut witnesses = Vec::new();
    for (id, state) in inputs {
        let set = enumerate_branches(protocol, state)?;
        let mut worst = Witness {
            input_id: id.clone(),
            kick: "-".into(),
            gap: 0.0,
        };
        for branch in &set.branches {
            let label = branch.label(&protocol.postprocess)?;
            let idx = labels
                .iter()
                .position(|l| l == label)
                .ok_or_else(|| Error::Validation(format!("unknown label {label:?}")))?;
            let gap = match branch.output_state(&outputs) {
                Ok(out) => {
                    let repeat = result_distribution(protocol, &out)?;
                    1.0 - repeat[idx]
                }
                // Output registers entangled with the rest: no pure output.
                Err(_) => 1.0,
            };
            if gap > worst.gap {
                worst.gap = gap;
                worst.kick = format!("outcome {label}");
            }
        }
        witnesses.push(worst);
    }
    Ok(finish_report(
        "ideal",
        tol::EQUALITY,
        witnesses,
        haar_seeds(inputs),
        false,
        started,
    ))
}

/// Checks that no party retains any record of the input once outcomes are
/// discarded: each party's reduced nonselective post-state must be the same
/// for every input. Gap is the largest pairwise trace distance per party.
/// All per-party witnesses are kept so passing parties stay visible.
pub fn check_erasure(
    middle: &MiddleMeasurement,
    parties: &[(String, Vec<usize>)],
    inputs: &[(String, StateVector)],
) -> Result<VerificationReport> {
    let started = Instant::now();
    if inputs.len() < 2 {
        return Err(Error::Argument(
            "erasure comparison needs at least two inputs".into(),
        ));
    }
    let mut witnesses = Vec::new();
    for (party, registers) in parties {
        let mixtures: Vec<DensityMatrix> = inputs
            .iter()
            .map(|(_, state)| middle.nonselective_reduced(state, registers))
            .collect::<Result<_>>()?;
        let mut worst = Witness {
            input_id: format!("{} vs {}", inputs[0].0, inputs[1].0),
            kick: party.clone(),
            gap: 0.0,
        };
        for i in 0..mixtures.len() {
            for j in i + 1..mixtures.len() {
                let td = trace_distance(&mixtures[i], &mixtures[j])?;
                if td > worst.gap {
                    worst.gap = td;
                    worst.input_id = format!("{} vs {}", inputs[i].0, inputs[j].0);
                }
            }
        }
        witnesses.push(worst);
    }
    Ok(finish_report(
        "erasure",
        tol::EQUALITY,
        witnesses,
        haar_seeds(inputs),
        true,
        started,
    ))
}

/// Erasure check for a protocol, with one party group per protocol party.
pub fn check_protocol_erasure(
    protocol: &Protocol,
    inputs: &[(String, StateVector)],
) -> Result<VerificationReport> {
    let middle = MiddleMeasurement::Localizable {
        protocol: protocol.clone(),
    };
    let parties: Vec<(String, Vec<usize>)> = protocol
        .parties
        .iter()
        .map(|p| (p.name.clone(), p.registers.clone()))
        .collect();
    check_erasure(&middle, &parties, inputs)
}

/// Entanglement consumed by the protocol's preshared resources, in ebits.
///
/// For each resource, every party-versus-rest cut through its registers must
/// carry the same integer entanglement entropy; that integer is the
/// resource's cost and the total is the sum. Resources confined to a single
/// party cost nothing. Non-uniform or fractional entanglement is an error:
/// such a resource has no well-defined pair count.
pub fn ebit_cost(protocol: &Protocol) -> Result<usize> {
    let mut total = 0usize;
    for resource in &protocol.resources {
        let mut cuts = Vec::new();
        for party in &protocol.parties {
            let held: Vec<usize> = resource
                .registers
                .iter()
                .enumerate()
                .filter(|(_, r)| party.registers.contains(r))
                .map(|(pos, _)| pos)
                .collect();
            if held.is_empty() || held.len() == resource.registers.len() {
                continue;
            }
            cuts.push(crate::density::entanglement_entropy(
                &resource.state,
                &held,
            )?);
        }
        let Some(&first) = cuts.first() else { continue };
        let name = resource.id.clone().unwrap_or_else(|| "resource".into());
        if cuts.iter().any(|&c| (c - first).abs() > tol::EQUALITY) {
            return Err(Error::Validation(format!(
                "{name}: party cuts carry unequal entanglement {cuts:?}"
            )));
        }
        let rounded = first.round();
        if (first - rounded).abs() > tol::EQUALITY || rounded < 1.0 {
            return Err(Error::Validation(format!(
                "{name}: entanglement per cut is {first}, not a whole number of pairs"
            )));
        }
        total += rounded as usize;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{computational_basis, ghz_basis, parse_basis_id, twisted_basis};
    use crate::protocols::{
        bsm_ideal, bsm_local, ejm_local, ghz_local, ghz_local_ideal, twisted_local,
    };
    use crate::scenario::{protocol_scenario, sorkin_naive};

    fn small_inputs(n: usize, target: Option<&MeasurementBasis>) -> Vec<(String, StateVector)> {
        spanning_inputs(n, target, 4).unwrap()
    }

    #[test]
    fn spanning_inputs_cover_eigenstates_products_and_seeds() {
        let basis = twisted_basis();
        let inputs = spanning_inputs(2, Some(&basis), 20).unwrap();
        assert_eq!(inputs.len(), 4 + 6 + 20);
        let ids: std::collections::BTreeSet<_> = inputs.iter().map(|(id, _)| id).collect();
        assert_eq!(ids.len(), inputs.len());
        assert!(ids.contains(&"eig:1+".to_string()));
        assert!(ids.contains(&"ket:rr".to_string()));
        assert_eq!(haar_seeds(&inputs), (0..20).collect::<Vec<_>>());
    }

    #[test]
    fn born_check_passes_for_the_twisted_protocol() {
        let basis = twisted_basis();
        let report =
            check_born_equivalence(&twisted_local(), &basis, &small_inputs(2, Some(&basis)))
                .unwrap();
        assert_eq!(report.verdict, Verdict::Pass);
        assert_eq!(report.witnesses.len(), 1);
        assert!(report.worst_gap() < 1e-12, "{report:?}");
        assert_eq!(report.seed_list, vec![0, 1, 2, 3]);
    }

    #[test]
    fn born_check_fails_against_the_wrong_target() {
        // A Bell-basis protocol compared against the twisted basis: same
        // outcome count, different statistics.
        let basis = twisted_basis();
        let report =
            check_born_equivalence(&bsm_local(), &basis, &small_inputs(2, Some(&basis))).unwrap();
        assert_eq!(report.verdict, Verdict::Fail);
        assert!(report.worst_gap() > 0.1);
        assert!(report.witnesses.len() > 1);
    }

    #[test]
    fn born_check_rejects_mismatched_outcome_counts() {
        let basis = computational_basis(1).unwrap();
        let inputs = small_inputs(2, None);
        assert!(check_born_equivalence(&twisted_local(), &basis, &inputs).is_err());
    }

    #[test]
    fn naive_middle_fails_no_signaling_with_gap_one_half() {
        let report = check_no_signaling(&sorkin_naive(), &small_inputs(2, None)).unwrap();
        assert_eq!(report.verdict, Verdict::Fail);
        let worst = &report.witnesses[0];
        assert!(worst.gap >= 0.5 - 1e-12, "{report:?}");
        // The canonical demonstration input is among the failures.
        assert!(report
            .witnesses
            .iter()
            .any(|w| w.input_id == "ket:00" && (w.gap - 0.5).abs() < 1e-12));
    }

    #[test]
    fn localizable_protocols_pass_no_signaling() {
        for protocol in [twisted_local(), bsm_local(), bsm_ideal()] {
            let scenario = protocol_scenario(&protocol).unwrap();
            let report = check_no_signaling(&scenario, &small_inputs(2, None)).unwrap();
            assert_eq!(
                report.verdict,
                Verdict::Pass,
                "{}: {report:?}",
                protocol.name
            );
            assert!(report.worst_gap() < 1e-10);
        }
    }

    #[test]
    fn ideal_check_passes_for_the_corrected_bell_protocol() {
        let basis = parse_basis_id("bell").unwrap();
        let report = check_ideal(&bsm_ideal(), &small_inputs(2, Some(&basis))).unwrap();
        assert_eq!(report.verdict, Verdict::Pass, "{report:?}");
        assert!(report.worst_gap() < 1e-12);
    }

    #[test]
    fn ideal_check_fails_when_no_output_registers_exist() {
        for protocol in [twisted_local(), bsm_local(), ejm_local()] {
            let report = check_ideal(&protocol, &small_inputs(2, None)).unwrap();
            assert_eq!(report.verdict, Verdict::Fail);
            assert_eq!(report.witnesses.len(), 1);
            assert_eq!(report.witnesses[0].input_id, "*");
            assert_eq!(report.witnesses[0].kick, "no output state");
            assert_eq!(report.witnesses[0].gap, 1.0);
        }
    }

    #[test]
    fn erasure_fails_for_twisted_on_the_basis_choosing_party_only() {
        let report = check_protocol_erasure(&twisted_local(), &small_inputs(2, None)).unwrap();
        assert_eq!(report.verdict, Verdict::Fail);
        let gap_of = |party: &str| {
            report
                .witnesses
                .iter()
                .find(|w| w.kick == party)
                .map(|w| w.gap)
                .unwrap()
        };
        // Party A keeps the readout-direction record; its post-state depends
        // on the input. Party B's registers are exactly uniform regardless.
        assert!(gap_of("A") > 0.9, "{report:?}");
        assert!(gap_of("B") < 1e-12, "{report:?}");
    }

    #[test]
    fn erasure_passes_for_the_bell_protocol_on_both_parties() {
        let report = check_protocol_erasure(&bsm_local(), &small_inputs(2, None)).unwrap();
        assert_eq!(report.verdict, Verdict::Pass, "{report:?}");
        assert_eq!(report.witnesses.len(), 2);
        assert!(report.worst_gap() < 1e-12);
    }

    #[test]
    fn erasure_fails_for_the_naive_middle() {
        let middle = MiddleMeasurement::NaiveIdeal {
            basis: twisted_basis(),
            targets: vec![0, 1],
        };
        let parties = vec![("A".to_string(), vec![0]), ("B".to_string(), vec![1])];
        let report = check_erasure(&middle, &parties, &small_inputs(2, None)).unwrap();
        assert_eq!(report.verdict, Verdict::Fail, "{report:?}");
    }

    #[test]
    fn ebit_costs_match_the_resource_layouts() {
        assert_eq!(ebit_cost(&twisted_local()).unwrap(), 1);
        assert_eq!(ebit_cost(&bsm_local()).unwrap(), 1);
        assert_eq!(ebit_cost(&bsm_ideal()).unwrap(), 2);
        assert_eq!(ebit_cost(&ejm_local()).unwrap(), 3);
        assert_eq!(ebit_cost(&ghz_local(3).unwrap()).unwrap(), 1);
        assert_eq!(ebit_cost(&ghz_local_ideal(3).unwrap()).unwrap(), 2);
    }

    #[test]
    fn ghz_protocol_passes_born_check_on_its_own_basis() {
        let basis = ghz_basis(3).unwrap();
        let protocol = ghz_local(3).unwrap();
        let inputs = spanning_inputs(3, Some(&basis), 3).unwrap();
        let report = check_born_equivalence(&protocol, &basis, &inputs).unwrap();
        assert_eq!(report.verdict, Verdict::Pass, "{report:?}");
    }

    #[test]
    fn report_serializes_with_stable_field_names() {
        let basis = twisted_basis();
        let report =
            check_born_equivalence(&twisted_local(), &basis, &small_inputs(2, Some(&basis)))
                .unwrap();
        let value = serde_json::to_value(&report).unwrap();
        for key in [
            "check",
            "verdict",
            "tolerance",
            "witnesses",
            "seed_list",
            "runtime_ms",
        ] {
            assert!(value.get(key).is_some(), "missing {key}");
        }
        assert_eq!(value["verdict"], "pass");
        let witness = &value["witnesses"][0];
        for key in ["input_id", "kick", "gap"] {
            assert!(witness.get(key).is_some(), "missing witness {key}");
        }
        let back: VerificationReport = serde_json::from_value(value).unwrap();
        assert_eq!(back.verdict, Verdict::Pass);
    }
}
