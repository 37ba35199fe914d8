//! The toolkit's headline results, recomputed live and gathered in a table.
//!
//! Each row states one verifiable claim about the shipped protocols, runs
//! the computation behind it from scratch, and records the measured numbers
//! next to the expected ones. The rows double as the repository's
//! acceptance checklist: every row must pass except where a value is
//! explicitly recorded as numerical evidence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{
    bell_basis, bloch_vector, ejm_basis, ghz_basis, tetrahedron_vectors, twisted_basis,
};
use crate::density::{total_variation, trace_distance, DensityMatrix};
use crate::engine::{result_distribution, sample_label_counts};
use crate::error::{Error, Result};
use crate::protocols::{
    bsm_ideal, bsm_local, ejm_local, ghz_local_ideal, shipped_ids, shipped_protocol,
    shipped_target_basis, twisted_local,
};
use crate::scenario::{protocol_scenario, sorkin_naive, MiddleMeasurement};
use crate::search::{optimize, SearchConfig};
use crate::state::haar_random_state;
use crate::verify::{
    check_born_equivalence, check_ideal, check_no_signaling, ebit_cost, spanning_inputs, Verdict,
};

/// One verifiable claim with its measured outcome.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClaimRow {
    pub id: String,
    pub statement: String,
    pub computed: String,
    pub expected: String,
    pub pass: bool,
}

/// Knobs for the expensive rows.
#[derive(Clone, Copy, Debug)]
pub struct ReportOptions {
    /// Restarts for each of the two search runs.
    pub search_restarts: usize,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            search_restarts: 50,
        }
    }
}

fn row(id: &str, statement: &str, computed: String, expected: &str, pass: bool) -> ClaimRow {
    ClaimRow {
        id: id.into(),
        statement: statement.into(),
        computed,
        expected: expected.into(),
        pass,
    }
}

fn row_signaling_demo() -> Result<ClaimRow> {
    let s = sorkin_naive();
    let quiet = s.receiver_distribution(0)?;
    let flipped = s.receiver_distribution(1)?;
    let tv = total_variation(&quiet, &flipped);
    let pass = (quiet[0] - 1.0).abs() < 1e-12
        && quiet[1].abs() < 1e-12
        && (flipped[0] - 0.5).abs() < 1e-12
        && (flipped[1] - 0.5).abs() < 1e-12
        && (tv - 0.5).abs() < 1e-12;
    Ok(row(
        "signaling-demo",
        "Treating the twisted measurement as one ideal device lets the sender's \
         flip reach the receiver",
        format!(
            "receiver sees ({:.3}, {:.3}) without the flip, ({:.3}, {:.3}) with it; TV = {tv}",
            quiet[0], quiet[1], flipped[0], flipped[1]
        ),
        "(1, 0) vs (1/2, 1/2); TV = 1/2, within 1e-12",
        pass,
    ))
}

fn row_no_signaling() -> Result<ClaimRow> {
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    let mut pass = true;
    for id in ["twisted", "bsm", "bsm-ideal", "ejm", "ghz:3"] {
        let protocol = shipped_protocol(id)?;
        let target = shipped_target_basis(id)?;
        let inputs = spanning_inputs(protocol.input_slots.len(), Some(&target), 20)?;
        let report = check_no_signaling(&protocol_scenario(&protocol)?, &inputs)?;
        pass &= report.passed();
        if report.worst_gap() > worst {
            worst = report.worst_gap();
            worst_at = id.to_string();
        }
    }
    Ok(row(
        "no-signaling",
        "No local-operations protocol shifts the receiver's statistics, for any \
         kick in {I, X, Y, Z, H} and any spanning input",
        format!("largest TV gap {worst:.3e} ({worst_at})"),
        "every gap < 1e-9",
        pass,
    ))
}

fn row_born_equivalence() -> Result<ClaimRow> {
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    let mut pass = true;
    for id in shipped_ids() {
        let protocol = shipped_protocol(&id)?;
        let target = shipped_target_basis(&id)?;
        let inputs = spanning_inputs(protocol.input_slots.len(), Some(&target), 20)?;
        let report = check_born_equivalence(&protocol, &target, &inputs)?;
        pass &= report.passed();
        if report.worst_gap() > worst {
            worst = report.worst_gap();
            worst_at = id.clone();
        }
    }
    Ok(row(
        "born-equivalence",
        "Every shipped protocol reproduces its target basis's Born probabilities \
         on eigenstates, product states, and 20 seeded Haar states",
        format!("largest L1 gap {worst:.3e} ({worst_at})"),
        "every gap < 1e-9",
        pass,
    ))
}

fn row_eigenstate_determinism() -> Result<ClaimRow> {
    let cases = [
        ("twisted", twisted_local(), twisted_basis()),
        ("bsm", bsm_local(), bell_basis()),
        ("ejm", ejm_local(), ejm_basis()),
    ];
    let mut worst = 0.0f64;
    for (_, protocol, basis) in &cases {
        for (i, state) in basis.vectors().iter().enumerate() {
            let dist = result_distribution(protocol, state)?;
            worst = worst.max((dist[i] - 1.0).abs());
        }
    }
    Ok(row(
        "eigenstate-determinism",
        "Fed one of its target basis states, each protocol announces that state's \
         label with certainty",
        format!("largest |p - 1| = {worst:.3e} across twisted, bsm, ejm eigenstates"),
        "within 1e-9 of probability 1",
        worst < 1e-9,
    ))
}

fn row_idealness_dichotomy() -> Result<ClaimRow> {
    let bell = bell_basis();
    let ideal_bsm = check_ideal(&bsm_ideal(), &spanning_inputs(2, Some(&bell), 20)?)?;
    let ghz = ghz_basis(3)?;
    let ideal_ghz = check_ideal(&ghz_local_ideal(3)?, &spanning_inputs(3, Some(&ghz), 4)?)?;
    let fail_twisted = check_ideal(&twisted_local(), &spanning_inputs(2, None, 2)?)?;
    let fail_bsm = check_ideal(&bsm_local(), &spanning_inputs(2, None, 2)?)?;
    let pass = ideal_bsm.passed()
        && ideal_ghz.passed()
        && fail_twisted.verdict == Verdict::Fail
        && !fail_twisted.witnesses.is_empty()
        && fail_bsm.verdict == Verdict::Fail
        && !fail_bsm.witnesses.is_empty();
    Ok(row(
        "idealness-dichotomy",
        "The corrected protocols are repeatable measurements; the bare ones \
         cannot hand over a post-measurement state at all",
        format!(
            "repeat gaps: bsm-ideal {:.3e}, ghz-ideal:3 {:.3e}; twisted fails ({}), \
             bsm fails ({})",
            ideal_bsm.worst_gap(),
            ideal_ghz.worst_gap(),
            fail_twisted.witnesses[0].kick,
            fail_bsm.witnesses[0].kick,
        ),
        "corrected gaps < 1e-9; bare variants fail with a witness",
        pass,
    ))
}

fn row_erasure() -> Result<ClaimRow> {
    let mut worst = 0.0f64;
    let bell = bell_basis();
    let protocol = bsm_ideal();
    let middle = MiddleMeasurement::Localizable {
        protocol: protocol.clone(),
    };
    for (_, state) in spanning_inputs(2, Some(&bell), 20)? {
        for party in &protocol.parties {
            let rho = middle.nonselective_reduced(&state, &party.registers)?;
            let mixed = DensityMatrix::maximally_mixed(party.registers.len());
            worst = worst.max(trace_distance(&rho, &mixed)?);
        }
    }
    let twisted = twisted_local();
    let middle = MiddleMeasurement::Localizable {
        protocol: twisted.clone(),
    };
    let bob = &twisted.parties[1];
    for (_, state) in spanning_inputs(2, Some(&twisted_basis()), 20)? {
        let rho = middle.nonselective_reduced(&state, &bob.registers)?;
        let mixed = DensityMatrix::maximally_mixed(bob.registers.len());
        worst = worst.max(trace_distance(&rho, &mixed)?);
    }
    Ok(row(
        "erasure",
        "Once outcomes are discarded, bsm-ideal leaves both labs maximally mixed \
         and twisted leaves the non-choosing lab maximally mixed, for every input",
        format!("largest trace distance from the maximally mixed state: {worst:.3e}"),
        "within 1e-9 of maximally mixed",
        worst < 1e-9,
    ))
}

fn row_resource_accounting() -> Result<ClaimRow> {
    let expected: [(&str, usize); 6] = [
        ("twisted", 1),
        ("bsm", 1),
        ("bsm-ideal", 2),
        ("ejm", 3),
        ("ghz:3", 1),
        ("ghz-ideal:3", 2),
    ];
    let mut computed = Vec::new();
    let mut pass = true;
    for (id, want) in expected {
        let cost = ebit_cost(&shipped_protocol(id)?)?;
        pass &= cost == want;
        computed.push(format!("{id}: {cost}"));
    }
    Ok(row(
        "resource-accounting",
        "Preshared entanglement per protocol, counted as party-cut entropy of \
         its resources",
        computed.join(", "),
        "1, 1, 2, 3, 1, 2 ebits respectively",
        pass,
    ))
}

fn row_ejm_geometry() -> Result<ClaimRow> {
    let basis = ejm_basis();
    let gram = basis.gram();
    let mut gram_gap = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            let want = if i == j { 1.0 } else { 0.0 };
            gram_gap = gram_gap.max((gram[(i, j)] - want).norm());
        }
    }
    let sqrt3 = 3.0f64.sqrt();
    let want_coeffs = [
        (sqrt3 + 1.0) / (2.0 * 2.0f64.sqrt()),
        (sqrt3 - 1.0) / (2.0 * 2.0f64.sqrt()),
    ];
    let mut schmidt_gap = 0.0f64;
    let mut bloch_gap = 0.0f64;
    for (j, state) in basis.vectors().iter().enumerate() {
        let reduced = state.reduced_density(&[0])?;
        let mut evs = reduced.eigenvalues();
        evs.sort_by(|a, b| b.total_cmp(a));
        for (ev, want) in evs.iter().zip(want_coeffs) {
            schmidt_gap = schmidt_gap.max((ev.max(0.0).sqrt() - want).abs());
        }
        let b = bloch_vector(&reduced)?;
        let m = tetrahedron_vectors()[j];
        let r = sqrt3 / 2.0;
        let dev =
            ((b.x - r * m.x).powi(2) + (b.y - r * m.y).powi(2) + (b.z - r * m.z).powi(2)).sqrt();
        bloch_gap = bloch_gap.max(dev);
    }
    let pass = gram_gap < 1e-10 && schmidt_gap < 1e-10 && bloch_gap < 1e-9;
    Ok(row(
        "ejm-geometry",
        "The elegant joint measurement basis is orthonormal, has Schmidt \
         coefficients (sqrt(3) +/- 1)/(2 sqrt(2)), and its reduced Bloch vectors \
         sit on the tetrahedron at radius sqrt(3)/2",
        format!(
            "orthonormality gap {gram_gap:.3e}, Schmidt gap {schmidt_gap:.3e}, \
             Bloch gap {bloch_gap:.3e}"
        ),
        "gaps < 1e-10, 1e-10, 1e-9",
        pass,
    ))
}

fn row_sampling_consistency() -> Result<ClaimRow> {
    let protocol = bsm_local();
    let input = haar_random_state(2, 42)?;
    let exact = result_distribution(&protocol, &input)?;
    let n = 100_000usize;
    let mut rng = ChaCha8Rng::seed_from_u64(2026);
    let counts = sample_label_counts(&protocol, &input, n, &mut rng)?;
    let mut worst_sigma = 0.0f64;
    for (&c, &p) in counts.iter().zip(&exact) {
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        if sigma > 0.0 {
            worst_sigma = worst_sigma.max((c as f64 / n as f64 - p).abs() / sigma);
        }
    }
    Ok(row(
        "sampling-consistency",
        "A hundred thousand seeded runs of the Bell protocol on a fixed Haar \
         state reproduce the exact distribution",
        format!("largest deviation {worst_sigma:.2} sigma"),
        "within 3 sigma binomial bounds",
        worst_sigma <= 3.0,
    ))
}

fn row_search_evidence(opts: &ReportOptions) -> Result<ClaimRow> {
    let bell_config = SearchConfig {
        ebits: 1,
        restarts: opts.search_restarts,
        seed: 1,
        ..SearchConfig::default()
    };
    let bell = optimize(&bell_basis(), &bell_config)?;
    let ejm_config = SearchConfig { ..bell_config };
    let ejm = optimize(&ejm_basis(), &ejm_config)?;
    Ok(row(
        "search-evidence",
        "Randomized search over one-ebit protocols rediscovers a perfect Bell \
         analyzer; its best one-ebit score for the elegant joint measurement is \
         recorded as numerical evidence only",
        format!(
            "Bell best {:.6} (worst case {:.6}); EJM best {:.6} over {} restarts \
             (numerical evidence, not a proof)",
            bell.best_score, bell.worst_case, ejm.best_score, ejm_config.restarts
        ),
        "Bell best >= 0.99; EJM best recorded",
        bell.best_score >= 0.99,
    ))
}

/// Computes every claim row. Takes a while: the last row runs the full
/// randomized search twice.
pub fn claim_rows(opts: &ReportOptions) -> Result<Vec<ClaimRow>> {
    Ok(vec![
        row_signaling_demo()?,
        row_no_signaling()?,
        row_born_equivalence()?,
        row_eigenstate_determinism()?,
        row_idealness_dichotomy()?,
        row_erasure()?,
        row_resource_accounting()?,
        row_ejm_geometry()?,
        row_sampling_consistency()?,
        row_search_evidence(opts)?,
    ])
}

/// Plain-text rendering with one aligned row per claim.
pub fn render_table(rows: &[ClaimRow]) -> String {
    let id_width = rows.iter().map(|r| r.id.len()).max().unwrap_or(0).max(5);
    let mut out = String::new();
    out.push_str(&format!("{:<id_width$}  verdict  result\n", "claim"));
    for r in rows {
        let verdict = if r.pass { "pass" } else { "FAIL" };
        out.push_str(&format!(
            "{:<id_width$}  {verdict:<7}  {}\n",
            r.id, r.computed
        ));
    }
    out
}

/// Fails with a summary if any row failed; used by gating callers.
pub fn require_all_pass(rows: &[ClaimRow]) -> Result<()> {
    let failed: Vec<&str> = rows
        .iter()
        .filter(|r| !r.pass)
        .map(|r| r.id.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "claims failed: {}",
            failed.join(", ")
        )))
    }
}
