//! Numerical search over two-party local protocols.
//!
//! A [`ProtocolTemplate`] fixes the shape: each party holds one input qubit
//! plus its halves of a given number of shared Bell pairs, applies a
//! parametrized local unitary to everything it owns, and measures all of its
//! registers in the computational basis. The search tunes the unitary
//! parameters to maximize how well the joint outcome record discriminates
//! the states of a target basis, using Nelder-Mead descent from random
//! starting points.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{bell_basis, computational_basis, MeasurementBasis};
use crate::engine::enumerate_branches_prevalidated;
use crate::error::{Error, Result};
use crate::ops::UnitaryOp;
use crate::protocol::{
    identity_postprocess, InputSlot, Party, Payload, PayloadChoice, Protocol, ProtocolStep,
    Resource,
};
use crate::state::StateVector;

/// Chain of CZ gates across adjacent qubit pairs (0,1), (1,2), ...
fn cz_chain(m: usize) -> UnitaryOp {
    let dim = 1usize << m;
    let mut mat = nalgebra::DMatrix::<num_complex::Complex64>::zeros(dim, dim);
    for x in 0..dim {
        let mut sign = 1.0;
        for i in 0..m.saturating_sub(1) {
            let a = (x >> (m - 1 - i)) & 1;
            let b = (x >> (m - 2 - i)) & 1;
            if a & b == 1 {
                sign = -sign;
            }
        }
        mat[(x, x)] = num_complex::Complex64::new(sign, 0.0);
    }
    UnitaryOp::new(mat).expect("diagonal sign matrix is unitary")
}

/// Two parties, one input qubit each, `ebits` shared Bell pairs.
///
/// Register layout: input qubits on 0 (party A) and 1 (party B); Bell pair
/// `i` spans registers `2+2i` (A) and `3+2i` (B). Each party's local
/// operation is `L0 C L1 C L2 C L3` where the `Li` are independent
/// single-qubit Euler rotations on every register the party holds and `C` is
/// a CZ chain across them; a party holding a single qubit uses one Euler
/// rotation. Parameters are angles in radians, party A's block first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolTemplate {
    pub ebits: usize,
}

const ROTATION_LAYERS: usize = 4;

impl ProtocolTemplate {
    pub fn new(ebits: usize) -> Self {
        Self { ebits }
    }

    /// Qubits each party holds.
    pub fn party_qubits(&self) -> usize {
        1 + self.ebits
    }

    pub fn party_param_count(&self) -> usize {
        let m = self.party_qubits();
        if m == 1 {
            3
        } else {
            3 * m * ROTATION_LAYERS
        }
    }

    pub fn param_count(&self) -> usize {
        2 * self.party_param_count()
    }

    /// Registers held by party 0 (A) or 1 (B), in ascending order.
    pub fn party_registers(&self, party: usize) -> Vec<usize> {
        let mut regs = vec![party];
        for i in 0..self.ebits {
            regs.push(2 + 2 * i + party);
        }
        regs
    }

    /// One party's local unitary from its parameter block.
    pub fn party_unitary(&self, params: &[f64]) -> Result<UnitaryOp> {
        let m = self.party_qubits();
        if params.len() != self.party_param_count() {
            return Err(Error::Argument(format!(
                "party block takes {} parameters, got {}",
                self.party_param_count(),
                params.len()
            )));
        }
        if m == 1 {
            return Ok(UnitaryOp::euler_zyz(params[0], params[1], params[2]));
        }
        let layer = |l: usize| {
            let mut u: Option<UnitaryOp> = None;
            for q in 0..m {
                let at = 3 * (l * m + q);
                let rot = UnitaryOp::euler_zyz(params[at], params[at + 1], params[at + 2]);
                u = Some(match u {
                    Some(acc) => acc.kron(&rot),
                    None => rot,
                });
            }
            u.unwrap()
        };
        let chain = cz_chain(m);
        let mut u = layer(0);
        for l in 1..ROTATION_LAYERS {
            u = u.mul(&chain).mul(&layer(l));
        }
        Ok(u)
    }

    /// Builds the full protocol for a parameter vector.
    pub fn instantiate(&self, params: &[f64]) -> Result<Protocol> {
        if params.len() != self.param_count() {
            return Err(Error::Argument(format!(
                "template takes {} parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        let m = self.party_qubits();
        let half = self.party_param_count();
        let mut steps = Vec::new();
        for party in 0..2 {
            let regs = self.party_registers(party);
            let u = self.party_unitary(&params[party * half..(party + 1) * half])?;
            steps.push(ProtocolStep {
                party,
                targets: regs.clone(),
                payload: PayloadChoice::Fixed(Payload::Unitary(u)),
            });
            steps.push(ProtocolStep {
                party,
                targets: regs,
                payload: PayloadChoice::Fixed(Payload::Basis(computational_basis(m)?)),
            });
        }
        let resources = (0..self.ebits)
            .map(|i| Resource {
                id: Some(format!("bell:{i}")),
                state: bell_basis().vector(0).clone(),
                registers: vec![2 + 2 * i, 3 + 2 * i],
            })
            .collect();
        Ok(Protocol {
            name: format!("template-{}ebit", self.ebits),
            parties: vec![
                Party {
                    name: "A".into(),
                    registers: self.party_registers(0),
                },
                Party {
                    name: "B".into(),
                    registers: self.party_registers(1),
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
            resources,
            steps,
            postprocess: identity_postprocess(&[1 << m, 1 << m]),
            output_registers: None,
        })
    }
}

/// How well a parameter point discriminates the target states.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    /// Success probability of guessing the fed-in target state from the
    /// outcome record, under the best record-to-state assignment and a
    /// uniform prior. Ranges from 1/(number of states) to 1.
    pub average: f64,
    /// Success probability for the hardest target state.
    pub worst_case: f64,
    pub per_state: Vec<f64>,
}

/// Scores parameter vectors against a fixed target basis. The protocol
/// skeleton is validated once; each evaluation only swaps the two local
/// unitaries and re-enumerates.
#[derive(Clone)]
pub struct ScoreEvaluator {
    template: ProtocolTemplate,
    base: Protocol,
    targets: Vec<StateVector>,
}

impl ScoreEvaluator {
    pub fn new(template: ProtocolTemplate, target: &MeasurementBasis) -> Result<Self> {
        if target.n_qubits() != 2 {
            return Err(Error::Argument(format!(
                "the template measures two input qubits, target basis has {}",
                target.n_qubits()
            )));
        }
        let base = template.instantiate(&vec![0.0; template.param_count()])?;
        base.validate()
            .map_err(|v| Error::Validation(format!("template skeleton invalid: {v:?}")))?;
        Ok(Self {
            template,
            base,
            targets: target.vectors().to_vec(),
        })
    }

    pub fn param_count(&self) -> usize {
        self.template.param_count()
    }

    fn record_distributions(&self, params: &[f64]) -> Result<Vec<BTreeMap<Vec<u8>, f64>>> {
        let half = self.template.party_param_count();
        let mut protocol = self.base.clone();
        for party in 0..2 {
            let u = self
                .template
                .party_unitary(&params[party * half..(party + 1) * half])?;
            protocol.steps[2 * party].payload = PayloadChoice::Fixed(Payload::Unitary(u));
        }
        self.targets
            .iter()
            .map(|t| Ok(enumerate_branches_prevalidated(&protocol, t)?.record_distribution()))
            .collect()
    }

    /// Average discrimination success for the parameter vector.
    pub fn score(&self, params: &[f64]) -> Result<f64> {
        Ok(self.breakdown(params)?.average)
    }

    pub fn breakdown(&self, params: &[f64]) -> Result<ScoreBreakdown> {
        let dists = self.record_distributions(params)?;
        let t_count = dists.len();
        let mut records: std::collections::BTreeSet<&Vec<u8>> = std::collections::BTreeSet::new();
        for d in &dists {
            records.extend(d.keys());
        }
        let mut average = 0.0;
        let mut per_state = vec![0.0; t_count];
        for r in records {
            let mut best = 0usize;
            let mut best_p = f64::NEG_INFINITY;
            for (t, d) in dists.iter().enumerate() {
                let p = d.get(r).copied().unwrap_or(0.0);
                if p > best_p {
                    best_p = p;
                    best = t;
                }
            }
            average += best_p / t_count as f64;
            per_state[best] += best_p;
        }
        let worst_case = per_state.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(ScoreBreakdown {
            average,
            worst_case,
            per_state,
        })
    }
}

/// Search settings. `seed` fixes every random choice; restart `r` draws its
/// starting point from stream `r+1` of the seeded generator, so results are
/// reproducible regardless of thread scheduling.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SearchConfig {
    pub ebits: usize,
    pub restarts: usize,
    pub seed: u64,
    pub max_evals_per_restart: usize,
    /// Edge length of the initial simplex, in radians.
    pub initial_step: f64,
    /// Stop a restart once its score reaches this value.
    pub stop_score: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            ebits: 1,
            restarts: 24,
            seed: 0,
            max_evals_per_restart: 30_000,
            initial_step: 0.8,
            stop_score: 1.0 - 1e-11,
        }
    }
}

/// One restart's outcome. The trace holds the best score seen so far,
/// sampled every [`TRACE_STRIDE`] evaluations plus the final value, so it is
/// monotone nondecreasing.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RestartOutcome {
    pub stream: u64,
    pub best_score: f64,
    pub evals: usize,
    pub trace: Vec<f64>,
}

pub const TRACE_STRIDE: usize = 200;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchResult {
    pub ebits: usize,
    pub best_score: f64,
    pub worst_case: f64,
    pub best_params: Vec<f64>,
    pub restarts: Vec<RestartOutcome>,
}

impl SearchResult {
    /// The winning protocol, ready to run or export.
    pub fn best_protocol(&self) -> Result<Protocol> {
        ProtocolTemplate::new(self.ebits).instantiate(&self.best_params)
    }
}

struct NmOutcome {
    x: Vec<f64>,
    fx: f64,
    evals: usize,
}

/// Nelder-Mead minimization with the dimension-adaptive coefficients of Gao
/// and Han. Stops at the evaluation budget, at `stop_below`, or when the
/// simplex's function spread collapses.
fn nelder_mead(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    max_evals: usize,
    stop_below: f64,
) -> NmOutcome {
    let n = x0.len();
    let nf = n as f64;
    let alpha = 1.0;
    let beta = 1.0 + 2.0 / nf;
    let gamma = 0.75 - 1.0 / (2.0 * nf);
    let delta = 1.0 - 1.0 / nf;

    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        f(x)
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let fx0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), fx0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let fx = eval(&x, &mut evals);
        simplex.push((x, fx));
    }

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let f_best = simplex[0].1;
        let f_worst = simplex[n].1;
        if f_best <= stop_below || evals >= max_evals || (f_worst - f_best).abs() < 1e-13 {
            break;
        }

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / nf;
            }
        }
        let worst = simplex[n].0.clone();
        let blend = |from: &[f64], toward: &[f64], t: f64| -> Vec<f64> {
            from.iter()
                .zip(toward)
                .map(|(a, b)| a + t * (b - a))
                .collect()
        };

        let xr = blend(&centroid, &worst, -alpha);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = blend(&centroid, &xr, beta);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else if fr < simplex[n].1 {
            let xc = blend(&centroid, &xr, gamma);
            let fc = eval(&xc, &mut evals);
            if fc <= fr {
                simplex[n] = (xc, fc);
            } else {
                shrink(&mut simplex, delta, &mut |x| eval(x, &mut evals));
            }
        } else {
            let xc = blend(&centroid, &worst, gamma);
            let fc = eval(&xc, &mut evals);
            if fc < simplex[n].1 {
                simplex[n] = (xc, fc);
            } else {
                shrink(&mut simplex, delta, &mut |x| eval(x, &mut evals));
            }
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    NmOutcome { x, fx, evals }
}

fn shrink(simplex: &mut [(Vec<f64>, f64)], delta: f64, eval: &mut dyn FnMut(&[f64]) -> f64) {
    let anchor = simplex[0].0.clone();
    for entry in simplex.iter_mut().skip(1) {
        for (xi, ai) in entry.0.iter_mut().zip(&anchor) {
            *xi = ai + delta * (*xi - ai);
        }
        entry.1 = eval(&entry.0);
    }
}

/// Runs the randomized search. Restarts execute in parallel; the reported
/// best is the highest-scoring restart, ties going to the lowest stream.
pub fn optimize(target: &MeasurementBasis, config: &SearchConfig) -> Result<SearchResult> {
    if config.restarts == 0 {
        return Err(Error::Argument("search needs at least one restart".into()));
    }
    let template = ProtocolTemplate::new(config.ebits);
    let evaluator = ScoreEvaluator::new(template, target)?;
    let d = evaluator.param_count();

    let runs: Vec<(RestartOutcome, Vec<f64>)> = (0..config.restarts)
        .into_par_iter()
        .map(|restart| {
            let stream = restart as u64 + 1;
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(stream);
            let x0: Vec<f64> = (0..d).map(|_| rng.gen_range(-PI..PI)).collect();

            let mut best_seen = f64::NEG_INFINITY;
            let mut trace = Vec::new();
            let mut count = 0usize;
            let mut f = |x: &[f64]| {
                let score = evaluator
                    .score(x)
                    .expect("evaluation cannot fail for a validated skeleton");
                best_seen = best_seen.max(score);
                count += 1;
                if count % TRACE_STRIDE == 0 {
                    trace.push(best_seen);
                }
                -score
            };
            let out = nelder_mead(
                &mut f,
                &x0,
                config.initial_step,
                config.max_evals_per_restart,
                -config.stop_score,
            );
            if trace.last() != Some(&best_seen) {
                trace.push(best_seen);
            }
            let outcome = RestartOutcome {
                stream,
                best_score: -out.fx,
                evals: out.evals,
                trace,
            };
            (outcome, out.x)
        })
        .collect();

    let best_at = runs
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| a.0.best_score.total_cmp(&b.0.best_score).then(j.cmp(i)))
        .map(|(i, _)| i)
        .unwrap();
    let best_params = runs[best_at].1.clone();
    let breakdown = evaluator.breakdown(&best_params)?;
    Ok(SearchResult {
        ebits: config.ebits,
        best_score: breakdown.average,
        worst_case: breakdown.worst_case,
        best_params,
        restarts: runs.into_iter().map(|(o, _)| o).collect(),
    })
}
