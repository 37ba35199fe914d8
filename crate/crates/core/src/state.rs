//! Pure state vectors on qubit registers.
//!
//! Basis index convention: qubit 0 is the most significant bit of the basis
//! index, so `|q0 q1 .. q_{n-1}>` has index `q0*2^{n-1} + .. + q_{n-1}`.
//! All mutating operations return new values; amplitudes are `Complex64`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::ops::UnitaryOp;
use crate::tol;

static MAX_QUBITS: AtomicUsize = AtomicUsize::new(12);

/// Current register-size cap. Operations that would build a state larger
/// than this return `Error::Resource`.
pub fn max_qubits() -> usize {
    MAX_QUBITS.load(Ordering::Relaxed)
}

/// Adjusts the register-size cap (default 12 qubits).
pub fn set_max_qubits(n: usize) {
    MAX_QUBITS.store(n, Ordering::Relaxed);
}

fn check_qubit_count(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Argument("state needs at least one qubit".into()));
    }
    if n > max_qubits() {
        return Err(Error::Resource(format!(
            "{} qubits exceeds the configured cap of {}",
            n,
            max_qubits()
        )));
    }
    Ok(())
}

/// A normalized pure state on `n_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Builds a state from raw amplitudes, checking length, finiteness and
    /// unit norm.
    pub fn new(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        if amps.len() != 1 << n_qubits {
            return Err(Error::Dimension(format!(
                "expected {} amplitudes for {} qubits, got {}",
                1usize << n_qubits,
                n_qubits,
                amps.len()
            )));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::Construction("non-finite amplitude".into()));
        }
        let norm2: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > tol::STATE {
            return Err(Error::Construction(format!(
                "state norm^2 = {norm2}, not 1 within {}",
                tol::STATE
            )));
        }
        Ok(Self { n_qubits, amps })
    }

    /// Normalizes an arbitrary nonzero amplitude vector.
    pub fn normalized(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        let norm2: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if norm2 < tol::STATE {
            return Err(Error::Argument("cannot normalize the zero vector".into()));
        }
        let s = norm2.sqrt();
        let scaled = amps.into_iter().map(|a| a / s).collect();
        Self::new(n_qubits, scaled)
    }

    /// Computational basis state `|index>`.
    pub fn basis_state(n_qubits: usize, index: usize) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::Argument(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        let mut amps = vec![Complex64::ZERO; dim];
        amps[index] = Complex64::ONE;
        Ok(Self { n_qubits, amps })
    }

    /// Product state from a ket string over `{0,1,+,-,r,l}`, where `r`/`l`
    /// are the +1/-1 eigenstates of Y. Example: `"1+"` is `|1>|+>`.
    pub fn from_ket(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::Argument("empty ket string".into()));
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut state: Option<StateVector> = None;
        for ch in s.chars() {
            let q = match ch {
                '0' => Self::new(1, vec![Complex64::ONE, Complex64::ZERO])?,
                '1' => Self::new(1, vec![Complex64::ZERO, Complex64::ONE])?,
                '+' => Self::new(1, vec![Complex64::new(h, 0.0), Complex64::new(h, 0.0)])?,
                '-' => Self::new(1, vec![Complex64::new(h, 0.0), Complex64::new(-h, 0.0)])?,
                'r' => Self::new(1, vec![Complex64::new(h, 0.0), Complex64::new(0.0, h)])?,
                'l' => Self::new(1, vec![Complex64::new(h, 0.0), Complex64::new(0.0, -h)])?,
                _ => {
                    return Err(Error::Argument(format!(
                        "unknown ket character {ch:?} (expected 0,1,+,-,r,l)"
                    )))
                }
            };
            state = Some(match state {
                None => q,
                Some(acc) => acc.kron(&q)?,
            });
        }
        Ok(state.unwrap())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        assert_eq!(self.dim(), other.dim(), "inner product dimension mismatch");
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Equality modulo a global phase: `|<a|b>| = 1` within `tol`.
    pub fn close_up_to_phase(&self, other: &StateVector, tol: f64) -> bool {
        self.dim() == other.dim() && (self.inner(other).norm() - 1.0).abs() <= tol
    }

    /// Tensor product; `self`'s qubits become the most significant block.
    pub fn kron(&self, other: &StateVector) -> Result<StateVector> {
        let n = self.n_qubits + other.n_qubits;
        check_qubit_count(n)?;
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(StateVector { n_qubits: n, amps })
    }

    /// Applies `u` to the listed target qubits (target order matches the
    /// operator's own qubit order, most significant first).
    pub fn apply_on(&self, u: &UnitaryOp, targets: &[usize]) -> Result<StateVector> {
        let masks = self.target_masks(targets)?;
        if u.n_qubits() != targets.len() {
            return Err(Error::Dimension(format!(
                "operator acts on {} qubits but {} targets were given",
                u.n_qubits(),
                targets.len()
            )));
        }
        let sub_dim = 1usize << targets.len();
        let target_mask: usize = masks.iter().copied().fold(0, |a, m| a | m);
        let mut out = vec![Complex64::ZERO; self.dim()];
        let mut gathered = vec![Complex64::ZERO; sub_dim];
        let mat = u.mat();
        for base in 0..self.dim() {
            if base & target_mask != 0 {
                continue;
            }
            for (j, g) in gathered.iter_mut().enumerate() {
                *g = self.amps[base | spread(j, &masks)];
            }
            for row in 0..sub_dim {
                let mut acc = Complex64::ZERO;
                for (col, g) in gathered.iter().enumerate() {
                    acc += mat[(row, col)] * g;
                }
                out[base | spread(row, &masks)] = acc;
            }
        }
        Ok(StateVector {
            n_qubits: self.n_qubits,
            amps: out,
        })
    }

    /// Projects onto `|v>` on the target qubits (Lüders update for a rank-1
    /// outcome). Returns the branch probability and, unless the probability
    /// falls below `prune_below`, the renormalized post state.
    pub fn project_on(
        &self,
        v: &StateVector,
        targets: &[usize],
        prune_below: f64,
    ) -> Result<(f64, Option<StateVector>)> {
        let masks = self.target_masks(targets)?;
        if v.n_qubits() != targets.len() {
            return Err(Error::Dimension(
                "projection vector size does not match target count".into(),
            ));
        }
        let sub_dim = v.dim();
        let target_mask: usize = masks.iter().copied().fold(0, |a, m| a | m);
        let mut out = vec![Complex64::ZERO; self.dim()];
        let mut prob = 0.0;
        for base in 0..self.dim() {
            if base & target_mask != 0 {
                continue;
            }
            let mut c = Complex64::ZERO;
            for j in 0..sub_dim {
                c += v.amps[j].conj() * self.amps[base | spread(j, &masks)];
            }
            prob += c.norm_sqr();
            if c != Complex64::ZERO {
                for j in 0..sub_dim {
                    out[base | spread(j, &masks)] = v.amps[j] * c;
                }
            }
        }
        if prob < prune_below {
            return Ok((prob, None));
        }
        let s = prob.sqrt();
        for a in &mut out {
            *a /= s;
        }
        Ok((
            prob,
            Some(StateVector {
                n_qubits: self.n_qubits,
                amps: out,
            }),
        ))
    }

    /// Reduced density matrix on `keep` (output qubit order follows `keep`).
    pub fn reduced_density(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let keep_masks = self.target_masks(keep)?;
        let keep_dim = 1usize << keep.len();
        let env: Vec<usize> = (0..self.n_qubits).filter(|q| !keep.contains(q)).collect();
        let env_masks: Vec<usize> = env
            .iter()
            .map(|&q| 1usize << (self.n_qubits - 1 - q))
            .collect();
        let env_dim = 1usize << env.len();
        let mut mat = nalgebra::DMatrix::<Complex64>::zeros(keep_dim, keep_dim);
        for e in 0..env_dim {
            let env_bits = spread(e, &env_masks);
            for a in 0..keep_dim {
                let ia = spread(a, &keep_masks) | env_bits;
                for b in 0..keep_dim {
                    let ib = spread(b, &keep_masks) | env_bits;
                    mat[(a, b)] += self.amps[ia] * self.amps[ib].conj();
                }
            }
        }
        DensityMatrix::new(mat)
    }

    fn target_masks(&self, targets: &[usize]) -> Result<Vec<usize>> {
        let mut seen = vec![false; self.n_qubits];
        let mut masks = Vec::with_capacity(targets.len());
        for &t in targets {
            if t >= self.n_qubits {
                return Err(Error::Argument(format!(
                    "qubit {t} out of range for a {}-qubit state",
                    self.n_qubits
                )));
            }
            if seen[t] {
                return Err(Error::Argument(format!("duplicate target qubit {t}")));
            }
            seen[t] = true;
            masks.push(1usize << (self.n_qubits - 1 - t));
        }
        Ok(masks)
    }
}

/// Scatters the bits of `j` (most significant first) onto the given masks.
fn spread(j: usize, masks: &[usize]) -> usize {
    let m = masks.len();
    let mut out = 0;
    for (i, &mask) in masks.iter().enumerate() {
        if (j >> (m - 1 - i)) & 1 == 1 {
            out |= mask;
        }
    }
    out
}

/// Draws a Haar-random pure state: i.i.d. complex Gaussian amplitudes,
/// normalized. Deterministic in `(n_qubits, seed)`.
pub fn haar_random_state(n_qubits: usize, seed: u64) -> Result<StateVector> {
    check_qubit_count(n_qubits)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = 1usize << n_qubits;
    let mut amps = Vec::with_capacity(dim);
    for _ in 0..dim {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        amps.push(Complex64::new(re, im));
    }
    StateVector::normalized(n_qubits, amps)
}
