//! Density matrices, partial traces and distance measures.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ops::Projector;
use crate::state::StateVector;
use crate::tol;

/// A density matrix: Hermitian, unit trace, positive semidefinite
/// (eigenvalues above -1e-10), all checked at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    mat: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(mat: DMatrix<Complex64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::Dimension("density matrix must be square".into()));
        }
        let dim = mat.nrows();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::Dimension(format!(
                "density matrix dimension {dim} is not a power of two"
            )));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        let herm_gap = (&mat - mat.adjoint()).norm();
        if herm_gap > tol::STATE {
            return Err(Error::Construction(format!(
                "density matrix is not Hermitian (gap {herm_gap:.2e})"
            )));
        }
        let trace = mat.trace();
        if (trace.re - 1.0).abs() > tol::STATE || trace.im.abs() > tol::STATE {
            return Err(Error::Construction(format!(
                "density matrix trace is {trace}, not 1"
            )));
        }
        let min_eig = mat
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < tol::PSD_FLOOR {
            return Err(Error::Construction(format!(
                "density matrix has negative eigenvalue {min_eig:.2e}"
            )));
        }
        Ok(Self { n_qubits, mat })
    }

    /// `|psi><psi|`.
    pub fn from_pure(psi: &StateVector) -> Self {
        let dim = psi.dim();
        let mat = DMatrix::from_fn(dim, dim, |r, c| psi.amplitude(r) * psi.amplitude(c).conj());
        Self {
            n_qubits: psi.n_qubits(),
            mat,
        }
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let mat = DMatrix::identity(dim, dim).map(|x: Complex64| x / dim as f64);
        Self { n_qubits, mat }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    /// Reduced state on `keep`; output qubit order follows `keep`. An empty
    /// `keep` yields the 1x1 scalar trace.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let n = self.n_qubits;
        let mut seen = vec![false; n];
        for &q in keep {
            if q >= n {
                return Err(Error::Argument(format!(
                    "qubit {q} out of range for a {n}-qubit density matrix"
                )));
            }
            if seen[q] {
                return Err(Error::Argument(format!("duplicate keep qubit {q}")));
            }
            seen[q] = true;
        }
        let keep_masks: Vec<usize> = keep.iter().map(|&q| 1usize << (n - 1 - q)).collect();
        let env: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
        let env_masks: Vec<usize> = env.iter().map(|&q| 1usize << (n - 1 - q)).collect();
        let keep_dim = 1usize << keep.len();
        let env_dim = 1usize << env.len();
        let mut out = DMatrix::<Complex64>::zeros(keep_dim, keep_dim);
        for e in 0..env_dim {
            let env_bits = spread(e, &env_masks);
            for a in 0..keep_dim {
                let ia = spread(a, &keep_masks) | env_bits;
                for b in 0..keep_dim {
                    let ib = spread(b, &keep_masks) | env_bits;
                    out[(a, b)] += self.mat[(ia, ib)];
                }
            }
        }
        if keep.is_empty() {
            // Scalar trace of a valid state; still goes through validation.
            return DensityMatrix::new(out);
        }
        DensityMatrix::new(out)
    }

    /// Real eigenvalue spectrum (Hermitian input guaranteed by construction).
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.mat
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect()
    }

    /// tr(rho^2).
    pub fn purity(&self) -> f64 {
        (&self.mat * &self.mat).trace().re
    }

    /// Largest eigenvalue and its eigenvector as a state. Used to pull a pure
    /// state back out of a branch that factorized.
    pub fn principal_component(&self) -> Result<(f64, StateVector)> {
        let eig = self.mat.clone().symmetric_eigen();
        let mut best = 0;
        for i in 0..eig.eigenvalues.len() {
            if eig.eigenvalues[i] > eig.eigenvalues[best] {
                best = i;
            }
        }
        let col = eig.eigenvectors.column(best);
        let amps: Vec<Complex64> = col.iter().copied().collect();
        Ok((
            eig.eigenvalues[best],
            StateVector::normalized(self.n_qubits, amps)?,
        ))
    }

    /// von Neumann entropy in bits.
    pub fn entropy_bits(&self) -> f64 {
        self.eigenvalues()
            .into_iter()
            .filter(|&l| l > 1e-12)
            .map(|l| -l * l.log2())
            .sum()
    }

    /// Expectation `tr(rho P)` of a projector.
    pub fn expect_projector(&self, p: &Projector) -> f64 {
        (&self.mat * p.mat()).trace().re
    }
}

/// Trace distance `||a - b||_1 / 2`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension(
            "trace distance needs equal dimensions".into(),
        ));
    }
    let diff = a.mat() - b.mat();
    let eigs = diff.symmetric_eigen().eigenvalues;
    Ok(eigs.iter().map(|l| l.abs()).sum::<f64>() / 2.0)
}

/// Total variation distance between two distributions over the same outcomes.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "distribution length mismatch");
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0
}

/// Lüders update `P rho P / tr(rho P)` for one outcome of a projective
/// measurement. The state is omitted when the branch probability falls
/// below the pruning threshold.
pub fn luders_update(rho: &DensityMatrix, p: &Projector) -> Result<(f64, Option<DensityMatrix>)> {
    if rho.dim() != p.mat().nrows() {
        return Err(Error::Dimension(
            "projector does not match state size".into(),
        ));
    }
    let prob = rho.expect_projector(p);
    if prob < tol::PRUNE {
        return Ok((prob.max(0.0), None));
    }
    let updated = (p.mat() * rho.mat() * p.mat()).map(|x| x / prob);
    // Re-symmetrize rounding dust so construction checks stay meaningful.
    let sym = (&updated + updated.adjoint()).map(|x| x / 2.0);
    Ok((prob, Some(DensityMatrix::new(sym)?)))
}

/// Entanglement entropy (in bits) of a pure state across the cut given by
/// `side` versus the rest of the register.
pub fn entanglement_entropy(psi: &StateVector, side: &[usize]) -> Result<f64> {
    Ok(psi.reduced_density(side)?.entropy_bits())
}

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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::haar_random_state;

    #[test]
    fn trace_over_second_qubit_of_one_plus() {
        let psi = StateVector::from_ket("1+").unwrap();
        let rho = DensityMatrix::from_pure(&psi);
        let reduced = rho.partial_trace(&[0]).unwrap();
        let expect = DensityMatrix::from_pure(&StateVector::from_ket("1").unwrap());
        assert!(trace_distance(&reduced, &expect).unwrap() < 1e-12);
    }

    #[test]
    fn tracing_half_a_bell_pair_gives_maximally_mixed() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let phi_plus = StateVector::new(
            2,
            vec![
                Complex64::new(h, 0.0),
                Complex64::ZERO,
                Complex64::ZERO,
                Complex64::new(h, 0.0),
            ],
        )
        .unwrap();
        for keep in [[0usize], [1usize]] {
            let reduced = phi_plus.reduced_density(&keep).unwrap();
            let mixed = DensityMatrix::maximally_mixed(1);
            assert!(trace_distance(&reduced, &mixed).unwrap() < 1e-12);
        }
    }

    #[test]
    fn trace_distance_pure_zero_vs_mixed_is_half() {
        let zero = DensityMatrix::from_pure(&StateVector::from_ket("0").unwrap());
        let mixed = DensityMatrix::maximally_mixed(1);
        let d = trace_distance(&zero, &mixed).unwrap();
        assert!((d - 0.5).abs() < 1e-12, "got {d}");
    }

    #[test]
    fn trace_distance_orthogonal_pure_states_is_one() {
        let a = DensityMatrix::from_pure(&StateVector::from_ket("0").unwrap());
        let b = DensityMatrix::from_pure(&StateVector::from_ket("1").unwrap());
        assert!((trace_distance(&a, &b).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn luders_update_on_ten_against_one_plus_span() {
        let rho = DensityMatrix::from_pure(&StateVector::from_ket("10").unwrap());
        let proj = Projector::onto(&StateVector::from_ket("1+").unwrap());
        let (p, updated) = luders_update(&rho, &proj).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        let expect = DensityMatrix::from_pure(&StateVector::from_ket("1+").unwrap());
        assert!(trace_distance(&updated.unwrap(), &expect).unwrap() < 1e-10);
    }

    #[test]
    fn luders_flags_zero_probability_branch() {
        let rho = DensityMatrix::from_pure(&StateVector::from_ket("00").unwrap());
        let proj = Projector::onto(&StateVector::from_ket("11").unwrap());
        let (p, updated) = luders_update(&rho, &proj).unwrap();
        assert!(p < 1e-14);
        assert!(updated.is_none());
    }

    #[test]
    fn empty_keep_returns_scalar_trace() {
        let rho = DensityMatrix::from_pure(&StateVector::from_ket("01").unwrap());
        let scalar = rho.partial_trace(&[]).unwrap();
        assert_eq!(scalar.dim(), 1);
        assert!((scalar.mat()[(0, 0)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_keep_order_defines_output_order() {
        let psi = StateVector::from_ket("01").unwrap();
        let rho = DensityMatrix::from_pure(&psi);
        let swapped = rho.partial_trace(&[1, 0]).unwrap();
        let expect = DensityMatrix::from_pure(&StateVector::from_ket("10").unwrap());
        assert!(trace_distance(&swapped, &expect).unwrap() < 1e-12);
    }

    #[test]
    fn purity_and_entropy_of_pure_and_mixed() {
        let pure = DensityMatrix::from_pure(&haar_random_state(2, 5).unwrap());
        assert!((pure.purity() - 1.0).abs() < 1e-10);
        assert!(pure.entropy_bits() < 1e-9);
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!((mixed.purity() - 0.25).abs() < 1e-12);
        assert!((mixed.entropy_bits() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_negative_matrix() {
        let mut m = DMatrix::<Complex64>::zeros(2, 2);
        m[(0, 0)] = Complex64::new(1.5, 0.0);
        m[(1, 1)] = Complex64::new(-0.5, 0.0);
        assert!(DensityMatrix::new(m).is_err());
    }
}
