//! Unitary operators and projectors on qubit registers.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::state::StateVector;
use crate::tol;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn qubit_count_of_dim(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::Dimension(format!(
            "operator dimension {dim} is not a power of two"
        )));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// A unitary on one or more qubits, checked at construction
/// (`U†U = I` within 1e-10).
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryOp {
    n_qubits: usize,
    mat: DMatrix<Complex64>,
}

impl UnitaryOp {
    pub fn new(mat: DMatrix<Complex64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::Dimension("unitary must be square".into()));
        }
        let n_qubits = qubit_count_of_dim(mat.nrows())?;
        let gram = mat.adjoint() * &mat;
        for i in 0..mat.nrows() {
            for j in 0..mat.ncols() {
                let expect = if i == j {
                    Complex64::ONE
                } else {
                    Complex64::ZERO
                };
                if (gram[(i, j)] - expect).norm() > tol::CONSTRUCT {
                    return Err(Error::Construction(format!(
                        "matrix is not unitary: (U†U)[{i},{j}] = {}",
                        gram[(i, j)]
                    )));
                }
            }
        }
        Ok(Self { n_qubits, mat })
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

    pub fn identity(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            mat: DMatrix::identity(1 << n_qubits, 1 << n_qubits),
        }
    }

    /// Pauli by index: 0 = I, 1 = X, 2 = Y, 3 = Z.
    pub fn pauli(index: usize) -> Self {
        let mat = match index {
            0 => DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(1., 0.)]),
            1 => DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
            2 => DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
            3 => DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
            _ => panic!("pauli index must be 0..4"),
        };
        Self { n_qubits: 1, mat }
    }

    pub fn hadamard() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            n_qubits: 1,
            mat: DMatrix::from_row_slice(2, 2, &[c(h, 0.), c(h, 0.), c(h, 0.), c(-h, 0.)]),
        }
    }

    pub fn cz() -> Self {
        let mut mat = DMatrix::identity(4, 4);
        mat[(3, 3)] = c(-1., 0.);
        Self { n_qubits: 2, mat }
    }

    /// CNOT with the first (most significant) qubit as control.
    pub fn cnot() -> Self {
        let mut mat = DMatrix::<Complex64>::zeros(4, 4);
        mat[(0, 0)] = Complex64::ONE;
        mat[(1, 1)] = Complex64::ONE;
        mat[(2, 3)] = Complex64::ONE;
        mat[(3, 2)] = Complex64::ONE;
        Self { n_qubits: 2, mat }
    }

    /// exp(-i theta Y / 2).
    pub fn ry(theta: f64) -> Self {
        let (s, co) = (theta / 2.0).sin_cos();
        Self {
            n_qubits: 1,
            mat: DMatrix::from_row_slice(2, 2, &[c(co, 0.), c(-s, 0.), c(s, 0.), c(co, 0.)]),
        }
    }

    /// exp(-i theta Z / 2).
    pub fn rz(theta: f64) -> Self {
        let half = theta / 2.0;
        Self {
            n_qubits: 1,
            mat: DMatrix::from_row_slice(
                2,
                2,
                &[
                    Complex64::from_polar(1.0, -half),
                    Complex64::ZERO,
                    Complex64::ZERO,
                    Complex64::from_polar(1.0, half),
                ],
            ),
        }
    }

    /// ZYZ Euler rotation `Rz(alpha) Ry(beta) Rz(gamma)`; covers any
    /// single-qubit unitary up to global phase.
    pub fn euler_zyz(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self::rz(alpha).mul(&Self::ry(beta)).mul(&Self::rz(gamma))
    }

    /// Unitary whose columns are the given orthonormal states.
    pub fn from_columns(columns: &[StateVector]) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::Argument("no columns given".into()));
        }
        let dim = columns[0].dim();
        if columns.len() != dim || columns.iter().any(|s| s.dim() != dim) {
            return Err(Error::Dimension(
                "column count must equal the common state dimension".into(),
            ));
        }
        let mat = DMatrix::from_fn(dim, dim, |r, col| columns[col].amplitude(r));
        Self::new(mat)
    }

    pub fn kron(&self, other: &UnitaryOp) -> Self {
        Self {
            n_qubits: self.n_qubits + other.n_qubits,
            mat: self.mat.kronecker(&other.mat),
        }
    }

    /// Matrix product `self * other` (so `other` acts first on a ket).
    pub fn mul(&self, other: &UnitaryOp) -> Self {
        assert_eq!(
            self.dim(),
            other.dim(),
            "unitary product dimension mismatch"
        );
        Self {
            n_qubits: self.n_qubits,
            mat: &self.mat * &other.mat,
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            n_qubits: self.n_qubits,
            mat: self.mat.adjoint(),
        }
    }

    /// Haar-random unitary via QR of a complex Gaussian matrix, with the
    /// usual phase fix on the R diagonal. Deterministic in `(n, seed)`.
    pub fn haar_random(n_qubits: usize, seed: u64) -> Self {
        let dim = 1usize << n_qubits;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMatrix::from_fn(dim, dim, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            c(re, im)
        });
        let qr = g.qr();
        let r = qr.r();
        let mut q = qr.q();
        for j in 0..dim {
            let d = r[(j, j)];
            let phase = if d.norm() > 0.0 {
                d / d.norm()
            } else {
                Complex64::ONE
            };
            for i in 0..dim {
                q[(i, j)] *= phase;
            }
        }
        Self { n_qubits, mat: q }
    }
}

/// Pauli index -> (x bit, z bit): I=(0,0), X=(1,0), Y=(1,1), Z=(0,1).
pub fn pauli_bits(index: usize) -> (u8, u8) {
    match index {
        0 => (0, 0),
        1 => (1, 0),
        2 => (1, 1),
        3 => (0, 1),
        _ => panic!("pauli index must be 0..4"),
    }
}

/// Inverse of `pauli_bits`.
pub fn pauli_from_bits(x: u8, z: u8) -> usize {
    match (x & 1, z & 1) {
        (0, 0) => 0,
        (1, 0) => 1,
        (1, 1) => 2,
        (0, 1) => 3,
        _ => unreachable!(),
    }
}

/// Index of the Pauli proportional to `sigma_a * sigma_b` (phases dropped).
pub fn pauli_product_index(a: usize, b: usize) -> usize {
    let (xa, za) = pauli_bits(a);
    let (xb, zb) = pauli_bits(b);
    pauli_from_bits(xa ^ xb, za ^ zb)
}

/// An orthogonal projector, checked Hermitian and idempotent at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Projector {
    n_qubits: usize,
    mat: DMatrix<Complex64>,
}

impl Projector {
    pub fn new(mat: DMatrix<Complex64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::Dimension("projector must be square".into()));
        }
        let n_qubits = qubit_count_of_dim(mat.nrows())?;
        let herm_gap = (&mat - mat.adjoint()).norm();
        if herm_gap > tol::CONSTRUCT {
            return Err(Error::Construction(format!(
                "projector is not Hermitian (gap {herm_gap:.2e})"
            )));
        }
        let idem_gap = (&mat * &mat - &mat).norm();
        if idem_gap > tol::CONSTRUCT {
            return Err(Error::Construction(format!(
                "projector is not idempotent (gap {idem_gap:.2e})"
            )));
        }
        Ok(Self { n_qubits, mat })
    }

    /// Rank-1 projector `|v><v|`.
    pub fn onto(v: &StateVector) -> Self {
        let dim = v.dim();
        let mat = DMatrix::from_fn(dim, dim, |r, col| v.amplitude(r) * v.amplitude(col).conj());
        Self {
            n_qubits: v.n_qubits(),
            mat,
        }
    }

    /// Projector onto the span of the given orthonormal states.
    pub fn onto_span(vs: &[StateVector]) -> Result<Self> {
        if vs.is_empty() {
            return Err(Error::Argument("empty span".into()));
        }
        let dim = vs[0].dim();
        let mut mat = DMatrix::<Complex64>::zeros(dim, dim);
        for v in vs {
            if v.dim() != dim {
                return Err(Error::Dimension("span states differ in size".into()));
            }
            for r in 0..dim {
                for col in 0..dim {
                    mat[(r, col)] += v.amplitude(r) * v.amplitude(col).conj();
                }
            }
        }
        Self::new(mat)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn mat(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn rank(&self) -> usize {
        self.mat.trace().re.round() as usize
    }
}
