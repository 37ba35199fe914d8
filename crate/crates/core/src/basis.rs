//! Named measurement bases.
//!
//! Everything here is a complete rank-1 projective basis with string labels.
//! Conventions used throughout:
//!
//! * Bell basis order is `[Φ+, Ψ+, Ψ-, Φ-]`, so index `b` is the Bell state
//!   `(I ⊗ σ_b)|Φ+>` up to phase, with Pauli order I, X, Y, Z.
//! * The twisted-type basis `{|00>, |01>, |1α>, |1ᾱ>}` uses
//!   `|α> = cos(α/2)|0> + sin(α/2)|1>` and `|ᾱ> = sin(α/2)|0> - cos(α/2)|1>`;
//!   α = π/2 gives `{|00>, |01>, |1+>, |1->}`.
//! * Bloch-direction kets fix the phase so the `|0>` amplitude is real and
//!   nonnegative.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::ops::{Projector, UnitaryOp};
use crate::state::StateVector;
use crate::tol;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A point in or on the Bloch sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let v = Self { x, y, z };
        if v.norm() > 1.0 + tol::CONSTRUCT {
            return Err(Error::Construction(format!(
                "Bloch vector length {} exceeds 1",
                v.norm()
            )));
        }
        Ok(v)
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn dot(&self, other: &BlochVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn neg(&self) -> BlochVector {
        BlochVector {
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }
}

/// Bloch vector of a single-qubit density matrix.
pub fn bloch_vector(rho: &DensityMatrix) -> Result<BlochVector> {
    if rho.n_qubits() != 1 {
        return Err(Error::Dimension("Bloch vector needs a single qubit".into()));
    }
    let m = rho.mat();
    let x = (m[(0, 1)] + m[(1, 0)]).re;
    let y = (m[(0, 1)] - m[(1, 0)]).im * -1.0;
    let z = (m[(0, 0)] - m[(1, 1)]).re;
    BlochVector::new(x, y, z)
}

/// +1 eigenstate of `v · (X, Y, Z)` for a unit Bloch direction, with the
/// `|0>` amplitude real and nonnegative.
pub fn bloch_ket(v: &BlochVector) -> Result<StateVector> {
    if (v.norm() - 1.0).abs() > tol::CONSTRUCT {
        return Err(Error::Argument("direction must be a unit vector".into()));
    }
    let theta = v.z.clamp(-1.0, 1.0).acos();
    let phi = v.y.atan2(v.x);
    StateVector::new(
        1,
        vec![
            c((theta / 2.0).cos(), 0.0),
            Complex64::from_polar((theta / 2.0).sin(), phi),
        ],
    )
}

/// A complete orthonormal measurement basis with one label per outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementBasis {
    id: Option<String>,
    labels: Vec<String>,
    vectors: Vec<StateVector>,
}

impl MeasurementBasis {
    pub fn new(labels: Vec<String>, vectors: Vec<StateVector>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::Argument("empty basis".into()));
        }
        let n = vectors[0].n_qubits();
        let dim = 1usize << n;
        if vectors.iter().any(|v| v.n_qubits() != n) {
            return Err(Error::Dimension("basis states differ in size".into()));
        }
        if vectors.len() != dim {
            return Err(Error::Dimension(format!(
                "basis has {} states but dimension {dim} needs exactly {dim}",
                vectors.len()
            )));
        }
        if labels.len() != vectors.len() {
            return Err(Error::Argument("one label per basis state required".into()));
        }
        let mut sorted = labels.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != labels.len() {
            return Err(Error::Argument("duplicate outcome labels".into()));
        }
        for i in 0..vectors.len() {
            for j in i..vectors.len() {
                let g = vectors[i].inner(&vectors[j]);
                let expect = if i == j {
                    Complex64::ONE
                } else {
                    Complex64::ZERO
                };
                if (g - expect).norm() > tol::CONSTRUCT {
                    return Err(Error::Construction(format!(
                        "basis is not orthonormal: <{i}|{j}> = {g}"
                    )));
                }
            }
        }
        Ok(Self {
            id: None,
            labels,
            vectors,
        })
    }

    fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    /// Registry id when this basis came from a named constructor.
    pub fn id(&self) -> Option<&str> {
        self.id.as_deref()
    }

    pub fn n_qubits(&self) -> usize {
        self.vectors[0].n_qubits()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn vector(&self, i: usize) -> &StateVector {
        &self.vectors[i]
    }

    pub fn vectors(&self) -> &[StateVector] {
        &self.vectors
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn projector(&self, i: usize) -> Projector {
        Projector::onto(&self.vectors[i])
    }

    /// Unitary whose columns are the basis states (maps `|i>` to state `i`).
    pub fn as_unitary(&self) -> Result<UnitaryOp> {
        UnitaryOp::from_columns(&self.vectors)
    }

    /// Born probabilities of a pure state in this basis.
    pub fn probabilities(&self, psi: &StateVector) -> Result<Vec<f64>> {
        if psi.n_qubits() != self.n_qubits() {
            return Err(Error::Dimension(format!(
                "state has {} qubits, basis expects {}",
                psi.n_qubits(),
                self.n_qubits()
            )));
        }
        Ok(self
            .vectors
            .iter()
            .map(|v| v.inner(psi).norm_sqr())
            .collect())
    }

    /// Born probabilities of a density matrix in this basis.
    pub fn probabilities_dm(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        if rho.n_qubits() != self.n_qubits() {
            return Err(Error::Dimension(format!(
                "state has {} qubits, basis expects {}",
                rho.n_qubits(),
                self.n_qubits()
            )));
        }
        Ok(self
            .vectors
            .iter()
            .map(|v| {
                let mut acc = Complex64::ZERO;
                for r in 0..v.dim() {
                    for col in 0..v.dim() {
                        acc += v.amplitude(r).conj() * rho.mat()[(r, col)] * v.amplitude(col);
                    }
                }
                acc.re
            })
            .collect())
    }

    /// Gram matrix of the basis states, for diagnostics.
    pub fn gram(&self) -> DMatrix<Complex64> {
        let k = self.vectors.len();
        DMatrix::from_fn(k, k, |i, j| self.vectors[i].inner(&self.vectors[j]))
    }
}

/// Z (computational) basis on `n` qubits, labeled by bitstrings.
pub fn computational_basis(n: usize) -> Result<MeasurementBasis> {
    let dim = 1usize << n;
    let mut labels = Vec::with_capacity(dim);
    let mut vectors = Vec::with_capacity(dim);
    for i in 0..dim {
        labels.push(bitstring(i, n));
        vectors.push(StateVector::basis_state(n, i)?);
    }
    Ok(MeasurementBasis::new(labels, vectors)?.with_id(format!("computational:{n}")))
}

/// X basis `{|+>, |->}`.
pub fn x_basis() -> MeasurementBasis {
    MeasurementBasis::new(
        vec!["+".into(), "-".into()],
        vec![
            StateVector::from_ket("+").unwrap(),
            StateVector::from_ket("-").unwrap(),
        ],
    )
    .unwrap()
    .with_id("x")
}

/// Y basis `{|+y>, |-y>}`.
pub fn y_basis() -> MeasurementBasis {
    MeasurementBasis::new(
        vec!["+y".into(), "-y".into()],
        vec![
            StateVector::from_ket("r").unwrap(),
            StateVector::from_ket("l").unwrap(),
        ],
    )
    .unwrap()
    .with_id("y")
}

/// Bell basis `[Φ+, Ψ+, Ψ-, Φ-]`.
pub fn bell_basis() -> MeasurementBasis {
    let h = FRAC_1_SQRT_2;
    let mk = |a: [f64; 4]| StateVector::new(2, a.iter().map(|&x| c(x, 0.0)).collect()).unwrap();
    MeasurementBasis::new(
        vec!["phi+".into(), "psi+".into(), "psi-".into(), "phi-".into()],
        vec![
            mk([h, 0.0, 0.0, h]),
            mk([0.0, h, h, 0.0]),
            mk([0.0, h, -h, 0.0]),
            mk([h, 0.0, 0.0, -h]),
        ],
    )
    .unwrap()
    .with_id("bell")
}

/// Twisted-type two-qubit basis `{|00>, |01>, |1α>, |1ᾱ>}` for 0 < α < π.
pub fn t_alpha_basis(alpha: f64) -> Result<MeasurementBasis> {
    if !(alpha > 0.0 && alpha < PI) {
        return Err(Error::Argument(format!(
            "alpha must lie strictly between 0 and pi, got {alpha}"
        )));
    }
    let (s, co) = ((alpha / 2.0).sin(), (alpha / 2.0).cos());
    let mk = |a: [f64; 4]| StateVector::new(2, a.iter().map(|&x| c(x, 0.0)).collect()).unwrap();
    Ok(MeasurementBasis::new(
        vec!["00".into(), "01".into(), "1a".into(), "1a'".into()],
        vec![
            mk([1.0, 0.0, 0.0, 0.0]),
            mk([0.0, 1.0, 0.0, 0.0]),
            mk([0.0, 0.0, co, s]),
            mk([0.0, 0.0, s, -co]),
        ],
    )?
    .with_id(format!("t_alpha:{alpha}")))
}

/// The twisted basis `{|00>, |01>, |1+>, |1->}` (α = π/2), with its
/// conventional labels.
pub fn twisted_basis() -> MeasurementBasis {
    let mk = |ket: &str| StateVector::from_ket(ket).unwrap();
    MeasurementBasis::new(
        vec!["00".into(), "01".into(), "1+".into(), "1-".into()],
        vec![mk("00"), mk("01"), mk("1+"), mk("1-")],
    )
    .unwrap()
    .with_id("twisted")
}

/// The four tetrahedron directions `(1,1,1)/√3, (1,-1,-1)/√3, (-1,1,-1)/√3,
/// (-1,-1,1)/√3`.
pub fn tetrahedron_vectors() -> [BlochVector; 4] {
    let s = 1.0 / 3.0_f64.sqrt();
    [
        BlochVector { x: s, y: s, z: s },
        BlochVector { x: s, y: -s, z: -s },
        BlochVector { x: -s, y: s, z: -s },
        BlochVector { x: -s, y: -s, z: s },
    ]
}

/// The elegant joint measurement basis: four iso-entangled two-qubit states
/// `Φ_j = c+ |m_j, -m_j> + c- |-m_j, m_j>` with `c± = (√3 ± 1) / (2√2)` and
/// `m_j` the tetrahedron directions.
pub fn ejm_basis() -> MeasurementBasis {
    let cp = (3.0_f64.sqrt() + 1.0) / (2.0 * 2.0_f64.sqrt());
    let cm = (3.0_f64.sqrt() - 1.0) / (2.0 * 2.0_f64.sqrt());
    let mut vectors = Vec::with_capacity(4);
    for m in tetrahedron_vectors() {
        let up = bloch_ket(&m).unwrap();
        let down = bloch_ket(&m.neg()).unwrap();
        let a = up.kron(&down).unwrap();
        let b = down.kron(&up).unwrap();
        let amps: Vec<Complex64> = (0..4)
            .map(|i| a.amplitude(i) * cp + b.amplitude(i) * cm)
            .collect();
        vectors.push(StateVector::new(2, amps).unwrap());
    }
    MeasurementBasis::new(
        vec!["0".into(), "1".into(), "2".into(), "3".into()],
        vectors,
    )
    .unwrap()
    .with_id("ejm")
}

/// GHZ-type basis `(|0,y> ± |1,ȳ>)/√2` on `n >= 2` qubits. Outcome `g`
/// encodes the sign bit `s = g >> (n-1)` and the tail bits `y`; labels are
/// the sign followed by the leading-zero bitstring, e.g. `+000`.
pub fn ghz_basis(n: usize) -> Result<MeasurementBasis> {
    if n < 2 {
        return Err(Error::Argument("GHZ basis needs at least 2 qubits".into()));
    }
    let dim = 1usize << n;
    let half = 1usize << (n - 1);
    let h = FRAC_1_SQRT_2;
    let mut labels = Vec::with_capacity(dim);
    let mut vectors = Vec::with_capacity(dim);
    for g in 0..dim {
        let s = g >> (n - 1);
        let y = g & (half - 1);
        let idx0 = y;
        let idx1 = (dim - 1) ^ y;
        let mut amps = vec![Complex64::ZERO; dim];
        amps[idx0] = c(h, 0.0);
        amps[idx1] = c(if s == 0 { h } else { -h }, 0.0);
        labels.push(format!(
            "{}{}",
            if s == 0 { '+' } else { '-' },
            bitstring(y, n)
        ));
        vectors.push(StateVector::new(n, amps)?);
    }
    Ok(MeasurementBasis::new(labels, vectors)?.with_id(format!("ghz:{n}")))
}

/// Looks a basis up by its string id: `computational[:n]`, `x`, `y`, `bell`,
/// `twisted`, `t_alpha:<alpha>`, `ejm`, `ghz:<n>`.
pub fn parse_basis_id(id: &str) -> Result<MeasurementBasis> {
    if id == "computational" {
        return computational_basis(2);
    }
    if let Some(rest) = id.strip_prefix("computational:") {
        let n: usize = rest
            .parse()
            .map_err(|_| Error::Argument(format!("bad qubit count in {id:?}")))?;
        return computational_basis(n);
    }
    if let Some(rest) = id.strip_prefix("t_alpha:") {
        let alpha: f64 = rest
            .parse()
            .map_err(|_| Error::Argument(format!("bad angle in {id:?}")))?;
        return t_alpha_basis(alpha);
    }
    if let Some(rest) = id.strip_prefix("ghz:") {
        let n: usize = rest
            .parse()
            .map_err(|_| Error::Argument(format!("bad qubit count in {id:?}")))?;
        return ghz_basis(n);
    }
    match id {
        "x" => Ok(x_basis()),
        "y" => Ok(y_basis()),
        "bell" => Ok(bell_basis()),
        "twisted" => Ok(twisted_basis()),
        "ejm" => Ok(ejm_basis()),
        _ => Err(Error::Argument(format!("unknown basis id {id:?}"))),
    }
}

fn bitstring(value: usize, width: usize) -> String {
    (0..width)
        .map(|i| {
            if (value >> (width - 1 - i)) & 1 == 1 {
                '1'
            } else {
                '0'
            }
        })
        .collect()
}
