//! Pure and mixed N-qubit states.

use std::sync::OnceLock;

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector};
use crate::pauli::{self, Axis};

pub const DEFAULT_QUBIT_CAP: usize = 12;
pub const DEFAULT_EIGEN_CUTOFF: f64 = 1e-12;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const NEGATIVITY_TOL: f64 = 1e-10;
/// Eigenvalues at or below this are dropped from the cached support.
const SUPPORT_FLOOR: f64 = 1e-14;

fn qubits_for_dim(d: usize) -> Result<usize> {
    if d == 0 || !d.is_power_of_two() {
        return Err(Error::NotQubitDimension(d));
    }
    Ok(d.trailing_zeros() as usize)
}

/// A normalized pure state. Basis index bit `N-1-i` belongs to qubit `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: CVector,
}

impl StateVector {
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let num_qubits = qubits_for_dim(amplitudes.len())?;
        let norm2 = amplitudes.norm_squared();
        if (norm2 - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized(norm2));
        }
        Ok(StateVector { num_qubits, amplitudes })
    }

    /// Rescales to unit norm.
    pub fn normalized(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized(norm * norm));
        }
        Self::new(amplitudes / c(norm))
    }

    pub fn basis(num_qubits: usize, index: usize) -> Self {
        let mut amplitudes = CVector::zeros(1 << num_qubits);
        amplitudes[index] = c(1.0);
        StateVector { num_qubits, amplitudes }
    }

    /// Single-qubit eigenstate of `sigma^axis` with eigenvalue +1 (`up`) or -1.
    pub fn spin(axis: Axis, up: bool) -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = if up { 1.0 } else { -1.0 };
        let amps = match axis {
            Axis::Z if up => [c(1.0), c(0.0)],
            Axis::Z => [c(0.0), c(1.0)],
            Axis::X => [c(h), c(s * h)],
            Axis::Y => [c(h), Complex64::new(0.0, s * h)],
        };
        StateVector { num_qubits: 1, amplitudes: CVector::from_column_slice(&amps) }
    }

    /// Single-qubit state whose Bloch vector is the unit vector along `dir`.
    pub fn coherent(dir: &Vector3<f64>) -> Result<Self> {
        let len = dir.norm();
        if len == 0.0 {
            return Err(Error::InvalidParameter("zero direction".into()));
        }
        let u = dir / len;
        let theta = u.z.clamp(-1.0, 1.0).acos();
        let phi = u.y.atan2(u.x);
        let amps = [
            c((theta / 2.0).cos()),
            Complex64::from_polar((theta / 2.0).sin(), phi),
        ];
        Ok(StateVector { num_qubits: 1, amplitudes: CVector::from_column_slice(&amps) })
    }

    pub fn tensor(&self, other: &StateVector) -> StateVector {
        StateVector {
            num_qubits: self.num_qubits + other.num_qubits,
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
        }
    }

    pub fn product(factors: &[StateVector]) -> Result<StateVector> {
        let (first, rest) = factors
            .split_first()
            .ok_or_else(|| Error::InvalidParameter("empty product".into()))?;
        Ok(rest.iter().fold(first.clone(), |acc, f| acc.tensor(f)))
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }
}

/// Eigenvalues (descending) and matching eigenvectors.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<StateVector>,
    /// `true` where the eigenvalue is below `cutoff * max eigenvalue`.
    pub negligible: Vec<bool>,
}

impl SpectralDecomposition {
    pub fn recompose(&self) -> CMatrix {
        let d = self.eigenvectors.first().map_or(0, |v| v.amplitudes.len());
        let mut m = CMatrix::zeros(d, d);
        for (p, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            let a = &v.amplitudes;
            m += a * a.adjoint() * c(*p);
        }
        m
    }
}

/// Clamped eigenpairs on the support of a state. `vectors` has one column per
/// retained eigenvalue.
#[derive(Debug, Clone)]
pub(crate) struct Support {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub m: Vector3<f64>,
}

impl BlochVector {
    pub fn norm(&self) -> f64 {
        self.m.norm()
    }

    /// `(I + m.sigma) / 2`.
    pub fn to_density(&self) -> DensityMatrix {
        let (x, y, z) = (self.m.x, self.m.y, self.m.z);
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                c((1.0 + z) / 2.0),
                Complex64::new(x / 2.0, -y / 2.0),
                Complex64::new(x / 2.0, y / 2.0),
                c((1.0 - z) / 2.0),
            ],
        );
        DensityMatrix::from_matrix_unchecked(m)
    }
}

/// A density matrix on `N` qubits. The spectral decomposition is computed on
/// first use and cached.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    num_qubits: usize,
    matrix: CMatrix,
    support: OnceLock<Support>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), found: matrix.ncols() });
        }
        let num_qubits = qubits_for_dim(matrix.nrows())?;
        let herr = linalg::hermiticity_error(&matrix);
        if herr > HERMITIAN_TOL {
            return Err(Error::NotHermitian(herr));
        }
        let matrix = linalg::hermitian_part(&matrix);
        let tr = linalg::trace(&matrix).re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidTrace(tr));
        }
        let rho = DensityMatrix { num_qubits, matrix, support: OnceLock::new() };
        if linalg::fails_shifted_cholesky(&rho.matrix, NEGATIVITY_TOL) {
            let (vals, _) = linalg::hermitian_eigen(&rho.matrix)?;
            return Err(Error::NotPositive(*vals.last().unwrap()));
        }
        Ok(rho)
    }

    /// Like [`DensityMatrix::new`] but rescales the trace to one first.
    pub fn new_normalizing(matrix: CMatrix) -> Result<Self> {
        let tr = linalg::trace(&matrix).re;
        if !(tr > 0.0) {
            return Err(Error::InvalidTrace(tr));
        }
        Self::new(matrix / c(tr))
    }

    /// For matrices that are valid by construction.
    pub(crate) fn from_matrix_unchecked(matrix: CMatrix) -> Self {
        let num_qubits = qubits_for_dim(matrix.nrows()).expect("qubit dimension");
        DensityMatrix { num_qubits, matrix, support: OnceLock::new() }
    }

    pub(crate) fn from_parts(matrix: CMatrix, support: Support) -> Self {
        let rho = Self::from_matrix_unchecked(matrix);
        let _ = rho.support.set(support);
        rho
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        let a = &psi.amplitudes;
        let matrix = a * a.adjoint();
        let support = Support { values: vec![1.0], vectors: CMatrix::from_column_slice(a.len(), 1, a.as_slice()) };
        Self::from_parts(matrix, support)
    }

    pub fn maximally_mixed(num_qubits: usize) -> Self {
        let d = 1usize << num_qubits;
        Self::from_matrix_unchecked(CMatrix::from_diagonal_element(d, d, c(1.0 / d as f64)))
    }

    /// Convex combination `sum_k w_k rho_k`; weights must be nonnegative and
    /// sum to one.
    pub fn mixture(terms: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let first = terms.first().ok_or_else(|| Error::InvalidParameter("empty mixture".into()))?.1;
        let total: f64 = terms.iter().map(|t| t.0).sum();
        if terms.iter().any(|t| t.0 < 0.0) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("mixture weights must be a probability vector (sum {total})")));
        }
        let mut m = CMatrix::zeros(first.dim(), first.dim());
        for (w, rho) in terms {
            if rho.num_qubits != first.num_qubits {
                return Err(Error::DimensionMismatch { expected: first.num_qubits, found: rho.num_qubits });
            }
            m += &rho.matrix * c(*w);
        }
        Ok(Self::from_matrix_unchecked(m))
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.matrix).re
    }

    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub(crate) fn support(&self) -> &Support {
        self.support.get_or_init(|| {
            let (vals, vecs) =
                linalg::hermitian_eigen(&self.matrix).expect("Hermitian eigensolver diverged");
            clamp_support(&vals, &vecs)
        })
    }

    pub(crate) fn cached_support(&self) -> Option<&Support> {
        self.support.get()
    }

    /// Full eigen-decomposition. Eigenvalues in `[-1e-10, 0)` are clamped to
    /// zero and the rest renormalized; larger negativity is an error.
    pub fn spectral_decomposition(&self, cutoff: f64) -> Result<SpectralDecomposition> {
        if !(cutoff >= 0.0) {
            return Err(Error::InvalidParameter(format!("cutoff {cutoff} must be nonnegative")));
        }
        let (mut vals, vecs) = linalg::hermitian_eigen(&self.matrix)?;
        let min = *vals.last().unwrap();
        if min < -NEGATIVITY_TOL {
            return Err(Error::NotPositive(min));
        }
        vals.iter_mut().for_each(|v| *v = v.max(0.0));
        let total: f64 = vals.iter().sum();
        vals.iter_mut().for_each(|v| *v /= total);
        let top = vals[0];
        let negligible = vals.iter().map(|&v| v < cutoff * top).collect();
        let eigenvectors = (0..vecs.ncols())
            .map(|k| StateVector { num_qubits: self.num_qubits, amplitudes: vecs.column(k).into_owned() })
            .collect();
        Ok(SpectralDecomposition { eigenvalues: vals, eigenvectors, negligible })
    }

    /// Smallest eigenvalue of the stored matrix (no clamping).
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let (vals, _) = linalg::hermitian_eigen(&self.matrix)?;
        Ok(*vals.last().unwrap())
    }

    pub fn expectation(&self, op: &CMatrix) -> Result<f64> {
        if op.nrows() != self.dim() || op.ncols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: op.nrows() });
        }
        Ok(linalg::trace_of_product(&self.matrix, op).re)
    }

    /// Bloch vector of every single-qubit marginal, read off Pauli
    /// expectations without forming the marginals.
    pub fn bloch_vectors(&self) -> Vec<BlochVector> {
        (0..self.num_qubits)
            .map(|i| BlochVector {
                m: Vector3::from_fn(|a, _| pauli::expectation(&self.matrix, self.num_qubits, i, Axis::from_index(a))),
            })
            .collect()
    }

    /// Applies `rho -> U rho U^dagger`, carrying the cached support along.
    pub(crate) fn conjugate_by(&self, u: &CMatrix) -> DensityMatrix {
        let matrix = linalg::hermitian_part(&linalg::matmul(&linalg::matmul(u, &self.matrix), &u.adjoint()));
        match self.cached_support() {
            Some(s) => Self::from_parts(
                matrix,
                Support { values: s.values.clone(), vectors: linalg::matmul(u, &s.vectors) },
            ),
            None => Self::from_matrix_unchecked(matrix),
        }
    }
}

fn clamp_support(vals: &[f64], vecs: &CMatrix) -> Support {
    let clamped: Vec<f64> = vals.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    let keep: Vec<usize> = (0..clamped.len()).filter(|&k| clamped[k] / total > SUPPORT_FLOOR).collect();
    let values = keep.iter().map(|&k| clamped[k] / total).collect();
    let vectors = CMatrix::from_fn(vecs.nrows(), keep.len(), |r, j| vecs[(r, keep[j])]);
    Support { values, vectors }
}

pub fn tensor_product(a: &DensityMatrix, b: &DensityMatrix) -> Result<DensityMatrix> {
    tensor_product_with_cap(a, b, DEFAULT_QUBIT_CAP)
}

/// Kronecker product with `a`'s qubits most significant.
pub fn tensor_product_with_cap(a: &DensityMatrix, b: &DensityMatrix, cap: usize) -> Result<DensityMatrix> {
    let n = a.num_qubits + b.num_qubits;
    if n > cap {
        return Err(Error::QubitCap { requested: n, cap });
    }
    let matrix = a.matrix.kronecker(&b.matrix);
    Ok(match (a.cached_support(), b.cached_support()) {
        (Some(sa), Some(sb)) => {
            let mut values = Vec::with_capacity(sa.values.len() * sb.values.len());
            for pa in &sa.values {
                for pb in &sb.values {
                    values.push(pa * pb);
                }
            }
            let vectors = sa.vectors.kronecker(&sb.vectors);
            DensityMatrix::from_parts(matrix, Support { values, vectors })
        }
        _ => DensityMatrix::from_matrix_unchecked(matrix),
    })
}

fn scatter(bits: usize, positions: &[usize], n: usize) -> usize {
    let k = positions.len();
    positions
        .iter()
        .enumerate()
        .filter(|(j, _)| bits >> (k - 1 - j) & 1 == 1)
        .fold(0, |acc, (_, &site)| acc | pauli::site_mask(n, site))
}

/// Reduced state on the qubits in `keep` (0-based, strictly increasing).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let n = rho.num_qubits;
    if keep.is_empty() {
        return Err(Error::InvalidIndexSet("keep set is empty".into()));
    }
    if keep.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidIndexSet(format!("{keep:?} is not strictly increasing")));
    }
    if keep[keep.len() - 1] >= n {
        return Err(Error::InvalidIndexSet(format!("{keep:?} out of range for {n} qubits")));
    }
    let traced: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
    let kept_idx: Vec<usize> = (0..1usize << keep.len()).map(|a| scatter(a, keep, n)).collect();
    let traced_idx: Vec<usize> = (0..1usize << traced.len()).map(|t| scatter(t, &traced, n)).collect();
    let dk = kept_idx.len();
    let m = &rho.matrix;
    let out = CMatrix::from_fn(dk, dk, |a, b| {
        traced_idx.iter().map(|&t| m[(kept_idx[a] | t, kept_idx[b] | t)]).sum()
    });
    Ok(DensityMatrix::from_matrix_unchecked(linalg::hermitian_part(&out)))
}

/// `rho_1 (x) ... (x) rho_N` built from the single-qubit marginals.
pub fn product_of_marginals(rho: &DensityMatrix) -> Result<DensityMatrix> {
    let marginals = rho.bloch_vectors();
    let mut acc = marginals[0].to_density();
    for b in &marginals[1..] {
        acc = tensor_product(&acc, &b.to_density())?;
    }
    Ok(acc)
}

pub fn bloch_vector(rho1: &DensityMatrix) -> Result<BlochVector> {
    if rho1.num_qubits != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: rho1.num_qubits });
    }
    Ok(rho1.bloch_vectors()[0])
}

/// Squared Uhlmann fidelity `(Tr sqrt(sqrt(a) b sqrt(a)))^2`.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    let sa = a.support();
    if sa.values.len() == 1 {
        let v = sa.vectors.column(0);
        let f = (v.adjoint() * &b.matrix * v)[(0, 0)].re;
        return Ok(f.clamp(0.0, 1.0));
    }
    // Work in the support of a: sqrt(a) = V sqrt(P) V^dagger.
    let sqrt_p: Vec<f64> = sa.values.iter().map(|p| p.sqrt()).collect();
    let bv = linalg::matmul(&b.matrix, &sa.vectors);
    let mut m = linalg::adjoint_matmul(&sa.vectors, &bv);
    let s = m.nrows();
    for i in 0..s {
        for j in 0..s {
            m[(i, j)] *= sqrt_p[i] * sqrt_p[j];
        }
    }
    let (vals, _) = linalg::hermitian_eigen(&linalg::hermitian_part(&m))?;
    let root: f64 = vals.iter().map(|v| v.max(0.0).sqrt()).sum();
    Ok((root * root).clamp(0.0, 1.0))
}
