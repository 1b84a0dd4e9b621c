//! Weighted collective spin operators `A(c) = 1/2 sum_i n_i . sigma_i`.

use nalgebra::{DVector, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, I};
use crate::pauli::{self, Axis};
use crate::state::{BlochVector, DensityMatrix};

/// One real 3-vector per qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LocalVectorField {
    vectors: Vec<Vector3<f64>>,
}

impl LocalVectorField {
    pub fn new(vectors: Vec<Vector3<f64>>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::InvalidParameter("vector field needs at least one site".into()));
        }
        if vectors.iter().any(|v| !v.iter().all(|x| x.is_finite())) {
            return Err(Error::InvalidParameter("vector field has non-finite entries".into()));
        }
        Ok(LocalVectorField { vectors })
    }

    pub fn uniform(num_sites: usize, n: Vector3<f64>) -> Self {
        LocalVectorField { vectors: vec![n; num_sites] }
    }

    pub fn zeros(num_sites: usize) -> Self {
        Self::uniform(num_sites, Vector3::zeros())
    }

    /// Reads `(n_0x, n_0y, n_0z, n_1x, ...)`.
    pub fn from_flat(flat: &DVector<f64>) -> Self {
        assert_eq!(flat.len() % 3, 0, "flat field length must be a multiple of 3");
        let vectors = flat.as_slice().chunks(3).map(Vector3::from_column_slice).collect();
        LocalVectorField { vectors }
    }

    pub fn to_flat(&self) -> DVector<f64> {
        DVector::from_iterator(3 * self.vectors.len(), self.vectors.iter().flat_map(|v| v.iter().copied()))
    }

    pub fn num_sites(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vector3<f64>] {
        &self.vectors
    }

    pub fn site(&self, i: usize) -> &Vector3<f64> {
        &self.vectors[i]
    }

    /// `|c|^2 = sum_i |n_i|^2`.
    pub fn norm_squared(&self) -> f64 {
        self.vectors.iter().map(|v| v.norm_squared()).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        LocalVectorField { vectors: self.vectors.iter().map(|v| v * s).collect() }
    }

    pub fn add(&self, other: &LocalVectorField) -> Result<Self> {
        check_sites(self, other)?;
        Ok(LocalVectorField { vectors: self.vectors.iter().zip(&other.vectors).map(|(a, b)| a + b).collect() })
    }

    pub fn is_locally_normalized(&self, tol: f64) -> bool {
        self.vectors.iter().all(|v| (v.norm() - 1.0).abs() <= tol)
    }
}

fn check_sites(a: &LocalVectorField, b: &LocalVectorField) -> Result<()> {
    if a.num_sites() != b.num_sites() {
        return Err(Error::DimensionMismatch { expected: a.num_sites(), found: b.num_sites() });
    }
    Ok(())
}

/// A Hermitian observable, optionally remembering the field it came from.
#[derive(Debug, Clone)]
pub struct SpinObservable {
    matrix: CMatrix,
    field: Option<LocalVectorField>,
}

impl SpinObservable {
    /// Wraps an arbitrary Hermitian matrix.
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        let herr = linalg::hermiticity_error(&matrix);
        if herr > 1e-12 {
            return Err(Error::NotHermitian(herr));
        }
        Ok(SpinObservable { matrix: linalg::hermitian_part(&matrix), field: None })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn field(&self) -> Option<&LocalVectorField> {
        self.field.as_ref()
    }
}

/// Dense matrix of `A(c)`, assembled site by site from Pauli actions.
pub fn weighted_spin_operator(field: &LocalVectorField) -> SpinObservable {
    let n = field.num_sites();
    let d = 1usize << n;
    let mut m = CMatrix::zeros(d, d);
    for (i, v) in field.vectors.iter().enumerate() {
        let mask = pauli::site_mask(n, i);
        for r in 0..d {
            let up = r & mask == 0;
            let sign = if up { 1.0 } else { -1.0 };
            m[(r, r)] += c(0.5 * sign * v.z);
            // <r ^ mask| (x sigma_x + y sigma_y) |r> = x + i y (up) or x - i y (down)
            m[(r ^ mask, r)] += Complex64::new(0.5 * v.x, 0.5 * sign * v.y);
        }
    }
    SpinObservable { matrix: m, field: Some(field.clone()) }
}

/// `J_n = n . J`, the homogeneous special case.
pub fn collective_spin(num_qubits: usize, n: Vector3<f64>) -> SpinObservable {
    weighted_spin_operator(&LocalVectorField::uniform(num_qubits, n))
}

/// Field `c3` with `[A(c1), A(c2)] = i A(c3)`: site-wise cross products.
pub fn commutator_field(c1: &LocalVectorField, c2: &LocalVectorField) -> Result<LocalVectorField> {
    check_sites(c1, c2)?;
    Ok(LocalVectorField { vectors: c1.vectors.iter().zip(&c2.vectors).map(|(a, b)| a.cross(b)).collect() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean_a: f64,
    pub var_a: f64,
    /// Symmetrized covariance `<{A, B}>/2 - <A><B>`.
    pub cov_ab: f64,
}

pub fn moments(rho: &DensityMatrix, a: &CMatrix, b: &CMatrix) -> Result<Moments> {
    let d = rho.dim();
    for op in [a, b] {
        if op.nrows() != d || op.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: op.nrows() });
        }
    }
    let r = rho.matrix();
    let ra = linalg::matmul(r, a);
    let mean_a = linalg::trace(&ra).re;
    let mean_b = linalg::trace_of_product(r, b).re;
    let a2 = linalg::trace_of_product(&ra, a).re;
    let ab = linalg::trace_of_product(&ra, b).re;
    Ok(Moments { mean_a, var_a: a2 - mean_a * mean_a, cov_ab: ab - mean_a * mean_b })
}

pub fn variance(rho: &DensityMatrix, a: &CMatrix) -> Result<f64> {
    Ok(moments(rho, a, a)?.var_a)
}

/// `<[h1, h2]>`, which is purely imaginary for Hermitian arguments.
pub fn commutator_expectation(rho: &DensityMatrix, h1: &CMatrix, h2: &CMatrix) -> Complex64 {
    let r1 = linalg::matmul(rho.matrix(), h1);
    let t = linalg::trace_of_product(&r1, h2);
    I * (2.0 * t.im)
}

/// `4 Var(A(c))` over the product of marginals: `|c|^2 - sum_i (n_i . m_i)^2`.
pub fn local_variance_sum(field: &LocalVectorField, marginals: &[BlochVector]) -> Result<f64> {
    if field.num_sites() != marginals.len() {
        return Err(Error::DimensionMismatch { expected: field.num_sites(), found: marginals.len() });
    }
    Ok(field.vectors.iter().zip(marginals).map(|(n, b)| n.norm_squared() - n.dot(&b.m).powi(2)).sum())
}

/// Orthonormal pair spanning the plane orthogonal to `m`.
///
/// With a `reference`, the first vector is the component of `reference`
/// orthogonal to `m`. Without one (or if it is parallel to `m`) the axis least
/// aligned with `m` is used. For `m = 0` the reference itself plays the role of
/// `m`, and with neither the raw axes `(e_x, e_y)` are returned.
pub fn orthonormal_complement(m: &Vector3<f64>, reference: Option<&Vector3<f64>>) -> (Vector3<f64>, Vector3<f64>) {
    const EPS: f64 = 1e-12;
    let axis = if m.norm() > EPS {
        m.normalize()
    } else {
        match reference {
            Some(r) if r.norm() > EPS => return orthonormal_complement(r, None),
            _ => return (Vector3::x(), Vector3::y()),
        }
    };
    let pick = |v: &Vector3<f64>| {
        let w = v - axis * axis.dot(v);
        (w.norm() > 1e-8).then(|| w.normalize())
    };
    let u = reference.and_then(pick).unwrap_or_else(|| {
        let k = (0..3).min_by(|&a, &b| axis[a].abs().total_cmp(&axis[b].abs())).unwrap();
        pick(&Vector3::ith(k, 1.0)).unwrap()
    });
    (u, axis.cross(&u))
}

/// `sigma^axis` on qubit `site` as a [`SpinObservable`] without provenance.
pub fn pauli_observable(num_qubits: usize, site: usize, axis: Axis) -> SpinObservable {
    SpinObservable { matrix: pauli::embed(num_qubits, site, axis), field: None }
}
