//! Quantum and classical Fisher information and the local/global Fisher and
//! covariance matrices.
//!
//! Local matrices are indexed by `3 * site + axis`.

use nalgebra::{DMatrix, Matrix3};
use serde::Serialize;

use crate::error::{Error, Result, UndefinedReason};
use crate::linalg::{self, CMatrix};
use crate::pauli::{self, Axis};
use crate::spin::{self, LocalVectorField};
use crate::state::{BlochVector, DensityMatrix};

/// Eigenvalue pairs with `p_k + p_l` below this are skipped.
pub const DEFAULT_PAIR_CUTOFF: f64 = 1e-12;

/// Pairs of kept eigenvalues `(p_k, p_l)` enter through `2 p_k p_l / (p_k + p_l)`.
fn harmonic_weights(values: &[f64], cutoff: f64) -> DMatrix<f64> {
    let s = values.len();
    DMatrix::from_fn(s, s, |k, l| {
        let sum = values[k] + values[l];
        if sum < cutoff {
            0.0
        } else {
            2.0 * values[k] * values[l] / sum
        }
    })
}

/// `F_Q[rho, h] = 2 sum_kl (p_k - p_l)^2 / (p_k + p_l) |<k|h|l>|^2`.
///
/// Only the support of `rho` is diagonalized; the kernel enters through
/// `sum_{l in kernel} |<k|h|l>|^2 = <k|h^2|k> - sum_{l in support} |<k|h|l>|^2`,
/// which turns the sum into `4 <h^2> - 4 sum_kl p_k p_l/(p_k+p_l) |h_kl|^2`.
pub fn qfi(rho: &DensityMatrix, h: &CMatrix, cutoff: f64) -> Result<f64> {
    let d = rho.dim();
    if h.nrows() != d || h.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: h.nrows() });
    }
    let sup = rho.support();
    let hv = linalg::matmul(h, &sup.vectors);
    let m = linalg::adjoint_matmul(&sup.vectors, &hv);
    let w = harmonic_weights(&sup.values, cutoff);
    let mut second = 0.0;
    for (k, p) in sup.values.iter().enumerate() {
        second += p * hv.column(k).norm_squared();
    }
    let mut cross = 0.0;
    for k in 0..m.nrows() {
        for l in 0..m.ncols() {
            cross += w[(k, l)] * m[(k, l)].norm_sqr();
        }
    }
    Ok((4.0 * (second - cross)).max(0.0))
}

/// Fisher information of the projective measurement `projectors` for the
/// phase imprinted by `h`, evaluated at `theta = 0` with the analytic
/// derivative `d p_m = Tr(-i [h, rho] P_m)`. Outcomes with `p_m < eps` are
/// skipped.
pub fn classical_fisher(rho: &DensityMatrix, h: &CMatrix, projectors: &[CMatrix], eps: f64) -> Result<f64> {
    check_projectors(rho.dim(), projectors)?;
    let r = rho.matrix();
    let hr = linalg::matmul(h, r);
    // -i [h, rho] = -i (h rho - (h rho)^dagger)
    let deriv = (&hr - hr.adjoint()) * -linalg::I;
    let mut f = 0.0;
    for p in projectors {
        let prob = linalg::trace_of_product(r, p).re;
        if prob < eps {
            continue;
        }
        let dp = linalg::trace_of_product(&deriv, p).re;
        f += dp * dp / prob;
    }
    Ok(f)
}

/// Central finite-difference variant of [`classical_fisher`], for cross-checks.
pub fn classical_fisher_finite_difference(
    rho: &DensityMatrix,
    h: &CMatrix,
    projectors: &[CMatrix],
    eps: f64,
    step: f64,
) -> Result<f64> {
    check_projectors(rho.dim(), projectors)?;
    let u_plus = linalg::unitary(h, step)?;
    let u_minus = linalg::unitary(h, -step)?;
    let plus = linalg::matmul(&linalg::matmul(&u_plus, rho.matrix()), &u_plus.adjoint());
    let minus = linalg::matmul(&linalg::matmul(&u_minus, rho.matrix()), &u_minus.adjoint());
    let mut f = 0.0;
    for p in projectors {
        let prob = linalg::trace_of_product(rho.matrix(), p).re;
        if prob < eps {
            continue;
        }
        let dp = (linalg::trace_of_product(&plus, p).re - linalg::trace_of_product(&minus, p).re) / (2.0 * step);
        f += dp * dp / prob;
    }
    Ok(f)
}

fn check_projectors(d: usize, projectors: &[CMatrix]) -> Result<()> {
    let mut sum = CMatrix::zeros(d, d);
    for p in projectors {
        if p.nrows() != d || p.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: p.nrows() });
        }
        sum += p;
    }
    let dev = (sum - CMatrix::identity(d, d)).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if dev > 1e-10 {
        return Err(Error::IncompleteMeasurement(dev));
    }
    Ok(())
}

/// Local quantum Fisher matrix `Q^L`, with `c^T Q^L c = F_Q[rho, A(c)]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FisherMatrixLocal {
    pub matrix: DMatrix<f64>,
}

/// Local covariance matrix `Gamma^L = Cov(sigma_i^a, sigma_j^b) / 4`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceMatrixLocal {
    pub matrix: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FisherMatrixGlobal {
    pub matrix: Matrix3<f64>,
}

/// `Cov(J_a, J_b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovarianceMatrixGlobal {
    pub matrix: Matrix3<f64>,
}

/// Sums the `(a, b)` entry over all site pairs.
pub(crate) fn contract(local: &DMatrix<f64>) -> Matrix3<f64> {
    let n = local.nrows() / 3;
    Matrix3::from_fn(|a, b| (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| local[(3 * i + a, 3 * j + b)]).sum())
}

pub(crate) fn quadratic_form(m: &DMatrix<f64>, field: &LocalVectorField) -> f64 {
    let v = field.to_flat();
    v.dot(&(m * &v))
}

impl FisherMatrixLocal {
    pub fn quadratic_form(&self, field: &LocalVectorField) -> f64 {
        quadratic_form(&self.matrix, field)
    }

    pub fn contract(&self) -> FisherMatrixGlobal {
        FisherMatrixGlobal { matrix: contract(&self.matrix) }
    }
}

impl CovarianceMatrixLocal {
    pub fn quadratic_form(&self, field: &LocalVectorField) -> f64 {
        quadratic_form(&self.matrix, field)
    }

    pub fn contract(&self) -> CovarianceMatrixGlobal {
        CovarianceMatrixGlobal { matrix: contract(&self.matrix) }
    }

    /// `Gamma^L` of the product of marginals: blocks `(I - m m^T) / 4`.
    pub fn of_product(marginals: &[BlochVector]) -> Self {
        let n = marginals.len();
        let mut matrix = DMatrix::zeros(3 * n, 3 * n);
        for (i, b) in marginals.iter().enumerate() {
            let block = (Matrix3::identity() - b.m * b.m.transpose()) / 4.0;
            matrix.fixed_view_mut::<3, 3>(3 * i, 3 * i).copy_from(&block);
        }
        CovarianceMatrixLocal { matrix }
    }
}

/// Raw second moments `Re Tr(rho sigma_a sigma_b)` and first moments.
fn pauli_moments(rho: &DensityMatrix) -> (DMatrix<f64>, Vec<f64>) {
    let n = rho.num_qubits();
    let r = rho.matrix();
    let means: Vec<f64> = (0..3 * n).map(|k| pauli::expectation(r, n, k / 3, Axis::from_index(k % 3))).collect();
    let mut second = DMatrix::zeros(3 * n, 3 * n);
    for i in 0..n {
        // Same-site products: sigma_a sigma_b = delta_ab + i eps_abc sigma_c.
        for a in 0..3 {
            second[(3 * i + a, 3 * i + a)] = 1.0;
        }
        for j in 0..i {
            for a in 0..3 {
                for b in 0..3 {
                    let v = pauli::pair_expectation(r, n, (i, Axis::from_index(a)), (j, Axis::from_index(b))).re;
                    second[(3 * i + a, 3 * j + b)] = v;
                    second[(3 * j + b, 3 * i + a)] = v;
                }
            }
        }
    }
    (second, means)
}

pub fn local_covariance_matrix(rho: &DensityMatrix) -> CovarianceMatrixLocal {
    let (second, means) = pauli_moments(rho);
    covariance_from_moments(&second, &means)
}

fn covariance_from_moments(second: &DMatrix<f64>, means: &[f64]) -> CovarianceMatrixLocal {
    let k = means.len();
    CovarianceMatrixLocal { matrix: DMatrix::from_fn(k, k, |a, b| (second[(a, b)] - means[a] * means[b]) / 4.0) }
}

pub fn global_covariance_matrix(rho: &DensityMatrix) -> CovarianceMatrixGlobal {
    local_covariance_matrix(rho).contract()
}

/// `Q^L_ab = Re Tr(rho s_a s_b) - sum_kl 2 p_k p_l / (p_k + p_l) Re(<k|s_a|l><l|s_b|k>)`.
pub fn local_fisher_matrix(rho: &DensityMatrix) -> FisherMatrixLocal {
    local_matrices(rho).0
}

pub fn global_fisher_matrix(rho: &DensityMatrix) -> FisherMatrixGlobal {
    local_fisher_matrix(rho).contract()
}

/// `Q^L` and `Gamma^L` sharing one spectral decomposition and one set of
/// Pauli moments.
pub fn local_matrices(rho: &DensityMatrix) -> (FisherMatrixLocal, CovarianceMatrixLocal) {
    let n = rho.num_qubits();
    let (second, means) = pauli_moments(rho);
    let cov = covariance_from_moments(&second, &means);
    let sup = rho.support();
    let s = sup.values.len();
    let w = harmonic_weights(&sup.values, DEFAULT_PAIR_CUTOFF);
    let sqrt_w = w.map(f64::sqrt);
    // Column k of z holds sqrt(w) .* (V^dagger sigma_k V), split into real and
    // imaginary parts, so that the correction term is z^T z.
    let mut z = DMatrix::<f64>::zeros(2 * s * s, 3 * n);
    let v_dag = linalg::Adjoint::new(&sup.vectors);
    for i in 0..n {
        for a in 0..3 {
            let sv = pauli::apply_left(&sup.vectors, n, i, Axis::from_index(a));
            let m = v_dag.mul(&sv);
            let mut col = z.column_mut(3 * i + a);
            for l in 0..s {
                for k in 0..s {
                    let v = m[(k, l)] * sqrt_w[(k, l)];
                    col[2 * (l * s + k)] = v.re;
                    col[2 * (l * s + k) + 1] = v.im;
                }
            }
        }
    }
    let correction = z.transpose() * &z;
    let mut q = second - correction;
    q = (&q + q.transpose()) * 0.5;
    (FisherMatrixLocal { matrix: q }, cov)
}

/// `|<[h1, h2]>|^2 / Var(h2)`, a lower bound on `F_Q[rho, h1]`.
pub fn commutator_lower_bound(rho: &DensityMatrix, h1: &CMatrix, h2: &CMatrix, eps: f64) -> Result<f64> {
    let var2 = spin::variance(rho, h2)?;
    if var2 <= eps {
        return Err(Error::Undefined(UndefinedReason::VanishingVariance));
    }
    Ok(spin::commutator_expectation(rho, h1, h2).norm_sqr() / var2)
}

/// Inhomogeneous shot-noise limit `1 / |c|^2`.
pub fn shot_noise_bound(field: &LocalVectorField) -> Result<f64> {
    let n2 = field.norm_squared();
    if n2 <= 0.0 {
        return Err(Error::Undefined(UndefinedReason::ZeroField));
    }
    Ok(1.0 / n2)
}
