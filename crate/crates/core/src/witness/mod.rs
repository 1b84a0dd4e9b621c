//! Entanglement coefficients built from the quantum Fisher information and
//! from spin squeezing, together with their optimizers and the consistency
//! checks between them.
//!
//! Every coefficient is normalized so that values above one certify
//! entanglement. Squeezing coefficients are reported as `xi^-2`.

mod density;
mod depth;
pub(crate) mod optimize;
mod report;
mod squeezing;

use std::sync::OnceLock;

use nalgebra::{DMatrix, Matrix3, Vector3};

use crate::error::Result;
use crate::fisher;
use crate::state::{BlochVector, DensityMatrix};

pub use density::{fisher_density, fisher_density_at, fisher_density_constrained, ConstrainedFisher, FisherDensity, Scope};
pub use depth::{entanglement_depth, producible_bound};
pub use optimize::OptimizerConfig;
pub use report::{hierarchy_report, CheckKind, CheckStatus, Coefficient, CoefficientRecord, HierarchyCheck, WitnessReport};
pub use squeezing::{squeezing_at, xi_global, xi_inhomogeneous, xi_local, GlobalSqueezing, Squeezing};

/// A coefficient certifies entanglement when it exceeds `1 + ENTANGLED_TOL`.
pub const ENTANGLED_TOL: f64 = 1e-8;
/// A difference-matrix eigenvalue certifies entanglement above this.
pub const DIFFERENCE_TOL: f64 = 1e-10;
/// Bloch vectors (and the collective mean spin) shorter than this count as zero.
pub const MEAN_SPIN_EPS: f64 = 1e-10;
/// Squared squeezing coefficients below this are reported as vanishing variance.
const XI2_FLOOR: f64 = 1e-14;

/// Everything the coefficients need from one state, computed once.
///
/// Local matrices are `3N x 3N`, indexed by `3 * site + axis`. `Q` is scaled so
/// that `c^T Q c = F_Q[rho, A(c)]`, and the local-variance bounds are
/// `D_local = blockdiag(I - m_i m_i^T)` and `D_global = N I - sum_i m_i m_i^T`,
/// so that `c^T D c = 4 Var(A(c))` over the product of marginals.
#[derive(Debug)]
pub struct WitnessContext {
    num_qubits: usize,
    config: OptimizerConfig,
    q_local: DMatrix<f64>,
    gamma_local: DMatrix<f64>,
    q_global: Matrix3<f64>,
    gamma_global: Matrix3<f64>,
    marginals: Vec<BlochVector>,
    d_local: DMatrix<f64>,
    d_global: Matrix3<f64>,
    mean_spin: Vector3<f64>,
    min_variance: OnceLock<std::result::Result<squeezing::MinVariance, crate::error::UndefinedReason>>,
}

impl WitnessContext {
    pub fn new(rho: &DensityMatrix, config: &OptimizerConfig) -> Result<Self> {
        config.validate()?;
        let n = rho.num_qubits();
        let (q, gamma) = fisher::local_matrices(rho);
        let marginals = rho.bloch_vectors();
        let d_local = fisher::CovarianceMatrixLocal::of_product(&marginals).matrix * 4.0;
        let mut d_global = Matrix3::identity() * n as f64;
        let mut mean_spin = Vector3::zeros();
        for b in &marginals {
            d_global -= b.m * b.m.transpose();
            mean_spin += b.m * 0.5;
        }
        Ok(WitnessContext {
            num_qubits: n,
            config: config.clone(),
            q_global: fisher::contract(&q.matrix),
            gamma_global: fisher::contract(&gamma.matrix),
            q_local: q.matrix,
            gamma_local: gamma.matrix,
            marginals,
            d_local,
            d_global,
            mean_spin,
            min_variance: OnceLock::new(),
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    pub fn fisher_local(&self) -> &DMatrix<f64> {
        &self.q_local
    }

    pub fn covariance_local(&self) -> &DMatrix<f64> {
        &self.gamma_local
    }

    pub fn fisher_global(&self) -> &Matrix3<f64> {
        &self.q_global
    }

    pub fn covariance_global(&self) -> &Matrix3<f64> {
        &self.gamma_global
    }

    pub fn marginals(&self) -> &[BlochVector] {
        &self.marginals
    }

    /// `<J> = 1/2 sum_i m_i`.
    pub fn mean_spin(&self) -> &Vector3<f64> {
        &self.mean_spin
    }
}

fn to_dmatrix(m: &Matrix3<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(3, 3, |i, j| m[(i, j)])
}
