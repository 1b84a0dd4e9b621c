//! Entanglement witnesses for qubit registers from quantum Fisher
//! information and spin squeezing, evaluated on dense density matrices.

pub mod dynamics;
pub mod error;
pub mod fisher;
pub mod linalg;
pub mod models;
pub mod pauli;
pub mod spin;
pub mod state;
pub mod witness;

pub use dynamics::{
    lindblad_evolve, lindblad_evolve_with, unitary_evolve, uniform_grid, Channel, IntegratorConfig, IonRates,
    LindbladModel, Trajectory, UnitaryPropagator,
};
pub use error::{Error, Result, UndefinedReason};
pub use fisher::{qfi, FisherMatrixGlobal, FisherMatrixLocal, CovarianceMatrixGlobal, CovarianceMatrixLocal};
pub use linalg::{CMatrix, CVector};
pub use models::{build_state, ising_hamiltonian, IsingModel, StateSpec};
pub use pauli::Axis;
pub use spin::{weighted_spin_operator, LocalVectorField, SpinObservable};
pub use state::{BlochVector, DensityMatrix, StateVector};
pub use witness::{
    entanglement_depth, fisher_density, hierarchy_report, xi_global, xi_inhomogeneous, xi_local, Coefficient,
    CoefficientRecord, OptimizerConfig, Scope, WitnessContext, WitnessReport,
};
