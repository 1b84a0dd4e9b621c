//! Fixtures shared by the benchmarks.

use entwit_core::{build_state, ising_hamiltonian, DensityMatrix, LindbladModel, StateSpec};

/// Full-rank state on `3k` qubits: the twisted GHZ state with white noise.
pub fn noisy_state(k: usize) -> DensityMatrix {
    build_state(&StateSpec::NoisyTwistedGhz { k, p: 0.5 }).expect("valid spec")
}

/// The trapped-ion Ising model on `n` qubits with its default initial state.
pub fn ising(n: usize) -> (DensityMatrix, LindbladModel) {
    let h = ising_hamiltonian(n, 0.2, 1.0, 1.0).expect("valid model").matrix;
    let model = LindbladModel::ion_noise(h, n, 0.01).expect("valid channels");
    (build_state(&StateSpec::AsymInit { m: n / 2 }).expect("valid spec"), model)
}
