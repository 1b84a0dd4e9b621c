//! Benchmark states and the long-range transverse-field Ising Hamiltonian.
//!
//! Spin eigenstates follow `|up x> = (|0> + |1>)/sqrt 2` and
//! `|up y> = (|0> + i|1>)/sqrt 2`, with qubit 0 leftmost in every product.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, CVector};
use crate::pauli::{self, Axis};
use crate::state::{tensor_product_with_cap, DensityMatrix, StateVector, DEFAULT_QUBIT_CAP};

/// A named benchmark state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    /// `(|0...0> + |1...1>)/sqrt 2` on `n` qubits.
    Ghz { n: usize },
    /// GHZ with its three blocks of `k` qubits written in the x, y and z bases.
    TwistedGhz { k: usize },
    /// Twisted W state on `3k` qubits, normalized.
    TwistedW { k: usize },
    /// `GHZ_k (x) I / 2^(n-k)`.
    RhoNk { n: usize, k: usize },
    /// `(|GHZ^t><GHZ^t| + p I / 2^(3k)) / (1 + p)` for any `p >= 0`.
    NoisyTwistedGhz { k: usize, p: f64 },
    /// `p |GHZ^t><GHZ^t| + (1 - p) |W^t><W^t|` with `p` in `[0, 1]`.
    TwistedMixture { k: usize, p: f64 },
    /// Every qubit along `direction`.
    SpinCoherent { n: usize, direction: [f64; 3] },
    /// `|down y>^m (x) |down x>^m`.
    AsymInit { m: usize },
}

impl StateSpec {
    pub fn num_qubits(&self) -> usize {
        match *self {
            StateSpec::Ghz { n } | StateSpec::RhoNk { n, .. } | StateSpec::SpinCoherent { n, .. } => n,
            StateSpec::TwistedGhz { k }
            | StateSpec::TwistedW { k }
            | StateSpec::NoisyTwistedGhz { k, .. }
            | StateSpec::TwistedMixture { k, .. } => 3 * k,
            StateSpec::AsymInit { m } => 2 * m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            StateSpec::Ghz { n } | StateSpec::SpinCoherent { n, .. } if n == 0 => bad("n must be at least 1".into()),
            StateSpec::RhoNk { n, k } if k == 0 || k > n => bad(format!("rho_nk needs 1 <= k <= n, got n = {n}, k = {k}")),
            StateSpec::TwistedGhz { k } | StateSpec::TwistedW { k } if k == 0 => bad("k must be at least 1".into()),
            StateSpec::NoisyTwistedGhz { k, p } if k == 0 || !(p >= 0.0) || !p.is_finite() => {
                bad(format!("noisy twisted GHZ needs k >= 1 and finite p >= 0, got k = {k}, p = {p}"))
            }
            StateSpec::TwistedMixture { k, p } if k == 0 || !(0.0..=1.0).contains(&p) => {
                bad(format!("twisted mixture needs k >= 1 and p in [0, 1], got k = {k}, p = {p}"))
            }
            StateSpec::SpinCoherent { direction, .. }
                if !direction.iter().all(|x| x.is_finite()) || Vector3::from(direction).norm() == 0.0 =>
            {
                bad("spin-coherent direction must be a finite nonzero vector".into())
            }
            StateSpec::AsymInit { m: 0 } => bad("m must be at least 1".into()),
            _ => Ok(()),
        }
    }
}

/// Builds the state with the default qubit cap.
pub fn build_state(spec: &StateSpec) -> Result<DensityMatrix> {
    build_state_with_cap(spec, DEFAULT_QUBIT_CAP)
}

pub fn build_state_with_cap(spec: &StateSpec, cap: usize) -> Result<DensityMatrix> {
    spec.validate()?;
    let n = spec.num_qubits();
    if n > cap {
        return Err(Error::QubitCap { requested: n, cap });
    }
    Ok(match *spec {
        StateSpec::Ghz { n } => DensityMatrix::from_pure(&ghz(n)),
        StateSpec::TwistedGhz { k } => DensityMatrix::from_pure(&twisted_ghz(k)),
        StateSpec::TwistedW { k } => DensityMatrix::from_pure(&twisted_w(k)?),
        StateSpec::RhoNk { n, k } => {
            let g = DensityMatrix::from_pure(&ghz(k));
            if n == k {
                g
            } else {
                tensor_product_with_cap(&g, &DensityMatrix::maximally_mixed(n - k), cap)?
            }
        }
        StateSpec::NoisyTwistedGhz { k, p } => {
            let pure = DensityMatrix::from_pure(&twisted_ghz(k));
            let noise = DensityMatrix::maximally_mixed(3 * k);
            DensityMatrix::mixture(&[(1.0 / (1.0 + p), &pure), (p / (1.0 + p), &noise)])?
        }
        StateSpec::TwistedMixture { k, p } => {
            let g = DensityMatrix::from_pure(&twisted_ghz(k));
            let w = DensityMatrix::from_pure(&twisted_w(k)?);
            DensityMatrix::mixture(&[(p, &g), (1.0 - p, &w)])?
        }
        StateSpec::SpinCoherent { n, direction } => {
            let one = StateVector::coherent(&Vector3::from(direction))?;
            DensityMatrix::from_pure(&StateVector::product(&vec![one; n])?)
        }
        StateSpec::AsymInit { m } => DensityMatrix::from_pure(&asym_init(m)),
    })
}

pub fn ghz(n: usize) -> StateVector {
    let mut a = CVector::zeros(1 << n);
    a[0] = c(std::f64::consts::FRAC_1_SQRT_2);
    a[(1 << n) - 1] = c(std::f64::consts::FRAC_1_SQRT_2);
    StateVector::new(a).expect("normalized")
}

/// `k` copies of each of the three factors, in order.
fn blocks(k: usize, factors: [StateVector; 3]) -> StateVector {
    let parts: Vec<StateVector> = factors.iter().flat_map(|f| std::iter::repeat(f.clone()).take(k)).collect();
    StateVector::product(&parts).expect("nonempty")
}

pub fn twisted_ghz(k: usize) -> StateVector {
    let up = blocks(k, Axis::ALL.map(|a| StateVector::spin(a, true)));
    let down = blocks(k, Axis::ALL.map(|a| StateVector::spin(a, false)));
    StateVector::normalized(up.amplitudes() + down.amplitudes()).expect("orthogonal branches")
}

/// The three branches are not orthogonal, so the normalization is computed.
pub fn twisted_w(k: usize) -> Result<StateVector> {
    let branch = |axis: Axis, excited: usize| {
        blocks(k, [0, 1, 2].map(|b| StateVector::spin(axis, b == excited)))
    };
    let sum = branch(Axis::X, 0).amplitudes() + branch(Axis::Y, 1).amplitudes() + branch(Axis::Z, 2).amplitudes();
    StateVector::normalized(sum)
}

pub fn asym_init(m: usize) -> StateVector {
    let mut parts = vec![StateVector::spin(Axis::Y, false); m];
    parts.extend(std::iter::repeat(StateVector::spin(Axis::X, false)).take(m));
    StateVector::product(&parts).expect("nonempty")
}

/// Twisted field `c^t`: `e_x` on the first `k` sites, `e_y` on the next `k`,
/// `e_z` on the last `k`.
pub fn twisted_field(k: usize) -> crate::spin::LocalVectorField {
    let v = (0..3 * k).map(|i| Vector3::ith(i / k, 1.0)).collect();
    crate::spin::LocalVectorField::new(v).expect("finite")
}

/// `H = (1/N) sum_{i>j} J0 / |i-j|^alpha sz_i sz_j + B sum_i sx_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsingModel {
    pub num_qubits: usize,
    pub alpha: f64,
    pub field: f64,
    pub coupling: f64,
    #[serde(skip)]
    pub matrix: CMatrix,
}

impl IsingModel {
    /// `J_ij` for 0-based sites.
    pub fn coupling_between(&self, i: usize, j: usize) -> f64 {
        coupling(self.coupling, self.alpha, i, j)
    }

    /// Diagonal of the `sz sz` part, indexed by basis state.
    pub fn zz_diagonal(&self) -> Vec<f64> {
        zz_diagonal(self.num_qubits, self.coupling, self.alpha)
    }
}

fn coupling(j0: f64, alpha: f64, i: usize, j: usize) -> f64 {
    j0 / (i.abs_diff(j) as f64).powf(alpha)
}

fn zz_diagonal(n: usize, j0: f64, alpha: f64) -> Vec<f64> {
    let d = 1usize << n;
    (0..d)
        .map(|r| {
            let mut e = 0.0;
            for i in 0..n {
                for j in 0..i {
                    let si = if r & pauli::site_mask(n, i) == 0 { 1.0 } else { -1.0 };
                    let sj = if r & pauli::site_mask(n, j) == 0 { 1.0 } else { -1.0 };
                    e += coupling(j0, alpha, i, j) * si * sj;
                }
            }
            e / n as f64
        })
        .collect()
}

pub fn ising_hamiltonian(num_qubits: usize, alpha: f64, field: f64, coupling: f64) -> Result<IsingModel> {
    ising_hamiltonian_with_cap(num_qubits, alpha, field, coupling, DEFAULT_QUBIT_CAP)
}

pub fn ising_hamiltonian_with_cap(num_qubits: usize, alpha: f64, field: f64, coupling: f64, cap: usize) -> Result<IsingModel> {
    if num_qubits < 2 {
        return Err(Error::InvalidParameter(format!("Ising chain needs at least 2 qubits, got {num_qubits}")));
    }
    if num_qubits > cap {
        return Err(Error::QubitCap { requested: num_qubits, cap });
    }
    if !(alpha >= 0.0) || !alpha.is_finite() || !field.is_finite() || !coupling.is_finite() {
        return Err(Error::InvalidParameter("Ising parameters must be finite with alpha >= 0".into()));
    }
    let n = num_qubits;
    let d = 1usize << n;
    let diag = zz_diagonal(n, coupling, alpha);
    let mut matrix = CMatrix::zeros(d, d);
    for r in 0..d {
        matrix[(r, r)] = c(diag[r]);
        for i in 0..n {
            matrix[(r ^ pauli::site_mask(n, i), r)] += c(field);
        }
    }
    Ok(IsingModel { num_qubits: n, alpha, field, coupling, matrix })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fisher::{global_fisher_matrix, qfi, DEFAULT_PAIR_CUTOFF};
    use crate::linalg;
    use crate::spin::weighted_spin_operator;

    fn kron_all(ops: &[CMatrix]) -> CMatrix {
        ops.iter().skip(1).fold(ops[0].clone(), |acc, o| acc.kronecker(o))
    }

    fn small(axis: Axis) -> CMatrix {
        pauli::embed(1, 0, axis)
    }

    #[test]
    fn rho_nk_is_normalized_product() {
        let rho = build_state(&StateSpec::RhoNk { n: 4, k: 2 }).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-14);
        let g = DensityMatrix::from_pure(&ghz(2));
        let expect = g.matrix().kronecker(&(CMatrix::identity(4, 4) * c(0.25)));
        assert!((rho.matrix() - expect).norm() < 1e-14);
    }

    #[test]
    fn twisted_ghz_single_block() {
        let psi = twisted_ghz(1);
        let up = StateVector::product(&[
            StateVector::spin(Axis::X, true),
            StateVector::spin(Axis::Y, true),
            StateVector::spin(Axis::Z, true),
        ])
        .unwrap();
        assert!((psi.amplitudes().norm() - 1.0).abs() < 1e-14);
        assert!((psi.inner(&up).norm_sqr() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn twisted_ghz_is_maximally_sensitive_along_twisted_field() {
        for k in 1..=2 {
            let rho = build_state(&StateSpec::TwistedGhz { k }).unwrap();
            let a = weighted_spin_operator(&twisted_field(k));
            let f = qfi(&rho, a.matrix(), DEFAULT_PAIR_CUTOFF).unwrap();
            assert!((f - (9 * k * k) as f64).abs() < 1e-9, "k = {k}: {f}");
            let q = global_fisher_matrix(&rho).matrix;
            let kk = k as f64;
            for a in 0..3 {
                for b in 0..3 {
                    let want = if a == b { kk * (kk + 2.0) } else { kk * kk };
                    assert!((q[(a, b)] - want).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn twisted_w_normalized() {
        let w = twisted_w(1).unwrap();
        assert!((w.amplitudes().norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn noisy_limits_and_linearity() {
        let pure = build_state(&StateSpec::TwistedGhz { k: 1 }).unwrap();
        let zero = build_state(&StateSpec::NoisyTwistedGhz { k: 1, p: 0.0 }).unwrap();
        assert!((pure.matrix() - zero.matrix()).norm() < 1e-14);
        let p = 0.37;
        let rho = build_state(&StateSpec::NoisyTwistedGhz { k: 1, p }).unwrap();
        let explicit = (pure.matrix() + CMatrix::identity(8, 8) * c(p / 8.0)) / c(1.0 + p);
        assert!((rho.matrix() - explicit).norm() < 1e-12);
    }

    #[test]
    fn asym_init_and_coherent() {
        let psi = asym_init(1);
        let expect = StateVector::spin(Axis::Y, false).tensor(&StateVector::spin(Axis::X, false));
        assert!((psi.inner(&expect).norm() - 1.0).abs() < 1e-14);
        let up = build_state(&StateSpec::SpinCoherent { n: 2, direction: [0.0, 0.0, 2.0] }).unwrap();
        assert!((up.matrix()[(0, 0)].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn invalid_specs() {
        assert!(build_state(&StateSpec::RhoNk { n: 2, k: 3 }).is_err());
        assert!(build_state(&StateSpec::TwistedMixture { k: 1, p: 1.5 }).is_err());
        assert!(build_state(&StateSpec::NoisyTwistedGhz { k: 1, p: -0.1 }).is_err());
        assert!(build_state(&StateSpec::SpinCoherent { n: 2, direction: [0.0; 3] }).is_err());
        assert!(matches!(build_state(&StateSpec::Ghz { n: 13 }), Err(Error::QubitCap { .. })));
    }

    #[test]
    fn spec_json_rejects_unknown_keys() {
        let ok: StateSpec = serde_json::from_str(r#"{"kind":"rho_nk","n":4,"k":2}"#).unwrap();
        assert_eq!(ok, StateSpec::RhoNk { n: 4, k: 2 });
        assert!(serde_json::from_str::<StateSpec>(r#"{"kind":"rho_nk","n":4,"k":2,"x":1}"#).is_err());
    }

    #[test]
    fn ising_examples() {
        let h = ising_hamiltonian(2, 0.7, 0.0, 1.3).unwrap();
        let zz = small(Axis::Z).kronecker(&small(Axis::Z)) * c(1.3 / 2.0);
        assert!((h.matrix - zz).norm() < 1e-14);

        let h3 = ising_hamiltonian(3, 1.0, 0.0, 1.0).unwrap();
        assert!((h3.coupling_between(0, 2) - 0.5).abs() < 1e-15);
        assert!((h3.coupling_between(0, 1) - 1.0).abs() < 1e-15);
        assert!((h3.coupling_between(1, 2) - 1.0).abs() < 1e-15);

        let id = CMatrix::identity(2, 2);
        let hx = ising_hamiltonian(3, 0.4, 0.8, 1.0).unwrap();
        let mut expect = CMatrix::zeros(8, 8);
        for i in 0..3 {
            let mut ops = vec![id.clone(); 3];
            ops[i] = small(Axis::X);
            expect += kron_all(&ops) * c(0.8);
            for j in 0..i {
                let mut ops = vec![id.clone(); 3];
                ops[i] = small(Axis::Z);
                ops[j] = small(Axis::Z);
                expect += kron_all(&ops) * c(hx.coupling_between(i, j) / 3.0);
            }
        }
        assert!((&hx.matrix - expect).norm() < 1e-13);
        assert!(linalg::hermiticity_error(&hx.matrix) < 1e-15);
    }

    #[test]
    fn ising_symmetries() {
        let n = 4;
        let h = ising_hamiltonian(n, 0.0, 0.0, 1.0).unwrap().matrix;
        for i in 0..n {
            let z = pauli::embed(n, i, Axis::Z);
            assert!((&h * &z - &z * &h).norm() < 1e-13);
        }
        let hb = ising_hamiltonian(n, 0.0, 0.6, 1.0).unwrap().matrix;
        let jx: CMatrix = (0..n).map(|i| pauli::embed(n, i, Axis::X)).fold(CMatrix::zeros(16, 16), |a, b| a + b);
        let jy: CMatrix = (0..n).map(|i| pauli::embed(n, i, Axis::Y)).fold(CMatrix::zeros(16, 16), |a, b| a + b);
        let jz: CMatrix = (0..n).map(|i| pauli::embed(n, i, Axis::Z)).fold(CMatrix::zeros(16, 16), |a, b| a + b);
        let j2 = &jx * &jx + &jy * &jy + &jz * &jz;
        assert!((&hb * &j2 - &j2 * &hb).norm() < 1e-12);

        // Site reflection i -> N-1-i.
        let h = ising_hamiltonian(n, 1.3, 0.5, 1.0).unwrap().matrix;
        let rev = |r: usize| (0..n).fold(0, |acc, b| acc | (((r >> b) & 1) << (n - 1 - b)));
        let p = CMatrix::from_fn(16, 16, |r, s| c(if rev(s) == r { 1.0 } else { 0.0 }));
        assert!((&p * &h * p.transpose() - &h).norm() < 1e-13);
    }
}
