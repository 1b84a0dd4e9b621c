//! Random states and operators shared by the integration suites.
#![allow(dead_code)]

use entwit_core::{CMatrix, CVector, DensityMatrix, LocalVectorField, StateVector};
use nalgebra::Vector3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gauss(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn complex_gauss(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(gauss(rng), gauss(rng))
}

pub fn ginibre(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gauss(rng))
}

/// Haar-random pure state on `n` qubits.
pub fn haar_pure(n: usize, rng: &mut impl Rng) -> StateVector {
    let v = CVector::from_fn(1 << n, |_, _| complex_gauss(rng));
    StateVector::normalized(v).unwrap()
}

/// `G G^dag / Tr` with `G` a `2^n x rank` Ginibre matrix.
pub fn random_mixed(n: usize, rank: usize, rng: &mut impl Rng) -> DensityMatrix {
    let g = ginibre(1 << n, rank, rng);
    DensityMatrix::new_normalizing(&g * g.adjoint()).unwrap()
}

/// Pure, rank-2 or full-rank, picked by `kind % 3`.
pub fn random_state(n: usize, kind: u8, rng: &mut impl Rng) -> DensityMatrix {
    match kind % 3 {
        0 => DensityMatrix::from_pure(&haar_pure(n, rng)),
        1 => random_mixed(n, 2, rng),
        _ => random_mixed(n, 1 << n, rng),
    }
}

/// Average of `P rho P^dag` over all qubit permutations `P`.
pub fn symmetrize(rho: &DensityMatrix) -> DensityMatrix {
    let n = rho.num_qubits();
    let d = 1usize << n;
    let mut perms: Vec<Vec<usize>> = vec![vec![]];
    for k in 0..n {
        perms = perms
            .into_iter()
            .flat_map(|p| (0..=k).map(move |pos| { let mut q = p.clone(); q.insert(pos, k); q }))
            .collect();
    }
    let permute = |x: usize, p: &[usize]| {
        (0..n).fold(0usize, |acc, i| acc | (((x >> (n - 1 - p[i])) & 1) << (n - 1 - i)))
    };
    let m = rho.matrix();
    let mut acc = CMatrix::zeros(d, d);
    for p in &perms {
        let idx: Vec<usize> = (0..d).map(|x| permute(x, p)).collect();
        for r in 0..d {
            for c in 0..d {
                acc[(r, c)] += m[(idx[r], idx[c])];
            }
        }
    }
    DensityMatrix::new_normalizing(acc).unwrap()
}

pub fn random_product_pure(n: usize, rng: &mut impl Rng) -> StateVector {
    let factors: Vec<StateVector> = (0..n).map(|_| haar_pure(1, rng)).collect();
    StateVector::product(&factors).unwrap()
}

/// Mixture of `terms` random product pure states with random weights.
pub fn random_separable(n: usize, terms: usize, rng: &mut impl Rng) -> DensityMatrix {
    let states: Vec<DensityMatrix> =
        (0..terms).map(|_| DensityMatrix::from_pure(&random_product_pure(n, rng))).collect();
    let weights: Vec<f64> = (0..terms).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    let parts: Vec<(f64, &DensityMatrix)> = weights.iter().map(|w| w / total).zip(&states).collect();
    DensityMatrix::mixture(&parts).unwrap()
}

pub fn random_hermitian(d: usize, rng: &mut impl Rng) -> CMatrix {
    let g = ginibre(d, d, rng);
    (&g + g.adjoint()) * Complex64::new(0.5, 0.0)
}

pub fn random_unitary(d: usize, rng: &mut impl Rng) -> CMatrix {
    ginibre(d, d, rng).qr().q()
}

/// Rank-one projectors onto the columns of a Haar-like unitary.
pub fn random_projective_measurement(d: usize, rng: &mut impl Rng) -> Vec<CMatrix> {
    let u = random_unitary(d, rng);
    (0..d).map(|k| u.column(k) * u.column(k).adjoint()).collect()
}

pub fn random_field(n: usize, rng: &mut impl Rng) -> LocalVectorField {
    LocalVectorField::new((0..n).map(|_| Vector3::new(gauss(rng), gauss(rng), gauss(rng))).collect()).unwrap()
}

pub fn random_direction(rng: &mut impl Rng) -> Vector3<f64> {
    Vector3::new(gauss(rng), gauss(rng), gauss(rng)).normalize()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

use entwit_core::witness::Coefficient as C;
use entwit_core::{fisher, spin, weighted_spin_operator, WitnessReport};
use nalgebra::DMatrix;

/// Ordering relations that must hold for every state, `(lhs, rhs)`.
pub const ORDERING: [(C, C); 8] = [
    (C::FisherVarianceLocal, C::FisherVarianceGlobal),
    (C::FisherLocal, C::FisherNormalized),
    (C::FisherNormalized, C::FisherGlobal),
    (C::FisherNormalized, C::XiLocal),
    (C::FisherGlobal, C::XiGlobal),
    (C::XiVarianceGlobal, C::XiGlobal),
    (C::XiInhomogeneous, C::XiPartiallyInhomogeneous),
    (C::XiPartiallyInhomogeneous, C::XiLocal),
];

/// Holds only when every local mean spin is parallel to the global one.
pub const COLLINEAR_ORDERING: [(C, C); 1] = [(C::XiLocal, C::XiGlobal)];

pub fn ordering_violations(r: &WitnessReport, slack: f64, relations: &[(C, C)]) -> Vec<String> {
    relations
        .iter()
        .filter_map(|&(a, b)| {
            let (x, y) = (r.value(a)?, r.value(b)?);
            (x < y - slack).then(|| format!("{} = {x} < {} = {y}", a.name(), b.name()))
        })
        .collect()
}

pub fn implication_violations(r: &WitnessReport) -> Vec<String> {
    let diff = |c: C| r.get(c).difference_eigenvalue.unwrap_or(f64::NEG_INFINITY);
    [(C::FisherGlobal, C::FisherVarianceGlobal), (C::FisherLocal, C::FisherVarianceLocal), (C::XiVarianceGlobal, C::FisherVarianceGlobal)]
        .into_iter()
        .filter_map(|(a, b)| {
            let x = r.value(a)?;
            (x > 1.0 + 1e-6 && diff(b) <= 0.0).then(|| format!("{} = {x} but difference eigenvalue of {} is {}", a.name(), b.name(), diff(b)))
        })
        .collect()
}

/// Anything that would flag a separable state as entangled.
pub fn separability_violations(r: &WitnessReport, tol: f64) -> Vec<String> {
    let mut out = Vec::new();
    for rec in &r.coefficients {
        if let Some(v) = rec.value {
            if v > 1.0 + tol {
                out.push(format!("{} = {v}", rec.name.name()));
            }
        }
        if let Some(d) = rec.difference_eigenvalue {
            if d > tol {
                out.push(format!("{} difference eigenvalue {d}", rec.name.name()));
            }
        }
    }
    out
}

/// Recovers the symmetric matrix of a quadratic form on `R^dim` by polarization.
pub fn polarize(dim: usize, q: impl Fn(&[f64]) -> f64) -> DMatrix<f64> {
    let unit = |i: usize| (0..dim).map(|k| if k == i { 1.0 } else { 0.0 }).collect::<Vec<_>>();
    let diag: Vec<f64> = (0..dim).map(|i| q(&unit(i))).collect();
    DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            diag[i]
        } else {
            let v: Vec<f64> = (0..dim).map(|k| if k == i || k == j { 1.0 } else { 0.0 }).collect();
            (q(&v) - diag[i] - diag[j]) / 2.0
        }
    })
}

fn field_of(flat: &[f64]) -> LocalVectorField {
    LocalVectorField::new(flat.chunks(3).map(|c| Vector3::new(c[0], c[1], c[2])).collect()).unwrap()
}

fn sphere(theta: f64, phi: f64) -> Vector3<f64> {
    Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
}

/// Compass search maximizing `f`, starting with step `step`.
pub fn compass_max(f: impl Fn(&[f64]) -> f64, x0: &[f64], mut step: f64) -> (f64, Vec<f64>) {
    let mut x = x0.to_vec();
    let mut best = f(&x);
    while step > 1e-10 {
        let mut moved = false;
        for i in 0..x.len() {
            for s in [step, -step] {
                let mut y = x.clone();
                y[i] += s;
                let v = f(&y);
                if v > best {
                    best = v;
                    x = y;
                    moved = true;
                }
            }
        }
        if !moved {
            step /= 2.0;
        }
    }
    (best, x)
}

/// `f_l` for two qubits by exhaustive search over both Bloch spheres. The
/// quadratic form comes from `qfi` alone via polarization.
pub fn grid_f_l_two_qubits(rho: &DensityMatrix) -> f64 {
    assert_eq!(rho.num_qubits(), 2);
    let q = polarize(6, |c| {
        fisher::qfi(rho, weighted_spin_operator(&field_of(c)).matrix(), fisher::DEFAULT_PAIR_CUTOFF).unwrap()
    });
    let q = nalgebra::Matrix6::from_fn(|i, j| q[(i, j)]);
    let value = |a: &[f64]| {
        let (n1, n2) = (sphere(a[0], a[1]), sphere(a[2], a[3]));
        let c = nalgebra::Vector6::new(n1.x, n1.y, n1.z, n2.x, n2.y, n2.z);
        c.dot(&(q * c)) / 2.0
    };
    let deg = std::f64::consts::PI / 180.0;
    let step = 6.0 * deg;
    let (nt, np) = (30usize, 60usize);
    // Best few coarse points, each refined afterwards.
    let mut top: Vec<(f64, [f64; 4])> = Vec::new();
    for t1 in 0..=nt {
        for p1 in 0..np {
            for t2 in 0..=nt {
                for p2 in 0..np {
                    let a = [t1 as f64 * step, p1 as f64 * step, t2 as f64 * step, p2 as f64 * step];
                    let v = value(&a);
                    if top.len() < 8 || v > top[top.len() - 1].0 {
                        top.push((v, a));
                        top.sort_by(|x, y| y.0.total_cmp(&x.0));
                        top.truncate(8);
                    }
                }
            }
        }
    }
    top.iter().map(|(_, a)| compass_max(value, a, step / 2.0).0).fold(f64::NEG_INFINITY, f64::max)
}

/// Two vectors spanning the plane orthogonal to `m`.
fn transverse_plane(m: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let m = m.normalize();
    let seed = if m.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let u = (seed - m * m.dot(&seed)).normalize();
    (u, m.cross(&u))
}

/// `xi_l^2` for two qubits: 2 deg grid over both transverse angles, then
/// refined. The variance is taken directly from the state.
pub fn grid_xi_l_two_qubits(rho: &DensityMatrix) -> f64 {
    assert_eq!(rho.num_qubits(), 2);
    let marg = rho.bloch_vectors();
    let planes: Vec<_> = marg.iter().map(|b| transverse_plane(&b.m)).collect();
    let var = |a: &[f64]| {
        let v: Vec<Vector3<f64>> =
            planes.iter().zip(a).map(|((u, w), phi)| u * phi.cos() + w * phi.sin()).collect();
        let f = LocalVectorField::new(v).unwrap();
        spin::variance(rho, weighted_spin_operator(&f).matrix()).unwrap()
    };
    let deg = std::f64::consts::PI / 180.0;
    let mut best = (f64::INFINITY, [0.0, 0.0]);
    for i in 0..180 {
        for j in 0..180 {
            let a = [i as f64 * 2.0 * deg, j as f64 * 2.0 * deg];
            let v = var(&a);
            if v < best.0 {
                best = (v, a);
            }
        }
    }
    let (neg, _) = compass_max(|a| -var(a), &best.1, deg);
    let sum_m: f64 = marg.iter().map(|b| b.norm()).sum();
    2.0 * -neg / (0.5 * sum_m).powi(2)
}

/// `8 (1 - sqrt F) / theta^2` with `F` the squared Uhlmann fidelity between
/// `rho` and its rotation by `h`.
pub fn fidelity_qfi(rho: &DensityMatrix, h: &CMatrix, theta: f64) -> f64 {
    let rotated = entwit_core::unitary_evolve(rho, h, theta).unwrap();
    let f = entwit_core::state::fidelity(rho, &rotated).unwrap();
    8.0 * (1.0 - f.sqrt()) / (theta * theta)
}
