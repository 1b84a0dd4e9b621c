//! Pauli matrices acting on single qubits of an N-qubit register.
//!
//! Qubit 0 is the most significant bit of a basis index and bit value 0 is
//! spin up along z, so `sigma_z |0> = |0>`.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{c, CMatrix, I};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn from_index(i: usize) -> Axis {
        Axis::ALL[i]
    }
}

/// Bit mask selecting `site` in a register of `n` qubits.
#[inline]
pub fn site_mask(n: usize, site: usize) -> usize {
    debug_assert!(site < n);
    1 << (n - 1 - site)
}

/// `sigma |r> = phase |r'>`; returns `(phase, r')`.
#[inline]
pub(crate) fn act(axis: Axis, mask: usize, r: usize) -> (Complex64, usize) {
    let up = r & mask == 0;
    match axis {
        Axis::X => (c(1.0), r ^ mask),
        Axis::Y => (if up { I } else { -I }, r ^ mask),
        Axis::Z => (c(if up { 1.0 } else { -1.0 }), r),
    }
}

pub fn pauli_matrix(axis: Axis) -> Matrix2<Complex64> {
    let z = c(0.0);
    match axis {
        Axis::X => Matrix2::new(z, c(1.0), c(1.0), z),
        Axis::Y => Matrix2::new(z, -I, I, z),
        Axis::Z => Matrix2::new(c(1.0), z, z, c(-1.0)),
    }
}

/// Dense `sigma^axis` on `site`, identity elsewhere.
pub fn embed(n: usize, site: usize, axis: Axis) -> CMatrix {
    let d = 1usize << n;
    let mask = site_mask(n, site);
    let mut m = CMatrix::zeros(d, d);
    for r in 0..d {
        let (ph, r2) = act(axis, mask, r);
        m[(r2, r)] = ph;
    }
    m
}

/// `sigma * m` for a dense `m` with `2^n` rows, done as a signed row permutation.
pub(crate) fn apply_left(m: &CMatrix, n: usize, site: usize, axis: Axis) -> CMatrix {
    let mask = site_mask(n, site);
    let mut out = CMatrix::zeros(m.nrows(), m.ncols());
    for col in 0..m.ncols() {
        for r in 0..m.nrows() {
            let (ph, r2) = act(axis, mask, r);
            out[(r2, col)] = ph * m[(r, col)];
        }
    }
    out
}

/// `Tr(rho sigma_site^axis)`.
pub(crate) fn expectation(rho: &CMatrix, n: usize, site: usize, axis: Axis) -> f64 {
    let mask = site_mask(n, site);
    let mut acc = c(0.0);
    for r in 0..rho.nrows() {
        let (ph, r2) = act(axis, mask, r);
        acc += ph * rho[(r, r2)];
    }
    acc.re
}

/// `Tr(rho sigma_i^a sigma_j^b)`.
pub(crate) fn pair_expectation(
    rho: &CMatrix,
    n: usize,
    (i, a): (usize, Axis),
    (j, b): (usize, Axis),
) -> Complex64 {
    let (mi, mj) = (site_mask(n, i), site_mask(n, j));
    let mut acc = c(0.0);
    for r in 0..rho.nrows() {
        let (pb, rb) = act(b, mj, r);
        let (pa, rab) = act(a, mi, rb);
        acc += pa * pb * rho[(r, rab)];
    }
    acc
}
