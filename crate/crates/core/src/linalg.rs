//! Dense helpers on top of nalgebra.
//!
//! Complex products are routed through four real GEMMs, which hit the
//! `matrixmultiply` kernels; nalgebra's generic complex product does not.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub(crate) fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn split(m: &CMatrix) -> (DMatrix<f64>, DMatrix<f64>) {
    (m.map(|z| z.re), m.map(|z| z.im))
}

fn join(re: &DMatrix<f64>, im: &DMatrix<f64>) -> CMatrix {
    re.zip_map(im, Complex64::new)
}

/// `a * b` for complex matrices.
pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.nrows(), "matmul: inner dimensions differ");
    if a.nrows() * a.ncols() * b.ncols() < 4096 {
        return a * b;
    }
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    join(&re, &im)
}

/// `a^dagger * b` for complex matrices.
pub fn adjoint_matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.nrows(), b.nrows(), "adjoint_matmul: row counts differ");
    if a.nrows() * a.ncols() * b.ncols() < 4096 {
        return a.adjoint() * b;
    }
    Adjoint::new(a).mul(b)
}

/// `a^dagger` stored as transposed real and imaginary parts, for repeated
/// products `a^dagger b`. The explicit transposes let the real products run
/// through the blocked `f64` kernel, several times faster than `tr_mul`.
pub struct Adjoint {
    re_t: DMatrix<f64>,
    im_t: DMatrix<f64>,
}

impl Adjoint {
    pub fn new(a: &CMatrix) -> Self {
        let (re, im) = split(a);
        Adjoint { re_t: re.transpose(), im_t: im.transpose() }
    }

    pub fn mul(&self, b: &CMatrix) -> CMatrix {
        assert_eq!(self.re_t.ncols(), b.nrows(), "Adjoint::mul: row counts differ");
        let (br, bi) = split(b);
        let mut re = &self.re_t * &br;
        re.gemm(1.0, &self.im_t, &bi, 1.0);
        let mut im = &self.re_t * &bi;
        im.gemm(-1.0, &self.im_t, &br, 1.0);
        join(&re, &im)
    }
}

/// Largest elementwise deviation from Hermiticity.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in j..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(m + m^dagger) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    let mut out = m.clone();
    let n = m.nrows();
    for j in 0..n {
        for i in j..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            out[(i, j)] = avg;
            out[(j, i)] = avg.conj();
        }
    }
    out
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().sum()
}

/// `Tr(a * b)` without forming the product.
pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..n {
        for k in 0..n {
            acc += a[(j, k)] * b[(k, j)];
        }
    }
    acc
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order; eigenvectors are the matching columns.
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = m.nrows();
    if n == 1 {
        return Ok((vec![m[(0, 0)].re], CMatrix::from_element(1, 1, c(1.0))));
    }
    let eig = m
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigensolver(format!("no convergence for {n}x{n} Hermitian matrix")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((values, vectors))
}

/// Eigen-decomposition of a real symmetric matrix, descending eigenvalues.
///
/// Each eigenvector is sign-fixed so that its entry of largest magnitude
/// (first one on ties) is positive, which makes reports reproducible.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    for j in 0..n {
        let col = sign_fixed(vectors.column(j).into_owned());
        vectors.set_column(j, &col);
    }
    (values, vectors)
}

/// Flips `v` so that its entry of largest magnitude (first one on ties) is
/// positive.
pub(crate) fn sign_fixed(mut v: DVector<f64>) -> DVector<f64> {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() + 1e-12 {
            best = i;
        }
    }
    if !v.is_empty() && v[best] < 0.0 {
        v.neg_mut();
    }
    v
}

/// Largest eigenvalue and its (sign-fixed, unit) eigenvector.
pub fn top_eigenpair(m: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let (values, vectors) = symmetric_eigen(m);
    (values[0], vectors.column(0).into_owned())
}

/// `exp(-i h t)` for Hermitian `h`.
pub fn unitary(h: &CMatrix, t: f64) -> Result<CMatrix> {
    let (vals, vecs) = hermitian_eigen(h)?;
    Ok(unitary_from_eigen(&vals, &vecs, t))
}

pub(crate) fn unitary_from_eigen(vals: &[f64], vecs: &CMatrix, t: f64) -> CMatrix {
    let mut scaled = vecs.clone();
    for (j, v) in vals.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, -v * t);
        scaled.column_mut(j).iter_mut().for_each(|x| *x *= phase);
    }
    matmul(&scaled, &vecs.adjoint())
}

/// True unless `m + shift * I` admits a Cholesky factorization with positive
/// real pivots. Only the lower triangle of `m` is read.
pub(crate) fn fails_shifted_cholesky(m: &CMatrix, shift: f64) -> bool {
    let n = m.nrows();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut diag = m[(j, j)].re + shift;
        for k in 0..j {
            diag -= l[(j, k)].norm_sqr();
        }
        if !(diag > 0.0) {
            return true;
        }
        let ljj = diag.sqrt();
        l[(j, j)] = c(ljj);
        for i in j + 1..n {
            let mut v = m[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = v / ljj;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, m: usize, seed: u64) -> CMatrix {
        let mut s = seed;
        CMatrix::from_fn(n, m, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = ((s >> 11) as f64) / (1u64 << 53) as f64 - 0.5;
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let b = ((s >> 11) as f64) / (1u64 << 53) as f64 - 0.5;
            Complex64::new(a, b)
        })
    }

    #[test]
    fn split_products_match_naive() {
        let a = sample(40, 30, 1);
        let b = sample(30, 20, 2);
        assert!((matmul(&a, &b) - &a * &b).norm() < 1e-12);
        let a2 = sample(30, 40, 3);
        assert!((adjoint_matmul(&a2, &b) - a2.adjoint() * &b).norm() < 1e-12);
    }

    #[test]
    fn hermitian_eigen_reconstructs_and_sorts() {
        let a = sample(12, 12, 7);
        let h = &a + a.adjoint();
        let (vals, vecs) = hermitian_eigen(&h).unwrap();
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        let d = CMatrix::from_diagonal(&DVector::from_iterator(12, vals.iter().map(|&x| c(x))));
        let rec = &vecs * d * vecs.adjoint();
        assert!((rec - h).norm() < 1e-10);
    }

    #[test]
    fn symmetric_eigen_sign_convention() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let (vals, vecs) = symmetric_eigen(&m);
        assert_eq!(vals, vec![2.0, 1.0]);
        assert!(vecs[(0, 0)] > 0.0 && vecs[(1, 1)] > 0.0);
    }

    #[test]
    fn shifted_cholesky_detects_negativity() {
        let a = sample(6, 6, 11);
        let psd = &a * a.adjoint();
        assert!(!fails_shifted_cholesky(&psd, 1e-12));
        let (vals, _) = hermitian_eigen(&psd).unwrap();
        let shifted = &psd - CMatrix::identity(6, 6) * c(vals[5] + 1e-3);
        assert!(fails_shifted_cholesky(&shifted, 1e-8));
    }
}
