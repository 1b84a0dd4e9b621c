//! Spin-squeezing coefficients: lower bounds on the Fisher densities that only
//! need mean values and variances.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2, Vector3};
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::optimize::{bfgs, multistart_ascent, Blocks, OptimizerConfig};
use super::{WitnessContext, MEAN_SPIN_EPS, XI2_FLOOR};
use crate::error::{Error, Result, UndefinedReason};
use crate::linalg::{self, symmetric_eigen, CMatrix};
use crate::spin::{self, orthonormal_complement, LocalVectorField};
use crate::state::DensityMatrix;

/// A locally optimized squeezing coefficient and its transverse field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Squeezing {
    pub xi2: f64,
    pub field: LocalVectorField,
    pub converged: bool,
}

impl Squeezing {
    pub fn inverse(&self) -> f64 {
        1.0 / self.xi2
    }
}

/// A globally optimized squeezing coefficient. `n0` is the mean-spin
/// direction, `n_perp` the squeezed direction and `n_perp_prime = n0 x n_perp`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlobalSqueezing {
    pub xi2: f64,
    pub n0: Vector3<f64>,
    pub n_perp: Vector3<f64>,
    pub n_perp_prime: Vector3<f64>,
}

impl GlobalSqueezing {
    pub fn inverse(&self) -> f64 {
        1.0 / self.xi2
    }
}

/// Minimum of `Var(A(c))` over locally normalized `c` with `n_i` orthogonal to
/// `m_i` (free at sites whose mean spin vanishes).
#[derive(Debug, Clone)]
pub(crate) struct MinVariance {
    pub variance: f64,
    pub field: LocalVectorField,
    pub converged: bool,
}

/// `xi^2 = 4 Var(A(c))_Pi Var(B) / |<[A(c), B]>|^2` for an arbitrary
/// Hermitian `b`, with the first variance over the product of marginals.
pub fn squeezing_at(rho: &DensityMatrix, c: &LocalVectorField, b: &CMatrix) -> Result<f64> {
    if c.num_sites() != rho.num_qubits() {
        return Err(Error::DimensionMismatch { expected: rho.num_qubits(), found: c.num_sites() });
    }
    let d = rho.dim();
    if b.nrows() != d || b.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: b.nrows() });
    }
    let herr = linalg::hermiticity_error(b);
    if herr > 1e-10 {
        return Err(Error::NotHermitian(herr));
    }
    let a = spin::weighted_spin_operator(c);
    let comm = spin::commutator_expectation(rho, a.matrix(), b).norm_sqr();
    let scale = c.norm_squared() * b.iter().map(|z| z.norm_sqr()).sum::<f64>() / d as f64;
    if comm <= 1e-12 * scale {
        return Err(Error::Undefined(UndefinedReason::VanishingCommutator));
    }
    let local = spin::local_variance_sum(c, &rho.bloch_vectors())?;
    Ok(local * spin::variance(rho, b)? / comm)
}

/// `xi_l^2 = min N Var(A(c_perp)) / <A(c_0)>^2` with `c_0 = (m_i / |m_i|)`.
/// Undefined when any qubit is maximally mixed.
pub fn xi_local(rho: &DensityMatrix, config: &OptimizerConfig) -> Result<Squeezing> {
    WitnessContext::new(rho, config)?.xi_local()
}

/// `xi_G^2` (Wineland) or, with `variance_assisted`, `(xi^V_G)^2`.
pub fn xi_global(rho: &DensityMatrix, variance_assisted: bool) -> Result<GlobalSqueezing> {
    WitnessContext::new(rho, &OptimizerConfig::default())?.xi_global(variance_assisted)
}

/// `xi_Ll^2` (locally normalized transverse field, `normalized = true`) or
/// `xi_L^2` (free transverse lengths). Sites with vanishing mean spin carry
/// no weight in the mean-spin expectation.
pub fn xi_inhomogeneous(rho: &DensityMatrix, normalized: bool, config: &OptimizerConfig) -> Result<Squeezing> {
    WitnessContext::new(rho, config)?.xi_inhomogeneous(normalized)
}

fn vanishing_variance() -> Error {
    Error::Undefined(UndefinedReason::VanishingVariance)
}

fn golden_section_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

enum SiteParam {
    /// `n_i = e^s (cos t u + sin t v)`, parameters at `offset, offset + 1`.
    Active { u: Vector3<f64>, v: Vector3<f64>, weight: f64, offset: usize },
    /// Free 3-vector at `offset..offset + 3`.
    Inactive { offset: usize },
}

impl WitnessContext {
    fn active(&self, i: usize) -> bool {
        self.marginals[i].norm() > MEAN_SPIN_EPS
    }

    /// Orthonormal bases of the planes orthogonal to each `m_i`, stacked as the
    /// columns of a `3N x K` matrix.
    fn transverse_basis(&self) -> (Blocks, DMatrix<f64>) {
        let n = self.num_qubits;
        let mut dims = Vec::with_capacity(n);
        let mut cols: Vec<(usize, Vector3<f64>)> = Vec::new();
        for i in 0..n {
            if self.active(i) {
                let (u, v) = orthonormal_complement(&self.marginals[i].m, None);
                cols.push((i, u));
                cols.push((i, v));
                dims.push(2);
            } else {
                for a in 0..3 {
                    cols.push((i, Vector3::ith(a, 1.0)));
                }
                dims.push(3);
            }
        }
        let mut p = DMatrix::zeros(3 * n, cols.len());
        for (k, (i, w)) in cols.iter().enumerate() {
            p.view_mut((3 * i, k), (3, 1)).copy_from(w);
        }
        (Blocks::new(dims), p)
    }

    pub(crate) fn min_transverse_variance(&self) -> std::result::Result<&MinVariance, UndefinedReason> {
        self.min_variance.get_or_init(|| self.solve_min_variance()).as_ref().map_err(|e| *e)
    }

    fn solve_min_variance(&self) -> std::result::Result<MinVariance, UndefinedReason> {
        let n = self.num_qubits;
        if !(0..n).any(|i| self.active(i)) {
            return Err(UndefinedReason::VanishingMeanSpin { site: None });
        }
        let (blocks, p) = self.transverse_basis();
        let neg = -(p.transpose() * &self.gamma_local * &p);
        let (_, vecs) = symmetric_eigen(&neg);
        let mut warm = vec![vecs.column(0).into_owned()];
        if let Ok(g) = self.xi_global(false) {
            warm.push(p.transpose() * LocalVectorField::uniform(n, g.n_perp).to_flat());
        }
        let best = multistart_ascent(&neg, &blocks, &warm, &self.config);
        Ok(MinVariance {
            variance: (-best.value).max(0.0),
            field: LocalVectorField::from_flat(&(&p * &best.x)),
            converged: best.converged,
        })
    }

    pub fn xi_local(&self) -> Result<Squeezing> {
        if let Some(i) = (0..self.num_qubits).find(|&i| !self.active(i)) {
            return Err(Error::Undefined(UndefinedReason::VanishingMeanSpin { site: Some(i) }));
        }
        let mv = self.min_transverse_variance().map_err(Error::Undefined)?;
        let mean = 0.5 * self.marginals.iter().map(|b| b.norm()).sum::<f64>();
        let xi2 = self.num_qubits as f64 * mv.variance / (mean * mean);
        if xi2 <= XI2_FLOOR {
            return Err(vanishing_variance());
        }
        Ok(Squeezing { xi2, field: mv.field.clone(), converged: mv.converged })
    }

    pub fn xi_global(&self, variance_assisted: bool) -> Result<GlobalSqueezing> {
        let jn = self.mean_spin.norm();
        if jn <= MEAN_SPIN_EPS {
            return Err(Error::Undefined(UndefinedReason::VanishingMeanSpin { site: None }));
        }
        let n0 = self.mean_spin / jn;
        let (u, v) = orthonormal_complement(&n0, None);
        let g = &self.gamma_global;
        let r = Matrix2::new(u.dot(&(g * u)), u.dot(&(g * v)), v.dot(&(g * u)), v.dot(&(g * v)));
        let eig = r.symmetric_eigen();
        let k = if eig.eigenvalues[0] <= eig.eigenvalues[1] { 0 } else { 1 };
        let lam = eig.eigenvalues[k];
        let phi0 = eig.eigenvectors[(1, k)].atan2(eig.eigenvectors[(0, k)]).rem_euclid(PI);
        let dir = |phi: f64| u * phi.cos() + v * phi.sin();

        let (xi2, phi) = if variance_assisted {
            let d = &self.d_global;
            let f = |phi: f64| {
                let n = dir(phi);
                let np = n0.cross(&n);
                np.dot(&(d * np)) * n.dot(&(g * n)) / (jn * jn)
            };
            const GRID: usize = 720;
            let step = PI / GRID as f64;
            let k = (0..GRID).min_by(|&a, &b| f(a as f64 * step).total_cmp(&f(b as f64 * step))).unwrap();
            let refined = golden_section_min(f, (k as f64 - 1.0) * step, (k as f64 + 1.0) * step, 1e-12);
            if f(refined) <= f(phi0) {
                (f(refined), refined)
            } else {
                (f(phi0), phi0)
            }
        } else {
            (self.num_qubits as f64 * lam.max(0.0) / (jn * jn), phi0)
        };
        if xi2 <= XI2_FLOOR {
            return Err(vanishing_variance());
        }
        let n_perp = dir(phi);
        Ok(GlobalSqueezing { xi2, n0, n_perp, n_perp_prime: n0.cross(&n_perp) })
    }

    pub fn xi_inhomogeneous(&self, normalized: bool) -> Result<Squeezing> {
        let mv = self.min_transverse_variance().map_err(Error::Undefined)?;
        let m2: f64 = self.marginals.iter().map(|b| b.m.norm_squared()).sum();
        let xi2_ll = 4.0 * mv.variance / m2;
        if normalized {
            if xi2_ll <= XI2_FLOOR {
                return Err(vanishing_variance());
            }
            return Ok(Squeezing { xi2: xi2_ll, field: mv.field.clone(), converged: mv.converged });
        }
        self.xi_free_lengths(mv, m2)
    }

    /// `xi_L^2 = min (sum_i |m_i|^2 / |n_i|^2) Var(A(c)) / (sum_i |m_i|^2 / 2)^2`
    /// by BFGS over angles and log-lengths of the transverse vectors, started
    /// from the `xi_Ll` optimum and from random points.
    fn xi_free_lengths(&self, mv: &MinVariance, m2_total: f64) -> Result<Squeezing> {
        let n = self.num_qubits;
        let mut sites = Vec::with_capacity(n);
        let mut dim = 0;
        for i in 0..n {
            if self.active(i) {
                let (u, v) = orthonormal_complement(&self.marginals[i].m, None);
                sites.push(SiteParam::Active { u, v, weight: self.marginals[i].m.norm_squared(), offset: dim });
                dim += 2;
            } else {
                sites.push(SiteParam::Inactive { offset: dim });
                dim += 3;
            }
        }
        let denom = 0.25 * m2_total * m2_total;
        let gamma = &self.gamma_local;

        let field_of = |x: &DVector<f64>| -> DVector<f64> {
            let mut c = DVector::zeros(3 * n);
            for (i, s) in sites.iter().enumerate() {
                let ci = match s {
                    SiteParam::Active { u, v, offset, .. } => {
                        let (t, e) = (x[*offset], x[offset + 1].exp());
                        (u * t.cos() + v * t.sin()) * e
                    }
                    SiteParam::Inactive { offset } => Vector3::new(x[*offset], x[offset + 1], x[offset + 2]),
                };
                c.fixed_rows_mut::<3>(3 * i).copy_from(&ci);
            }
            c
        };
        let objective = |x: &DVector<f64>| -> (f64, DVector<f64>) {
            let c = field_of(x);
            let gc = gamma * &c;
            let var = c.dot(&gc);
            let weight: f64 = sites
                .iter()
                .map(|s| match s {
                    SiteParam::Active { weight, offset, .. } => weight * (-2.0 * x[offset + 1]).exp(),
                    SiteParam::Inactive { .. } => 0.0,
                })
                .sum();
            let mut grad = DVector::zeros(x.len());
            for (i, s) in sites.iter().enumerate() {
                let gci = gc.fixed_rows::<3>(3 * i);
                match s {
                    SiteParam::Active { u, v, weight: w, offset } => {
                        let (t, e) = (x[*offset], x[offset + 1].exp());
                        let dtheta = (v * t.cos() - u * t.sin()) * e;
                        let ci = c.fixed_rows::<3>(3 * i);
                        grad[*offset] = weight * 2.0 * gci.dot(&dtheta) / denom;
                        let dweight = -2.0 * w * (-2.0 * x[offset + 1]).exp();
                        grad[offset + 1] = (dweight * var + weight * 2.0 * gci.dot(&ci)) / denom;
                    }
                    SiteParam::Inactive { offset } => {
                        for a in 0..3 {
                            grad[offset + a] = weight * 2.0 * gci[a] / denom;
                        }
                    }
                }
            }
            (weight * var / denom, grad)
        };

        let mut seed = DVector::zeros(dim);
        for (i, s) in sites.iter().enumerate() {
            let f = mv.field.site(i);
            match s {
                SiteParam::Active { u, v, offset, .. } => seed[*offset] = f.dot(v).atan2(f.dot(u)),
                SiteParam::Inactive { offset } => seed.fixed_rows_mut::<3>(*offset).copy_from(f),
            }
        }
        let max_iter = 4 * self.config.max_sweeps;
        let mut best = bfgs(objective, &seed, max_iter, self.config.tol);
        for r in 0..self.config.restarts {
            let mut rng = self.config.rng(r);
            let start = DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
            let cand = bfgs(objective, &start, max_iter, self.config.tol);
            if cand.value < best.value - 1e-14 * best.value.abs() {
                best = cand;
            }
        }
        if !(best.value > XI2_FLOOR) {
            return Err(vanishing_variance());
        }
        Ok(Squeezing { xi2: best.value, field: LocalVectorField::from_flat(&field_of(&best.x)), converged: best.converged })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::pauli::Axis;
    use crate::spin::collective_spin;
    use crate::state::{tensor_product, StateVector};

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn product(states: &[StateVector]) -> DensityMatrix {
        DensityMatrix::from_pure(&StateVector::product(states).unwrap())
    }

    fn ghz(n: usize) -> DensityMatrix {
        let mut a = DVector::zeros(1 << n);
        a[0] = c(std::f64::consts::FRAC_1_SQRT_2);
        a[(1 << n) - 1] = c(std::f64::consts::FRAC_1_SQRT_2);
        DensityMatrix::from_pure(&StateVector::new(a).unwrap())
    }

    #[test]
    fn coherent_state_squeezing_is_one() {
        let rho = product(&vec![StateVector::spin(Axis::Z, true); 3]);
        let b = collective_spin(3, Vector3::y());
        close(squeezing_at(&rho, &LocalVectorField::uniform(3, Vector3::x()), b.matrix()).unwrap(), 1.0, 1e-12);
        let cfg = OptimizerConfig::default();
        close(xi_global(&rho, false).unwrap().xi2, 1.0, 1e-12);
        close(xi_global(&rho, true).unwrap().xi2, 1.0, 1e-12);
        close(xi_local(&rho, &cfg).unwrap().xi2, 1.0, 1e-10);
        close(xi_inhomogeneous(&rho, true, &cfg).unwrap().xi2, 1.0, 1e-10);
        close(xi_inhomogeneous(&rho, false, &cfg).unwrap().xi2, 1.0, 1e-8);
    }

    #[test]
    fn mixed_orientation_product() {
        // |up z> (x) |up x>: <A(c_0)> = 1 and the minimal transverse variance is 1/2.
        let rho = product(&[StateVector::spin(Axis::Z, true), StateVector::spin(Axis::X, true)]);
        let s = xi_local(&rho, &OptimizerConfig::default()).unwrap();
        close(s.xi2, 1.0, 1e-10);
        for i in 0..2 {
            close(s.field.site(i).norm(), 1.0, 1e-10);
        }
        close(s.field.site(0).z, 0.0, 1e-10);
        close(s.field.site(1).x, 0.0, 1e-10);
    }

    #[test]
    fn ghz_is_undefined() {
        let rho = ghz(3);
        let cfg = OptimizerConfig::default();
        assert!(matches!(
            xi_local(&rho, &cfg),
            Err(Error::Undefined(UndefinedReason::VanishingMeanSpin { site: Some(0) }))
        ));
        assert!(matches!(xi_global(&rho, false), Err(Error::Undefined(UndefinedReason::VanishingMeanSpin { .. }))));
        assert!(xi_inhomogeneous(&rho, true, &cfg).is_err());
    }

    #[test]
    fn mixed_qubit_only_breaks_xi_l() {
        let rho = tensor_product(
            &product(&vec![StateVector::spin(Axis::Z, true); 2]),
            &DensityMatrix::maximally_mixed(1),
        )
        .unwrap();
        let cfg = OptimizerConfig::default();
        assert!(matches!(
            xi_local(&rho, &cfg),
            Err(Error::Undefined(UndefinedReason::VanishingMeanSpin { site: Some(2) }))
        ));
        let ll = xi_inhomogeneous(&rho, true, &cfg).unwrap();
        let l = xi_inhomogeneous(&rho, false, &cfg).unwrap();
        assert!(ll.xi2 > 0.0 && l.xi2 <= ll.xi2 + 1e-10);
    }

    #[test]
    fn global_directions_are_orthonormal() {
        let rho = product(&vec![StateVector::coherent(&Vector3::new(1.0, 0.3, 0.2)).unwrap(); 3]);
        for va in [false, true] {
            let g = xi_global(&rho, va).unwrap();
            let m = nalgebra::Matrix3::from_columns(&[g.n0, g.n_perp, g.n_perp_prime]);
            assert!((m.transpose() * m - nalgebra::Matrix3::identity()).norm() < 1e-12);
        }
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let x = golden_section_min(|x| (x - 0.3).powi(2), 0.0, 1.0, 1e-12);
        close(x, 0.3, 1e-9);
    }
}
