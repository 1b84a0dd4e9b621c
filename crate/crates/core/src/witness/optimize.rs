//! Optimizers over products of spheres, plus a small BFGS for the smooth
//! inhomogeneous squeezing problem.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    /// Random restarts on top of the deterministic warm starts.
    pub restarts: usize,
    pub max_sweeps: usize,
    pub tol: f64,
    pub rng_seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig { restarts: 16, max_sweeps: 500, tol: 1e-10, rng_seed: 0 }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts < 1 {
            return Err(Error::InvalidParameter("optimizer restarts must be at least 1".into()));
        }
        if self.max_sweeps < 1 {
            return Err(Error::InvalidParameter("optimizer max_sweeps must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("optimizer tol must be positive".into()));
        }
        Ok(())
    }

    /// Independent stream per restart, so results do not depend on the order
    /// restarts are run in.
    pub(crate) fn rng(&self, restart: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        rng.set_stream(restart as u64);
        rng
    }
}

/// Maximizes `x^T a x + 2 b^T x` over the unit sphere `|x| = 1`.
///
/// The maximizer solves `(mu I - a) x = b` with `mu >= lambda_max(a)`. In the
/// hard case (`b` orthogonal to the top eigenspace and the secular equation
/// without it stays below one) `mu = lambda_max` and the top eigenspace
/// component is filled in, oriented along `current`.
pub(crate) fn sphere_quadratic_max(a: &DMatrix<f64>, b: &DVector<f64>, current: &DVector<f64>) -> DVector<f64> {
    let k = a.nrows();
    let (lam, u) = symmetric_eigen(a);
    let beta = u.transpose() * b;
    let bnorm = b.norm();
    let scale = lam.iter().fold(bnorm, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let top: Vec<usize> = (0..k).filter(|&j| lam[0] - lam[j] <= 1e-12 * scale).collect();
    let beta_top = top.iter().map(|&j| beta[j] * beta[j]).sum::<f64>().sqrt();

    let top_direction = || {
        let mut t = DVector::zeros(k);
        for &j in &top {
            t += u.column(j) * u.column(j).dot(current);
        }
        if t.norm() > 1e-12 {
            t.normalize()
        } else {
            u.column(top[0]).into_owned()
        }
    };

    if bnorm <= 1e-14 * scale {
        return top_direction();
    }
    if beta_top <= 1e-12 * bnorm {
        let mut x = DVector::zeros(k);
        let mut h = 0.0;
        for j in (0..k).filter(|j| !top.contains(j)) {
            let coef = beta[j] / (lam[0] - lam[j]);
            h += coef * coef;
            x += u.column(j) * coef;
        }
        if h <= 1.0 {
            x += top_direction() * (1.0 - h).sqrt();
            return x.normalize();
        }
    }

    let phi = |mu: f64| -> f64 {
        (0..k)
            .filter(|&j| beta[j] != 0.0)
            .map(|j| (beta[j] / (mu - lam[j])).powi(2))
            .sum()
    };
    // phi(lo) >= 1 >= phi(hi), phi decreasing on (lambda_max, inf).
    let mut lo = lam[0] + beta_top;
    let mut hi = lam[0] + bnorm;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = hi;
    let mut x = DVector::zeros(k);
    for j in 0..k {
        if beta[j] != 0.0 {
            x += u.column(j) * (beta[j] / (mu - lam[j]));
        }
    }
    if x.norm() == 0.0 {
        return top_direction();
    }
    x.normalize()
}

/// Result of a product-of-spheres ascent.
#[derive(Debug, Clone)]
pub(crate) struct Ascent {
    pub value: f64,
    pub x: DVector<f64>,
    pub converged: bool,
}

/// Block layout: `dims[i]`-dimensional unit sphere for block `i`.
#[derive(Debug, Clone)]
pub(crate) struct Blocks {
    dims: Vec<usize>,
    offsets: Vec<usize>,
}

impl Blocks {
    pub fn new(dims: Vec<usize>) -> Self {
        let mut offsets = Vec::with_capacity(dims.len());
        let mut acc = 0;
        for d in &dims {
            offsets.push(acc);
            acc += d;
        }
        Blocks { dims, offsets }
    }

    pub fn total(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i] + self.dims[i]
    }

    /// Rescales every block to unit length; zero blocks get the first axis.
    pub fn normalize(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = x.clone();
        for i in 0..self.len() {
            let r = self.range(i);
            let nrm = out.rows_range(r.clone()).norm();
            if nrm > 1e-12 {
                out.rows_range_mut(r).unscale_mut(nrm);
            } else {
                out.rows_range_mut(r.clone()).fill(0.0);
                out[r.start] = 1.0;
            }
        }
        out
    }

    pub fn random(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        let x = DVector::from_fn(self.total(), |_, _| StandardNormal.sample(rng));
        self.normalize(&x)
    }
}

/// Block-coordinate ascent of `x^T a x` with every block on its unit sphere.
/// Each block update is exact, so the objective never decreases.
pub(crate) fn block_ascent(a: &DMatrix<f64>, blocks: &Blocks, start: &DVector<f64>, max_sweeps: usize, tol: f64) -> Ascent {
    let mut x = blocks.normalize(start);
    let mut ax = a * &x;
    let mut value = x.dot(&ax);
    for _ in 0..max_sweeps {
        let before = value;
        for i in 0..blocks.len() {
            let r = blocks.range(i);
            let xi = x.rows_range(r.clone()).into_owned();
            let aii = a.view((r.start, r.start), (r.len(), r.len())).into_owned();
            let bi = ax.rows_range(r.clone()) - &aii * &xi;
            let old_local = xi.dot(&(&aii * &xi)) + 2.0 * bi.dot(&xi);
            let cand = sphere_quadratic_max(&aii, &bi, &xi);
            let new_local = cand.dot(&(&aii * &cand)) + 2.0 * bi.dot(&cand);
            if new_local > old_local {
                let delta = &cand - &xi;
                ax += a.columns_range(r.clone()) * &delta;
                x.rows_range_mut(r).copy_from(&cand);
            }
        }
        value = x.dot(&ax);
        if value - before <= tol * before.abs().max(1.0) {
            // Recompute to shed accumulated drift in the running product.
            return Ascent { value: x.dot(&(a * &x)), x, converged: true };
        }
    }
    Ascent { value: x.dot(&(a * &x)), x, converged: false }
}

/// Runs the warm starts and `config.restarts` random starts, keeping the best.
/// Ties are broken in favor of the earliest start.
pub(crate) fn multistart_ascent(a: &DMatrix<f64>, blocks: &Blocks, warm: &[DVector<f64>], config: &OptimizerConfig) -> Ascent {
    let mut best: Option<Ascent> = None;
    let mut consider = |cand: Ascent| {
        if best.as_ref().map_or(true, |b| cand.value > b.value + 1e-14 * b.value.abs().max(1.0)) {
            best = Some(cand);
        }
    };
    for w in warm {
        consider(block_ascent(a, blocks, w, config.max_sweeps, config.tol));
    }
    for r in 0..config.restarts {
        let start = blocks.random(&mut config.rng(r));
        consider(block_ascent(a, blocks, &start, config.max_sweeps, config.tol));
    }
    best.expect("at least one start")
}

#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub value: f64,
    pub x: DVector<f64>,
    pub converged: bool,
}

/// BFGS with Armijo backtracking. `f` returns value and gradient.
pub(crate) fn bfgs<F>(f: F, x0: &DVector<f64>, max_iter: usize, tol: f64) -> Minimum
where
    F: Fn(&DVector<f64>) -> (f64, DVector<f64>),
{
    let n = x0.len();
    let mut x = x0.clone();
    let (mut fx, mut g) = f(&x);
    let mut h = DMatrix::<f64>::identity(n, n);
    for _ in 0..max_iter {
        if !fx.is_finite() {
            break;
        }
        if g.norm() <= 1e-10 * fx.abs().max(1e-12) {
            return Minimum { value: fx, x, converged: true };
        }
        let mut p = -(&h * &g);
        let mut slope = g.dot(&p);
        if slope >= 0.0 {
            h = DMatrix::identity(n, n);
            p = -g.clone();
            slope = g.dot(&p);
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn = &x + &p * t;
            let (fn_, gn) = f(&xn);
            if fn_.is_finite() && fn_ <= fx + 1e-4 * t * slope {
                accepted = Some((xn, fn_, gn));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            return Minimum { value: fx, x, converged: true };
        };
        let s = &xn - &x;
        let y = &gn - &g;
        let sy = s.dot(&y);
        let decrease = fx - fn_;
        x = xn;
        fx = fn_;
        g = gn;
        if sy > 1e-300 {
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            h += (&s * s.transpose()) * ((1.0 + rho * yhy) * rho) - (&hy * s.transpose() + &s * hy.transpose()) * rho;
        }
        if decrease <= tol * fx.abs().max(1e-300) && s.norm() <= 1e-8 * x.norm().max(1.0) {
            return Minimum { value: fx, x, converged: true };
        }
    }
    Minimum { value: fx, x, converged: false }
}
