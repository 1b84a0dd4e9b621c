//! Fisher densities: the QFI of `A(c)` divided by a separability bound.

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use super::optimize::{multistart_ascent, Blocks, OptimizerConfig};
use super::{to_dmatrix, WitnessContext, MEAN_SPIN_EPS};
use crate::error::{Error, Result, UndefinedReason};
use crate::fisher::{self, DEFAULT_PAIR_CUTOFF};
use crate::linalg::{sign_fixed, symmetric_eigen};
use crate::spin::{self, LocalVectorField};
use crate::state::DensityMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Local,
    Global,
}

/// Ratios with `c^T D c <= RATIO_EPS |c|^2` are undefined.
const RATIO_EPS: f64 = 1e-8;
/// Relative width of a degenerate top eigenvalue cluster.
const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FisherDensity {
    /// `None` when every candidate ratio has a vanishing denominator.
    pub value: Option<f64>,
    /// Field attaining `value`, scaled to `|c|^2 = N`. Global fields are uniform.
    pub field: LocalVectorField,
    /// Top eigenvalue of `Q - D` (variance-assisted only).
    pub difference_eigenvalue: Option<f64>,
    /// The ratio evaluated at the top eigenvector of `Q - D` itself.
    pub literal_ratio: Option<f64>,
    pub undefined: Option<UndefinedReason>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstrainedFisher {
    pub value: f64,
    /// Locally normalized optimizing field.
    pub field: LocalVectorField,
    pub converged: bool,
}

/// `F_Q[rho, A(c)] / 4 Var(A(c))` with the variance taken over the product of
/// marginals. Invariant under `c -> s c`.
pub fn fisher_density_at(rho: &DensityMatrix, c: &LocalVectorField) -> Result<f64> {
    if c.num_sites() != rho.num_qubits() {
        return Err(Error::DimensionMismatch { expected: rho.num_qubits(), found: c.num_sites() });
    }
    let norm2 = c.norm_squared();
    if norm2 == 0.0 {
        return Err(Error::Undefined(UndefinedReason::ZeroField));
    }
    let den = spin::local_variance_sum(c, &rho.bloch_vectors())?;
    if den <= RATIO_EPS * norm2 {
        return Err(Error::Undefined(UndefinedReason::VanishingDenominator));
    }
    let a = spin::weighted_spin_operator(c);
    Ok(fisher::qfi(rho, a.matrix(), DEFAULT_PAIR_CUTOFF)? / den)
}

/// Optimized Fisher density over local fields (`Scope::Local`) or uniform
/// fields (`Scope::Global`), either against the measured local variances or
/// against their state-independent maximum.
pub fn fisher_density(rho: &DensityMatrix, scope: Scope, variance_assisted: bool) -> Result<FisherDensity> {
    let ctx = WitnessContext::new(rho, &OptimizerConfig::default())?;
    Ok(match (scope, variance_assisted) {
        (Scope::Local, true) => ctx.f_v_local(),
        (Scope::Global, true) => ctx.f_v_global(),
        (Scope::Local, false) => ctx.f_local(),
        (Scope::Global, false) => ctx.f_global(),
    })
}

/// Fisher density over locally normalized fields, `max F_Q[rho, A(c)] / N`
/// subject to `|n_i| = 1`.
pub fn fisher_density_constrained(rho: &DensityMatrix, config: &OptimizerConfig) -> Result<ConstrainedFisher> {
    Ok(WitnessContext::new(rho, config)?.f_constrained())
}

fn ratio(q: &DMatrix<f64>, d: &DMatrix<f64>, x: &DVector<f64>) -> Option<f64> {
    let den = x.dot(&(d * x));
    (den > RATIO_EPS * x.norm_squared()).then(|| x.dot(&(q * x)) / den)
}

struct VarianceAssisted {
    difference_eigenvalue: f64,
    literal_ratio: Option<f64>,
    best: Option<(f64, DVector<f64>)>,
    literal_vector: DVector<f64>,
}

/// Top eigenvector of `q - d` and the best ratio `x^T q x / x^T d x` among it,
/// the maximizer inside a degenerate top eigenspace, and `extra` candidates.
fn variance_assisted(q: &DMatrix<f64>, d: &DMatrix<f64>, extra: &[DVector<f64>]) -> VarianceAssisted {
    let (vals, vecs) = symmetric_eigen(&(q - d));
    let lam = vals[0];
    let v = vecs.column(0).into_owned();
    let literal_ratio = ratio(q, d, &v);
    let mut best = literal_ratio.map(|r| (r, v.clone()));
    let mut consider = |x: DVector<f64>| {
        if let Some(r) = ratio(q, d, &x) {
            if best.as_ref().map_or(true, |(b, _)| r > *b) {
                best = Some((r, x));
            }
        }
    };

    let cluster: Vec<usize> = (0..vals.len()).filter(|&j| lam - vals[j] <= DEGENERACY_TOL * lam.abs().max(1.0)).collect();
    if cluster.len() > 1 {
        // Inside the cluster q = d + lam, so the ratio is a generalized
        // Rayleigh quotient of (w^T q w, w^T d w); whiten the latter.
        let w = DMatrix::from_fn(q.nrows(), cluster.len(), |i, j| vecs[(i, cluster[j])]);
        let b = w.transpose() * d * &w;
        let a = w.transpose() * q * &w;
        let (bv, bu) = symmetric_eigen(&b);
        let keep: Vec<usize> = (0..bv.len()).filter(|&j| bv[j] > RATIO_EPS).collect();
        if !keep.is_empty() {
            let t = DMatrix::from_fn(cluster.len(), keep.len(), |i, j| bu[(i, keep[j])] / bv[keep[j]].sqrt());
            let (_, mu) = symmetric_eigen(&(t.transpose() * a * &t));
            consider(sign_fixed(&w * (&t * mu.column(0))));
        }
    }
    for x in extra {
        consider(x.clone());
    }
    VarianceAssisted { difference_eigenvalue: lam, literal_ratio, best, literal_vector: v }
}

fn lift(n: usize, dir: &Vector3<f64>) -> DVector<f64> {
    LocalVectorField::uniform(n, *dir).to_flat()
}

impl WitnessContext {
    fn scaled_field(&self, x: &DVector<f64>) -> LocalVectorField {
        LocalVectorField::from_flat(&(x.normalize() * (self.num_qubits as f64).sqrt()))
    }

    fn global_direction(&self, x: &DVector<f64>) -> Vector3<f64> {
        Vector3::new(x[0], x[1], x[2]).normalize()
    }

    /// `f^V_L`, with the lifted `f^V_G` direction as an extra candidate so the
    /// local value never falls below the global one.
    pub fn f_v_local(&self) -> FisherDensity {
        let global = self.f_v_global();
        let lifted = lift(self.num_qubits, global.field.site(0));
        let va = variance_assisted(&self.q_local, &self.d_local, &[lifted]);
        self.va_result(va, |x| self.scaled_field(x))
    }

    pub fn f_v_global(&self) -> FisherDensity {
        let va = variance_assisted(&to_dmatrix(&self.q_global), &to_dmatrix(&self.d_global), &[]);
        self.va_result(va, |x| LocalVectorField::uniform(self.num_qubits, self.global_direction(x)))
    }

    fn va_result(&self, va: VarianceAssisted, field: impl Fn(&DVector<f64>) -> LocalVectorField) -> FisherDensity {
        match va.best {
            Some((value, x)) => FisherDensity {
                value: Some(value),
                field: field(&x),
                difference_eigenvalue: Some(va.difference_eigenvalue),
                literal_ratio: va.literal_ratio,
                undefined: None,
            },
            None => FisherDensity {
                value: None,
                field: field(&va.literal_vector),
                difference_eigenvalue: Some(va.difference_eigenvalue),
                literal_ratio: None,
                undefined: Some(UndefinedReason::VanishingDenominator),
            },
        }
    }

    /// `f_L = lambda_max(Q^L)`.
    pub fn f_local(&self) -> FisherDensity {
        let (vals, vecs) = symmetric_eigen(&self.q_local);
        FisherDensity {
            value: Some(vals[0]),
            field: self.scaled_field(&vecs.column(0).into_owned()),
            difference_eigenvalue: None,
            literal_ratio: None,
            undefined: None,
        }
    }

    /// `f_G = lambda_max(Q^G) / N`.
    pub fn f_global(&self) -> FisherDensity {
        let (vals, vecs) = symmetric_eigen(&to_dmatrix(&self.q_global));
        FisherDensity {
            value: Some(vals[0] / self.num_qubits as f64),
            field: LocalVectorField::uniform(self.num_qubits, self.global_direction(&vecs.column(0).into_owned())),
            difference_eigenvalue: None,
            literal_ratio: None,
            undefined: None,
        }
    }

    /// `f_l` by block-coordinate ascent over `N` unit spheres.
    ///
    /// Warm starts: the top eigenvector of `Q^L` with blocks rescaled, the
    /// uniform `f_G` direction (so `f_l >= f_G`), and, when `xi_l` is defined,
    /// `n_i = n_perp_i x m_i / |m_i|` built from its optimum (so
    /// `f_l >= xi_l^-2`).
    pub fn f_constrained(&self) -> ConstrainedFisher {
        let n = self.num_qubits;
        let blocks = Blocks::new(vec![3; n]);
        let (_, vecs) = symmetric_eigen(&self.q_local);
        let mut warm = vec![vecs.column(0).into_owned()];
        warm.push(self.f_global().field.to_flat());
        if let Ok(mv) = self.min_transverse_variance() {
            if self.marginals.iter().all(|b| b.norm() > MEAN_SPIN_EPS) {
                let v: Vec<Vector3<f64>> =
                    (0..n).map(|i| mv.field.site(i).cross(&self.marginals[i].m.normalize())).collect();
                warm.push(LocalVectorField::new(v).expect("finite field").to_flat());
            }
        }
        let best = multistart_ascent(&self.q_local, &blocks, &warm, &self.config);
        ConstrainedFisher {
            value: best.value / n as f64,
            field: LocalVectorField::from_flat(&best.x),
            converged: best.converged,
        }
    }
}
