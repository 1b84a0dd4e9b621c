//! All coefficients of one state, with the ordering relations between them
//! checked on the computed numbers.

use serde::Serialize;

use super::density::FisherDensity;
use super::depth::entanglement_depth;
use super::{OptimizerConfig, WitnessContext, DIFFERENCE_TOL, ENTANGLED_TOL, MEAN_SPIN_EPS};
use crate::error::{Error, Result, UndefinedReason};
use crate::spin::LocalVectorField;
use crate::state::DensityMatrix;

/// Slack allowed in every hierarchy relation.
pub const HIERARCHY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Coefficient {
    #[serde(rename = "f_V_L")]
    FisherVarianceLocal,
    #[serde(rename = "f_V_G")]
    FisherVarianceGlobal,
    #[serde(rename = "f_L")]
    FisherLocal,
    #[serde(rename = "f_l")]
    FisherNormalized,
    #[serde(rename = "f_G")]
    FisherGlobal,
    #[serde(rename = "xi_l")]
    XiLocal,
    #[serde(rename = "xi_G")]
    XiGlobal,
    #[serde(rename = "xi_V_G")]
    XiVarianceGlobal,
    #[serde(rename = "xi_L")]
    XiInhomogeneous,
    #[serde(rename = "xi_Ll")]
    XiPartiallyInhomogeneous,
}

impl Coefficient {
    pub const ALL: [Coefficient; 10] = [
        Coefficient::FisherVarianceLocal,
        Coefficient::FisherVarianceGlobal,
        Coefficient::FisherLocal,
        Coefficient::FisherNormalized,
        Coefficient::FisherGlobal,
        Coefficient::XiLocal,
        Coefficient::XiGlobal,
        Coefficient::XiVarianceGlobal,
        Coefficient::XiInhomogeneous,
        Coefficient::XiPartiallyInhomogeneous,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Coefficient::FisherVarianceLocal => "f_V_L",
            Coefficient::FisherVarianceGlobal => "f_V_G",
            Coefficient::FisherLocal => "f_L",
            Coefficient::FisherNormalized => "f_l",
            Coefficient::FisherGlobal => "f_G",
            Coefficient::XiLocal => "xi_l",
            Coefficient::XiGlobal => "xi_G",
            Coefficient::XiVarianceGlobal => "xi_V_G",
            Coefficient::XiInhomogeneous => "xi_L",
            Coefficient::XiPartiallyInhomogeneous => "xi_Ll",
        }
    }

    pub fn from_name(name: &str) -> Option<Coefficient> {
        Coefficient::ALL.into_iter().find(|c| c.name() == name)
    }

    pub fn is_squeezing(self) -> bool {
        matches!(
            self,
            Coefficient::XiLocal
                | Coefficient::XiGlobal
                | Coefficient::XiVarianceGlobal
                | Coefficient::XiInhomogeneous
                | Coefficient::XiPartiallyInhomogeneous
        )
    }

    pub fn is_variance_assisted(self) -> bool {
        matches!(self, Coefficient::FisherVarianceLocal | Coefficient::FisherVarianceGlobal)
    }
}

/// One coefficient. For squeezing coefficients `value` is `xi^-2` and `xi2`
/// carries `xi^2`, so that `value > 1` certifies entanglement throughout.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientRecord {
    pub name: Coefficient,
    pub value: Option<f64>,
    pub defined: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub undefined: Option<UndefinedReason>,
    /// Limit of `xi^-2` for undefined squeezing coefficients (zero mean spin).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi2: Option<f64>,
    /// Optimizing field(s): the generator for Fisher densities, the
    /// transverse field for squeezing coefficients.
    pub fields: Vec<LocalVectorField>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub difference_eigenvalue: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub literal_ratio: Option<f64>,
    pub entangled: bool,
    /// False when an iterative optimizer hit its iteration limit.
    pub converged: bool,
}

impl CoefficientRecord {
    fn defined(name: Coefficient, value: f64, fields: Vec<LocalVectorField>) -> Self {
        CoefficientRecord {
            name,
            value: Some(value),
            defined: true,
            undefined: None,
            limit: None,
            xi2: None,
            fields,
            difference_eigenvalue: None,
            literal_ratio: None,
            entangled: value > 1.0 + ENTANGLED_TOL,
            converged: true,
        }
    }

    fn undefined(name: Coefficient, reason: UndefinedReason) -> Self {
        CoefficientRecord {
            name,
            value: None,
            defined: false,
            undefined: Some(reason),
            limit: if name.is_squeezing() { reason.inverse_squeezing_limit() } else { None },
            xi2: None,
            fields: Vec::new(),
            difference_eigenvalue: None,
            literal_ratio: None,
            entangled: false,
            converged: true,
        }
    }

    /// `value`, or for undefined coefficients the limit they tend to, if any.
    pub fn value_or_limit(&self) -> Option<f64> {
        self.value.or(self.limit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// `lhs >= rhs - tol`.
    Inequality,
    /// `lhs > 1 + tol` implies a positive difference eigenvalue `rhs`.
    Implication,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// A coefficient involved is undefined, or the relation does not apply.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HierarchyCheck {
    pub relation: String,
    pub kind: CheckKind,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub status: CheckStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReport {
    pub num_qubits: usize,
    pub coefficients: Vec<CoefficientRecord>,
    pub hierarchy: Vec<HierarchyCheck>,
    /// No hierarchy check failed.
    pub consistent: bool,
    /// Smallest `k` compatible with `f_l` for `k`-producible states.
    pub entanglement_depth: Option<usize>,
}

impl WitnessReport {
    pub fn get(&self, name: Coefficient) -> &CoefficientRecord {
        self.coefficients.iter().find(|r| r.name == name).expect("every coefficient is recorded")
    }

    pub fn value(&self, name: Coefficient) -> Option<f64> {
        self.get(name).value
    }

    pub fn failures(&self) -> impl Iterator<Item = &HierarchyCheck> {
        self.hierarchy.iter().filter(|c| c.status == CheckStatus::Fail)
    }
}

fn undefined_reason(e: Error) -> Result<UndefinedReason> {
    match e {
        Error::Undefined(r) => Ok(r),
        other => Err(other),
    }
}

fn density_record(name: Coefficient, d: FisherDensity) -> CoefficientRecord {
    let mut rec = match (d.value, d.undefined) {
        (Some(v), _) => CoefficientRecord::defined(name, v, vec![d.field]),
        (None, reason) => {
            let mut r = CoefficientRecord::undefined(name, reason.unwrap_or(UndefinedReason::VanishingDenominator));
            r.fields = vec![d.field];
            r
        }
    };
    if let Some(lam) = d.difference_eigenvalue {
        rec.difference_eigenvalue = Some(lam);
        rec.literal_ratio = d.literal_ratio;
        rec.entangled = lam > DIFFERENCE_TOL;
    }
    rec
}

fn squeezing_record(name: Coefficient, xi2: f64, fields: Vec<LocalVectorField>, converged: bool) -> CoefficientRecord {
    let mut rec = CoefficientRecord::defined(name, 1.0 / xi2, fields);
    rec.xi2 = Some(xi2);
    rec.converged = converged;
    rec
}

/// Evaluates every coefficient on `rho` and checks the ordering relations
/// between them. Undefined coefficients are recorded, and the relations they
/// enter are skipped.
pub fn hierarchy_report(rho: &DensityMatrix, config: &OptimizerConfig) -> Result<WitnessReport> {
    WitnessContext::new(rho, config)?.report()
}

impl WitnessContext {
    pub fn report(&self) -> Result<WitnessReport> {
        use Coefficient::*;
        let mut records = vec![
            density_record(FisherVarianceLocal, self.f_v_local()),
            density_record(FisherVarianceGlobal, self.f_v_global()),
            density_record(FisherLocal, self.f_local()),
        ];
        let fl = self.f_constrained();
        let mut rec = CoefficientRecord::defined(FisherNormalized, fl.value, vec![fl.field]);
        rec.converged = fl.converged;
        records.push(rec);
        records.push(density_record(FisherGlobal, self.f_global()));

        records.push(match self.xi_local() {
            Ok(s) => squeezing_record(XiLocal, s.xi2, vec![s.field], s.converged),
            Err(e) => CoefficientRecord::undefined(XiLocal, undefined_reason(e)?),
        });
        for (name, va) in [(XiGlobal, false), (XiVarianceGlobal, true)] {
            records.push(match self.xi_global(va) {
                Ok(g) => squeezing_record(name, g.xi2, vec![LocalVectorField::uniform(self.num_qubits, g.n_perp)], true),
                Err(e) => CoefficientRecord::undefined(name, undefined_reason(e)?),
            });
        }
        for (name, normalized) in [(XiInhomogeneous, false), (XiPartiallyInhomogeneous, true)] {
            records.push(match self.xi_inhomogeneous(normalized) {
                Ok(s) => squeezing_record(name, s.xi2, vec![s.field], s.converged),
                Err(e) => CoefficientRecord::undefined(name, undefined_reason(e)?),
            });
        }

        let hierarchy = checks(&records, self.local_spins_collinear());
        let consistent = hierarchy.iter().all(|c| c.status != CheckStatus::Fail);
        let depth = entanglement_depth(fl.value.min(self.num_qubits as f64), self.num_qubits).ok();
        Ok(WitnessReport { num_qubits: self.num_qubits, coefficients: records, hierarchy, consistent, entanglement_depth: depth })
    }
}

impl WitnessContext {
    /// Whether every local mean spin lies on the axis of the collective one.
    /// Only then is a uniform field orthogonal to every `m_i`, which is what
    /// `xi_l >= xi_G` rests on; for other states the relation can fail.
    fn local_spins_collinear(&self) -> bool {
        let total = self.mean_spin();
        if total.norm() <= MEAN_SPIN_EPS {
            return true;
        }
        let n0 = total.normalize();
        self.marginals().iter().all(|b| b.m.cross(&n0).norm() <= 1e-8)
    }
}

fn checks(records: &[CoefficientRecord], collinear: bool) -> Vec<HierarchyCheck> {
    use Coefficient::*;
    let get = |c: Coefficient| records.iter().find(|r| r.name == c).expect("recorded");
    let mut out = Vec::new();
    for (a, b) in [
        (FisherVarianceLocal, FisherVarianceGlobal),
        (FisherNormalized, FisherGlobal),
        (XiLocal, XiGlobal),
        (FisherLocal, FisherNormalized),
        (FisherNormalized, XiLocal),
        (FisherGlobal, XiGlobal),
        (XiVarianceGlobal, XiGlobal),
        (XiInhomogeneous, XiPartiallyInhomogeneous),
        (XiPartiallyInhomogeneous, XiLocal),
    ] {
        let (lhs, rhs) = (get(a).value, get(b).value);
        let status = match (lhs, rhs) {
            _ if (a, b) == (XiLocal, XiGlobal) && !collinear => CheckStatus::Skipped,
            (Some(l), Some(r)) if l >= r - HIERARCHY_TOL * r.abs().max(1.0) => CheckStatus::Pass,
            (Some(_), Some(_)) => CheckStatus::Fail,
            _ => CheckStatus::Skipped,
        };
        out.push(HierarchyCheck {
            relation: format!("{} >= {}", a.name(), b.name()),
            kind: CheckKind::Inequality,
            lhs,
            rhs,
            status,
        });
    }
    for (a, b) in [(FisherGlobal, FisherVarianceGlobal), (FisherLocal, FisherVarianceLocal), (XiVarianceGlobal, FisherVarianceGlobal)]
    {
        let lhs = get(a).value;
        let rhs = get(b).difference_eigenvalue;
        let status = match (lhs, rhs) {
            (Some(l), _) if l <= 1.0 + HIERARCHY_TOL => CheckStatus::Pass,
            (Some(_), Some(lam)) if lam > DIFFERENCE_TOL => CheckStatus::Pass,
            (Some(_), Some(_)) => CheckStatus::Fail,
            _ => CheckStatus::Skipped,
        };
        out.push(HierarchyCheck {
            relation: format!("{} > 1 => {} difference eigenvalue > 0", a.name(), b.name()),
            kind: CheckKind::Implication,
            lhs,
            rhs,
            status,
        });
    }
    out
}
