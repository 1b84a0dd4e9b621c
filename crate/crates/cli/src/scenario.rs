//! Turns a validated [`Config`] into witness reports along its sweep.

use entwit_core::{
    build_state, hierarchy_report, ising_hamiltonian, lindblad_evolve_with, Axis, CMatrix, DensityMatrix, Error,
    LindbladModel, OptimizerConfig, StateSpec, StateVector, UnitaryPropagator, WitnessReport,
};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Config, MatrixInput, Parameters};

/// Why a run stopped. Setup problems are configuration errors, anything
/// after that is numerical.
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Numerical(String),
}

#[derive(Debug, Serialize)]
pub struct Point {
    #[serde(rename = "N")]
    pub n: usize,
    pub sweep_parameter_name: &'static str,
    pub sweep_value: f64,
    pub report: WitnessReport,
}

/// A state awaiting evaluation, with its sweep coordinate.
struct Pending {
    value: f64,
    state: Job,
}

enum Job {
    Spec(StateSpec),
    Ready(DensityMatrix),
}

fn config_err(e: Error) -> RunError {
    RunError::Config(e.to_string())
}

fn matrix_from_input(m: &MatrixInput, index: usize) -> Result<DensityMatrix, RunError> {
    let d = m.re.len();
    let bad = |what: &str| RunError::Config(format!("parameters.matrices[{index}]: {what}"));
    if m.re.iter().any(|row| row.len() != d) {
        return Err(bad("re is not square"));
    }
    if let Some(im) = &m.im {
        if im.len() != d || im.iter().any(|row| row.len() != d) {
            return Err(bad("im does not match the shape of re"));
        }
    }
    let matrix = CMatrix::from_fn(d, d, |r, c| {
        Complex64::new(m.re[r][c], m.im.as_ref().map_or(0.0, |im| im[r][c]))
    });
    DensityMatrix::new(matrix).map_err(|e| bad(&e.to_string()))
}

/// Sweep coordinates and the states to evaluate there.
fn plan(config: &Config) -> Result<(&'static str, Vec<Pending>), RunError> {
    let stride = config.stride;
    let strided = |points: Vec<f64>| -> Vec<(usize, f64)> {
        let last = points.len() - 1;
        points.into_iter().enumerate().filter(|(i, _)| i % stride == 0 || *i == last).collect()
    };
    Ok(match &config.parameters {
        Parameters::RhoNk(p) => {
            let ks: Vec<usize> = if p.k.is_empty() { (1..=p.n).collect() } else { p.k.clone() };
            let jobs = ks.into_iter().map(|k| Pending { value: k as f64, state: Job::Spec(StateSpec::RhoNk { n: p.n, k }) });
            ("K", jobs.collect())
        }
        Parameters::TwistedGhzNoise(p) => {
            let jobs = p.p.points().into_iter().map(|x| Pending { value: x, state: Job::Spec(StateSpec::NoisyTwistedGhz { k: p.k, p: x }) });
            ("p", jobs.collect())
        }
        Parameters::TwistedMixture(p) => {
            let jobs = p.p.points().into_iter().map(|x| Pending { value: x, state: Job::Spec(StateSpec::TwistedMixture { k: p.k, p: x }) });
            ("p", jobs.collect())
        }
        Parameters::OneAxisTwisting(p) => {
            let h = ising_hamiltonian(p.n, 0.0, 0.0, p.coupling).map_err(config_err)?.matrix;
            let prop = UnitaryPropagator::new(&h).map_err(|e| RunError::Numerical(e.to_string()))?;
            let plus = StateVector::product(&vec![StateVector::spin(Axis::X, true); p.n]).map_err(config_err)?;
            let rho0 = DensityMatrix::from_pure(&plus);
            let mut jobs = Vec::new();
            for (_, t) in strided(p.t.points()) {
                let rho = prop.evolve(&rho0, t).map_err(|e| RunError::Numerical(format!("t = {t}: {e}")))?;
                jobs.push(Pending { value: t, state: Job::Ready(rho) });
            }
            ("t", jobs)
        }
        Parameters::IsingLindblad(p) => {
            let h = ising_hamiltonian(p.n, p.alpha, p.field, p.coupling).map_err(config_err)?.matrix;
            let model = LindbladModel::ion_noise(h, p.n, p.gamma).map_err(config_err)?;
            let spec = p.initial.clone().unwrap_or(StateSpec::AsymInit { m: p.n / 2 });
            let rho0 = build_state(&spec).map_err(|e| RunError::Config(format!("parameters.initial: {e}")))?;
            if rho0.num_qubits() != p.n {
                return Err(RunError::Config(format!(
                    "parameters.initial has {} qubits, expected {}",
                    rho0.num_qubits(),
                    p.n
                )));
            }
            let grid = p.t.points();
            let keep: Vec<usize> = strided(grid.clone()).into_iter().map(|(i, _)| i).collect();
            let mut jobs = Vec::new();
            let mut index = 0;
            lindblad_evolve_with(&rho0, &model, &grid, &config.integrator, |t, rho| {
                if keep.binary_search(&index).is_ok() {
                    jobs.push(Pending { value: t, state: Job::Ready(rho.clone()) });
                }
                index += 1;
                Ok(true)
            })
            .map_err(|e| RunError::Numerical(e.to_string()))?;
            ("t", jobs)
        }
        Parameters::CustomState(p) => {
            let mut jobs = Vec::new();
            for (i, spec) in p.states.iter().enumerate() {
                spec.validate().map_err(|e| RunError::Config(format!("parameters.states[{i}]: {e}")))?;
                jobs.push(Pending { value: i as f64, state: Job::Spec(spec.clone()) });
            }
            for (i, m) in p.matrices.iter().enumerate() {
                let rho = matrix_from_input(m, i)?;
                jobs.push(Pending { value: (p.states.len() + i) as f64, state: Job::Ready(rho) });
            }
            ("index", jobs)
        }
    })
}

fn evaluate(name: &'static str, job: Pending, optimizer: &OptimizerConfig) -> Result<Point, RunError> {
    let at = |e: Error| RunError::Numerical(format!("{name} = {}: {e}", job.value));
    let rho = match &job.state {
        Job::Spec(spec) => build_state(spec).map_err(|e| RunError::Config(format!("{name} = {}: {e}", job.value)))?,
        Job::Ready(rho) => rho.clone(),
    };
    let report = hierarchy_report(&rho, optimizer).map_err(at)?;
    Ok(Point { n: rho.num_qubits(), sweep_parameter_name: name, sweep_value: job.value, report })
}

/// Runs the sweep on a pool of `config.threads` workers. Points come back in
/// sweep order.
pub fn run(config: &Config) -> Result<Vec<Point>, RunError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = config.threads {
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| RunError::Config(format!("threads: {e}")))?;
    pool.install(|| {
        let (name, jobs) = plan(config)?;
        jobs.into_par_iter().map(|job| evaluate(name, job, &config.optimizer)).collect()
    })
}
