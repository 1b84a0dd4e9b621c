//! Unitary and Lindblad time evolution of density matrices.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, I};
use crate::pauli::{self, Axis};
use crate::state::DensityMatrix;

/// `exp(-i H t) rho exp(i H t)`.
pub fn unitary_evolve(rho0: &DensityMatrix, h: &CMatrix, t: f64) -> Result<DensityMatrix> {
    UnitaryPropagator::new(h)?.evolve(rho0, t)
}

/// Caches the spectral decomposition of a time-independent Hamiltonian.
#[derive(Debug, Clone)]
pub struct UnitaryPropagator {
    values: Vec<f64>,
    vectors: CMatrix,
}

impl UnitaryPropagator {
    pub fn new(h: &CMatrix) -> Result<Self> {
        let herr = linalg::hermiticity_error(h);
        if herr > 1e-10 {
            return Err(Error::NotHermitian(herr));
        }
        let (values, vectors) = linalg::hermitian_eigen(&linalg::hermitian_part(h))?;
        Ok(UnitaryPropagator { values, vectors })
    }

    pub fn unitary(&self, t: f64) -> CMatrix {
        linalg::unitary_from_eigen(&self.values, &self.vectors, t)
    }

    pub fn evolve(&self, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        if rho0.dim() != self.vectors.nrows() {
            return Err(Error::DimensionMismatch { expected: self.vectors.nrows(), found: rho0.dim() });
        }
        if t == 0.0 {
            return Ok(rho0.clone());
        }
        Ok(rho0.conjugate_by(&self.unitary(t)))
    }
}

/// Compressed sparse rows; fallback for operators without bit-flip structure.
#[derive(Debug, Clone, PartialEq)]
struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl Csr {
    fn from_dense(m: &CMatrix) -> Self {
        let n = m.nrows();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for r in 0..n {
            for col in 0..m.ncols() {
                let v = m[(r, col)];
                if v != c(0.0) {
                    cols.push(col);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Csr { n, row_ptr, cols, vals }
    }

    /// `out = self * m`.
    fn mul_into(&self, m: &CMatrix, out: &mut CMatrix) {
        let n = self.n;
        let src = m.as_slice();
        let dst = out.as_mut_slice();
        // Column-major storage: walk columns outermost.
        for (s, o) in src.chunks_exact(n).zip(dst.chunks_exact_mut(n)) {
            for (r, slot) in o.iter_mut().enumerate() {
                let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
                let mut acc = c(0.0);
                for (v, &col) in self.vals[lo..hi].iter().zip(&self.cols[lo..hi]) {
                    acc += v * s[col];
                }
                *slot = acc;
            }
        }
    }

    fn mul_dense(&self, m: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.n, m.ncols());
        self.mul_into(m, &mut out);
        out
    }
}

/// `M = sum_m P_m diag(v_m)` with `P_m` the bit flip `r -> r ^ m`, i.e.
/// `M[r, r ^ m] = v_m[r]`. Pauli strings, ladder operators and the Ising
/// Hamiltonian need only a handful of masks, and every product touches
/// memory almost contiguously.
#[derive(Debug, Clone, PartialEq)]
struct XorSparse {
    n: usize,
    masks: Vec<(usize, Vec<Complex64>)>,
    runs: Vec<Vec<(usize, usize)>>,
    real: Vec<bool>,
}

fn is_real(v: &[Complex64]) -> bool {
    v.iter().all(|x| x.im == 0.0)
}

/// Maximal row ranges where `v` is nonzero and `r ^ mask` stays contiguous.
fn flip_runs(v: &[Complex64], mask: usize) -> Vec<(usize, usize)> {
    let block = if mask == 0 { v.len() } else { mask & mask.wrapping_neg() };
    let mut runs = Vec::new();
    let mut start = None;
    for r in 0..=v.len() {
        let live = r < v.len() && v[r] != c(0.0) && !(r % block == 0 && start.is_some());
        match (start, live) {
            (None, true) => start = Some(r),
            (Some(s0), false) => {
                runs.push((s0, r));
                start = (r < v.len() && v[r] != c(0.0)).then_some(r);
            }
            _ => {}
        }
    }
    runs
}

impl XorSparse {
    fn from_dense(m: &CMatrix, max_masks: usize) -> Option<Self> {
        let n = m.nrows();
        if !n.is_power_of_two() {
            return None;
        }
        let mut masks: Vec<(usize, Vec<Complex64>)> = Vec::new();
        for (col, column) in m.column_iter().enumerate() {
            for (r, v) in column.iter().enumerate() {
                if *v == c(0.0) {
                    continue;
                }
                let mask = r ^ col;
                let slot = match masks.iter().position(|(k, _)| *k == mask) {
                    Some(i) => i,
                    None if masks.len() < max_masks => {
                        masks.push((mask, vec![c(0.0); n]));
                        masks.len() - 1
                    }
                    None => return None,
                };
                masks[slot].1[r] = *v;
            }
        }
        let runs = masks.iter().map(|(mask, v)| flip_runs(v, *mask)).collect();
        let real = masks.iter().map(|(_, v)| is_real(v)).collect();
        Some(XorSparse { n, masks, runs, real })
    }

    /// `out = self * m`.
    fn mul_into(&self, m: &CMatrix, out: &mut CMatrix) {
        let n = self.n;
        out.fill(c(0.0));
        let src = m.as_slice();
        let dst = out.as_mut_slice();
        for (s, o) in src.chunks_exact(n).zip(dst.chunks_exact_mut(n)) {
            for (((mask, v), runs), &real) in self.masks.iter().zip(&self.runs).zip(&self.real) {
                for &(lo, hi) in runs {
                    let src_lo = lo ^ mask;
                    let terms = o[lo..hi].iter_mut().zip(&v[lo..hi]).zip(&s[src_lo..src_lo + hi - lo]);
                    if real {
                        terms.for_each(|((slot, vr), sv)| *slot += sv * vr.re);
                    } else {
                        terms.for_each(|((slot, vr), sv)| *slot += vr * sv);
                    }
                }
            }
        }
    }
}

/// Either sparse layout, picked by [`SparseOp::new`].
#[derive(Debug, Clone, PartialEq)]
enum SparseOp {
    Xor(XorSparse),
    Csr(Csr),
}

impl SparseOp {
    fn new(m: &CMatrix) -> Self {
        // Beyond about two masks per qubit the row-compressed form wins.
        let limit = 2 * m.nrows().max(2).ilog2() as usize + 2;
        match XorSparse::from_dense(m, limit) {
            Some(x) => SparseOp::Xor(x),
            None => SparseOp::Csr(Csr::from_dense(m)),
        }
    }

    fn mul_into(&self, m: &CMatrix, out: &mut CMatrix) {
        match self {
            SparseOp::Xor(x) => x.mul_into(m, out),
            SparseOp::Csr(x) => x.mul_into(m, out),
        }
    }
}

/// One dissipative channel `gamma (L rho L^dag - {L^dag L, rho} / 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub operator: CMatrix,
    pub rate: f64,
}

#[derive(Debug, Clone)]
pub struct LindbladModel {
    hamiltonian: CMatrix,
    channels: Vec<Channel>,
    h_eff: SparseOp,
    /// Elementwise weight collecting the diagonal of `H_eff` and every
    /// diagonal jump operator, so all of them cost a single product.
    diagonal: Option<CMatrix>,
    jumps: Vec<(Jump, f64)>,
}

/// Dimension up to which diagonal jumps are merged into one weight matrix.
const MERGE_DIAGONAL_MAX_DIM: usize = 1 << 10;

/// Jump operators with at most one nonzero per column (Pauli strings, ladder
/// operators) are applied as a phased permutation of matrix entries.
#[derive(Debug, Clone)]
enum Jump {
    /// `L[r, r ^ mask] = v[r]`, nonzero only on `runs` (see [`flip_runs`]).
    Flip { mask: usize, runs: Vec<(usize, usize)>, v: Vec<Complex64> },
    /// `(source, target, value)` for every nonzero column.
    Monomial(Vec<(usize, usize, Complex64)>),
    Sparse(Csr),
}

impl Jump {
    fn new(l: &CMatrix) -> Self {
        if let Some(XorSparse { mut masks, mut runs, .. }) = XorSparse::from_dense(l, 1) {
            // Real entries also make the sandwich coefficient real.
            if let (Some((mask, v)), Some(runs)) = (masks.pop(), runs.pop()) {
                return Jump::Flip { mask, runs, v };
            }
        }
        let mut entries = Vec::new();
        for (col, column) in l.column_iter().enumerate() {
            let mut hits = column.iter().enumerate().filter(|(_, v)| **v != c(0.0));
            if let Some((r, v)) = hits.next() {
                if hits.next().is_some() {
                    return Jump::Sparse(Csr::from_dense(l));
                }
                entries.push((col, r, *v));
            }
        }
        Jump::Monomial(entries)
    }

    /// `out += rate * L rho L^dag`.
    fn add_sandwich(&self, rho: &CMatrix, rate: f64, out: &mut CMatrix) {
        let d = rho.nrows();
        let src = rho.as_slice();
        match self {
            Jump::Flip { mask, runs, v } => {
                let dst = out.as_mut_slice();
                let real = is_real(v);
                for col in runs.iter().flat_map(|&(lo, hi)| lo..hi) {
                    let wc = v[col].conj() * rate;
                    let s = &src[(col ^ mask) * d..((col ^ mask) + 1) * d];
                    let o = &mut dst[col * d..(col + 1) * d];
                    for &(lo, hi) in runs {
                        let src_lo = lo ^ mask;
                        let terms = o[lo..hi].iter_mut().zip(&v[lo..hi]).zip(&s[src_lo..src_lo + hi - lo]);
                        if real {
                            terms.for_each(|((slot, vr), sv)| *slot += sv * (vr.re * wc.re));
                        } else {
                            terms.for_each(|((slot, vr), sv)| *slot += vr * wc * sv);
                        }
                    }
                }
            }
            Jump::Monomial(entries) => {
                let dst = out.as_mut_slice();
                for &(col, pc, vc) in entries {
                    let wc = vc.conj() * rate;
                    let s = &src[col * d..(col + 1) * d];
                    let o = &mut dst[pc * d..(pc + 1) * d];
                    for &(r, pr, vr) in entries {
                        o[pr] += vr * wc * s[r];
                    }
                }
            }
            Jump::Sparse(l) => {
                let y = l.mul_dense(rho);
                *out += l.mul_dense(&y.adjoint()).adjoint() * c(rate);
            }
        }
    }
}

/// Per-site rates of the ion noise model: relaxation and excitation at
/// `gamma / 5`, dephasing at `8 gamma / 5`, which solves
/// `gamma_1 = gamma_2 = gamma_3 / 8` together with
/// `gamma = (gamma_1 + gamma_2 + gamma_3) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IonRates {
    pub lowering: f64,
    pub raising: f64,
    pub dephasing: f64,
}

impl IonRates {
    pub fn from_total(gamma: f64) -> Self {
        let x = gamma / 5.0;
        IonRates { lowering: x, raising: x, dephasing: 8.0 * x }
    }

    pub fn total(&self) -> f64 {
        (self.lowering + self.raising + self.dephasing) / 2.0
    }
}

impl LindbladModel {
    pub fn new(hamiltonian: CMatrix, channels: Vec<Channel>) -> Result<Self> {
        let d = hamiltonian.nrows();
        if hamiltonian.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: hamiltonian.ncols() });
        }
        let herr = linalg::hermiticity_error(&hamiltonian);
        if herr > 1e-10 {
            return Err(Error::NotHermitian(herr));
        }
        let mut h_eff = hamiltonian.clone();
        let mut jumps = Vec::with_capacity(channels.len());
        let mut diagonal = (d <= MERGE_DIAGONAL_MAX_DIM).then(|| CMatrix::zeros(d, d));
        for ch in &channels {
            if ch.operator.nrows() != d || ch.operator.ncols() != d {
                return Err(Error::DimensionMismatch { expected: d, found: ch.operator.nrows() });
            }
            if !(ch.rate >= 0.0) || !ch.rate.is_finite() {
                return Err(Error::InvalidParameter(format!("channel rate must be finite and nonnegative, got {}", ch.rate)));
            }
            if ch.rate == 0.0 {
                continue;
            }
            let ldl = ch.operator.adjoint() * &ch.operator;
            h_eff -= ldl * (I * (0.5 * ch.rate));
            match (Jump::new(&ch.operator), diagonal.as_mut()) {
                (Jump::Flip { mask: 0, v, .. }, Some(w)) => {
                    for (col, vc) in v.iter().enumerate() {
                        let wc = vc.conj() * ch.rate;
                        for (r, vr) in v.iter().enumerate() {
                            w[(r, col)] += vr * wc;
                        }
                    }
                }
                (jump, _) => jumps.push((jump, ch.rate)),
            }
        }
        if let Some(w) = diagonal.as_mut() {
            // -i (h_r rho_rc - rho_rc conj(h_c)) for the diagonal of H_eff.
            for col in 0..d {
                let hc = h_eff[(col, col)];
                for r in 0..d {
                    w[(r, col)] += -I * (h_eff[(r, r)] - hc.conj());
                }
            }
            h_eff.fill_diagonal(c(0.0));
        }
        Ok(LindbladModel { h_eff: SparseOp::new(&h_eff), hamiltonian, channels, diagonal, jumps })
    }

    /// `sigma^-`, `sigma^+` and `sigma^z` on every qubit with [`IonRates`].
    pub fn ion_noise(hamiltonian: CMatrix, num_qubits: usize, gamma: f64) -> Result<Self> {
        let rates = IonRates::from_total(gamma);
        let mut channels = Vec::with_capacity(3 * num_qubits);
        for i in 0..num_qubits {
            channels.push(Channel { operator: ladder(num_qubits, i, false), rate: rates.lowering });
            channels.push(Channel { operator: ladder(num_qubits, i, true), rate: rates.raising });
            channels.push(Channel { operator: pauli::embed(num_qubits, i, Axis::Z), rate: rates.dephasing });
        }
        Self::new(hamiltonian, channels)
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    /// `-i (H_eff rho - rho H_eff^dag) + sum gamma L rho L^dag` with
    /// `H_eff = H - i/2 sum gamma L^dag L`; uses `rho = rho^dag`.
    pub fn rhs(&self, rho: &CMatrix) -> CMatrix {
        let d = self.dim();
        let mut out = CMatrix::zeros(d, d);
        self.rhs_into(rho, &mut out, &mut CMatrix::zeros(d, d));
        out
    }

    /// [`LindbladModel::rhs`] into `out`, with `scratch` for `H_eff rho`.
    fn rhs_into(&self, rho: &CMatrix, out: &mut CMatrix, scratch: &mut CMatrix) {
        let d = self.dim();
        self.h_eff.mul_into(rho, scratch);
        {
            let xs = scratch.as_slice();
            let o = out.as_mut_slice();
            // Tiled so the transposed reads stay in cache.
            const TILE: usize = 32;
            for c0 in (0..d).step_by(TILE) {
                for r0 in (0..d).step_by(TILE) {
                    for col in c0..(c0 + TILE).min(d) {
                        for r in r0..(r0 + TILE).min(d) {
                            let v = xs[r + col * d] - xs[col + r * d].conj();
                            o[r + col * d] = Complex64::new(v.im, -v.re);
                        }
                    }
                }
            }
        }
        if let Some(w) = &self.diagonal {
            for ((o, w), x) in out.as_mut_slice().iter_mut().zip(w.as_slice()).zip(rho.as_slice()) {
                *o += w * x;
            }
        }
        for (jump, rate) in &self.jumps {
            jump.add_sandwich(rho, *rate, out);
        }
    }
}

/// `sigma^+ = |0><1|` when `raising`, else `sigma^- = |1><0|`.
pub fn ladder(num_qubits: usize, site: usize, raising: bool) -> CMatrix {
    let d = 1usize << num_qubits;
    let mask = pauli::site_mask(num_qubits, site);
    let mut m = CMatrix::zeros(d, d);
    for r in 0..d {
        let up = r & mask == 0;
        if up != raising {
            m[(r ^ mask, r)] = c(1.0);
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    /// Fixed RK4 step in units of `1/J0`.
    pub step: f64,
    /// How often a segment may be retried with a halved step.
    pub max_halvings: u32,
    /// Stored states must have smallest eigenvalue above `-positivity_tol`.
    pub positivity_tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig { step: 1e-3, max_halvings: 6, positivity_tol: 1e-8 }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::InvalidParameter(format!("integrator step must be positive, got {}", self.step)));
        }
        if !(self.positivity_tol > 0.0) {
            return Err(Error::InvalidParameter("positivity tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// States on a time grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.first() != Some(&0.0) {
        return Err(Error::InvalidParameter("time grid must start at 0".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
        return Err(Error::InvalidParameter("time grid must be strictly increasing and finite".into()));
    }
    Ok(())
}

/// Buffers reused across RK4 steps; allocating fresh dim-256 matrices is
/// several times slower than the arithmetic itself.
struct Rk4 {
    k: CMatrix,
    acc: CMatrix,
    stage: CMatrix,
    scratch: CMatrix,
}

impl Rk4 {
    fn new(d: usize) -> Self {
        let z = CMatrix::zeros(d, d);
        Rk4 { k: z.clone(), acc: z.clone(), stage: z.clone(), scratch: z }
    }

    fn step(&mut self, model: &LindbladModel, rho: &mut CMatrix, h: f64) {
        let Rk4 { k, acc, stage, scratch } = self;
        // (weight in the final sum, offset of the next stage)
        let stages = [(1.0, h / 2.0), (2.0, h / 2.0), (2.0, h), (1.0, 0.0)];
        stage.copy_from(rho);
        for (i, (weight, offset)) in stages.into_iter().enumerate() {
            model.rhs_into(stage, k, scratch);
            let ks = k.as_slice();
            if i == 0 {
                acc.copy_from(k);
            } else {
                for (a, kv) in acc.as_mut_slice().iter_mut().zip(ks) {
                    *a += kv * weight;
                }
            }
            if offset > 0.0 {
                for ((s, r), kv) in stage.as_mut_slice().iter_mut().zip(rho.as_slice()).zip(ks) {
                    *s = r + kv * offset;
                }
            }
        }
        for (r, a) in rho.as_mut_slice().iter_mut().zip(acc.as_slice()) {
            *r += a * (h / 6.0);
        }
        symmetrize(rho);
    }
}

fn symmetrize(m: &mut CMatrix) {
    let d = m.nrows();
    for col in 0..d {
        m[(col, col)].im = 0.0;
        for r in 0..col {
            let avg = (m[(r, col)] + m[(col, r)].conj()) * 0.5;
            m[(r, col)] = avg;
            m[(col, r)] = avg.conj();
        }
    }
}

fn integrate_segment(model: &LindbladModel, rk: &mut Rk4, rho: &CMatrix, dt: f64, step: f64) -> CMatrix {
    let substeps = (dt / step).ceil().max(1.0) as usize;
    let h = dt / substeps as f64;
    let mut cur = rho.clone();
    for _ in 0..substeps {
        rk.step(model, &mut cur, h);
    }
    cur
}

/// Integrates the master equation and hands every grid state to `visit` as
/// soon as it is available. `visit` may stop the integration early by
/// returning `false`.
pub fn lindblad_evolve_with<F>(
    rho0: &DensityMatrix,
    model: &LindbladModel,
    grid: &[f64],
    config: &IntegratorConfig,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(f64, &DensityMatrix) -> Result<bool>,
{
    config.validate()?;
    check_grid(grid)?;
    if rho0.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), found: rho0.dim() });
    }
    if !visit(0.0, rho0)? {
        return Ok(());
    }
    let mut cur = rho0.matrix().clone();
    let mut rk = Rk4::new(model.dim());
    for w in grid.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let mut step = config.step;
        let mut halvings = 0;
        let next = loop {
            let cand = integrate_segment(model, &mut rk, &cur, t1 - t0, step);
            if !linalg::fails_shifted_cholesky(&cand, config.positivity_tol) {
                break cand;
            }
            if halvings == config.max_halvings {
                return Err(Error::Integration {
                    time: t1,
                    reason: format!("state lost positivity beyond {} after {halvings} step halvings", config.positivity_tol),
                });
            }
            halvings += 1;
            step /= 2.0;
        };
        cur = next;
        if !visit(t1, &DensityMatrix::from_matrix_unchecked(cur.clone()))? {
            break;
        }
    }
    Ok(())
}

/// Collects [`lindblad_evolve_with`] into a [`Trajectory`].
pub fn lindblad_evolve(rho0: &DensityMatrix, model: &LindbladModel, grid: &[f64], config: &IntegratorConfig) -> Result<Trajectory> {
    let mut traj = Trajectory { times: Vec::with_capacity(grid.len()), states: Vec::with_capacity(grid.len()) };
    lindblad_evolve_with(rho0, model, grid, config, |t, rho| {
        traj.times.push(t);
        traj.states.push(rho.clone());
        Ok(true)
    })?;
    Ok(traj)
}

/// `n + 1` equally spaced points from 0 to `t_max`.
pub fn uniform_grid(t_max: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| t_max * k as f64 / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ising_hamiltonian, StateSpec};
    use crate::state::StateVector;

    fn sx(rho: &DensityMatrix) -> f64 {
        rho.bloch_vectors()[0].m.x
    }

    #[test]
    fn larmor_precession() {
        let rho = DensityMatrix::from_pure(&StateVector::spin(Axis::X, true));
        let h = pauli::embed(1, 0, Axis::Z) * c(0.5);
        for t in [0.0, 0.3, 1.7, 4.0] {
            let out = unitary_evolve(&rho, &h, t).unwrap();
            assert!((sx(&out) - t.cos()).abs() < 1e-12);
            assert!((out.purity() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let rho = crate::models::build_state(&StateSpec::TwistedMixture { k: 1, p: 0.3 }).unwrap();
        let h = ising_hamiltonian(3, 0.5, 1.0, 1.0).unwrap().matrix;
        let out = unitary_evolve(&rho, &h, 0.0).unwrap();
        assert_eq!(out.matrix(), rho.matrix());
    }

    #[test]
    fn ion_rates_reproduce_total() {
        let r = IonRates::from_total(0.01);
        assert!((r.total() - 0.01).abs() < 1e-17);
        assert!((r.lowering - r.dephasing / 8.0).abs() < 1e-18);
        assert_eq!(r.lowering, r.raising);
    }

    #[test]
    fn ladder_conventions() {
        let plus = ladder(1, 0, true);
        let minus = ladder(1, 0, false);
        assert_eq!(plus[(0, 1)], c(1.0));
        assert_eq!(minus[(1, 0)], c(1.0));
        let x = pauli::embed(1, 0, Axis::X);
        let y = pauli::embed(1, 0, Axis::Y);
        assert!((&plus - (&x + &y * I) * c(0.5)).norm() < 1e-15);
    }

    #[test]
    fn dephasing_decay() {
        let rho = DensityMatrix::from_pure(&StateVector::spin(Axis::X, true));
        let g3 = 0.3;
        let model =
            LindbladModel::new(CMatrix::zeros(2, 2), vec![Channel { operator: pauli::embed(1, 0, Axis::Z), rate: g3 }])
                .unwrap();
        let grid = uniform_grid(2.0, 20);
        let traj = lindblad_evolve(&rho, &model, &grid, &IntegratorConfig::default()).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            assert!((sx(s) - (-2.0 * g3 * t).exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn closed_limit_matches_unitary() {
        let n = 3;
        let h = ising_hamiltonian(n, 0.2, 1.0, 1.0).unwrap().matrix;
        let rho = crate::models::build_state(&StateSpec::SpinCoherent { n, direction: [1.0, 0.2, 0.0] }).unwrap();
        let model = LindbladModel::ion_noise(h.clone(), n, 0.0).unwrap();
        let traj = lindblad_evolve(&rho, &model, &uniform_grid(1.0, 4), &IntegratorConfig::default()).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let exact = unitary_evolve(&rho, &h, *t).unwrap();
            assert!((s.matrix() - exact.matrix()).norm() < 1e-8);
        }
    }

    fn dense_rhs(model: &LindbladModel, r: &CMatrix) -> CMatrix {
        let h = model.hamiltonian();
        let mut expect = (h * r - r * h) * (-I);
        for ch in model.channels() {
            let l = &ch.operator;
            let ldl = l.adjoint() * l;
            expect += (l * r * l.adjoint() - (&ldl * r + r * &ldl) * c(0.5)) * c(ch.rate);
        }
        expect
    }

    #[test]
    fn rhs_matches_dense_formula() {
        let n = 3;
        let h = ising_hamiltonian(n, 0.5, 0.7, 1.0).unwrap().matrix;
        let ion = LindbladModel::ion_noise(h.clone(), n, 0.2).unwrap();
        let mut channels = ion.channels().to_vec();
        // Two entries per column: general sparse path.
        let mixed = pauli::embed(n, 0, Axis::X) + pauli::embed(n, 1, Axis::Y) * c(0.5);
        channels.push(Channel { operator: mixed, rate: 0.3 });
        // Cyclic shift: one entry per column but no common bit flip.
        let shift = CMatrix::from_fn(8, 8, |r, col| if r == (col + 1) % 8 { c(1.0) } else { c(0.0) });
        channels.push(Channel { operator: shift, rate: 0.05 });
        let model = LindbladModel::new(h, channels).unwrap();
        let rho = crate::models::build_state(&StateSpec::SpinCoherent { n, direction: [0.3, -0.5, 0.8] }).unwrap();
        let r = &(rho.matrix() * c(0.7) + CMatrix::identity(8, 8) * c(0.3 / 8.0));
        assert!((model.rhs(r) - dense_rhs(&model, r)).norm() < 1e-13);
    }

    #[test]
    fn rhs_on_non_qubit_dimension() {
        let h = CMatrix::from_fn(3, 3, |r, col| c((r + col) as f64) + I * (r as f64 - col as f64));
        let l = CMatrix::from_fn(3, 3, |r, col| c(0.1 * (r * 3 + col) as f64));
        let model = LindbladModel::new(h, vec![Channel { operator: l, rate: 0.4 }]).unwrap();
        let r = CMatrix::from_fn(3, 3, |r, col| if r == col { c(0.2 + 0.2 * r as f64) } else { c(0.05) + I * (0.01 * (col as f64 - r as f64)) });
        assert!((model.rhs(&r) - dense_rhs(&model, &r)).norm() < 1e-13);
    }

    #[test]
    fn grid_validation() {
        let rho = DensityMatrix::maximally_mixed(1);
        let model = LindbladModel::new(CMatrix::zeros(2, 2), vec![]).unwrap();
        let cfg = IntegratorConfig::default();
        assert!(lindblad_evolve(&rho, &model, &[0.1, 0.2], &cfg).is_err());
        assert!(lindblad_evolve(&rho, &model, &[0.0, 0.2, 0.2], &cfg).is_err());
        assert!(LindbladModel::new(CMatrix::zeros(2, 2), vec![Channel { operator: CMatrix::zeros(2, 2), rate: -1.0 }]).is_err());
    }
}
