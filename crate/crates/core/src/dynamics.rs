//! Time propagation.
//!
//! Closed systems are propagated exactly through the eigen-decomposition of the
//! (time-independent) Hamiltonian. Open systems integrate the Lindblad master
//! equation
//!
//! ```text
//! dρ/dt = −i[H, ρ] + Σ_j (γ_j / 2)(2 L_j ρ L_j† − L_j† L_j ρ − ρ L_j† L_j)
//! ```
//!
//! with fixed-step classic RK4. The step is validated once per run by a
//! step-halving probe; the density matrix is re-symmetrized after every step.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, Operator, StateVector};
use crate::linalg::{self, c, hermitian_eigen, max_abs, CMatrix, C64, I};
use crate::models::Dissipator;

/// Tolerance on `‖H − H†‖` relative to `max(1, ‖H‖)`.
const HAMILTONIAN_HERMITIAN_TOLERANCE: f64 = 1e-12;

/// Per-step symmetrization correction above which a warning is logged.
const SYMMETRIZATION_WARNING: f64 = 1e-10;

/// Steady state: successive grid states differ by less than this (max entry)...
pub const STEADY_STATE_THRESHOLD: f64 = 1e-7;
/// ...over this trailing fraction of the grid.
pub const STEADY_STATE_WINDOW: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub n_points: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, n_points: usize) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::InvalidParameter(format!("time grid needs at least 2 points, got {n_points}")));
        }
        if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
            return Err(Error::InvalidParameter(format!("time grid needs t1 > t0, got [{t0}, {t1}]")));
        }
        Ok(Self { t0, t1, n_points })
    }

    pub fn spacing(&self) -> f64 {
        (self.t1 - self.t0) / (self.n_points - 1) as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k + 1 == self.n_points {
            self.t1
        } else {
            self.t0 + k as f64 * self.spacing()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.time(k)).collect()
    }
}

#[derive(Debug, Clone)]
pub enum States {
    Pure(Vec<StateVector>),
    Mixed(Vec<DensityMatrix>),
}

impl States {
    pub fn len(&self) -> usize {
        match self {
            States::Pure(v) => v.len(),
            States::Mixed(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// States on a time grid plus named per-time scalar series.
#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: TimeGrid,
    states: States,
    scalars: BTreeMap<String, Vec<f64>>,
    step: Option<f64>,
}

impl Trajectory {
    pub fn new(grid: TimeGrid, states: States) -> Result<Self> {
        if states.len() != grid.n_points {
            return Err(Error::DimensionMismatch { expected: grid.n_points, actual: states.len() });
        }
        Ok(Self { grid, states, scalars: BTreeMap::new(), step: None })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Integration step used by the master-equation solver, if any.
    pub fn step(&self) -> Option<f64> {
        self.step
    }

    pub fn states(&self) -> &States {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.grid.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn density(&self, k: usize) -> DensityMatrix {
        match &self.states {
            States::Pure(v) => v[k].to_density(),
            States::Mixed(v) => v[k].clone(),
        }
    }

    pub fn pure_states(&self) -> Option<&[StateVector]> {
        match &self.states {
            States::Pure(v) => Some(v),
            States::Mixed(_) => None,
        }
    }

    pub fn mixed_states(&self) -> Option<&[DensityMatrix]> {
        match &self.states {
            States::Pure(_) => None,
            States::Mixed(v) => Some(v),
        }
    }

    pub fn scalars(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.scalars
    }

    pub fn scalar(&self, name: &str) -> Option<&[f64]> {
        self.scalars.get(name).map(Vec::as_slice)
    }

    pub fn insert_scalar(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        if values.len() != self.grid.n_points {
            return Err(Error::DimensionMismatch { expected: self.grid.n_points, actual: values.len() });
        }
        self.scalars.insert(name.into(), values);
        Ok(())
    }

    /// Evaluates `f` on the density matrix at every grid point and stores the series.
    pub fn record(&mut self, name: impl Into<String>, f: impl Fn(&DensityMatrix) -> Result<f64>) -> Result<&[f64]> {
        let values = (0..self.len()).map(|k| f(&self.density(k))).collect::<Result<Vec<_>>>()?;
        let name = name.into();
        self.insert_scalar(name.clone(), values)?;
        Ok(&self.scalars[&name])
    }
}

fn check_hamiltonian(h: &Operator) -> Result<()> {
    let scale = h.max_abs().max(1.0);
    let err = h.hermiticity_error();
    if err > HAMILTONIAN_HERMITIAN_TOLERANCE * scale {
        return Err(Error::NotHermitian(err));
    }
    Ok(())
}

/// Cached eigen-decomposition of a time-independent Hamiltonian.
#[derive(Debug, Clone)]
pub struct Propagator {
    energies: Vec<f64>,
    vectors: CMatrix,
}

impl Propagator {
    pub fn new(h: &Operator) -> Result<Self> {
        check_hamiltonian(h)?;
        let (energies, vectors) = hermitian_eigen(h.matrix());
        Ok(Self { energies, vectors })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// `exp(−iHt)`.
    pub fn at(&self, t: f64) -> CMatrix {
        linalg::spectral_map(&self.energies, &self.vectors, |e| (-I * e * t).exp())
    }

    fn evolve_vector(&self, psi0_eigen: &linalg::CVector, t: f64) -> linalg::CVector {
        let phased = linalg::CVector::from_iterator(
            psi0_eigen.len(),
            psi0_eigen.iter().zip(&self.energies).map(|(z, &e)| z * (-I * e * t).exp()),
        );
        &self.vectors * phased
    }
}

/// `|ψ(t)⟩ = exp(−iHt)|ψ(0)⟩` on every grid point. Records the `norm` series.
pub fn evolve_unitary(h: &Operator, psi0: &StateVector, grid: &TimeGrid) -> Result<Trajectory> {
    if h.space() != psi0.space() {
        return Err(Error::DimensionMismatch { expected: h.dim(), actual: psi0.dim() });
    }
    let prop = Propagator::new(h)?;
    let in_eigenbasis = prop.vectors.adjoint() * psi0.amplitudes();
    let states: Vec<StateVector> = grid
        .times()
        .into_iter()
        .map(|t| {
            // The initial point is returned as given rather than round-tripped through the eigenbasis.
            let amplitudes = if t == grid.t0 { psi0.amplitudes().clone() } else { prop.evolve_vector(&in_eigenbasis, t - grid.t0) };
            StateVector::from_parts_unchecked(psi0.space().clone(), amplitudes)
        })
        .collect();
    let norms = states.iter().map(StateVector::norm).collect();
    let mut traj = Trajectory::new(*grid, States::Pure(states))?;
    traj.insert_scalar("norm", norms)?;
    Ok(traj)
}

/// `ρ(t) = exp(−iHt) ρ(0) exp(iHt)` on every grid point. Records `trace`.
pub fn evolve_unitary_mixed(h: &Operator, rho0: &DensityMatrix, grid: &TimeGrid) -> Result<Trajectory> {
    if h.space() != rho0.space() {
        return Err(Error::DimensionMismatch { expected: h.dim(), actual: rho0.dim() });
    }
    let prop = Propagator::new(h)?;
    let in_eigenbasis = prop.vectors.adjoint() * rho0.matrix() * &prop.vectors;
    let n = h.dim();
    let states: Vec<DensityMatrix> = grid
        .times()
        .into_iter()
        .map(|t| {
            if t == grid.t0 {
                return rho0.clone();
            }
            let t = t - grid.t0;
            let phases: Vec<C64> = prop.energies.iter().map(|&e| (-I * e * t).exp()).collect();
            let rotated = CMatrix::from_fn(n, n, |i, j| in_eigenbasis[(i, j)] * phases[i] * phases[j].conj());
            let m = &prop.vectors * rotated * prop.vectors.adjoint();
            DensityMatrix::from_parts_unchecked(rho0.space().clone(), linalg::symmetrize(&m))
        })
        .collect();
    let traces = states.iter().map(|r| r.trace().re).collect();
    let mut traj = Trajectory::new(*grid, States::Mixed(states))?;
    traj.insert_scalar("trace", traces)?;
    Ok(traj)
}

/// Non-zero entries of a dense matrix, for cheap products with the density matrix.
#[derive(Debug, Clone)]
struct SparseEntries(Vec<(usize, usize, C64)>);

impl SparseEntries {
    fn from_dense(m: &CMatrix) -> Self {
        let mut entries = Vec::new();
        for col in 0..m.ncols() {
            for row in 0..m.nrows() {
                let z = m[(row, col)];
                if z != c(0.0, 0.0) {
                    entries.push((row, col, z));
                }
            }
        }
        Self(entries)
    }

    /// `out = self · x`
    fn left_mul(&self, x: &CMatrix, out: &mut CMatrix) {
        out.fill(c(0.0, 0.0));
        let n = x.ncols();
        for &(r, k, v) in &self.0 {
            for j in 0..n {
                out[(r, j)] += v * x[(k, j)];
            }
        }
    }
}

/// Lindblad generator split as `−i(H_eff ρ − ρ H_eff†) + Σ γ L ρ L†` with
/// `H_eff = H − (i/2) Σ γ L†L`.
struct Generator {
    heff: SparseEntries,
    jumps: Vec<(f64, SparseEntries)>,
    scratch: CMatrix,
    scratch2: CMatrix,
}

impl Generator {
    fn new(h: &Operator, dissipators: &[Dissipator]) -> Self {
        let mut heff = h.matrix().clone();
        for d in dissipators {
            let l = d.jump.matrix();
            heff -= (l.adjoint() * l) * c(0.0, 0.5 * d.rate);
        }
        let n = h.dim();
        Self {
            heff: SparseEntries::from_dense(&heff),
            jumps: dissipators.iter().map(|d| (d.rate, SparseEntries::from_dense(d.jump.matrix()))).collect(),
            scratch: CMatrix::zeros(n, n),
            scratch2: CMatrix::zeros(n, n),
        }
    }

    /// Writes `L[ρ]` into `out`. `ρ` must be Hermitian.
    fn apply(&mut self, rho: &CMatrix, out: &mut CMatrix) {
        let n = rho.nrows();
        self.heff.left_mul(rho, &mut self.scratch);
        // ρ H_eff† = (H_eff ρ)† for Hermitian ρ.
        for j in 0..n {
            for i in 0..n {
                out[(i, j)] = -I * self.scratch[(i, j)] + I * self.scratch[(j, i)].conj();
            }
        }
        for (rate, l) in &self.jumps {
            l.left_mul(rho, &mut self.scratch);
            // L ρ L† = (L (Lρ)†)†
            let lr_adj = self.scratch.adjoint();
            l.left_mul(&lr_adj, &mut self.scratch2);
            for j in 0..n {
                for i in 0..n {
                    out[(i, j)] += self.scratch2[(j, i)].conj() * *rate;
                }
            }
        }
    }

    /// Upper bound on the generator norm, used to seed the step size.
    fn scale(&self) -> f64 {
        let h: f64 = self.heff.0.iter().map(|(_, _, z)| z.norm()).fold(0.0, f64::max);
        let j: f64 = self.jumps.iter().map(|(g, l)| g * l.0.iter().map(|(_, _, z)| z.norm_sqr()).fold(0.0, f64::max)).sum();
        let rows = (self.heff.0.len() as f64 / self.scratch.nrows().max(1) as f64).max(1.0);
        (h * rows + j).max(1e-12)
    }
}

/// `y += alpha · x`
fn add_scaled(y: &mut CMatrix, alpha: C64, x: &CMatrix) {
    for (yi, xi) in y.iter_mut().zip(x.iter()) {
        *yi += alpha * xi;
    }
}

struct Rk4 {
    generator: Generator,
    k1: CMatrix,
    k2: CMatrix,
    k3: CMatrix,
    k4: CMatrix,
    tmp: CMatrix,
    max_correction: f64,
}

impl Rk4 {
    fn new(generator: Generator, n: usize) -> Self {
        let z = CMatrix::zeros(n, n);
        Self { generator, k1: z.clone(), k2: z.clone(), k3: z.clone(), k4: z.clone(), tmp: z, max_correction: 0.0 }
    }

    fn step(&mut self, rho: &mut CMatrix, h: f64) {
        let half = c(0.5 * h, 0.0);
        let full = c(h, 0.0);
        self.generator.apply(rho, &mut self.k1);
        self.tmp.copy_from(rho);
        add_scaled(&mut self.tmp, half, &self.k1);
        self.generator.apply(&self.tmp, &mut self.k2);
        self.tmp.copy_from(rho);
        add_scaled(&mut self.tmp, half, &self.k2);
        self.generator.apply(&self.tmp, &mut self.k3);
        self.tmp.copy_from(rho);
        add_scaled(&mut self.tmp, full, &self.k3);
        self.generator.apply(&self.tmp, &mut self.k4);
        let sixth = c(h / 6.0, 0.0);
        let third = c(h / 3.0, 0.0);
        add_scaled(rho, sixth, &self.k1);
        add_scaled(rho, third, &self.k2);
        add_scaled(rho, third, &self.k3);
        add_scaled(rho, sixth, &self.k4);

        let n = rho.nrows();
        let mut correction: f64 = 0.0;
        for j in 0..n {
            for i in j..n {
                let avg = (rho[(i, j)] + rho[(j, i)].conj()) * 0.5;
                correction = correction.max((rho[(i, j)] - avg).norm());
                rho[(i, j)] = avg;
                rho[(j, i)] = avg.conj();
            }
        }
        self.max_correction = self.max_correction.max(correction);
    }

    fn advance(&mut self, rho: &mut CMatrix, span: f64, dt: f64) {
        let steps = (span / dt).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        for _ in 0..steps {
            self.step(rho, h);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LindbladOptions {
    /// Fixed number of RK4 steps per unit time. `None` selects the step by
    /// halving until a probe integration changes by less than `halving_tolerance`.
    pub steps_per_unit: Option<f64>,
    pub halving_tolerance: f64,
    pub max_refinements: u32,
}

impl Default for LindbladOptions {
    fn default() -> Self {
        Self { steps_per_unit: None, halving_tolerance: 1e-9, max_refinements: 16 }
    }
}

/// Integrates the master equation with default options.
pub fn evolve_lindblad(h: &Operator, dissipators: &[Dissipator], rho0: &DensityMatrix, grid: &TimeGrid) -> Result<Trajectory> {
    evolve_lindblad_with(h, dissipators, rho0, grid, &LindbladOptions::default())
}

/// Integrates the master equation. Records `trace`, `min_eigenvalue` and the
/// largest per-step Hermitian symmetrization correction (`symmetrization`).
pub fn evolve_lindblad_with(
    h: &Operator,
    dissipators: &[Dissipator],
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    options: &LindbladOptions,
) -> Result<Trajectory> {
    check_hamiltonian(h)?;
    if h.space() != rho0.space() {
        return Err(Error::DimensionMismatch { expected: h.dim(), actual: rho0.dim() });
    }
    for d in dissipators {
        if d.jump.space() != h.space() {
            return Err(Error::DimensionMismatch { expected: h.dim(), actual: d.jump.dim() });
        }
        if !(d.rate >= 0.0) {
            return Err(Error::InvalidParameter(format!("negative dissipation rate {}", d.rate)));
        }
    }
    let n = h.dim();
    let generator = Generator::new(h, dissipators);
    let dt = match options.steps_per_unit {
        Some(s) if s > 0.0 => 1.0 / s,
        Some(s) => return Err(Error::InvalidParameter(format!("steps_per_unit must be positive, got {s}"))),
        None => select_step(h, dissipators, rho0, grid, options, generator.scale())?,
    };
    log::debug!("lindblad: dt = {dt:.3e} over [{}, {}]", grid.t0, grid.t1);

    let mut rk = Rk4::new(generator, n);
    let mut rho = rho0.matrix().clone();
    let mut states = Vec::with_capacity(grid.n_points);
    let mut corrections = Vec::with_capacity(grid.n_points);
    states.push(DensityMatrix::from_parts_unchecked(rho0.space().clone(), rho.clone()));
    corrections.push(0.0);
    for k in 1..grid.n_points {
        rk.max_correction = 0.0;
        rk.advance(&mut rho, grid.time(k) - grid.time(k - 1), dt);
        if rk.max_correction > SYMMETRIZATION_WARNING {
            log::warn!("lindblad: symmetrization correction {:.3e} at t = {}", rk.max_correction, grid.time(k));
        }
        corrections.push(rk.max_correction);
        states.push(DensityMatrix::from_parts_unchecked(rho0.space().clone(), rho.clone()));
    }
    let traces = states.iter().map(|r| r.trace().re).collect();
    let min_eigs = states.iter().map(DensityMatrix::min_eigenvalue).collect();
    let mut traj = Trajectory::new(*grid, States::Mixed(states))?;
    traj.insert_scalar("trace", traces)?;
    traj.insert_scalar("min_eigenvalue", min_eigs)?;
    traj.insert_scalar("symmetrization", corrections)?;
    traj.step = Some(dt);
    Ok(traj)
}

/// Halves the step until integrating a probe window with `dt` and `dt/2`
/// agrees to `halving_tolerance` (max entry).
fn select_step(
    h: &Operator,
    dissipators: &[Dissipator],
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    options: &LindbladOptions,
    scale: f64,
) -> Result<f64> {
    let span = grid.t1 - grid.t0;
    let probe = span.min(grid.spacing().max(1.0));
    let mut dt = grid.spacing().min(0.5 / scale).min(probe);
    let mut worst = f64::INFINITY;
    for _ in 0..=options.max_refinements {
        let mut coarse = rho0.matrix().clone();
        let mut fine = coarse.clone();
        Rk4::new(Generator::new(h, dissipators), h.dim()).advance(&mut coarse, probe, dt);
        Rk4::new(Generator::new(h, dissipators), h.dim()).advance(&mut fine, probe, 0.5 * dt);
        worst = max_abs(&(coarse - fine));
        if worst < options.halving_tolerance {
            return Ok(dt);
        }
        dt *= 0.5;
    }
    Err(Error::Integration { worst, tolerance: options.halving_tolerance, refinements: options.max_refinements })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateReport {
    pub converged: bool,
    /// Largest max-entry change between successive grid states in the window.
    pub max_change: f64,
    /// Last value of every recorded scalar series.
    pub final_scalars: BTreeMap<String, f64>,
}

impl SteadyStateReport {
    pub fn final_scalar(&self, name: &str) -> Option<f64> {
        self.final_scalars.get(name).copied()
    }
}

/// Convergence test over the trailing [`STEADY_STATE_WINDOW`] of a mixed-state trajectory.
pub fn steady_state_probe(traj: &Trajectory) -> Result<SteadyStateReport> {
    let states = traj
        .mixed_states()
        .ok_or_else(|| Error::InvalidParameter("steady-state probe needs a density-matrix trajectory".into()))?;
    let n = states.len();
    let window = ((n as f64 * STEADY_STATE_WINDOW).ceil() as usize).clamp(1, n - 1);
    let max_change = (n - window..n)
        .map(|k| max_abs(&(states[k].matrix() - states[k - 1].matrix())))
        .fold(0.0, f64::max);
    let final_scalars = traj.scalars().iter().map(|(k, v)| (k.clone(), *v.last().unwrap())).collect();
    Ok(SteadyStateReport { converged: max_change < STEADY_STATE_THRESHOLD, max_change, final_scalars })
}
