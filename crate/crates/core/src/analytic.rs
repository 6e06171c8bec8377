//! Closed-form solutions: one-excitation amplitudes of the mediated pair, the
//! cavity–mirror joint state for coherent inputs, and the product-form
//! cavity–mirror evolution operator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    coherent_amplitudes, fock_state, poisson_tail, required_coherent_dim, CompositeSpace, DensityMatrix, Operator,
    StateVector, COHERENT_TAIL_TOLERANCE,
};
use crate::linalg::{c, exp_anti_hermitian, CMatrix, CVector, C64, I};
use crate::models::OptomechParams;

/// Amplitudes on `|100⟩`, `|010⟩`, `|001⟩` for the initial state `|100⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneExcitationAmplitudes {
    pub alpha1: C64,
    pub alpha2: C64,
    pub alpha3: C64,
    /// `√(β² + 8κ²)`
    pub k1: f64,
}

impl OneExcitationAmplitudes {
    pub fn norm_sqr(&self) -> f64 {
        self.alpha1.norm_sqr() + self.alpha2.norm_sqr() + self.alpha3.norm_sqr()
    }

    pub fn as_array(&self) -> [C64; 3] {
        [self.alpha1, self.alpha2, self.alpha3]
    }

    /// Embeds the amplitudes in a three-mode space labelled in `a, b, c` order.
    pub fn to_state(&self, space: &CompositeSpace) -> Result<StateVector> {
        if space.modes().len() != 3 {
            return Err(Error::DimensionMismatch { expected: 3, actual: space.modes().len() });
        }
        let mut v = CVector::zeros(space.total_dim());
        for (occ, amp) in [[1, 0, 0], [0, 1, 0], [0, 0, 1]].iter().zip(self.as_array()) {
            v[space.index_of(occ)?] = amp;
        }
        StateVector::new(space.clone(), v)
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::InvalidParameter(format!("kappa must be positive, got {kappa}")));
    }
    Ok(())
}

/// One-excitation solution for `H = β(n_a² + n_b²) + κ(a†c + b†c + h.c.)`
/// starting from `|100⟩`, up to the global phase `e^{iβt}`:
///
/// ```text
/// α1 = 1/2 + (e^{iβt/2}/2)[cos(K₁t/2) − i(β/K₁) sin(K₁t/2)]
/// α2 = α1 − 1
/// α3 = −2i(κ/K₁) e^{iβt/2} sin(K₁t/2)
/// ```
///
/// The prefactor carries `e^{+iβt/2}`. With `e^{−iβt/2}` (see
/// [`one_excitation_amplitudes_conjugate_phase`]) the expressions no longer
/// solve the Schrödinger equation once `β ≠ 0`.
pub fn one_excitation_amplitudes(beta: f64, kappa: f64, t: f64) -> Result<OneExcitationAmplitudes> {
    one_excitation_with_phase(beta, kappa, t, 1.0)
}

/// Same expressions with the prefactor `e^{−iβt/2}`. Kept for comparison; the
/// overlap with the exact state drops to roughly `|cos(βt/2)|`.
pub fn one_excitation_amplitudes_conjugate_phase(beta: f64, kappa: f64, t: f64) -> Result<OneExcitationAmplitudes> {
    one_excitation_with_phase(beta, kappa, t, -1.0)
}

fn one_excitation_with_phase(beta: f64, kappa: f64, t: f64, sign: f64) -> Result<OneExcitationAmplitudes> {
    check_kappa(kappa)?;
    let k1 = (beta * beta + 8.0 * kappa * kappa).sqrt();
    let (s, co) = (0.5 * k1 * t).sin_cos();
    let prefactor = (I * (sign * 0.5 * beta * t)).exp();
    let oscillating = prefactor * c(co, -beta / k1 * s) * 0.5;
    Ok(OneExcitationAmplitudes {
        alpha1: c(0.5, 0.0) + oscillating,
        alpha2: c(-0.5, 0.0) + oscillating,
        alpha3: prefactor * c(0.0, -2.0 * kappa / k1 * s),
        k1,
    })
}

/// `β = 0` form: `α1 = (1 + cos√2κt)/2`, `α2 = (−1 + cos√2κt)/2`, `α3 = −(i/√2) sin√2κt`.
pub fn one_excitation_linear_limit(kappa: f64, t: f64) -> Result<OneExcitationAmplitudes> {
    check_kappa(kappa)?;
    let w = 2f64.sqrt() * kappa * t;
    Ok(OneExcitationAmplitudes {
        alpha1: c(0.5 * (1.0 + w.cos()), 0.0),
        alpha2: c(0.5 * (-1.0 + w.cos()), 0.0),
        alpha3: c(0.0, -w.sin() / 2f64.sqrt()),
        k1: 2.0 * 2f64.sqrt() * kappa,
    })
}

/// Mirror coherent amplitude in the branch with `n` cavity photons:
/// `η e^{−iζt} + (g_k/ζ) n (1 − e^{−iζt})`.
pub fn eta_tilde(eta: C64, n: usize, p: &OptomechParams, t: f64) -> C64 {
    let rot = (-I * (p.zeta() * t)).exp();
    eta * rot + (c(1.0, 0.0) - rot) * (p.displacement_per_photon() * n as f64)
}

/// Cavity coherent amplitude `alpha`, mirror coherent amplitude `eta`, at time `t`.
///
/// `dims` is `(n_max, m_max)`, the retained cavity and mirror Fock levels.
/// [`MirrorJointState::new`] picks them from the tail rule; explicit dims are
/// validated against `tail_tolerance`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MirrorJointState {
    pub alpha: C64,
    pub eta: C64,
    pub params: OptomechParams,
    pub t: f64,
    pub n_max: usize,
    pub m_max: usize,
    pub tail_tolerance: f64,
}

impl MirrorJointState {
    /// Truncation from the coherent tail rule. The mirror bound is taken for the
    /// largest branch amplitude and then doubled, so that amplitudes (not just
    /// probabilities) beyond the cut are negligible.
    pub fn new(alpha: C64, eta: C64, params: OptomechParams, t: f64) -> Self {
        let tol = COHERENT_TAIL_TOLERANCE;
        let n_max = required_coherent_dim(alpha.norm_sqr(), tol);
        let widest = (0..n_max).map(|n| eta_tilde(eta, n, &params, t).norm()).fold(0.0, f64::max);
        let m_max = 2 * required_coherent_dim(widest * widest, tol);
        Self { alpha, eta, params, t, n_max, m_max, tail_tolerance: tol }
    }

    pub fn with_dims(alpha: C64, eta: C64, params: OptomechParams, t: f64, dims: (usize, usize)) -> Self {
        Self { alpha, eta, params, t, n_max: dims.0, m_max: dims.1, tail_tolerance: COHERENT_TAIL_TOLERANCE }
    }

    pub fn with_tail_tolerance(self, tail_tolerance: f64) -> Self {
        Self { tail_tolerance, ..self }
    }

    pub fn at(self, t: f64) -> Self {
        Self { t, ..self }
    }

    pub fn space(&self) -> Result<CompositeSpace> {
        CompositeSpace::from_dims(&[("k", self.n_max), ("a", self.m_max)])
    }

    fn check_tail(&self) -> Result<()> {
        let tol = self.tail_tolerance;
        let cavity_tail = poisson_tail(self.alpha.norm_sqr(), self.n_max);
        if cavity_tail >= tol {
            return Err(Error::TruncationInsufficient {
                dim: self.n_max,
                required: required_coherent_dim(self.alpha.norm_sqr(), tol),
                tail: cavity_tail,
                tolerance: tol,
            });
        }
        for n in 0..self.n_max {
            let mean = eta_tilde(self.eta, n, &self.params, self.t).norm_sqr();
            let tail = poisson_tail(mean, self.m_max);
            if tail >= tol {
                return Err(Error::TruncationInsufficient {
                    dim: self.m_max,
                    required: required_coherent_dim(mean, tol),
                    tail,
                    tolerance: tol,
                });
            }
        }
        Ok(())
    }

    /// Cavity weights `|c_n|²` (Poisson, renormalized over the retained levels)
    /// and the normalized mirror branch `e^{−iβtm²}|η̃_n⟩` for each `n`.
    fn branches(&self) -> Result<Vec<(C64, CVector)>> {
        self.params.validate()?;
        self.check_tail()?;
        let p = &self.params;
        let x2 = p.displacement_per_photon().powi(2);
        let zt = p.zeta() * self.t;
        let cavity = coherent_amplitudes(self.n_max, self.alpha);
        let cavity_norm = cavity.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let kerr: Vec<C64> = (0..self.m_max).map(|m| (-I * (p.beta * self.t * (m * m) as f64)).exp()).collect();
        Ok((0..self.n_max)
            .map(|n| {
                let nf = n as f64;
                let phase = x2 * nf * nf * (p.omega_m * self.t - zt.sin()) - nf * p.omega_k * self.t;
                let cn = cavity[n] / cavity_norm * (I * phase).exp();
                let mut mirror = CVector::from_vec(coherent_amplitudes(self.m_max, eta_tilde(self.eta, n, p, self.t)));
                let norm = mirror.norm();
                for (z, k) in mirror.iter_mut().zip(&kerr) {
                    *z = *z * k / norm;
                }
                (cn, mirror)
            })
            .collect())
    }
}

/// `Σ_n c_n e^{i(g/ζ)²n²(ω_m t − sin ζt)} e^{−inω_k t} |n⟩ ⊗ e^{−iβt n_a²}|η̃_n⟩`.
pub fn mirror_joint_state(spec: &MirrorJointState) -> Result<StateVector> {
    let branches = spec.branches()?;
    let space = spec.space()?;
    let mut v = CVector::zeros(space.total_dim());
    for (n, (cn, mirror)) in branches.iter().enumerate() {
        for (m, z) in mirror.iter().enumerate() {
            v[n * spec.m_max + m] = cn * z;
        }
    }
    StateVector::normalized(space, v)
}

/// Mirror state after tracing out the cavity, summed branch by branch:
/// `Σ_n P(n) |η̃_n⟩⟨η̃_n|` with the Kerr phases on the Fock index and
/// Poisson weights `P(n) = e^{−|α|²}|α|^{2n}/n!`.
pub fn mirror_reduced_density(spec: &MirrorJointState) -> Result<DensityMatrix> {
    let branches = spec.branches()?;
    let m = spec.m_max;
    let mut rho = CMatrix::zeros(m, m);
    for (cn, mirror) in &branches {
        rho += (mirror * mirror.adjoint()) * c(cn.norm_sqr(), 0.0);
    }
    DensityMatrix::new(CompositeSpace::single("a", m)?, rho)
}

/// Product-form cavity–mirror evolution operator `P · E · R` with
///
/// ```text
/// P = exp{−i[ω_k t n_k − (g/ζ)²(ω_m t − sin ζt) n_k² + βt n_a²]}
/// E = exp[(g/ζ) n_k ((1 − e^{−iζt}) a† − (1 − e^{iζt}) a)]
/// R = exp(−iζt n_a)
/// ```
///
/// `E` is block diagonal in `n_k` and exponentiated block by block.
pub fn evolution_operator(p: &OptomechParams, t: f64) -> Result<Operator> {
    p.validate()?;
    let space = p.space()?;
    let (dk, da) = p.dims;
    let x = p.displacement_per_photon();
    let zt = p.zeta() * t;
    let shift = c(1.0, 0.0) - (-I * zt).exp();

    let mut u = CMatrix::zeros(dk * da, dk * da);
    let a = crate::hilbert::annihilation(da)?.into_matrix();
    let adag = a.adjoint();
    for n in 0..dk {
        let d = shift * (x * n as f64);
        let generator = &adag * d - &a * d.conj();
        let block = exp_anti_hermitian(&generator);
        let nf = n as f64;
        let cavity_phase = p.omega_k * t * nf - x * x * (p.omega_m * t - zt.sin()) * nf * nf;
        for i in 0..da {
            let left = (-I * (cavity_phase + p.beta * t * (i * i) as f64)).exp();
            for j in 0..da {
                let right = (-I * (zt * j as f64)).exp();
                u[(n * da + i, n * da + j)] = left * block[(i, j)] * right;
            }
        }
    }
    Operator::new(space, u)
}

/// `exp(−i H_trans t)`, diagonal with phases
/// `−iω_k t n_k + i(g²ω_m/ζ²) t n_k² − iζt n_a − iβt n_a²`.
pub fn transformed_evolution_operator(p: &OptomechParams, t: f64) -> Result<Operator> {
    p.validate()?;
    let space = p.space()?;
    let zeta = p.zeta();
    let shift = p.g_k * p.g_k * p.omega_m / (zeta * zeta);
    let matrix = crate::linalg::diagonal(space.total_dim(), |i| {
        let occ = space.occupations(i);
        let (nk, na) = (occ[0] as f64, occ[1] as f64);
        (I * (-p.omega_k * t * nk + shift * t * nk * nk - zeta * t * na - p.beta * t * na * na)).exp()
    });
    Operator::new(space, matrix)
}

/// `|α⟩ ⊗ |η⟩` on the optomechanical space, checked against the tail rule.
pub fn coherent_product(p: &OptomechParams, alpha: C64, eta: C64, tolerance: f64) -> Result<StateVector> {
    let cavity = crate::hilbert::coherent_state_with_tolerance(p.dims.0, alpha, tolerance)?
        .relabel(&CompositeSpace::single("k", p.dims.0)?)?;
    let mirror = crate::hilbert::coherent_state_with_tolerance(p.dims.1, eta, tolerance)?
        .relabel(&CompositeSpace::single("a", p.dims.1)?)?;
    cavity.tensor(&mirror)
}

/// Convenience: the one-excitation initial state `|100⟩` on a tripartite space.
pub fn one_excitation_initial(space: &CompositeSpace) -> Result<StateVector> {
    fock_state(space, &[1, 0, 0])
}
