//! Hamiltonians and dissipators for the two physical settings: a pair of
//! anharmonic oscillators `a`, `b` coupled through a linear mediator `c`, and a
//! cavity mode `k` pushing on an anharmonic mirror `a` by radiation pressure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{mode_annihilation, mode_number, CompositeSpace, Operator};
use crate::linalg::c;

/// Reduced Planck constant in J·s.
pub const HBAR: f64 = 1.054571817e-34;

/// Ratio `g_k / ζ` above which the leading-order polaron treatment is flagged.
pub const WEAK_COUPLING_LIMIT: f64 = 0.2;

/// Parameters of the mediated pair. Frequencies are in units of `kappa` by default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripartiteParams {
    pub omega_m: f64,
    pub omega: f64,
    pub beta: f64,
    pub kappa: f64,
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub gamma_c: f64,
    pub dims: [usize; 3],
}

impl Default for TripartiteParams {
    fn default() -> Self {
        Self {
            omega_m: 20.0,
            omega: 20.0,
            beta: 0.0,
            kappa: 1.0,
            gamma_a: 0.0,
            gamma_b: 0.0,
            gamma_c: 0.0,
            dims: [4, 4, 2],
        }
    }
}

impl TripartiteParams {
    pub fn with_beta(beta: f64) -> Self {
        Self { beta, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, rate) in [("gamma_a", self.gamma_a), ("gamma_b", self.gamma_b), ("gamma_c", self.gamma_c)] {
            if !(rate >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be non-negative, got {rate}")));
            }
        }
        for value in [self.omega_m, self.omega, self.beta, self.kappa] {
            if !value.is_finite() {
                return Err(Error::InvalidParameter("frequencies must be finite".into()));
            }
        }
        if let Some(&d) = self.dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidDimension { dim: d });
        }
        if (self.omega - self.omega_m).abs() > 0.0 {
            log::debug!("mediator detuned from the oscillators: omega - omega_m = {}", self.omega - self.omega_m);
        }
        Ok(())
    }

    pub fn space(&self) -> Result<CompositeSpace> {
        CompositeSpace::from_dims(&[("a", self.dims[0]), ("b", self.dims[1]), ("c", self.dims[2])])
    }
}

/// Frame in which the mediated-pair Hamiltonian is written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    /// `ω_m(n_a+n_b) + ω n_c + β(n_a²+n_a+n_b²+n_b) + κ(a†c + b†c + h.c.)`.
    Lab,
    /// Rotating at `ω_m` (oscillators) and `ω` (mediator):
    /// `β(n_a²+n_a+n_b²+n_b) + κ(a†c + b†c + h.c.)`.
    Interaction,
    /// Rotating frame in which the mediator is resonant with the shifted
    /// oscillator frequency `ω_m + β`, leaving `β(n_a²+n_b²) + κ(a†c + b†c + h.c.)`.
    ShiftedResonance,
}

pub fn build_tripartite_hamiltonian(p: &TripartiteParams, frame: Frame) -> Result<Operator> {
    p.validate()?;
    let space = p.space()?;
    let a = mode_annihilation(&space, "a")?;
    let b = mode_annihilation(&space, "b")?;
    let cc = mode_annihilation(&space, "c")?;
    let na = mode_number(&space, "a")?;
    let nb = mode_number(&space, "b")?;
    let nc = mode_number(&space, "c")?;

    let hop = a.adjoint().mul(&cc)?.add(&b.adjoint().mul(&cc)?)?;
    let coupling = hop.add(&hop.adjoint())?.scale_re(p.kappa);

    let quartic = |n: &Operator| n.mul(n);
    let kerr = quartic(&na)?.add(&quartic(&nb)?)?;
    let linear = na.add(&nb)?;

    let h = match frame {
        Frame::ShiftedResonance => kerr.scale_re(p.beta).add(&coupling)?,
        Frame::Interaction => kerr.add(&linear)?.scale_re(p.beta).add(&coupling)?,
        Frame::Lab => {
            let free = linear.scale_re(p.omega_m).add(&nc.scale_re(p.omega))?;
            free.add(&kerr.add(&linear)?.scale_re(p.beta))?.add(&coupling)?
        }
    };
    Ok(h)
}

/// Lab-frame Hamiltonian with the full quartic potential `(β/6)(x+x†)⁴` on each
/// anharmonic mode instead of its number-conserving part. Its excitation-conserving
/// part is `β(n²+n)` plus the constant `β/2` per mode, so differences against
/// [`Frame::Lab`] isolate what the rotating-wave step discards.
pub fn build_exact_quartic_hamiltonian(p: &TripartiteParams) -> Result<Operator> {
    p.validate()?;
    let space = p.space()?;
    let a = mode_annihilation(&space, "a")?;
    let b = mode_annihilation(&space, "b")?;
    let cc = mode_annihilation(&space, "c")?;
    let na = mode_number(&space, "a")?;
    let nb = mode_number(&space, "b")?;
    let nc = mode_number(&space, "c")?;

    let quartic = |x: &Operator| -> Result<Operator> {
        let q = x.add(&x.adjoint())?;
        let q2 = q.mul(&q)?;
        q2.mul(&q2)
    };
    let hop = a.adjoint().mul(&cc)?.add(&b.adjoint().mul(&cc)?)?;
    let coupling = hop.add(&hop.adjoint())?.scale_re(p.kappa);
    let free = na.add(&nb)?.scale_re(p.omega_m).add(&nc.scale_re(p.omega))?;
    let anharmonic = quartic(&a)?.add(&quartic(&b)?)?.scale_re(p.beta / 6.0);
    free.add(&anharmonic)?.add(&coupling)
}

/// Zero-temperature jump operator with its rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Dissipator {
    pub rate: f64,
    pub jump: Operator,
}

/// Amplitude-damping channels on `a`, `b`, `c`; zero rates are omitted.
pub fn build_lindblad_ops(p: &TripartiteParams) -> Result<Vec<Dissipator>> {
    p.validate()?;
    let space = p.space()?;
    let mut out = Vec::new();
    for (label, rate) in [("a", p.gamma_a), ("b", p.gamma_b), ("c", p.gamma_c)] {
        if rate > 0.0 {
            out.push(Dissipator { rate, jump: mode_annihilation(&space, label)? });
        }
    }
    Ok(out)
}

/// Cavity mode `k` and anharmonic mirror `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptomechParams {
    pub omega_k: f64,
    pub omega_m: f64,
    pub beta: f64,
    pub g_k: f64,
    /// `(dim_k, dim_a)`.
    pub dims: (usize, usize),
}

impl OptomechParams {
    /// Parameters in units of `ζ = ω_m + β`.
    pub fn dimensionless(beta_over_zeta: f64, g_over_zeta: f64, omega_k_over_zeta: f64, dims: (usize, usize)) -> Result<Self> {
        let p = Self { omega_k: omega_k_over_zeta, omega_m: 1.0 - beta_over_zeta, beta: beta_over_zeta, g_k: g_over_zeta, dims };
        p.validate()?;
        Ok(p)
    }

    /// Coupling from the cavity length `length` (m) and mirror mass `mass` (kg):
    /// `g_k = (ω_k / L) sqrt(ħ / 2 m ω_m)`. Frequencies in rad/s.
    pub fn from_si(omega_k: f64, omega_m: f64, beta: f64, length: f64, mass: f64, dims: (usize, usize)) -> Result<Self> {
        if !(length > 0.0 && mass > 0.0 && omega_m > 0.0) {
            return Err(Error::InvalidParameter("length, mass and omega_m must be positive".into()));
        }
        let g_k = (omega_k / length) * (HBAR / (2.0 * mass * omega_m)).sqrt();
        let p = Self { omega_k, omega_m, beta, g_k, dims };
        p.validate()?;
        Ok(p)
    }

    pub fn zeta(&self) -> f64 {
        self.omega_m + self.beta
    }

    /// `g_k / ζ`, the polaron displacement per photon.
    pub fn displacement_per_photon(&self) -> f64 {
        self.g_k / self.zeta()
    }

    pub fn validate(&self) -> Result<()> {
        for value in [self.omega_k, self.omega_m, self.beta, self.g_k] {
            if !value.is_finite() {
                return Err(Error::InvalidParameter("optomechanical parameters must be finite".into()));
            }
        }
        if self.zeta() <= 0.0 {
            return Err(Error::InvalidParameter(format!("zeta = omega_m + beta must be positive, got {}", self.zeta())));
        }
        for d in [self.dims.0, self.dims.1] {
            if d < 2 {
                return Err(Error::InvalidDimension { dim: d });
            }
        }
        let ratio = self.displacement_per_photon().abs();
        if ratio >= WEAK_COUPLING_LIMIT {
            log::warn!("g_k/zeta = {ratio:.3} is outside the weak-coupling regime (< {WEAK_COUPLING_LIMIT})");
        }
        Ok(())
    }

    pub fn with_dims(&self, dims: (usize, usize)) -> Self {
        Self { dims, ..*self }
    }

    pub fn space(&self) -> Result<CompositeSpace> {
        CompositeSpace::from_dims(&[("k", self.dims.0), ("a", self.dims.1)])
    }
}

/// `ω_k n_k + (ω_m+β) n_a + β n_a² − g_k n_k (a† + a)`.
pub fn build_optomech_hamiltonian(p: &OptomechParams) -> Result<Operator> {
    p.validate()?;
    let space = p.space()?;
    let nk = mode_number(&space, "k")?;
    let na = mode_number(&space, "a")?;
    let a = mode_annihilation(&space, "a")?;
    let x = a.add(&a.adjoint())?;
    nk.scale_re(p.omega_k)
        .add(&na.scale_re(p.zeta()))?
        .add(&na.mul(&na)?.scale_re(p.beta))?
        .sub(&nk.mul(&x)?.scale_re(p.g_k))
}

/// Leading-order polaron-transformed Hamiltonian, diagonal in the joint Fock basis:
/// `ω_k n_k + ζ n_a − (g_k² ω_m / ζ²) n_k² + β n_a²`.
pub fn build_transformed_optomech(p: &OptomechParams) -> Result<Operator> {
    p.validate()?;
    let space = p.space()?;
    let zeta = p.zeta();
    let shift = p.g_k * p.g_k * p.omega_m / (zeta * zeta);
    let diag = |nk: f64, na: f64| p.omega_k * nk + zeta * na - shift * nk * nk + p.beta * na * na;
    let n = space.total_dim();
    let matrix = crate::linalg::diagonal(n, |i| {
        let occ = space.occupations(i);
        c(diag(occ[0] as f64, occ[1] as f64), 0.0)
    });
    Operator::new(space, matrix)
}

/// Anti-Hermitian generator `S = −(g_k/ζ) n_k (a† − a)` of the polaron transform.
pub fn polaron_transform_s(p: &OptomechParams) -> Result<Operator> {
    p.validate()?;
    let space = p.space()?;
    let nk = mode_number(&space, "k")?;
    let a = mode_annihilation(&space, "a")?;
    let p_like = a.adjoint().sub(&a)?;
    Ok(nk.mul(&p_like)?.scale_re(-p.displacement_per_photon()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{exp_anti_hermitian, unitarity_error};
    use crate::hilbert::fock_state;

    fn element(h: &Operator, bra: &[usize], ket: &[usize]) -> num_complex::Complex64 {
        let s = h.space();
        h.matrix()[(s.index_of(bra).unwrap(), s.index_of(ket).unwrap())]
    }

    #[test]
    fn one_excitation_block_without_nonlinearity() {
        let p = TripartiteParams { kappa: 0.7, ..TripartiteParams::with_beta(0.0) };
        let h = build_tripartite_hamiltonian(&p, Frame::Interaction).unwrap();
        let basis = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];
        let expected = [[0.0, 0.0, 0.7], [0.0, 0.0, 0.7], [0.7, 0.7, 0.0]];
        for (i, bra) in basis.iter().enumerate() {
            for (j, ket) in basis.iter().enumerate() {
                assert!((element(&h, bra, ket) - c(expected[i][j], 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn kerr_diagonal_and_hermiticity() {
        let p = TripartiteParams::with_beta(0.5);
        let h = build_tripartite_hamiltonian(&p, Frame::Interaction).unwrap();
        assert!((element(&h, &[1, 0, 0], &[1, 0, 0]).re - 1.0).abs() < 1e-15);
        for frame in [Frame::Lab, Frame::Interaction, Frame::ShiftedResonance] {
            assert!(build_tripartite_hamiltonian(&p, frame).unwrap().hermiticity_error() < 1e-12);
        }
    }

    #[test]
    fn mode_difference_is_conserved_only_without_nonlinearity() {
        let difference = |beta: f64| {
            let p = TripartiteParams::with_beta(beta);
            let h = build_tripartite_hamiltonian(&p, Frame::Interaction).unwrap();
            let s = p.space().unwrap();
            let d = mode_annihilation(&s, "a").unwrap().sub(&mode_annihilation(&s, "b").unwrap()).unwrap();
            let comm = h.commutator(&d).unwrap();
            // Only states away from the truncation edge are meaningful.
            let mut worst: f64 = 0.0;
            for idx in 0..s.total_dim() {
                let occ = s.occupations(idx);
                if occ.iter().sum::<usize>() <= 2 {
                    let psi = fock_state(&s, &occ).unwrap();
                    worst = worst.max(comm.apply(&psi).unwrap().amplitudes().norm());
                }
            }
            worst
        };
        assert!(difference(0.0) < 1e-12);
        assert!(difference(0.5) > 0.1);
    }

    #[test]
    fn lab_minus_interaction_is_free_part_at_resonance() {
        let p = TripartiteParams { omega_m: 3.0, omega: 3.0, ..TripartiteParams::with_beta(0.3) };
        let lab = build_tripartite_hamiltonian(&p, Frame::Lab).unwrap();
        let int = build_tripartite_hamiltonian(&p, Frame::Interaction).unwrap();
        let s = p.space().unwrap();
        let free = mode_number(&s, "a")
            .unwrap()
            .add(&mode_number(&s, "b").unwrap())
            .unwrap()
            .add(&mode_number(&s, "c").unwrap())
            .unwrap()
            .scale_re(3.0);
        assert!(lab.sub(&int).unwrap().sub(&free).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn exact_quartic_reduces_to_rotating_wave_form() {
        let p = TripartiteParams { dims: [8, 8, 2], ..TripartiteParams::with_beta(0.2) };
        let exact = build_exact_quartic_hamiltonian(&p).unwrap();
        let rwa = build_tripartite_hamiltonian(&p, Frame::Lab).unwrap();
        let s = p.space().unwrap();
        let diff = exact.sub(&rwa).unwrap();
        let mut max_counter_rotating: f64 = 0.0;
        for i in 0..s.total_dim() {
            let oi = s.occupations(i);
            if oi[0] > 5 || oi[1] > 5 {
                continue;
            }
            for j in 0..s.total_dim() {
                let oj = s.occupations(j);
                if oj[0] > 5 || oj[1] > 5 {
                    continue;
                }
                let z = diff.matrix()[(i, j)];
                if i == j {
                    // β/2 per anharmonic mode
                    assert!((z.re - 0.2).abs() < 1e-12, "{oi:?}: {z}");
                } else if oi[0] + oi[1] == oj[0] + oj[1] && oi[2] == oj[2] {
                    assert!(z.norm() < 1e-12);
                } else {
                    max_counter_rotating = max_counter_rotating.max(z.norm());
                }
            }
        }
        assert!(max_counter_rotating > 0.01);
    }

    #[test]
    fn lindblad_channels() {
        let p = TripartiteParams { gamma_c: 2.0, ..TripartiteParams::with_beta(0.5) };
        let ops = build_lindblad_ops(&p).unwrap();
        assert_eq!(ops.len(), 1);
        assert_eq!(ops[0].rate, 2.0);
        assert_eq!(ops[0].jump, mode_annihilation(&p.space().unwrap(), "c").unwrap());
        assert!(build_lindblad_ops(&TripartiteParams::default()).unwrap().is_empty());
        let all = TripartiteParams { gamma_a: 0.1, gamma_b: 0.1, gamma_c: 0.1, ..TripartiteParams::default() };
        assert_eq!(build_lindblad_ops(&all).unwrap().len(), 3);
        let bad = TripartiteParams { gamma_a: -0.1, ..TripartiteParams::default() };
        assert!(matches!(build_lindblad_ops(&bad), Err(Error::InvalidParameter(_))));
    }

    fn optomech() -> OptomechParams {
        OptomechParams { omega_k: 7.0, omega_m: 1.0, beta: 0.1, g_k: 0.05, dims: (4, 6) }
    }

    #[test]
    fn optomech_matrix_elements() {
        let p = optomech();
        let h = build_optomech_hamiltonian(&p).unwrap();
        assert!(h.hermiticity_error() < 1e-12);
        assert!((element(&h, &[1, 0], &[1, 1]) - c(-0.05, 0.0)).norm() < 1e-15);
        assert!((element(&h, &[1, 1], &[1, 1]).re - (7.0 + 1.0 + 0.2)).abs() < 1e-14);

        let free = build_optomech_hamiltonian(&OptomechParams { g_k: 0.0, beta: 0.0, ..p }).unwrap();
        let s = p.space().unwrap();
        let expected = mode_number(&s, "k").unwrap().scale_re(7.0).add(&mode_number(&s, "a").unwrap()).unwrap();
        assert!(free.sub(&expected).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn transformed_hamiltonian_is_diagonal() {
        let p = optomech();
        let h = build_transformed_optomech(&p).unwrap();
        let s = p.space().unwrap();
        assert!(h.commutator(&mode_number(&s, "k").unwrap()).unwrap().max_abs() < 1e-12);
        assert!(h.commutator(&mode_number(&s, "a").unwrap()).unwrap().max_abs() < 1e-12);
        let zeta = p.zeta();
        let expected = 7.0 - 0.05f64.powi(2) * 1.0 / (zeta * zeta);
        assert!((element(&h, &[1, 0], &[1, 0]).re - expected).abs() < 1e-14);

        let linear = OptomechParams { beta: 0.0, ..p };
        let h0 = build_transformed_optomech(&linear).unwrap();
        assert!((element(&h0, &[2, 0], &[2, 0]).re - (14.0 - 0.05f64.powi(2) * 4.0)).abs() < 1e-14);
    }

    #[test]
    fn polaron_generator() {
        let p = optomech();
        assert_eq!(polaron_transform_s(&OptomechParams { g_k: 0.0, ..p }).unwrap().max_abs(), 0.0);
        let s = polaron_transform_s(&p).unwrap();
        assert_eq!(s.adjoint().matrix(), &(-s.matrix()));
        assert!(unitarity_error(&exp_anti_hermitian(s.matrix())) < 1e-10);
    }

    /// Conjugation `e^S H₂ e^{-S}` on a generously truncated mirror, restricted to
    /// the `(4, 6)` block, against the term-by-term expansion with
    /// `x = g_k/ζ` and `N = n_k`:
    ///
    /// `ω_k N + ζ n_a − (g_k²/ζ) N² + β [n_a + xN(a+a†) + x²N²]²`.
    ///
    /// The diagonal of that expansion is the retained transformed Hamiltonian
    /// (up to the quartic `β x⁴ N⁴` and `4β x² n_a N²` corrections); the
    /// off-diagonal remainder is what the rotating-wave step discards.
    #[test]
    fn polaron_conjugation_matches_expansion() {
        let p = OptomechParams { omega_k: 5.0, omega_m: 1.0, beta: 0.05, g_k: 0.08, dims: (4, 40) };
        let s_gen = polaron_transform_s(&p).unwrap();
        let u = exp_anti_hermitian(s_gen.matrix());
        let h2 = build_optomech_hamiltonian(&p).unwrap();
        let conj = &u * h2.matrix() * u.adjoint();

        let space = p.space().unwrap();
        let nk = mode_number(&space, "k").unwrap();
        let na = mode_number(&space, "a").unwrap();
        let a = mode_annihilation(&space, "a").unwrap();
        let x = p.displacement_per_photon();
        let zeta = p.zeta();
        let shifted_number = na.add(&nk.mul(&a.add(&a.adjoint()).unwrap()).unwrap().scale_re(x)).unwrap().add(&nk.mul(&nk).unwrap().scale_re(x * x)).unwrap();
        let expansion = nk
            .scale_re(p.omega_k)
            .add(&na.scale_re(zeta))
            .unwrap()
            .sub(&nk.mul(&nk).unwrap().scale_re(p.g_k * p.g_k / zeta))
            .unwrap()
            .add(&shifted_number.mul(&shifted_number).unwrap().scale_re(p.beta))
            .unwrap();

        let retained = |nkv: f64, nav: f64| {
            p.omega_k * nkv + zeta * nav - p.g_k * p.g_k * p.omega_m / (zeta * zeta) * nkv * nkv
                + p.beta * nav * nav
                + 4.0 * p.g_k * p.g_k * p.beta / (zeta * zeta) * nav * nkv * nkv
                + p.g_k.powi(4) * p.beta / zeta.powi(4) * nkv.powi(4)
        };

        let mut discarded: f64 = 0.0;
        for i in 0..space.total_dim() {
            let oi = space.occupations(i);
            if oi[1] >= 6 {
                continue;
            }
            for j in 0..space.total_dim() {
                let oj = space.occupations(j);
                if oj[1] >= 6 {
                    continue;
                }
                assert!((conj[(i, j)] - expansion.matrix()[(i, j)]).norm() < 1e-10);
                if i == j {
                    assert!((conj[(i, i)].re - retained(oi[0] as f64, oi[1] as f64)).abs() < 1e-10);
                } else {
                    discarded = discarded.max(conj[(i, j)].norm());
                }
            }
        }
        assert!(discarded > 0.0);
    }
}
