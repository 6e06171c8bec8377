//! Helmholtz-coil estimate of the quartic nonlinearity induced on a
//! magnetised cantilever tip.
//!
//! Two coaxial coils of radius `R` sit `R/2` apart; the tip moves along the
//! axis by `x` from the midpoint. The field drop `[B(0) − B(x)]/B(0)` starts at
//! `(x/R)⁴`, far below double precision for small `x`, so it is evaluated in
//! double-double arithmetic.

use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::models::HBAR;

/// Vacuum permeability, T·m/A.
pub const MU_0: f64 = 4.0 * std::f64::consts::PI * 1e-7;
/// Bohr magneton, J/T.
pub const MU_B: f64 = 9.274_010_078_3e-24;

/// Leading quartic coefficient of the on-axis field drop.
pub const QUARTIC_COEFFICIENT: f64 = 144.0 / 125.0;
/// Prefactor of the quartic interaction energy as printed with the scheme.
pub const ENERGY_PREFACTOR: f64 = 0.8;
/// Prefactor of the nonlinearity strength as printed with the scheme.
pub const BETA_PREFACTOR: f64 = 1.28;

/// Largest `|x|/R` accepted by the quartic approximations.
pub const QUARTIC_RANGE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoilParams {
    /// Coil radius `R` (m).
    pub radius: f64,
    /// Current `I` (A).
    pub current: f64,
    pub n_turns: u32,
    /// Number of atoms in the ferromagnet, each carrying one Bohr magneton.
    pub n_mag: f64,
    /// Zero-point amplitude of the cantilever (m).
    pub a0: f64,
}

impl Default for CoilParams {
    fn default() -> Self {
        Self { radius: 80e-9, current: 1e-3, n_turns: 1, n_mag: 1e6, a0: 50e-12 }
    }
}

impl CoilParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("radius", self.radius), ("current", self.current), ("n_mag", self.n_mag), ("a0", self.a0)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.n_turns == 0 {
            return Err(Error::InvalidParameter("n_turns must be positive".into()));
        }
        if self.a0 / self.radius > QUARTIC_RANGE {
            log::warn!("a0/R = {:.3e} is not small; the quartic expansion is unreliable", self.a0 / self.radius);
        }
        Ok(())
    }

    /// Total magnetic moment `N_mag μ_B`.
    pub fn moment(&self) -> f64 {
        self.n_mag * MU_B
    }

    fn field_scale(&self) -> f64 {
        MU_0 * self.n_turns as f64 * self.current / self.radius
    }
}

/// Double-double quotient with one correction step; `TwoFloat`'s own division
/// is only accurate to about one double ulp.
fn div(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q = a / b;
    q + (a - q * b) / b
}

/// `[1 + u²]^{-3/2}` in double-double.
fn coil_term(u: TwoFloat) -> TwoFloat {
    let s = TwoFloat::from(1.0) + u * u;
    div(TwoFloat::from(1.0), s * s.sqrt())
}

/// `(1/2){[1 + (1/2 − s)²]^{-3/2} + [1 + (1/2 + s)²]^{-3/2}}` with `s = x/R`.
fn profile(s: TwoFloat) -> TwoFloat {
    let half = TwoFloat::from(0.5);
    (coil_term(half - s) + coil_term(half + s)) * 0.5
}

fn check_range(x: f64, p: &CoilParams, limit: f64) -> Result<f64> {
    p.validate()?;
    let s = x / p.radius;
    if !(s.abs() < limit) {
        return Err(Error::OutOfRange { x: s, limit });
    }
    Ok(s)
}

/// On-axis field of the coil pair (T) at displacement `x` (m):
/// `(μ0 n I / 2R){[1 + (R/2 − x)²/R²]^{-3/2} + [1 + (R/2 + x)²/R²]^{-3/2}}`.
pub fn helmholtz_field(x: f64, p: &CoilParams) -> Result<f64> {
    let s = check_range(x, p, 0.5)?;
    Ok(p.field_scale() * profile(TwoFloat::from(s)).hi())
}

/// Relative field drop `[B(0) − B(x)] / B(0)`, accurate for arbitrarily small `x`.
pub fn field_drop(x: f64, p: &CoilParams) -> Result<f64> {
    let s = check_range(x, p, 0.5)?;
    let centre = profile(TwoFloat::from(0.0));
    let drop = div(centre - profile(TwoFloat::from(s)), centre);
    Ok(drop.hi())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarticFit {
    pub coefficient: f64,
    /// Largest `|drop − c s⁴| / (c s⁴)` over the samples.
    pub max_relative_residual: f64,
    pub samples: usize,
}

/// Least-squares fit through the origin of the field drop against `(x/R)⁴`
/// over log-spaced `x/R ∈ [lo, hi]`.
pub fn fit_quartic_coefficient(p: &CoilParams, lo: f64, hi: f64, samples: usize) -> Result<QuarticFit> {
    if !(lo > 0.0 && hi > lo && hi < 0.5) || samples < 2 {
        return Err(Error::InvalidParameter(format!("bad fit window [{lo}, {hi}] with {samples} samples")));
    }
    let points: Vec<(f64, f64)> = (0..samples)
        .map(|k| {
            let s = lo * (hi / lo).powf(k as f64 / (samples - 1) as f64);
            field_drop(s * p.radius, p).map(|d| (s.powi(4), d))
        })
        .collect::<Result<_>>()?;
    let num: f64 = points.iter().map(|(u, d)| u * d).sum();
    let den: f64 = points.iter().map(|(u, _)| u * u).sum();
    let coefficient = num / den;
    let max_relative_residual = points.iter().map(|(u, d)| ((d - coefficient * u) / (coefficient * u)).abs()).fold(0.0, f64::max);
    Ok(QuarticFit { coefficient, max_relative_residual, samples })
}

/// Field drop minus its quartic term, divided by `(x/R)⁴`. Tends to zero with `x`.
pub fn quartic_remainder_ratio(x: f64, p: &CoilParams) -> Result<f64> {
    let s = check_range(x, p, 0.5)?;
    let centre = profile(TwoFloat::from(0.0));
    let st = TwoFloat::from(s);
    let s4 = st * st * st * st;
    let drop = div(centre - profile(st), centre);
    Ok(div(drop - s4 * QUARTIC_COEFFICIENT, s4).hi())
}

/// Quartic interaction energy (J) with the printed prefactor:
/// `0.8 μ0 μ n I / R · (x/R)⁴`, `μ = N_mag μ_B`.
pub fn interaction_energy(x: f64, p: &CoilParams) -> Result<f64> {
    let s = check_range(x, p, QUARTIC_RANGE)?;
    Ok(ENERGY_PREFACTOR * p.field_scale() * p.moment() * s.powi(4))
}

/// Quartic interaction energy from the series itself:
/// `μ B(0) (144/125)(x/R)⁴`, i.e. a prefactor of `(4/5)^{3/2}·144/125 ≈ 0.8244`.
pub fn interaction_energy_series(x: f64, p: &CoilParams) -> Result<f64> {
    let s = check_range(x, p, QUARTIC_RANGE)?;
    let b0 = helmholtz_field(0.0, p)?;
    Ok(p.moment() * b0 * QUARTIC_COEFFICIENT * s.powi(4))
}

/// `−μ·B(x) + μ·B(0)`, the exact energy with the constant offset removed.
pub fn exact_interaction_energy(x: f64, p: &CoilParams) -> Result<f64> {
    let b0 = helmholtz_field(0.0, p)?;
    Ok(p.moment() * b0 * field_drop(x, p)?)
}

/// Nonlinearity strength (rad/s) with the printed prefactor:
/// `β = 1.28 μ0 μ_B N_mag n I a0⁴ / (ħ R⁵)`.
pub fn beta_strength(p: &CoilParams) -> Result<f64> {
    p.validate()?;
    Ok(BETA_PREFACTOR * MU_0 * MU_B * p.n_mag * p.n_turns as f64 * p.current * p.a0.powi(4) / (HBAR * p.radius.powi(5)))
}

/// Summary table printed by the command-line `coil` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoilReport {
    pub params: CoilParams,
    /// `B(0)` in tesla.
    pub b0: f64,
    pub quartic_coefficient: f64,
    /// `β` in rad/s.
    pub beta: f64,
}

pub fn coil_report(p: &CoilParams) -> Result<CoilReport> {
    Ok(CoilReport {
        params: *p,
        b0: helmholtz_field(0.0, p)?,
        quartic_coefficient: fit_quartic_coefficient(p, 1e-4, 1e-2, 41)?.coefficient,
        beta: beta_strength(p)?,
    })
}
