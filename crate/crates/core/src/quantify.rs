//! Entanglement and non-classicality diagnostics.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{partial_trace, partial_trace_pure, partial_transpose, DensityMatrix, StateVector};
use crate::linalg::{c, exp_anti_hermitian, hermitian_eigenvalues, CMatrix, C64};

/// Boundary magnitude above which a Wigner grid is considered too narrow.
pub const WIGNER_BOUNDARY_TOLERANCE: f64 = 1e-6;

/// Slack on the uncertainty bound `ΔQ²·ΔP² ≥ 1`.
pub const UNCERTAINTY_SLACK: f64 = 1e-9;

/// The modes whose indices are transposed; the rest form the other party.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bipartition {
    pub transposed: Vec<String>,
}

impl Bipartition {
    pub fn new<S: AsRef<str>>(transposed: &[S]) -> Self {
        Self { transposed: transposed.iter().map(|s| s.as_ref().to_string()).collect() }
    }

    fn labels(&self) -> Vec<&str> {
        self.transposed.iter().map(String::as_str).collect()
    }
}

/// `(Σ|λ_i| − 1)/2` over the eigenvalues of the partial transpose.
pub fn negativity(rho: &DensityMatrix, bipartition: &Bipartition) -> Result<f64> {
    let pt = partial_transpose(rho, &bipartition.labels())?;
    let trace_norm: f64 = hermitian_eigenvalues(&pt).iter().map(|l| l.abs()).sum();
    Ok((0.5 * (trace_norm - 1.0)).max(0.0))
}

/// `log₂(2N + 1)`.
pub fn log_negativity(rho: &DensityMatrix, bipartition: &Bipartition) -> Result<f64> {
    Ok((2.0 * negativity(rho, bipartition)? + 1.0).log2())
}

/// Negativity between modes `first` and `second` after tracing out everything else.
pub fn pair_negativity(rho: &DensityMatrix, first: &str, second: &str) -> Result<f64> {
    let reduced = partial_trace(rho, &[first, second])?;
    negativity(&reduced, &Bipartition::new(&[second]))
}

/// [`pair_negativity`] for a pure global state.
pub fn pair_negativity_pure(psi: &StateVector, first: &str, second: &str) -> Result<f64> {
    let reduced = partial_trace_pure(psi, &[first, second])?;
    negativity(&reduced, &Bipartition::new(&[second]))
}

/// `Tr ρ²`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.matrix().iter().map(|z| z.norm_sqr()).sum()
}

fn single_mode(rho: &DensityMatrix) -> Result<()> {
    if rho.space().modes().len() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, actual: rho.space().modes().len() });
    }
    Ok(())
}

/// Rectangular grid of phase-space points `λ = re + i·im`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub re_range: (f64, f64),
    pub im_range: (f64, f64),
    pub resolution: usize,
}

impl WignerGrid {
    pub fn new(re_range: (f64, f64), im_range: (f64, f64), resolution: usize) -> Result<Self> {
        let g = Self { re_range, im_range, resolution };
        g.validate()?;
        Ok(g)
    }

    /// Square grid `[-half_width, half_width]²` centred on `center`.
    pub fn centered(center: C64, half_width: f64, resolution: usize) -> Result<Self> {
        Self::new(
            (center.re - half_width, center.re + half_width),
            (center.im - half_width, center.im + half_width),
            resolution,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolution < 16 {
            return Err(Error::InvalidParameter(format!("Wigner resolution must be at least 16, got {}", self.resolution)));
        }
        for (lo, hi) in [self.re_range, self.im_range] {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::InvalidParameter(format!("invalid Wigner range [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn re_axis(&self) -> Vec<f64> {
        axis(self.re_range, self.resolution)
    }

    pub fn im_axis(&self) -> Vec<f64> {
        axis(self.im_range, self.resolution)
    }

    pub fn cell_area(&self) -> f64 {
        let n = (self.resolution - 1) as f64;
        (self.re_range.1 - self.re_range.0) / n * (self.im_range.1 - self.im_range.0) / n
    }

    /// Same spacing, ranges doubled about their centres.
    pub fn widened(&self) -> Self {
        let grow = |(lo, hi): (f64, f64)| {
            let (mid, half) = (0.5 * (lo + hi), hi - lo);
            (mid - half, mid + half)
        };
        Self { re_range: grow(self.re_range), im_range: grow(self.im_range), resolution: 2 * self.resolution - 1 }
    }
}

fn axis((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|k| if k + 1 == n { hi } else { lo + k as f64 * step }).collect()
}

/// Wigner function values; `values[(i, j)]` is at `λ = re_axis[j] + i·im_axis[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerMap {
    pub grid: WignerGrid,
    pub values: DMatrix<f64>,
}

impl WignerMap {
    pub fn min(&self) -> f64 {
        self.values.min()
    }

    pub fn max(&self) -> f64 {
        self.values.max()
    }

    /// Riemann sum `Σ W ΔRe ΔIm`.
    pub fn integral(&self) -> f64 {
        self.values.sum() * self.grid.cell_area()
    }

    /// Largest `|W|` on the grid edge.
    pub fn boundary_max(&self) -> f64 {
        let (r, c) = self.values.shape();
        let mut worst: f64 = 0.0;
        for i in 0..r {
            worst = worst.max(self.values[(i, 0)].abs()).max(self.values[(i, c - 1)].abs());
        }
        for j in 0..c {
            worst = worst.max(self.values[(0, j)].abs()).max(self.values[(r - 1, j)].abs());
        }
        worst
    }
}

/// `W(λ) = (2/π) Tr[ρ D(λ) (−1)^n D†(λ)]` on a grid. Fails with
/// [`Error::GridTooNarrow`] when the edge values exceed [`WIGNER_BOUNDARY_TOLERANCE`].
///
/// Evaluated with the Laguerre recursion for the displaced-parity matrix
/// elements, which needs no displacement operator and no enlarged basis.
pub fn wigner(rho: &DensityMatrix, grid: &WignerGrid) -> Result<WignerMap> {
    let map = wigner_unchecked(rho, grid)?;
    let boundary = map.boundary_max();
    if boundary > WIGNER_BOUNDARY_TOLERANCE {
        return Err(Error::GridTooNarrow { boundary });
    }
    Ok(map)
}

/// [`wigner`], doubling the ranges (at fixed spacing) until the edge is quiet.
pub fn wigner_auto(rho: &DensityMatrix, grid: &WignerGrid) -> Result<WignerMap> {
    let mut grid = *grid;
    for _ in 0..6 {
        match wigner(rho, &grid) {
            Err(Error::GridTooNarrow { .. }) => grid = grid.widened(),
            other => return other,
        }
    }
    wigner(rho, &grid)
}

/// [`wigner`] without the boundary check.
pub fn wigner_unchecked(rho: &DensityMatrix, grid: &WignerGrid) -> Result<WignerMap> {
    single_mode(rho)?;
    grid.validate()?;
    let re = grid.re_axis();
    let im = grid.im_axis();
    let m = rho.matrix();
    let row = |i: usize| -> Vec<f64> { re.iter().map(|&x| wigner_point(m, c(x, im[i]))).collect() };

    #[cfg(feature = "parallel")]
    let rows: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        (0..im.len()).into_par_iter().map(row).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Vec<f64>> = (0..im.len()).map(row).collect();

    let values = DMatrix::from_fn(im.len(), re.len(), |i, j| rows[i][j]);
    Ok(WignerMap { grid: *grid, values })
}

/// Single-point evaluation by the Laguerre recursion.
fn wigner_point(rho: &CMatrix, lambda: C64) -> f64 {
    let dim = rho.nrows();
    let mut w = vec![c(0.0, 0.0); dim];
    w[0] = c((-2.0 * lambda.norm_sqr()).exp() / PI, 0.0);
    let mut total = rho[(0, 0)].re * w[0].re;
    for n in 1..dim {
        w[n] = w[n - 1] * lambda * 2.0 / (n as f64).sqrt();
        total += 2.0 * (rho[(0, n)] * w[n]).re;
    }
    for m in 1..dim {
        let sm = (m as f64).sqrt();
        let mut temp = w[m];
        w[m] = (lambda.conj() * temp * 2.0 - w[m - 1] * sm) / sm;
        total += (rho[(m, m)] * w[m]).re;
        for n in m + 1..dim {
            let next = (lambda * w[n - 1] * 2.0 - temp * sm) / (n as f64).sqrt();
            temp = w[n];
            w[n] = next;
            total += 2.0 * (rho[(m, n)] * w[n]).re;
        }
    }
    2.0 * total
}

/// Displaced-parity evaluation at one point with explicitly exponentiated
/// displacement operators. The basis is enlarged until the retained rows of
/// `D(λ)` are orthonormal to 1e−8. Slower than [`wigner`]; used as a cross-check.
pub fn wigner_displaced_parity(rho: &DensityMatrix, lambda: C64) -> Result<f64> {
    single_mode(rho)?;
    let d = rho.dim();
    let mut big = 2 * d + 8;
    let rows = loop {
        let a = crate::hilbert::annihilation(big)?.into_matrix();
        let disp = exp_anti_hermitian(&(a.adjoint() * lambda - &a * lambda.conj()));
        let rows = disp.rows(0, d).into_owned();
        let err = crate::linalg::max_abs(&(&rows * rows.adjoint() - CMatrix::identity(d, d)));
        if err < 1e-8 {
            break rows;
        }
        if big > 4096 {
            return Err(Error::TruncationInsufficient { dim: big, required: 2 * big, tail: err, tolerance: 1e-8 });
        }
        big *= 2;
    };
    let parity = CMatrix::from_fn(big, big, |i, j| if i == j { c(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0) } else { c(0.0, 0.0) });
    let kernel = &rows * parity * rows.adjoint();
    let value: C64 = (rho.matrix() * kernel).trace() * (2.0 / PI);
    if value.im.abs() > 1e-10 {
        return Err(Error::NotHermitian(value.im.abs()));
    }
    Ok(value.re)
}

/// First and second quadrature moments with `Q = a† + a`, `P = i(a† − a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureMoments {
    pub mean_q: f64,
    pub mean_p: f64,
    pub var_q: f64,
    pub var_p: f64,
}

/// Moments from `⟨a⟩`, `⟨a²⟩`, `⟨a†a⟩` read off the matrix elements, so the
/// truncation edge of `(a + a†)²` never enters.
pub fn quadrature_moments(rho: &DensityMatrix) -> Result<QuadratureMoments> {
    single_mode(rho)?;
    let m = rho.matrix();
    let d = rho.dim();
    let mut a = c(0.0, 0.0);
    let mut a2 = c(0.0, 0.0);
    let mut n = 0.0;
    for k in 0..d {
        let kf = k as f64;
        n += kf * m[(k, k)].re;
        if k >= 1 {
            a += m[(k, k - 1)] * kf.sqrt();
        }
        if k >= 2 {
            a2 += m[(k, k - 2)] * (kf * (kf - 1.0)).sqrt();
        }
    }
    let mean_q = 2.0 * a.re;
    let mean_p = 2.0 * a.im;
    let q2 = 2.0 * a2.re + 2.0 * n + 1.0;
    let p2 = -2.0 * a2.re + 2.0 * n + 1.0;
    Ok(QuadratureMoments { mean_q, mean_p, var_q: q2 - mean_q * mean_q, var_p: p2 - mean_p * mean_p })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSeries {
    pub times: Vec<f64>,
    pub var_q: Vec<f64>,
    pub var_p: Vec<f64>,
}

impl QuadratureSeries {
    /// Smallest variance of either quadrature over the series.
    pub fn min_variance(&self) -> f64 {
        self.var_q.iter().chain(&self.var_p).copied().fold(f64::INFINITY, f64::min)
    }

    pub fn uncertainty_products(&self) -> Vec<f64> {
        self.var_q.iter().zip(&self.var_p).map(|(q, p)| q * p).collect()
    }
}

/// Variances for each state; fails if any product drops below `1 − 1e−9`.
pub fn quadrature_variances(times: &[f64], states: &[DensityMatrix]) -> Result<QuadratureSeries> {
    if times.len() != states.len() {
        return Err(Error::DimensionMismatch { expected: times.len(), actual: states.len() });
    }
    let mut var_q = Vec::with_capacity(states.len());
    let mut var_p = Vec::with_capacity(states.len());
    for (index, rho) in states.iter().enumerate() {
        let m = quadrature_moments(rho)?;
        let product = m.var_q * m.var_p;
        if product < 1.0 - UNCERTAINTY_SLACK {
            return Err(Error::UncertaintyViolation { product, index });
        }
        var_q.push(m.var_q);
        var_p.push(m.var_p);
    }
    Ok(QuadratureSeries { times: times.to_vec(), var_q, var_p })
}
