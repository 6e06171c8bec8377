//! Truncated Fock-space algebra.
//!
//! Composite spaces are ordered lists of bosonic modes. Basis states are laid
//! out row-major with the first declared mode most significant, so on a space
//! with dims `[d0, d1, d2]` the occupation `(n0, n1, n2)` lives at index
//! `(n0 * d1 + n1) * d2 + n2`. All index arithmetic goes through
//! [`CompositeSpace::index_of`] and [`CompositeSpace::occupations`].

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, hermitian_eigenvalues, CMatrix, CVector, C64};

/// Default tolerance on the discarded Poisson tail of a truncated coherent state.
pub const COHERENT_TAIL_TOLERANCE: f64 = 1e-12;

/// Most negative eigenvalue accepted before a density matrix is rejected.
pub const POSITIVITY_TOLERANCE: f64 = 1e-8;

const NORM_TOLERANCE: f64 = 1e-12;
const HERMITIAN_TOLERANCE: f64 = 1e-12;
const TRACE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeSpec {
    label: String,
    dim: usize,
}

impl ModeSpec {
    pub fn new(label: impl Into<String>, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension { dim });
        }
        Ok(Self { label: label.into(), dim })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositeSpace {
    modes: Vec<ModeSpec>,
}

impl CompositeSpace {
    pub fn new(modes: Vec<ModeSpec>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::EmptySelection);
        }
        let mut seen = BTreeSet::new();
        for mode in &modes {
            if !seen.insert(mode.label.as_str()) {
                return Err(Error::DuplicateMode(mode.label.clone()));
            }
        }
        Ok(Self { modes })
    }

    /// Builds a space from `(label, dim)` pairs.
    pub fn from_dims(modes: &[(&str, usize)]) -> Result<Self> {
        let specs = modes
            .iter()
            .map(|&(label, dim)| ModeSpec::new(label, dim))
            .collect::<Result<Vec<_>>>()?;
        Self::new(specs)
    }

    pub fn single(label: &str, dim: usize) -> Result<Self> {
        Self::new(vec![ModeSpec::new(label, dim)?])
    }

    pub fn modes(&self) -> &[ModeSpec] {
        &self.modes
    }

    pub fn dims(&self) -> Vec<usize> {
        self.modes.iter().map(|m| m.dim).collect()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.modes.iter().map(|m| m.label.as_str()).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.modes.iter().map(|m| m.dim).product()
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.modes
            .iter()
            .position(|m| m.label == label)
            .ok_or_else(|| Error::UnknownMode(label.to_string()))
    }

    pub fn mode(&self, label: &str) -> Result<&ModeSpec> {
        Ok(&self.modes[self.position(label)?])
    }

    /// Flat basis index of an occupation tuple.
    pub fn index_of(&self, occupations: &[usize]) -> Result<usize> {
        if occupations.len() != self.modes.len() {
            return Err(Error::DimensionMismatch { expected: self.modes.len(), actual: occupations.len() });
        }
        let mut index = 0;
        for (mode, &n) in self.modes.iter().zip(occupations) {
            if n >= mode.dim {
                return Err(Error::OccupationOutOfRange { label: mode.label.clone(), occupation: n, dim: mode.dim });
            }
            index = index * mode.dim + n;
        }
        Ok(index)
    }

    /// Occupation tuple of a flat basis index.
    pub fn occupations(&self, mut index: usize) -> Vec<usize> {
        let mut occ = vec![0; self.modes.len()];
        for (slot, mode) in occ.iter_mut().zip(&self.modes).rev() {
            *slot = index % mode.dim;
            index /= mode.dim;
        }
        occ
    }

    /// Sub-space keeping the listed modes, in declaration order.
    pub fn subspace(&self, keep: &BTreeSet<usize>) -> Result<Self> {
        Self::new(keep.iter().map(|&k| self.modes[k].clone()).collect())
    }

    fn resolve(&self, labels: &[&str]) -> Result<BTreeSet<usize>> {
        if labels.is_empty() {
            return Err(Error::EmptySelection);
        }
        labels.iter().map(|l| self.position(l)).collect()
    }

    fn check_dim(&self, actual: usize) -> Result<()> {
        let expected = self.total_dim();
        if expected != actual {
            return Err(Error::DimensionMismatch { expected, actual });
        }
        Ok(())
    }
}

/// Dense operator on a composite space.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: CompositeSpace,
    matrix: CMatrix,
}

impl Operator {
    pub fn new(space: CompositeSpace, matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), actual: matrix.ncols() });
        }
        space.check_dim(matrix.nrows())?;
        Ok(Self { space, matrix })
    }

    pub fn identity(space: &CompositeSpace) -> Self {
        let n = space.total_dim();
        Self { space: space.clone(), matrix: linalg::identity(n) }
    }

    pub fn zeros(space: &CompositeSpace) -> Self {
        let n = space.total_dim();
        Self { space: space.clone(), matrix: CMatrix::zeros(n, n) }
    }

    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Same matrix on another space of equal dimension.
    pub fn relabel(&self, space: &CompositeSpace) -> Result<Self> {
        space.check_dim(self.dim())?;
        Ok(Self { space: space.clone(), matrix: self.matrix.clone() })
    }

    pub fn adjoint(&self) -> Self {
        Self { space: self.space.clone(), matrix: self.matrix.adjoint() }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { space: self.space.clone(), matrix: &self.matrix * factor }
    }

    pub fn scale_re(&self, factor: f64) -> Self {
        self.scale(c(factor, 0.0))
    }

    pub fn add(&self, other: &Operator) -> Result<Self> {
        self.same_space(other)?;
        Ok(Self { space: self.space.clone(), matrix: &self.matrix + &other.matrix })
    }

    pub fn sub(&self, other: &Operator) -> Result<Self> {
        self.same_space(other)?;
        Ok(Self { space: self.space.clone(), matrix: &self.matrix - &other.matrix })
    }

    pub fn mul(&self, other: &Operator) -> Result<Self> {
        self.same_space(other)?;
        Ok(Self { space: self.space.clone(), matrix: &self.matrix * &other.matrix })
    }

    pub fn commutator(&self, other: &Operator) -> Result<Self> {
        self.same_space(other)?;
        Ok(Self { space: self.space.clone(), matrix: linalg::commutator(&self.matrix, &other.matrix) })
    }

    pub fn hermiticity_error(&self) -> f64 {
        linalg::hermiticity_error(&self.matrix)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(&self.matrix)
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        self.space.check_dim(psi.dim())?;
        Ok(StateVector { space: self.space.clone(), amplitudes: &self.matrix * &psi.amplitudes })
    }

    pub fn expectation(&self, rho: &DensityMatrix) -> Result<C64> {
        self.space.check_dim(rho.dim())?;
        Ok(linalg::trace(&(&self.matrix * rho.matrix())))
    }

    fn same_space(&self, other: &Operator) -> Result<()> {
        if self.space != other.space {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: other.dim() });
        }
        Ok(())
    }
}

/// Ladder matrix of a single truncated mode: `a|n> = sqrt(n)|n-1>`.
pub fn annihilation(dim: usize) -> Result<Operator> {
    let space = CompositeSpace::single("mode", dim)?;
    let mut m = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = c((n as f64).sqrt(), 0.0);
    }
    Operator::new(space, m)
}

pub fn creation(dim: usize) -> Result<Operator> {
    Ok(annihilation(dim)?.adjoint())
}

pub fn number(dim: usize) -> Result<Operator> {
    let space = CompositeSpace::single("mode", dim)?;
    Operator::new(space, linalg::diagonal(dim, |n| c(n as f64, 0.0)))
}

/// Single-mode operator from an arbitrary matrix.
pub fn single_mode(matrix: CMatrix) -> Result<Operator> {
    let space = CompositeSpace::single("mode", matrix.nrows())?;
    Operator::new(space, matrix)
}

/// Tensor `op` into `space` at `label`, with identities on every other mode.
pub fn embed(op: &Operator, space: &CompositeSpace, label: &str) -> Result<Operator> {
    let position = space.position(label)?;
    let dims = space.dims();
    if op.dim() != dims[position] {
        return Err(Error::DimensionMismatch { expected: dims[position], actual: op.dim() });
    }
    let left: usize = dims[..position].iter().product();
    let right: usize = dims[position + 1..].iter().product();
    let matrix = linalg::identity(left).kronecker(&op.matrix).kronecker(&linalg::identity(right));
    Operator::new(space.clone(), matrix)
}

/// Annihilation operator of mode `label` acting on the full space.
pub fn mode_annihilation(space: &CompositeSpace, label: &str) -> Result<Operator> {
    embed(&annihilation(space.mode(label)?.dim())?, space, label)
}

pub fn mode_number(space: &CompositeSpace, label: &str) -> Result<Operator> {
    embed(&number(space.mode(label)?.dim())?, space, label)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    space: CompositeSpace,
    amplitudes: CVector,
}

impl StateVector {
    /// Checked constructor: the vector must already be normalized.
    pub fn new(space: CompositeSpace, amplitudes: CVector) -> Result<Self> {
        space.check_dim(amplitudes.len())?;
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { space, amplitudes })
    }

    /// Rescales a non-zero vector to unit norm.
    pub fn normalized(space: CompositeSpace, amplitudes: CVector) -> Result<Self> {
        space.check_dim(amplitudes.len())?;
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { space, amplitudes: amplitudes.unscale(norm) })
    }

    pub(crate) fn from_parts_unchecked(space: CompositeSpace, amplitudes: CVector) -> Self {
        Self { space, amplitudes }
    }

    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        self.space.check_dim(other.dim())?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// `|<self|other>|`, insensitive to global phase.
    pub fn overlap(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm())
    }

    pub fn to_density(&self) -> DensityMatrix {
        let matrix = &self.amplitudes * self.amplitudes.adjoint();
        DensityMatrix { space: self.space.clone(), matrix }
    }

    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let mut modes = self.space.modes.clone();
        modes.extend(other.space.modes.iter().cloned());
        let space = CompositeSpace::new(modes)?;
        Ok(StateVector { space, amplitudes: self.amplitudes.kronecker(&other.amplitudes) })
    }

    /// Re-labels a single-mode state; the dimension must match.
    pub fn relabel(&self, space: &CompositeSpace) -> Result<StateVector> {
        space.check_dim(self.dim())?;
        Ok(StateVector { space: space.clone(), amplitudes: self.amplitudes.clone() })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: CompositeSpace,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Checked constructor enforcing Hermiticity, unit trace, and positivity
    /// down to [`POSITIVITY_TOLERANCE`]. Negative eigenvalues are never clipped.
    pub fn new(space: CompositeSpace, matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), actual: matrix.ncols() });
        }
        space.check_dim(matrix.nrows())?;
        let herm = linalg::hermiticity_error(&matrix);
        if herm > HERMITIAN_TOLERANCE {
            return Err(Error::NotHermitian(herm));
        }
        let tr = linalg::trace(&matrix);
        if (tr.re - 1.0).abs() > TRACE_TOLERANCE || tr.im.abs() > TRACE_TOLERANCE {
            return Err(Error::BadTrace(tr.re));
        }
        let rho = Self { space, matrix };
        let min = rho.min_eigenvalue();
        if min < -POSITIVITY_TOLERANCE {
            return Err(Error::NotPositive(min));
        }
        Ok(rho)
    }

    pub(crate) fn from_parts_unchecked(space: CompositeSpace, matrix: CMatrix) -> Self {
        Self { space, matrix }
    }

    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.matrix)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn hermiticity_error(&self) -> f64 {
        linalg::hermiticity_error(&self.matrix)
    }

    pub fn relabel(&self, space: &CompositeSpace) -> Result<DensityMatrix> {
        space.check_dim(self.dim())?;
        Ok(DensityMatrix { space: space.clone(), matrix: self.matrix.clone() })
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        let mut modes = self.space.modes.clone();
        modes.extend(other.space.modes.iter().cloned());
        let space = CompositeSpace::new(modes)?;
        Ok(DensityMatrix { space, matrix: self.matrix.kronecker(&other.matrix) })
    }

    /// Conjugates by a unitary: `U rho U†`.
    pub fn transform(&self, unitary: &CMatrix) -> Result<DensityMatrix> {
        self.space.check_dim(unitary.nrows())?;
        Ok(DensityMatrix { space: self.space.clone(), matrix: unitary * &self.matrix * unitary.adjoint() })
    }
}

/// Basis-index tables splitting a composite space into kept and complementary modes.
struct Split {
    kept: BTreeSet<usize>,
    kept_dim: usize,
    rest_dim: usize,
    /// `full[k * rest_dim + r]` is the full index for kept index `k` and rest index `r`.
    full: Vec<usize>,
}

impl Split {
    fn new(space: &CompositeSpace, kept: BTreeSet<usize>) -> Self {
        let dims = space.dims();
        let kept_dim: usize = kept.iter().map(|&k| dims[k]).product();
        let rest_dim = space.total_dim() / kept_dim;
        let mut full = vec![0; space.total_dim()];
        for index in 0..space.total_dim() {
            let occ = space.occupations(index);
            let (mut k, mut r) = (0, 0);
            for (pos, &n) in occ.iter().enumerate() {
                if kept.contains(&pos) {
                    k = k * dims[pos] + n;
                } else {
                    r = r * dims[pos] + n;
                }
            }
            full[k * rest_dim + r] = index;
        }
        Self { kept, kept_dim, rest_dim, full }
    }
}

/// Reduced state on the `keep` modes (declaration order is preserved).
pub fn partial_trace(rho: &DensityMatrix, keep: &[&str]) -> Result<DensityMatrix> {
    let kept = rho.space.resolve(keep)?;
    let split = Split::new(&rho.space, kept);
    let sub = rho.space.subspace(&split.kept)?;
    let mut out = CMatrix::zeros(split.kept_dim, split.kept_dim);
    for i in 0..split.kept_dim {
        for j in 0..split.kept_dim {
            let mut acc = C64::new(0.0, 0.0);
            for r in 0..split.rest_dim {
                acc += rho.matrix[(split.full[i * split.rest_dim + r], split.full[j * split.rest_dim + r])];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(DensityMatrix { space: sub, matrix: out })
}

/// Reduced state of a pure state, computed without forming the full projector.
pub fn partial_trace_pure(psi: &StateVector, keep: &[&str]) -> Result<DensityMatrix> {
    let kept = psi.space.resolve(keep)?;
    let split = Split::new(&psi.space, kept);
    let sub = psi.space.subspace(&split.kept)?;
    let coeffs = CMatrix::from_fn(split.kept_dim, split.rest_dim, |k, r| psi.amplitudes[split.full[k * split.rest_dim + r]]);
    let matrix = &coeffs * coeffs.adjoint();
    Ok(DensityMatrix { space: sub, matrix })
}

/// Partial transpose over the listed modes. The result is Hermitian with unit
/// trace but may have negative eigenvalues, so it is returned as a bare matrix.
pub fn partial_transpose(rho: &DensityMatrix, transposed: &[&str]) -> Result<CMatrix> {
    let selected = rho.space.resolve(transposed)?;
    if selected.len() == rho.space.modes.len() {
        return Err(Error::TrivialBipartition);
    }
    let n = rho.dim();
    let occupations: Vec<Vec<usize>> = (0..n).map(|i| rho.space.occupations(i)).collect();
    let mut out = CMatrix::zeros(n, n);
    let mut oi = vec![0; rho.space.modes.len()];
    let mut oj = oi.clone();
    for i in 0..n {
        for j in 0..n {
            oi.copy_from_slice(&occupations[i]);
            oj.copy_from_slice(&occupations[j]);
            for &pos in &selected {
                std::mem::swap(&mut oi[pos], &mut oj[pos]);
            }
            let ti = rho.space.index_of(&oi)?;
            let tj = rho.space.index_of(&oj)?;
            out[(ti, tj)] = rho.matrix[(i, j)];
        }
    }
    Ok(out)
}

pub fn fock_state(space: &CompositeSpace, occupations: &[usize]) -> Result<StateVector> {
    let index = space.index_of(occupations)?;
    let mut amplitudes = CVector::zeros(space.total_dim());
    amplitudes[index] = c(1.0, 0.0);
    Ok(StateVector { space: space.clone(), amplitudes })
}

/// Poisson terms `P(n)` for `n = from..=upper`, built by recurrence in log space.
fn poisson_terms(mean: f64, from: usize, upper: usize) -> Vec<f64> {
    let ln_mean = mean.ln();
    let mut ln_term = from as f64 * ln_mean - mean - ln_factorial(from);
    (from..=upper)
        .map(|n| {
            if n > from {
                ln_term += ln_mean - (n as f64).ln();
            }
            ln_term.exp()
        })
        .collect()
}

fn poisson_upper(mean: f64) -> usize {
    (mean + 40.0 * mean.sqrt() + 60.0) as usize
}

/// Weight of a Poisson distribution with mean `mean` on `n >= dim`.
pub fn poisson_tail(mean: f64, dim: usize) -> f64 {
    if mean == 0.0 {
        return if dim == 0 { 1.0 } else { 0.0 };
    }
    let upper = dim.max(poisson_upper(mean));
    // Sum from the far end so the small terms are accumulated first.
    poisson_terms(mean, dim, upper).iter().rev().sum()
}

/// Smallest dimension whose discarded Poisson tail is below `tolerance`.
pub fn required_coherent_dim(mean: f64, tolerance: f64) -> usize {
    if mean == 0.0 {
        return 2;
    }
    let upper = poisson_upper(mean);
    let terms = poisson_terms(mean, 0, upper);
    // Suffix sums in the same order as `poisson_tail`.
    let mut tail = 0.0;
    let mut tails = vec![0.0; upper + 1];
    for n in (0..=upper).rev() {
        tail += terms[n];
        tails[n] = tail;
    }
    (2..=upper).find(|&d| tails[d] < tolerance).unwrap_or_else(|| {
        let mut dim = upper + 1;
        while poisson_tail(mean, dim) >= tolerance {
            dim += 1;
        }
        dim
    })
}

pub(crate) fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Truncated coherent-state amplitudes `α^n e^{-|α|²/2} / sqrt(n!)`, accumulated
/// in log space so large `n` does not overflow. Not renormalized.
pub(crate) fn coherent_amplitudes(dim: usize, amplitude: C64) -> Vec<C64> {
    let r2 = amplitude.norm_sqr();
    if r2 == 0.0 {
        let mut v = vec![c(0.0, 0.0); dim];
        v[0] = c(1.0, 0.0);
        return v;
    }
    let ln_r = amplitude.norm().ln();
    let phase = amplitude.arg();
    let mut ln_fact = 0.0;
    (0..dim)
        .map(|n| {
            if n > 0 {
                ln_fact += (n as f64).ln();
            }
            let ln_mag = n as f64 * ln_r - 0.5 * r2 - 0.5 * ln_fact;
            C64::from_polar(ln_mag.exp(), n as f64 * phase)
        })
        .collect()
}

/// Coherent state truncated at `dim` with the default tail tolerance.
pub fn coherent_state(dim: usize, amplitude: C64) -> Result<StateVector> {
    coherent_state_with_tolerance(dim, amplitude, COHERENT_TAIL_TOLERANCE)
}

/// Coherent state truncated at `dim`; fails if the discarded tail exceeds `tolerance`.
pub fn coherent_state_with_tolerance(dim: usize, amplitude: C64, tolerance: f64) -> Result<StateVector> {
    let space = CompositeSpace::single("mode", dim)?;
    let mean = amplitude.norm_sqr();
    let tail = poisson_tail(mean, dim);
    if tail >= tolerance {
        return Err(Error::TruncationInsufficient { dim, required: required_coherent_dim(mean, tolerance), tail, tolerance });
    }
    let amps = CVector::from_vec(coherent_amplitudes(dim, amplitude));
    StateVector::normalized(space, amps)
}

/// Normalized convex mixture of pure states sharing one space.
pub fn thermal_mixture(components: &[(f64, StateVector)]) -> Result<DensityMatrix> {
    let first = components.first().ok_or(Error::InvalidWeights)?;
    let total: f64 = components.iter().map(|(w, _)| *w).sum();
    if components.iter().any(|(w, _)| *w < 0.0 || !w.is_finite()) || total <= 0.0 {
        return Err(Error::InvalidWeights);
    }
    let space = first.1.space.clone();
    let n = space.total_dim();
    let mut matrix = CMatrix::zeros(n, n);
    for (weight, psi) in components {
        if psi.space != space {
            return Err(Error::DimensionMismatch { expected: n, actual: psi.dim() });
        }
        matrix += (&psi.amplitudes * psi.amplitudes.adjoint()) * c(weight / total, 0.0);
    }
    DensityMatrix::new(space, matrix)
}

/// Boltzmann weights `p_N ∝ q^N` over excitation numbers `0..levels`, with the
/// ratio `q` fixed so the mean excitation equals `mean`.
pub fn boltzmann_weights(levels: usize, mean: f64) -> Result<Vec<f64>> {
    if levels < 2 || !(mean > 0.0) || mean >= (levels - 1) as f64 {
        return Err(Error::InvalidParameter(format!("cannot realize mean {mean} over {levels} levels")));
    }
    let mean_of = |q: f64| {
        let (num, den) = (0..levels).fold((0.0, 0.0), |(num, den), k| {
            let w = q.powi(k as i32);
            (num + k as f64 * w, den + w)
        });
        num / den
    };
    // The mean is increasing in q; bisect on (0, ∞) through q = s / (1 - s).
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let q = mid / (1.0 - mid);
        if mean_of(q) < mean {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    let q = s / (1.0 - s);
    let raw: Vec<f64> = (0..levels).map(|k| q.powi(k as i32)).collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    fn bell() -> DensityMatrix {
        let space = CompositeSpace::from_dims(&[("a", 2), ("b", 2)]).unwrap();
        let s = 0.5_f64.sqrt();
        let v = CVector::from_vec(vec![c(0.0, 0.0), c(s, 0.0), c(s, 0.0), c(0.0, 0.0)]);
        StateVector::new(space, v).unwrap().to_density()
    }

    #[test]
    fn ladder_matrices() {
        let a2 = annihilation(2).unwrap();
        assert_eq!(a2.matrix()[(0, 1)], c(1.0, 0.0));
        assert_eq!(a2.matrix()[(1, 0)], c(0.0, 0.0));
        let a3 = annihilation(3).unwrap();
        assert!((a3.matrix()[(1, 2)].re - 1.41421356).abs() < 1e-8);
        let a4 = annihilation(4).unwrap();
        let n = a4.adjoint().mul(&a4).unwrap();
        for k in 0..4 {
            assert!((n.matrix()[(k, k)] - c(k as f64, 0.0)).norm() < 1e-14);
        }
        assert!(matches!(annihilation(1), Err(Error::InvalidDimension { dim: 1 })));
    }

    #[test]
    fn embedding_conventions() {
        let space = CompositeSpace::from_dims(&[("a", 2), ("b", 2)]).unwrap();
        let na = mode_number(&space, "a").unwrap();
        let expected = [0.0, 0.0, 1.0, 1.0];
        for (k, e) in expected.iter().enumerate() {
            assert_eq!(na.matrix()[(k, k)].re, *e);
        }
        let id = embed(&Operator::identity(&CompositeSpace::single("mode", 2).unwrap()), &space, "b").unwrap();
        assert_eq!(id.matrix(), &linalg::identity(4));
        let a = mode_annihilation(&space, "a").unwrap();
        let bd = mode_annihilation(&space, "b").unwrap().adjoint();
        assert_eq!(a.commutator(&bd).unwrap().max_abs(), 0.0);
        assert!(matches!(embed(&annihilation(3).unwrap(), &space, "a"), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(embed(&annihilation(2).unwrap(), &space, "z"), Err(Error::UnknownMode(_))));
    }

    #[test]
    fn canonical_commutator_below_truncation_edge() {
        let space = CompositeSpace::from_dims(&[("a", 5), ("c", 3)]).unwrap();
        let a = mode_annihilation(&space, "a").unwrap();
        let comm = a.commutator(&a.adjoint()).unwrap();
        for i in 0..space.total_dim() {
            for j in 0..space.total_dim() {
                let (oi, oj) = (space.occupations(i), space.occupations(j));
                if oi[0] == 4 || oj[0] == 4 {
                    continue;
                }
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((comm.matrix()[(i, j)] - c(expected, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn fock_indexing() {
        let s3 = CompositeSpace::from_dims(&[("a", 2), ("b", 2), ("c", 2)]).unwrap();
        let psi = fock_state(&s3, &[1, 0, 0]).unwrap();
        assert_eq!(psi.amplitudes()[4], c(1.0, 0.0));
        let s2 = CompositeSpace::from_dims(&[("a", 3), ("b", 3)]).unwrap();
        let psi = fock_state(&s2, &[2, 1]).unwrap();
        assert_eq!(psi.amplitudes()[7], c(1.0, 0.0));
        assert!((psi.norm() - 1.0).abs() < 1e-15);
        assert!(matches!(fock_state(&s2, &[3, 0]), Err(Error::OccupationOutOfRange { .. })));
        for i in 0..s3.total_dim() {
            assert_eq!(s3.index_of(&s3.occupations(i)).unwrap(), i);
        }
    }

    #[test]
    fn space_validation() {
        assert!(matches!(CompositeSpace::from_dims(&[("a", 2), ("a", 3)]), Err(Error::DuplicateMode(_))));
        assert!(matches!(ModeSpec::new("a", 1), Err(Error::InvalidDimension { .. })));
    }

    #[test]
    fn bell_marginal_and_partial_transpose() {
        let rho = bell();
        let reduced = partial_trace(&rho, &["a"]).unwrap();
        assert!(max_abs(&(reduced.matrix() - linalg::diagonal(2, |_| c(0.5, 0.0)))) < 1e-15);
        let pt = partial_transpose(&rho, &["b"]).unwrap();
        let eig = linalg::hermitian_eigenvalues(&pt);
        let expected = [-0.5, 0.5, 0.5, 0.5];
        for (e, x) in eig.iter().zip(expected) {
            assert!((e - x).abs() < 1e-12);
        }
        assert!(matches!(partial_trace(&rho, &[]), Err(Error::EmptySelection)));
        assert!(matches!(partial_trace(&rho, &["q"]), Err(Error::UnknownMode(_))));
        assert!(matches!(partial_transpose(&rho, &["a", "b"]), Err(Error::TrivialBipartition)));
    }

    #[test]
    fn product_state_reduction_and_transpose() {
        let space = CompositeSpace::from_dims(&[("a", 2), ("b", 2)]).unwrap();
        let rho = fock_state(&space, &[1, 0]).unwrap().to_density();
        let ra = partial_trace(&rho, &["a"]).unwrap();
        assert_eq!(ra.matrix()[(1, 1)], c(1.0, 0.0));
        assert_eq!(ra.matrix()[(0, 0)], c(0.0, 0.0));
        let pt = partial_transpose(&rho, &["a"]).unwrap();
        assert_eq!(linalg::hermitian_eigenvalues(&pt), rho.eigenvalues());
    }

    #[test]
    fn coherent_states() {
        let vac = coherent_state(4, c(0.0, 0.0)).unwrap();
        assert_eq!(vac.amplitudes()[0], c(1.0, 0.0));
        let psi = coherent_state(20, c(1.0, 0.0)).unwrap();
        let n = number(20).unwrap().relabel(psi.space()).unwrap();
        let mean = psi.inner(&n.apply(&psi).unwrap()).unwrap().re;
        assert!((mean - 1.0).abs() < 1e-10);
        let err = coherent_state(6, c(2.0, 0.0)).unwrap_err();
        match err {
            Error::TruncationInsufficient { required, .. } => assert_eq!(required, required_coherent_dim(4.0, 1e-12)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mixtures() {
        let space = CompositeSpace::single("m", 2).unwrap();
        let zero = fock_state(&space, &[0]).unwrap();
        let one = fock_state(&space, &[1]).unwrap();
        let pure = thermal_mixture(&[(1.0, one.clone())]).unwrap();
        assert_eq!(pure.matrix()[(1, 1)], c(1.0, 0.0));
        let half = thermal_mixture(&[(1.0, zero.clone()), (1.0, one)]).unwrap();
        assert!((half.matrix()[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!(matches!(thermal_mixture(&[(0.0, zero.clone())]), Err(Error::InvalidWeights)));
        assert!(matches!(thermal_mixture(&[(-1.0, zero)]), Err(Error::InvalidWeights)));
    }

    #[test]
    fn boltzmann_mean_is_calibrated() {
        let w = boltzmann_weights(3, 0.1).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        // Direct weight sum.
        let mean: f64 = w.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        assert!((mean - 0.1).abs() < 1e-12);
        assert!(w[1] / w[0] > 0.0 && (w[2] / w[1] - w[1] / w[0]).abs() < 1e-12);
    }

    #[test]
    fn density_matrix_validation() {
        let space = CompositeSpace::single("m", 2).unwrap();
        let bad = CMatrix::from_row_slice(2, 2, &[c(1.2, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.2, 0.0)]);
        assert!(matches!(DensityMatrix::new(space.clone(), bad), Err(Error::NotPositive(_))));
        let trace2 = linalg::identity(2);
        assert!(matches!(DensityMatrix::new(space.clone(), trace2), Err(Error::BadTrace(_))));
        let nonherm = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.1, 0.0), c(0.0, 0.0), c(0.5, 0.0)]);
        assert!(matches!(DensityMatrix::new(space, nonherm), Err(Error::NotHermitian(_))));
    }
}
