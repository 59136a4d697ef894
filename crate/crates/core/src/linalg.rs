//! Complex state and operator primitives.
//!
//! Everything here is dense and small (`2 <= d <= 64`). States are column
//! vectors, operators are square matrices, and the only propagation
//! primitive is the spectral exponential of a Hermitian matrix.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QslError, Result};

pub type C64 = Complex64;

/// Largest supported Hilbert-space dimension.
pub const MAX_DIMENSION: usize = 64;

const NORM_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-12;
const GRAM_TOL: f64 = 1e-10;
const BASIS_SKIP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self { hbar: 1.0 }
    }
}

impl PhysicalConstants {
    pub fn new(hbar: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(QslError::InvalidArgument(format!("hbar must be positive, got {hbar}")));
        }
        Ok(Self { hbar })
    }
}

pub(crate) fn check_dimension(d: usize) -> Result<()> {
    if (2..=MAX_DIMENSION).contains(&d) {
        Ok(())
    } else {
        Err(QslError::InvalidDimension(d))
    }
}

fn check_same(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(QslError::DimensionMismatch { expected, got })
    }
}

/// A unit-norm ket.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: DVector<C64>,
}

impl PureState {
    /// Wraps amplitudes that are already normalized to within `1e-12`.
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        check_dimension(amps.len())?;
        let v = DVector::from_vec(amps);
        let norm = v.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(QslError::NotNormalized(norm));
        }
        Ok(Self { amps: v })
    }

    /// Normalizes arbitrary non-zero amplitudes.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        check_dimension(amps.len())?;
        Self::from_vector(DVector::from_vec(amps))
    }

    pub(crate) fn from_vector(v: DVector<C64>) -> Result<Self> {
        let norm = v.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(QslError::NotNormalized(norm));
        }
        Ok(Self { amps: v.unscale(norm) })
    }

    /// Renormalizes without validation; for vectors known to be close to unit norm.
    pub(crate) fn renormalized(v: DVector<C64>) -> Self {
        let norm = v.norm();
        Self { amps: v.unscale(norm) }
    }

    /// Computational basis vector `|index>`.
    pub fn basis(d: usize, index: usize) -> Result<Self> {
        check_dimension(d)?;
        if index >= d {
            return Err(QslError::InvalidArgument(format!("basis index {index} out of range for d = {d}")));
        }
        let mut v = DVector::zeros(d);
        v[index] = C64::new(1.0, 0.0);
        Ok(Self { amps: v })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// `<self|other>`
    pub fn inner(&self, other: &PureState) -> C64 {
        self.amps.dotc(&other.amps)
    }

    pub fn with_phase(&self, phase: f64) -> PureState {
        PureState { amps: self.amps.map(|z| z * C64::from_polar(1.0, phase)) }
    }

    /// Tensor product `|self> (x) |other>`.
    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        check_dimension(self.dim() * other.dim())?;
        Ok(PureState { amps: self.amps.kronecker(&other.amps) })
    }
}

/// A Hermitian matrix; Hamiltonians, observables and projectors.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    m: DMatrix<C64>,
}

impl HermitianOperator {
    /// Validates Hermiticity to `1e-12` (relative to the largest entry) and
    /// symmetrizes the stored matrix exactly.
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(QslError::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
        }
        check_dimension(m.nrows())?;
        let dev = hermitian_deviation(&m);
        let scale = m.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
        if !(dev <= HERMITIAN_TOL * scale) {
            return Err(QslError::NotHermitian(dev));
        }
        Ok(Self::symmetrized(m))
    }

    pub(crate) fn symmetrized(m: DMatrix<C64>) -> Self {
        let adj = m.adjoint();
        Self { m: (m + adj).scale(0.5) }
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let d = rows.len();
        for row in rows {
            check_same(d, row.len())?;
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn zeros(d: usize) -> Result<Self> {
        check_dimension(d)?;
        Ok(Self { m: DMatrix::zeros(d, d) })
    }

    pub fn identity(d: usize) -> Result<Self> {
        check_dimension(d)?;
        Ok(Self { m: DMatrix::identity(d, d) })
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        check_dimension(values.len())?;
        let d = values.len();
        Ok(Self { m: DMatrix::from_fn(d, d, |i, j| if i == j { C64::new(values[i], 0.0) } else { C64::new(0.0, 0.0) }) })
    }

    /// `|psi><psi|`
    pub fn projector(psi: &PureState) -> Self {
        let v = psi.amplitudes();
        Self { m: v * v.adjoint() }
    }

    /// `omega (|a><b| + |b><a|)`
    pub fn symmetric_coupling(a: &PureState, b: &PureState, omega: f64) -> Result<Self> {
        check_same(a.dim(), b.dim())?;
        let (va, vb) = (a.amplitudes(), b.amplitudes());
        let m = va * vb.adjoint();
        let adj = m.adjoint();
        Ok(Self { m: (m + adj).scale(omega) })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn apply(&self, psi: &PureState) -> Result<DVector<C64>> {
        check_same(self.dim(), psi.dim())?;
        Ok(&self.m * psi.amplitudes())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { m: self.m.scale(s) }
    }

    pub fn add(&self, other: &HermitianOperator) -> Result<Self> {
        check_same(self.dim(), other.dim())?;
        Ok(Self { m: &self.m + &other.m })
    }

    pub fn sub(&self, other: &HermitianOperator) -> Result<Self> {
        check_same(self.dim(), other.dim())?;
        Ok(Self { m: &self.m - &other.m })
    }

    pub fn tensor(&self, other: &HermitianOperator) -> Result<Self> {
        check_dimension(self.dim() * other.dim())?;
        Ok(Self { m: self.m.kronecker(&other.m) })
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    /// `max |(H^2 - I)_ij|`
    pub fn self_inverse_deviation(&self) -> f64 {
        let sq = &self.m * &self.m;
        let d = self.dim();
        max_abs_diff(&sq, &DMatrix::identity(d, d))
    }

    pub fn spectral(&self) -> Result<Spectral> {
        Spectral::new(self)
    }
}

pub(crate) fn hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Ordered orthonormal basis, stored as the columns of a unitary matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis {
    columns: DMatrix<C64>,
}

impl OrthonormalBasis {
    pub fn new(vectors: &[PureState]) -> Result<Self> {
        let d = vectors.len();
        check_dimension(d)?;
        for v in vectors {
            check_same(d, v.dim())?;
        }
        let columns = DMatrix::from_fn(d, d, |i, j| vectors[j].amplitudes()[i]);
        Self::from_columns(columns)
    }

    /// Columns of `columns` are the basis vectors.
    pub fn from_columns(columns: DMatrix<C64>) -> Result<Self> {
        if columns.nrows() != columns.ncols() {
            return Err(QslError::DimensionMismatch { expected: columns.nrows(), got: columns.ncols() });
        }
        check_dimension(columns.nrows())?;
        let d = columns.nrows();
        let gram = columns.adjoint() * &columns;
        let dev = max_abs_diff(&gram, &DMatrix::identity(d, d));
        if !(dev < GRAM_TOL) {
            return Err(QslError::NotOrthonormal(dev));
        }
        Ok(Self { columns })
    }

    pub fn canonical(d: usize) -> Result<Self> {
        check_dimension(d)?;
        Ok(Self { columns: DMatrix::identity(d, d) })
    }

    pub fn dim(&self) -> usize {
        self.columns.nrows()
    }

    pub fn columns(&self) -> &DMatrix<C64> {
        &self.columns
    }

    pub fn vector(&self, k: usize) -> PureState {
        PureState { amps: self.columns.column(k).into_owned() }
    }

    pub fn vectors(&self) -> Vec<PureState> {
        (0..self.dim()).map(|k| self.vector(k)).collect()
    }

    /// Amplitudes `<a_k|v>` for every basis vector.
    pub fn coefficients(&self, v: &DVector<C64>) -> DVector<C64> {
        self.columns.ad_mul(v)
    }

    pub fn gram_deviation(&self) -> f64 {
        let d = self.dim();
        max_abs_diff(&(self.columns.adjoint() * &self.columns), &DMatrix::identity(d, d))
    }

    /// True when the first basis vector equals `psi` up to a global phase.
    pub fn starts_with(&self, psi: &PureState, tol: f64) -> bool {
        self.dim() == psi.dim() && (1.0 - self.vector(0).inner(psi).norm()).abs() < tol
    }
}

/// Deterministic completion of `psi0` to an orthonormal basis: `psi0` first,
/// then Gram-Schmidt over the canonical unit vectors, skipping any whose
/// projected norm falls below `1e-8`.
pub fn complete_basis_from(psi0: &PureState) -> OrthonormalBasis {
    complete_basis(std::slice::from_ref(psi0))
}

/// Completes an orthonormal list of seed vectors in the same way as
/// [`complete_basis_from`].
pub fn complete_basis(seeds: &[PureState]) -> OrthonormalBasis {
    let d = seeds[0].dim();
    let mut vecs: Vec<DVector<C64>> = seeds.iter().map(|s| s.amplitudes().clone()).collect();
    for k in 0..d {
        if vecs.len() == d {
            break;
        }
        let mut e = DVector::<C64>::zeros(d);
        e[k] = C64::new(1.0, 0.0);
        // two passes of classical Gram-Schmidt
        for _ in 0..2 {
            for v in &vecs {
                let proj = v.dotc(&e);
                e -= v * proj;
            }
        }
        let n = e.norm();
        if n < BASIS_SKIP_TOL {
            continue;
        }
        vecs.push(e.unscale(n));
    }
    let columns = DMatrix::from_fn(d, d, |i, j| vecs[j][i]);
    OrthonormalBasis { columns }
}

/// `<psi|O|psi>`; the imaginary residue of the raw inner product is discarded.
pub fn expectation(op: &HermitianOperator, psi: &PureState) -> Result<f64> {
    let o_psi = op.apply(psi)?;
    Ok(psi.amplitudes().dotc(&o_psi).re)
}

/// `<O^2> - <O>^2`, clamped at zero.
pub fn variance(op: &HermitianOperator, psi: &PureState) -> Result<f64> {
    let o_psi = op.apply(psi)?;
    let mean = psi.amplitudes().dotc(&o_psi).re;
    let second = o_psi.norm_squared();
    Ok((second - mean * mean).max(0.0))
}

/// Fubini-Study angle `arccos |<a|b>|` in `[0, pi/2]`.
///
/// Evaluated as `atan2(|b - <a|b> a|, |<a|b>|)`, which agrees with the arccos
/// form but keeps full precision for nearly parallel states.
pub fn hilbert_angle(a: &PureState, b: &PureState) -> Result<f64> {
    check_same(a.dim(), b.dim())?;
    Ok(angle_between(a.amplitudes(), b.amplitudes()))
}

pub(crate) fn angle_between(a: &DVector<C64>, b: &DVector<C64>) -> f64 {
    let overlap = a.dotc(b);
    let perp = b - a * overlap;
    let cos = overlap.norm().min(1.0);
    perp.norm().atan2(cos).clamp(0.0, std::f64::consts::FRAC_PI_2)
}

/// Eigendecomposition `H = V diag(lambda) V^dagger`.
#[derive(Debug, Clone)]
pub struct Spectral {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<C64>,
}

impl Spectral {
    pub fn new(h: &HermitianOperator) -> Result<Self> {
        let d = h.dim();
        let eig = SymmetricEigen::try_new(h.matrix().clone(), f64::EPSILON, 1000 * d)
            .ok_or_else(|| QslError::Numerical("Hermitian eigendecomposition did not converge".into()))?;
        Ok(Self { eigenvalues: eig.eigenvalues.iter().copied().collect(), eigenvectors: eig.eigenvectors })
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn phases(&self, t: f64, hbar: f64) -> Vec<C64> {
        self.eigenvalues.iter().map(|&l| C64::from_polar(1.0, -l * t / hbar)).collect()
    }

    /// `exp(-i t H / hbar)`
    pub fn propagator(&self, t: f64, hbar: f64) -> DMatrix<C64> {
        let ph = self.phases(t, hbar);
        let mut scaled = self.eigenvectors.clone();
        for (j, p) in ph.iter().enumerate() {
            for z in scaled.column_mut(j).iter_mut() {
                *z *= p;
            }
        }
        scaled * self.eigenvectors.adjoint()
    }

    /// `exp(-i t H / hbar) |v>` without forming the propagator.
    pub fn evolve(&self, v: &DVector<C64>, t: f64, hbar: f64) -> DVector<C64> {
        let mut w = self.eigenvectors.ad_mul(v);
        for (wi, p) in w.iter_mut().zip(self.phases(t, hbar)) {
            *wi *= p;
        }
        &self.eigenvectors * w
    }
}

/// `exp(-i t H / hbar)` via eigendecomposition.
pub fn spectral_exponential(h: &HermitianOperator, t: f64, consts: PhysicalConstants) -> Result<DMatrix<C64>> {
    Ok(Spectral::new(h)?.propagator(t, consts.hbar))
}

/// `max |(U^dagger U - I)_ij|`
pub fn unitarity_deviation(u: &DMatrix<C64>) -> f64 {
    let d = u.nrows();
    max_abs_diff(&(u.adjoint() * u), &DMatrix::identity(d, d))
}

pub mod pauli {
    use super::*;

    fn m2(a: [[C64; 2]; 2]) -> HermitianOperator {
        HermitianOperator { m: DMatrix::from_fn(2, 2, |i, j| a[i][j]) }
    }

    const O: C64 = C64::new(0.0, 0.0);
    const ONE: C64 = C64::new(1.0, 0.0);
    const I: C64 = C64::new(0.0, 1.0);

    pub fn identity() -> HermitianOperator {
        m2([[ONE, O], [O, ONE]])
    }

    pub fn x() -> HermitianOperator {
        m2([[O, ONE], [ONE, O]])
    }

    pub fn y() -> HermitianOperator {
        m2([[O, -I], [I, O]])
    }

    pub fn z() -> HermitianOperator {
        m2([[ONE, O], [O, -ONE]])
    }

    /// `n . sigma` for a (not necessarily unit) axis.
    pub fn axis(n: [f64; 3]) -> HermitianOperator {
        let [nx, ny, nz] = n;
        m2([[C64::new(nz, 0.0), C64::new(nx, -ny)], [C64::new(nx, ny), C64::new(-nz, 0.0)]])
    }

    /// Pauli operator by letter (`I`, `X`, `Y`, `Z`, case-insensitive).
    pub fn by_letter(c: char) -> Option<HermitianOperator> {
        match c.to_ascii_uppercase() {
            'I' => Some(identity()),
            'X' => Some(x()),
            'Y' => Some(y()),
            'Z' => Some(z()),
            _ => None,
        }
    }
}
