//! Classical / non-classical split of an observable relative to a reference
//! basis, and the exact uncertainty relation built on it.
//!
//! For a pure state `rho = |psi><psi|` and basis `{|a_k>}` the classical part
//! of `B` is `B_cl = sum_k m_k |a_k><a_k|` with
//! `m_k = <a_k|{B, rho}/2|a_k> / <a_k|rho|a_k>`, and `B_nc = B - B_cl`.
//! The dispersion `delta_B A` satisfies `delta_B A * Delta B_nc = hbar / 2`.
//!
//! Basis states with `<a_k|rho|a_k> <= 1e-12` are unsupported: they are left
//! out of every sum and get a zero classical coefficient.

use nalgebra::{DMatrix, DVector};

use crate::error::{QslError, Result};
use crate::linalg::{HermitianOperator, OrthonormalBasis, PhysicalConstants, PureState, C64};

/// Probability below which a basis state is treated as unsupported.
pub const SUPPORT_EPS: f64 = 1e-12;
/// Inverse-squared dispersion below which the state counts as stationary.
pub const FISHER_EPS: f64 = 1e-14;

const CROSS_CHECK_TOL: f64 = 1e-9;
/// Unsupported generator weight, relative to `(Delta B_nc)^2`, above which the
/// exact uncertainty relation cannot hold under the support convention.
const BOUNDARY_WEIGHT: f64 = 1e-10;

/// Basis-resolved view of `B|psi>`: `c_k = <a_k|psi>` and `b_k = <a_k|B|psi>`.
#[derive(Debug, Clone)]
pub struct BasisProjection {
    pub amplitudes: DVector<C64>,
    pub generator: DVector<C64>,
}

impl BasisProjection {
    pub fn new(b: &HermitianOperator, psi: &PureState, basis: &OrthonormalBasis) -> Result<Self> {
        let b_psi = b.apply(psi)?;
        if basis.dim() != psi.dim() {
            return Err(QslError::DimensionMismatch { expected: psi.dim(), got: basis.dim() });
        }
        Ok(Self::from_vectors(psi.amplitudes(), &b_psi, basis))
    }

    pub(crate) fn from_vectors(psi: &DVector<C64>, b_psi: &DVector<C64>, basis: &OrthonormalBasis) -> Self {
        Self { amplitudes: basis.coefficients(psi), generator: basis.coefficients(b_psi) }
    }

    pub fn probability(&self, k: usize) -> f64 {
        self.amplitudes[k].norm_sqr()
    }

    pub fn is_supported(&self, k: usize) -> bool {
        self.probability(k) > SUPPORT_EPS
    }

    /// `z_k = <a_k|B|psi><psi|a_k>`
    fn z(&self, k: usize) -> C64 {
        self.generator[k] * self.amplitudes[k].conj()
    }

    /// Classical coefficients `m_k` (zero where unsupported).
    pub fn classical_coefficients(&self) -> Vec<f64> {
        (0..self.amplitudes.len())
            .map(|k| if self.is_supported(k) { self.z(k).re / self.probability(k) } else { 0.0 })
            .collect()
    }

    /// `<B^2>` in the state.
    pub fn second_moment(&self) -> f64 {
        self.generator.norm_squared()
    }

    pub fn mean(&self) -> f64 {
        self.amplitudes.dotc(&self.generator).re
    }

    /// Variance of `B_nc`, computed from `B_nc|psi>` expanded in the basis.
    pub fn nonclassical_variance(&self) -> f64 {
        let m = self.classical_coefficients();
        let w: DVector<C64> = DVector::from_fn(self.amplitudes.len(), |k, _| self.generator[k] - self.amplitudes[k] * m[k]);
        let mean = self.amplitudes.dotc(&w).re;
        (w.norm_squared() - mean * mean).max(0.0)
    }

    /// Variance of `B_nc` in the form
    /// `<B^2> - sum_k (z_k + conj z_k)^2 / (4 |<a_k|psi>|^2)`.
    pub fn nonclassical_variance_moment_form(&self) -> f64 {
        let classical_second: f64 = (0..self.amplitudes.len())
            .filter(|&k| self.is_supported(k))
            .map(|k| {
                let s = 2.0 * self.z(k).re;
                s * s / (4.0 * self.probability(k))
            })
            .sum();
        (self.second_moment() - classical_second).max(0.0)
    }

    /// Variance of `B_cl`.
    pub fn classical_variance(&self) -> f64 {
        let m = self.classical_coefficients();
        let (mut first, mut second) = (0.0, 0.0);
        for (k, mk) in m.iter().enumerate() {
            let p = self.probability(k);
            first += mk * p;
            second += mk * mk * p;
        }
        (second - first * first).max(0.0)
    }

    /// `(delta_B A)^{-2} = sum_k <a_k|(i/hbar)[B, rho]|a_k>^2 / <a_k|rho|a_k>`
    pub fn inverse_squared_dispersion(&self, hbar: f64) -> f64 {
        (0..self.amplitudes.len())
            .filter(|&k| self.is_supported(k))
            .map(|k| {
                let commutator = -2.0 * self.z(k).im / hbar;
                commutator * commutator / self.probability(k)
            })
            .sum()
    }

    /// `sum_k |<a_k|B|psi>|^2` over unsupported basis states.
    pub fn unsupported_weight(&self) -> f64 {
        (0..self.amplitudes.len()).filter(|&k| !self.is_supported(k)).map(|k| self.generator[k].norm_sqr()).sum()
    }
}

/// `B = classical + nonclassical`, with `classical` diagonal in `basis`.
#[derive(Debug, Clone)]
pub struct ClassicalSplit {
    pub classical: HermitianOperator,
    pub nonclassical: HermitianOperator,
    pub basis: OrthonormalBasis,
    pub support_mask: Vec<bool>,
    pub coefficients: Vec<f64>,
}

pub fn classical_part(b: &HermitianOperator, psi: &PureState, basis: &OrthonormalBasis) -> Result<ClassicalSplit> {
    let proj = BasisProjection::new(b, psi, basis)?;
    let coefficients = proj.classical_coefficients();
    let support_mask = (0..psi.dim()).map(|k| proj.is_supported(k)).collect();

    let v = basis.columns();
    let mut scaled = v.clone();
    for (j, mj) in coefficients.iter().enumerate() {
        for z in scaled.column_mut(j).iter_mut() {
            *z *= *mj;
        }
    }
    let classical: DMatrix<C64> = scaled * v.adjoint();
    let nonclassical = b.matrix() - &classical;
    Ok(ClassicalSplit {
        classical: HermitianOperator::symmetrized(classical),
        nonclassical: HermitianOperator::symmetrized(nonclassical),
        basis: basis.clone(),
        support_mask,
        coefficients,
    })
}

/// `(Delta B_nc)^2`. Debug builds cross-check against the moment form.
pub fn nonclassical_variance(b: &HermitianOperator, psi: &PureState, basis: &OrthonormalBasis) -> Result<f64> {
    let proj = BasisProjection::new(b, psi, basis)?;
    let direct = proj.nonclassical_variance();
    #[cfg(debug_assertions)]
    {
        let moment = proj.nonclassical_variance_moment_form();
        let scale = proj.second_moment().max(1.0);
        if (direct - moment).abs() > CROSS_CHECK_TOL * scale {
            return Err(QslError::Numerical(format!(
                "non-classical variance routes disagree: direct {direct}, moment form {moment}"
            )));
        }
    }
    Ok(direct)
}

/// Both evaluations of `(Delta B_nc)^2`: `(direct, moment_form)`.
pub fn nonclassical_variance_both(b: &HermitianOperator, psi: &PureState, basis: &OrthonormalBasis) -> Result<(f64, f64)> {
    let proj = BasisProjection::new(b, psi, basis)?;
    Ok((proj.nonclassical_variance(), proj.nonclassical_variance_moment_form()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dispersion {
    Finite(f64),
    /// The state does not move out of the basis probabilities under `B`.
    Infinite,
}

impl Dispersion {
    pub fn value(self) -> f64 {
        match self {
            Dispersion::Finite(v) => v,
            Dispersion::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Dispersion::Finite(_))
    }
}

/// `delta_B A` for `A` diagonal in `a_basis`.
pub fn dispersion(a_basis: &OrthonormalBasis, b: &HermitianOperator, psi: &PureState, consts: PhysicalConstants) -> Result<Dispersion> {
    let proj = BasisProjection::new(b, psi, a_basis)?;
    Ok(dispersion_of(&proj, consts.hbar))
}

fn dispersion_of(proj: &BasisProjection, hbar: f64) -> Dispersion {
    let inv_sq = proj.inverse_squared_dispersion(hbar);
    if inv_sq < FISHER_EPS {
        Dispersion::Infinite
    } else {
        Dispersion::Finite(inv_sq.powf(-0.5))
    }
}

/// `|delta_B A * Delta B_nc - hbar/2|`.
///
/// Fails with [`QslError::Stationary`] when the dispersion is infinite and
/// with [`QslError::SupportBoundary`] when an unsupported basis state still
/// carries generator weight (a probability that is numerically zero but
/// about to grow), where the support convention breaks the equality.
pub fn exact_ur_residual(a_basis: &OrthonormalBasis, b: &HermitianOperator, psi: &PureState, consts: PhysicalConstants) -> Result<f64> {
    let proj = BasisProjection::new(b, psi, a_basis)?;
    ur_residual_of(&proj, consts.hbar)
}

pub(crate) fn ur_residual_of(proj: &BasisProjection, hbar: f64) -> Result<f64> {
    let delta = match dispersion_of(proj, hbar) {
        Dispersion::Infinite => return Err(QslError::Stationary),
        Dispersion::Finite(v) => v,
    };
    let var_nc = proj.nonclassical_variance();
    let stray = proj.unsupported_weight();
    if stray > BOUNDARY_WEIGHT * var_nc {
        return Err(QslError::SupportBoundary(stray));
    }
    Ok((delta * var_nc.sqrt() - 0.5 * hbar).abs())
}
