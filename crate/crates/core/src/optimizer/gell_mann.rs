//! Generalized Gell-Mann matrices, a trace-orthogonal basis of su(d).

use nalgebra::DMatrix;

use crate::error::Result;
use crate::linalg::{check_dimension, HermitianOperator, C64};

/// `d^2 - 1` traceless Hermitian generators with `Tr(G_a G_b) = 2 delta_ab`,
/// ordered symmetric, antisymmetric, diagonal.
#[derive(Debug, Clone)]
pub struct GeneratorBasis {
    dim: usize,
    generators: Vec<HermitianOperator>,
}

impl GeneratorBasis {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn generators(&self) -> &[HermitianOperator] {
        &self.generators
    }

    /// `sum_a x_a G_a`
    pub fn combine(&self, coefficients: &[f64]) -> HermitianOperator {
        assert_eq!(coefficients.len(), self.len(), "one coefficient per generator");
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (g, &x) in self.generators.iter().zip(coefficients) {
            m += g.matrix() * C64::new(x, 0.0);
        }
        HermitianOperator::symmetrized(m)
    }

    /// Coefficients of the traceless part of `h`.
    pub fn decompose(&self, h: &HermitianOperator) -> Vec<f64> {
        self.generators.iter().map(|g| 0.5 * (g.matrix() * h.matrix()).trace().re).collect()
    }
}

pub fn gell_mann_basis(d: usize) -> Result<GeneratorBasis> {
    check_dimension(d)?;
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let mut generators = Vec::with_capacity(d * d - 1);
    for j in 0..d {
        for k in j + 1..d {
            let mut m = DMatrix::zeros(d, d);
            m[(j, k)] = one;
            m[(k, j)] = one;
            generators.push(HermitianOperator::symmetrized(m));
        }
    }
    for j in 0..d {
        for k in j + 1..d {
            let mut m = DMatrix::zeros(d, d);
            m[(j, k)] = -i;
            m[(k, j)] = i;
            generators.push(HermitianOperator::symmetrized(m));
        }
    }
    for l in 1..d {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut diag = vec![0.0; d];
        for v in diag.iter_mut().take(l) {
            *v = norm;
        }
        diag[l] = -(l as f64) * norm;
        generators.push(HermitianOperator::diagonal(&diag)?);
    }
    Ok(GeneratorBasis { dim: d, generators })
}
